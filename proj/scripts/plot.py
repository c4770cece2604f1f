# Copyright 2026 The trunc-mc Authors. All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Plot harness output.

  python3 scripts/plot.py curves results/optimize   # <algo>/summary.csv -> learning_curves.png
  python3 scripts/plot.py mse results/evaluate      # mse.csv -> mse.png
  python3 scripts/plot.py schedule results/schedule # schedule.csv -> schedule.png
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def read(path):
    return pd.read_csv(path, comment="#")


def curves(root):
    fig, ax = plt.subplots(1, 2, figsize=(10, 4))
    for summary in sorted(root.glob("*/summary.csv")):
        df = read(summary)
        algo = summary.parent.name
        for axis, col in zip(ax, ("undisc", "disc")):
            mean, se = df[f"{col}_mean"], df[f"{col}_se"].fillna(0.0)
            axis.plot(df["iteration"], mean, label=algo)
            axis.fill_between(df["iteration"], mean - 1.96 * se, mean + 1.96 * se, alpha=0.2)
            axis.set_xlabel("iteration")
            axis.set_ylabel(f"{col} return")
    ax[0].legend()
    return fig, root / "learning_curves.png"


def mse(root):
    df = read(root / "mse.csv")
    fig, ax = plt.subplots(figsize=(5, 4))
    for kind, g in df.groupby("dcs"):
        ax.errorbar(g["budget"], g["mean_mse"], yerr=g["mean_mse"] - g["mse_ci_low"], label=kind, marker="o")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("budget")
    ax.set_ylabel("mean squared error")
    ax.legend()
    return fig, root / "mse.png"


def schedule(root):
    df = read(root / "schedule.csv")
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(df["t"], df["n_bar_t"], label="relaxed")
    ax.step(df["t"], df["n_tilde_t"], where="mid", label="rounded")
    ax.set_xlabel("t")
    ax.set_ylabel("samples at step t")
    ax.legend()
    return fig, root / "schedule.png"


def main():
    if len(sys.argv) != 3 or sys.argv[1] not in ("curves", "mse", "schedule"):
        sys.exit(__doc__)
    fig, out = globals()[sys.argv[1]](Path(sys.argv[2]))
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
