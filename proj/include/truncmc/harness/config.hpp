// Copyright 2026 The trunc-mc Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Resolved run settings.
//
// Sources, later ones winning: built-in defaults, environment-specific
// defaults, a config file, command-line flags. The config file is either an
// INI file or a run manifest written by a previous run (replay).
//
// INI grammar: `key = value` lines grouped in sections. Keys in [run] apply
// to every command; keys in a section named after the command (schedule,
// evaluate, optimize, pac) override them. Lists are comma-separated; the
// value `none` clears an optional setting.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "truncmc/ttpois.hpp"

namespace truncmc {

// Malformed flag or config entry.
class ArgumentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Settings {
  std::string command;
  std::uint64_t seed = 0;
  std::string out = "results";
  int workers = 1;

  // Unset values take per-command (and per-environment) defaults.
  std::optional<double> gamma;
  std::optional<int> horizon;
  std::vector<std::int64_t> budgets;
  std::optional<double> delta;
  std::string env;

  // evaluate
  std::string mode = "on";
  std::string dcs = "both";
  int repeats = 50;
  std::vector<double> target{0.49, 0.51};
  std::vector<double> behavior{0.5, 0.5};
  std::optional<double> reward_range;

  // optimize
  std::vector<std::string> algos{"ttpois", "pois"};
  int seeds = 5;
  int online_iterations = 40;
  int offline_iterations = 10;
  std::optional<double> iw_clip;
  bool iw_clip_set = false;  // distinguishes "none" from "use default"
  std::optional<double> r_min_max;
  std::string policy = "mlp-tanh";
  std::vector<int> hidden{64, 32};
  LineSearchConfig line_search;
  int eval_episodes = 20;

  // pac
  double epsilon = 1.0;

  // Sets one key from its textual value. Throws ArgumentError.
  void apply(const std::string& key, const std::string& value);
  nlohmann::json to_json() const;
};

// All keys understood by Settings::apply.
const std::vector<std::string>& settings_keys();

// Loads an INI file or a manifest (.json) into `s`.
void load_config_file(const std::string& path, const std::string& command, Settings& s);

}  // namespace truncmc
