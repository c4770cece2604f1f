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

#include "truncmc/harness/commands.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <thread>

#include "truncmc/csv.hpp"
#include "truncmc/envs.hpp"
#include "truncmc/errors.hpp"
#include "truncmc/estimators.hpp"
#include "truncmc/rng.hpp"
#include "truncmc/schedule.hpp"
#include "truncmc/ttpois.hpp"

namespace fs = std::filesystem;

namespace truncmc {

namespace {

using Clock = std::chrono::steady_clock;

std::string join(const fs::path& dir, const std::string& name) { return (dir / name).string(); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create directory '" + dir.string() + "': " + ec.message());
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

nlohmann::json make_manifest(const Settings& s, const nlohmann::json& schedule,
                             const std::vector<std::string>& outputs, Clock::time_point start) {
  nlohmann::json m;
  m["schema_version"] = kCsvSchemaVersion;
  m["command"] = s.command;
  m["config"] = s.to_json();
  m["seed"] = s.seed;
  m["schedule"] = schedule;
  m["outputs"] = outputs;
  m["duration_seconds"] = seconds_since(start);
  return m;
}

void finish(const fs::path& dir, nlohmann::json& manifest) {
  const std::string path = join(dir, "manifest.json");
  manifest["outputs"].push_back(path);
  write_file_atomic(path, manifest.dump(2) + "\n");
}

std::int64_t single_budget(const Settings& s) {
  if (s.budgets.size() != 1) throw ArgumentError(s.command + " takes exactly one budget");
  return s.budgets.front();
}

double mean_of(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

// Sample standard error; NaN for fewer than two values.
double std_error(const std::vector<double>& xs) {
  if (xs.size() < 2) return std::nan("");
  const double mu = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
}

// Runs job(i) for i < count on `workers` threads; job writes only slot i.
template <typename Job>
void parallel_for(int count, int workers, const Job& job) {
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<std::string> schedule_kinds(const std::string& dcs) {
  if (dcs == "both") return {"optimal", "uniform"};
  if (dcs == "optimal" || dcs == "uniform") return {dcs};
  throw ArgumentError("dcs must be optimal, uniform or both, got '" + dcs + "'");
}

Dcs build_dcs(const std::string& kind, double gamma, int horizon, std::int64_t budget) {
  return kind == "optimal" ? optimal_dcs(gamma, horizon, budget) : uniform_dcs(horizon, budget);
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + tmp + "'");
    out << content;
    out.flush();
    if (!out) throw ValidationError("write to '" + tmp + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw ValidationError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

void resolve_defaults(Settings& s) {
  if (s.workers < 1) throw ArgumentError("workers must be >= 1");
  if (s.command == "schedule") {
    if (!s.gamma) s.gamma = 0.95;
    if (!s.horizon) s.horizon = 100;
    if (s.budgets.empty()) s.budgets = {5000};
    if (!s.delta) s.delta = 0.1;
  } else if (s.command == "evaluate") {
    if (s.env.empty()) s.env = "milestone";
    if (!s.gamma) s.gamma = 0.95;
    if (!s.horizon) s.horizon = 100;
    if (s.budgets.empty()) s.budgets = {500, 1000, 2000, 5000};
    if (!s.delta) s.delta = 0.1;
    if (!s.reward_range) s.reward_range = 6.0;
    if (s.mode != "on" && s.mode != "off") throw ArgumentError("mode must be on or off");
    if (s.repeats < 1) throw ArgumentError("repeats must be >= 1");
    schedule_kinds(s.dcs);
  } else if (s.command == "optimize") {
    if (s.env.empty()) s.env = "corridor-dense";
    double gamma = 0.99, delta = 0.7;
    std::int64_t budget = 15000;
    std::optional<double> clip = 100.0;
    if (s.env == "corridor-sparse") {
      budget = 2500;
      delta = 0.9;
    } else if (s.env == "dam") {
      gamma = 0.95;
      budget = 8640;
      clip.reset();
    } else if (s.env != "corridor-dense") {
      throw ArgumentError("optimize supports corridor-sparse, corridor-dense and dam, got '" + s.env +
                          "'");
    }
    if (!s.gamma) s.gamma = gamma;
    if (!s.delta) s.delta = delta;
    if (s.budgets.empty()) s.budgets = {budget};
    if (!s.iw_clip_set) {
      s.iw_clip = clip;
      s.iw_clip_set = true;
    }
    if (!s.horizon) s.horizon = make_environment(s.env)->horizon();
    if (s.seeds < 1) throw ArgumentError("seeds must be >= 1");
    try {
      for (const auto& a : s.algos) dcs_mode_from_string(a);
      architecture_from_string(s.policy);
    } catch (const ValidationError& e) {
      throw ArgumentError(e.what());
    }
  } else if (s.command == "pac") {
    if (!s.gamma) s.gamma = 0.99;
    if (!s.horizon) s.horizon = 100;
    if (!s.delta) s.delta = 0.1;
  } else {
    throw ArgumentError("unknown command '" + s.command + "'");
  }
}

nlohmann::json schedule_summary(double gamma, int horizon, std::int64_t budget, double delta) {
  const Coefficients co = coefficients(gamma, horizon);
  const RelaxedSolution relaxed = solve_relaxed(co, budget);
  const Dcs dcs = round_dcs(relaxed, budget);
  nlohmann::json j;
  j["gamma"] = gamma;
  j["T"] = horizon;
  j["budget"] = budget;
  j["h_star"] = relaxed.h_star;
  j["delta"] = delta;
  const double w_opt = ci_width(std::span<const std::int64_t>(dcs.n), co, delta);
  const double w_uni = ci_width(std::span<const std::int64_t>(uniform_dcs(horizon, budget).n), co, delta);
  j["ci_width_optimal"] = w_opt;
  j["ci_width_uniform"] = w_uni;
  j["improvement_ratio"] = w_opt / w_uni;
  j["ratio_bound"] = approximation_ratio_bound(relaxed);
  const double l0 = lambda0(co);
  j["lambda0"] = std::isfinite(l0) ? nlohmann::json(l0) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json cmd_schedule(Settings s, std::ostream& report) {
  const auto start = Clock::now();
  resolve_defaults(s);
  const double gamma = *s.gamma;
  const int T = *s.horizon;
  const std::int64_t budget = single_budget(s);
  const fs::path dir(s.out);
  ensure_dir(dir);

  const Coefficients co = coefficients(gamma, T);
  const RelaxedSolution relaxed = solve_relaxed(co, budget);
  const Dcs dcs = round_dcs(relaxed, budget);
  const nlohmann::json summary = schedule_summary(gamma, T, budget, *s.delta);

  const std::string csv_path = join(dir, "schedule.csv");
  CsvWriter csv(csv_path, "schedule", {"t", "c_t", "sqrt_c_t", "n_bar_t", "n_tilde_t", "m_tilde_t"});
  for (int t = 0; t < T; ++t) {
    csv.row({std::int64_t{t}, co.c[t], co.sqrt_c[t], relaxed.n_bar[t], dcs.n[t], dcs.m[t]});
  }
  csv.close();
  const std::string summary_path = join(dir, "schedule_summary.json");
  write_file_atomic(summary_path, summary.dump(2) + "\n");

  report << "h* = " << relaxed.h_star << ", trajectories = " << dcs.trajectory_count()
         << ", full-length = " << dcs.full_length_count() << "\n"
         << "ci width optimal = " << summary["ci_width_optimal"].get<double>()
         << ", uniform = " << summary["ci_width_uniform"].get<double>()
         << ", ratio = " << summary["improvement_ratio"].get<double>() << "\n";

  auto manifest = make_manifest(s, summary, {csv_path, summary_path}, start);
  finish(dir, manifest);
  return manifest;
}

nlohmann::json cmd_evaluate(Settings s, std::ostream& report) {
  const auto start = Clock::now();
  resolve_defaults(s);
  if (s.env != "milestone") {
    throw ValidationError("evaluate needs an environment with a known return; '" + s.env +
                          "' has none (use milestone)");
  }
  const double gamma = *s.gamma;
  const double delta = *s.delta;
  const MilestoneEnv env(*s.horizon);
  const PolicyParams behavior = constant_policy(env.obs_dim(), s.behavior);
  const PolicyParams target = constant_policy(env.obs_dim(), s.target);
  const bool off = s.mode == "off";
  const double truth = env.exact_return(off ? target : behavior, gamma);
  const auto kinds = schedule_kinds(s.dcs);
  const fs::path dir(s.out);
  ensure_dir(dir);

  struct Run {
    double estimate = 0.0, lower = 0.0, upper = 0.0;
  };
  const std::string runs_path = join(dir, "runs.csv");
  const std::string mse_path = join(dir, "mse.csv");
  CsvWriter runs(runs_path, "evaluate_runs",
                 {"budget", "dcs", "repeat", "estimate", "truth", "sq_error", "ci_lower", "ci_upper"});
  CsvWriter mse(mse_path, "evaluate_mse",
                {"budget", "dcs", "repeats", "mean_mse", "mse_ci_low", "mse_ci_high", "mean_estimate"});

  nlohmann::json schedules = nlohmann::json::array();
  for (std::int64_t budget : s.budgets) {
    for (const auto& kind : kinds) {
      const Dcs dcs = build_dcs(kind, gamma, env.horizon(), budget);
      std::vector<Run> results(s.repeats);
      parallel_for(s.repeats, s.workers, [&](int r) {
        // Shared across schedules: both see the same stream per repeat.
        const std::uint64_t seed = derive_seed(s.seed, StreamPurpose::kRepeat,
                                               static_cast<std::uint64_t>(budget),
                                               static_cast<std::uint64_t>(r));
        const TruncatedBatch batch = collect_batch(env, behavior, dcs, seed);
        Run& out = results[r];
        if (off) {
          const EstimateReport rep =
              evaluate_off_policy(batch, dcs, gamma, target, behavior, delta, s.iw_clip, s.r_min_max);
          out.estimate = rep.point;
          out.lower = rep.ci_lower.value_or(std::nan(""));
          out.upper = std::nan("");
        } else {
          const EstimateReport rep = evaluate_on_policy(batch, dcs, gamma, delta, *s.reward_range);
          out.estimate = rep.point;
          out.lower = rep.point - *rep.half_width;
          out.upper = rep.point + *rep.half_width;
        }
      });
      std::vector<double> errors, estimates;
      for (int r = 0; r < s.repeats; ++r) {
        const double e = results[r].estimate - truth;
        errors.push_back(e * e);
        estimates.push_back(results[r].estimate);
        runs.row({budget, kind, std::int64_t{r}, results[r].estimate, truth, e * e, results[r].lower,
                  results[r].upper});
      }
      const double m = mean_of(errors);
      const double half = 1.96 * std_error(errors);
      mse.row({budget, kind, std::int64_t{s.repeats}, m, m - half, m + half, mean_of(estimates)});
      report << "budget " << budget << " " << kind << ": mean MSE " << m << " (95% CI +-" << half
             << ")\n";
      schedules.push_back({{"budget", budget}, {"dcs", kind}, {"m", dcs.m}});
    }
  }
  runs.close();
  mse.close();

  nlohmann::json sched = {{"truth", truth}, {"schedules", schedules}};
  auto manifest = make_manifest(s, sched, {runs_path, mse_path}, start);
  finish(dir, manifest);
  return manifest;
}

namespace {

OptimConfig optim_config(const Settings& s, const std::string& algo, std::uint64_t run_seed) {
  OptimConfig c;
  c.mode = dcs_mode_from_string(algo);
  c.gamma = *s.gamma;
  c.budget = single_budget(s);
  c.delta = *s.delta;
  c.online_iterations = s.online_iterations;
  c.offline_iterations = s.offline_iterations;
  c.iw_clip = s.iw_clip;
  c.r_min_max = s.r_min_max;
  c.line_search = s.line_search;
  c.eval_episodes = s.eval_episodes;
  c.seed = run_seed;
  c.workers = s.workers;
  c.validate();
  return c;
}

PolicyParams initial_policy(const Settings& s, const Environment& env, std::uint64_t run_seed) {
  PolicyParams p = architecture_from_string(s.policy) == Architecture::kLinearSoftmax
                       ? make_linear_softmax(env.obs_dim(), env.num_actions(), env.recommended_features())
                       : make_mlp_tanh(env.obs_dim(), env.num_actions(), s.hidden,
                                       env.recommended_features());
  normc_init(p, derive_seed(run_seed, StreamPurpose::kInitialization, 0));
  return p;
}

const std::vector<std::string> kCurveColumns{
    "iteration",   "surrogate_final", "disc_return", "undisc_return", "step_count",
    "r_max_eff",   "batch_estimate",  "renyi_last",  "renyi_max",     "clipped"};

}  // namespace

nlohmann::json cmd_optimize(Settings s, std::ostream& report) {
  const auto start = Clock::now();
  resolve_defaults(s);
  const auto env = make_environment(s.env, *s.horizon);
  const fs::path dir(s.out);
  ensure_dir(dir);
  std::vector<std::string> outputs;

  for (const auto& algo : s.algos) {
    const std::string tag = to_string(dcs_mode_from_string(algo)) == "optimal" ? "ttpois" : "pois";
    const fs::path algo_dir = dir / tag;
    ensure_dir(algo_dir);
    // curves[k][i]: seed k, iteration i.
    std::vector<std::vector<IterationLog>> curves;
    for (int k = 0; k < s.seeds; ++k) {
      const auto run_start = Clock::now();
      const std::uint64_t run_seed = s.seed + static_cast<std::uint64_t>(k);
      const OptimConfig config = optim_config(s, tag, run_seed);
      const fs::path seed_dir = algo_dir / ("seed_" + std::to_string(run_seed));
      ensure_dir(seed_dir);
      const RunResult result = run(*env, initial_policy(s, *env, run_seed), config,
                                   [&](const IterationLog& log) {
                                     report << tag << " seed " << run_seed << " iter "
                                            << log.iteration << ": undisc "
                                            << log.undisc_return << ", disc " << log.disc_return
                                            << "\n";
                                   });
      const std::string curve_path = join(seed_dir, "learning_curve.csv");
      CsvWriter csv(curve_path, "learning_curve", kCurveColumns);
      for (const auto& l : result.logs) {
        csv.row({std::int64_t{l.iteration}, l.surrogate_final, l.disc_return, l.undisc_return,
                 std::int64_t{l.step_count}, l.r_max_eff, l.batch_estimate, l.renyi_last,
                 l.renyi_max, std::int64_t{l.clipped}});
      }
      csv.close();
      const std::string policy_path = join(seed_dir, "policy_final.json");
      write_file_atomic(policy_path, to_json(result.final_policy).dump() + "\n");
      curves.push_back(result.logs);

      Settings single = s;
      single.algos = {tag};
      single.seeds = 1;
      single.seed = run_seed;
      single.out = s.out;
      nlohmann::json sched = {{"m", result.dcs.m}, {"budget", result.dcs.budget},
                              {"horizon", result.dcs.horizon}, {"optimizer", config.to_json()}};
      auto manifest = make_manifest(single, sched, {curve_path, policy_path}, run_start);
      finish(seed_dir, manifest);
      outputs.push_back(curve_path);
      outputs.push_back(policy_path);
      outputs.push_back(join(seed_dir, "manifest.json"));
    }

    const std::string summary_path = join(algo_dir, "summary.csv");
    CsvWriter summary(summary_path, "learning_curve_summary",
                      {"iteration", "seeds", "undisc_mean", "undisc_se", "disc_mean", "disc_se"});
    const std::size_t iters = curves.front().size();
    for (std::size_t i = 0; i < iters; ++i) {
      std::vector<double> und, dis;
      for (const auto& c : curves) {
        und.push_back(c[i].undisc_return);
        dis.push_back(c[i].disc_return);
      }
      summary.row({static_cast<std::int64_t>(i), std::int64_t{s.seeds}, mean_of(und), std_error(und),
                   mean_of(dis), std_error(dis)});
    }
    summary.close();
    outputs.push_back(summary_path);
  }

  const Dcs schedule_ttpois = optimizer_schedule(optim_config(s, "ttpois", s.seed), *s.horizon);
  nlohmann::json sched = {{"ttpois_m", schedule_ttpois.m},
                          {"budget", single_budget(s)},
                          {"horizon", *s.horizon}};
  auto manifest = make_manifest(s, sched, outputs, start);
  finish(dir, manifest);
  return manifest;
}

nlohmann::json cmd_pac(Settings s, std::ostream& report) {
  const auto start = Clock::now();
  resolve_defaults(s);
  const PacBudget p = pac_budget(s.epsilon, *s.delta, *s.gamma, *s.horizon);
  const double expected = std::max(1.0, *s.horizon * (1.0 - *s.gamma));
  report << std::setprecision(10) << "epsilon = " << s.epsilon << ", delta = " << *s.delta
         << ", gamma = " << *s.gamma << ", T = " << *s.horizon << "\n"
         << "uniform budget        12 T log(2/delta) / ((1-gamma)^2 eps^2) = " << p.uniform << "\n"
         << "discount-only budget  12 log(2/delta) / ((1-gamma)^3 eps^2)   = " << p.discount_only
         << "\n"
         << "optimized budget (min)                                        = " << p.optimized << "\n"
         << "improvement factor = " << p.improvement_factor()
         << " (max(1, T(1-gamma)) = " << expected << ")\n"
         << "condition 8 T eps^2 <= log(2/delta) c_0: " << (p.condition_holds ? "holds" : "fails")
         << "\n";
  nlohmann::json j = {{"epsilon", s.epsilon},
                      {"delta", *s.delta},
                      {"gamma", *s.gamma},
                      {"T", *s.horizon},
                      {"budget_uniform", p.uniform},
                      {"budget_discount_only", p.discount_only},
                      {"budget_optimized", p.optimized},
                      {"improvement_factor", p.improvement_factor()},
                      {"condition_holds", p.condition_holds}};
  const fs::path dir(s.out);
  ensure_dir(dir);
  const std::string pac_path = join(dir, "pac.json");
  write_file_atomic(pac_path, j.dump(2) + "\n");
  auto manifest = make_manifest(s, j, {pac_path}, start);
  finish(dir, manifest);
  return manifest;
}

nlohmann::json run_command(const Settings& s, std::ostream& report) {
  if (s.command == "schedule") return cmd_schedule(s, report);
  if (s.command == "evaluate") return cmd_evaluate(s, report);
  if (s.command == "optimize") return cmd_optimize(s, report);
  if (s.command == "pac") return cmd_pac(s, report);
  throw ArgumentError("unknown command '" + s.command + "'");
}

}  // namespace truncmc
