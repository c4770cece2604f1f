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

// Offline surrogate maximization over truncated batches.
//
// The surrogate of a candidate policy θ̄ given data from θ is
//
//     L(θ̄) = Ĵ(θ̄/θ) - sqrt( β Σ_h m_h φ_h^2 d̂2(h) ),
//
// with Ĵ the clipped importance-weighted truncated estimate and d̂2(h) the
// empirical exponentiated Rényi divergence over the first h steps. With a
// uniform schedule only h = T carries weight and this is the classical
// single-horizon bound, so both optimizer modes share one implementation.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "truncmc/envs.hpp"
#include "truncmc/estimators.hpp"
#include "truncmc/policies.hpp"
#include "truncmc/schedule.hpp"

namespace truncmc {

enum class DcsMode { kOptimal, kUniform };

std::string to_string(DcsMode m);
DcsMode dcs_mode_from_string(const std::string& s);  // "optimal"/"ttpois", "uniform"/"pois"

struct LineSearchConfig {
  double initial_step = 1.0;
  double shrink = 0.5;
  int max_halvings = 30;
};

struct OptimConfig {
  DcsMode mode = DcsMode::kOptimal;
  double gamma = 0.99;
  std::int64_t budget = 15000;
  double delta = 0.7;
  int online_iterations = 40;
  int offline_iterations = 10;
  std::optional<double> iw_clip = 100.0;
  std::optional<double> r_min_max;
  LineSearchConfig line_search;
  int eval_episodes = 20;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

// Precomputed view of one batch for repeated surrogate evaluations.
class Surrogate {
 public:
  Surrogate(const TruncatedBatch& batch, const PolicyParams& behavior, const Dcs& dcs,
            const OptimConfig& config, double r_max);

  struct Value {
    double objective = 0.0;  // -inf when any term is not finite
    double estimate = 0.0;
    double penalty = 0.0;
    std::vector<double> renyi;  // d̂2(h), entry h - 1
    int clipped = 0;            // trajectories whose weight hit the clip
  };

  Value evaluate(const PolicyParams& target) const;
  double operator()(const PolicyParams& target) const { return evaluate(target).objective; }
  std::vector<double> gradient(const PolicyParams& target) const;

  // Per-length penalty weights β m_h φ_h^2.
  const std::vector<double>& penalty_weights() const { return weight_; }

 private:
  struct Step {
    const std::vector<double>* obs;
    int action;
    double behavior_log_prob;
    std::vector<double> behavior_probs;
  };
  struct Traj {
    std::vector<Step> steps;
    double weighted_return;
  };

  // Forward quantities shared by value and gradient.
  struct Pass;
  void run_pass(const PolicyParams& target, Pass& pass) const;

  const PolicyParams* behavior_;
  std::optional<double> clip_;
  std::vector<Traj> trajs_;
  std::vector<double> weight_;       // β m_h φ_h^2
  std::vector<double> count_;        // trajectories reaching length h
  int horizon_;
};

struct LineSearchResult {
  std::vector<double> theta;
  double step = 0.0;
  double value = 0.0;  // surrogate at the returned θ
  bool accepted = false;
};

// Backtracking along the unit gradient direction: tries initial_step,
// initial_step * shrink, ... (max_halvings + 1 candidates) and takes the
// first that strictly increases the objective. Otherwise θ is unchanged.
// current_value, when given, must equal objective(theta).
LineSearchResult line_search(const std::vector<double>& theta, const std::vector<double>& gradient,
                             const std::function<double(const std::vector<double>&)>& objective,
                             const LineSearchConfig& config,
                             std::optional<double> current_value = std::nullopt);

struct IterationLog {
  int iteration = 0;                      // 0 = initial policy
  std::vector<double> surrogate_values;   // start value, then after each accepted step
  std::vector<double> step_sizes;         // accepted steps
  double surrogate_final = 0.0;
  double batch_estimate = 0.0;            // on-policy estimate of the collected batch
  double disc_return = 0.0;               // evaluation rollouts, discounted
  double undisc_return = 0.0;             // evaluation rollouts, undiscounted
  int step_count = 0;
  double r_max_eff = 0.0;
  std::string r_max_source;
  double renyi_last = 1.0;                // d̂2(T) at the final offline iterate
  double renyi_max = 1.0;
  int clipped = 0;                        // clip-active trajectories at the final iterate
};

struct RunResult {
  Dcs dcs;
  std::vector<IterationLog> logs;  // logs[0] evaluates the initial policy
  PolicyParams final_policy;
};

struct Returns {
  double discounted = 0.0;
  double undiscounted = 0.0;
};

// Mean returns of full-horizon rollouts; episode e uses stream
// derive_seed(seed, kEvaluation, iteration, e).
Returns evaluate_policy(const Environment& env, const PolicyParams& policy, double gamma,
                        int episodes, std::uint64_t seed, std::uint64_t iteration);

// The schedule the optimizer uses: optimal or uniform over the environment
// horizon, tagged with the configured γ.
Dcs optimizer_schedule(const OptimConfig& config, int horizon);

using IterationCallback = std::function<void(const IterationLog&)>;

RunResult run(const Environment& env, const PolicyParams& initial, const OptimConfig& config,
              const IterationCallback& on_iteration = {});

nlohmann::json to_json(const IterationLog& log);

}  // namespace truncmc
