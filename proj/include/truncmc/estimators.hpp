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

// Truncated-trajectory batches and the estimators built on them.
//
// Summation order is fixed everywhere: ascending length h, then ascending
// trajectory index i, then ascending step t. Batches therefore give the same
// estimate bit for bit regardless of how they were collected.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "truncmc/envs.hpp"
#include "truncmc/policies.hpp"
#include "truncmc/schedule.hpp"

namespace truncmc {

struct Trajectory {
  std::vector<std::vector<double>> states;  // observation before each action
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<double> final_state;  // observation after the last action

  int length() const { return static_cast<int>(actions.size()); }
};

struct TruncatedBatch {
  Dcs dcs;
  std::string behavior_policy_id;
  // by_length[h - 1] holds the m_h trajectories of length h.
  std::vector<std::vector<Trajectory>> by_length;

  std::int64_t transitions() const;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

struct RMax {
  double value = 0.0;
  std::string source;  // "empirical" or "floor"
};

struct EstimateReport {
  double point = 0.0;
  std::optional<double> half_width;  // on-policy Hoeffding
  std::optional<double> ci_lower;    // off-policy Cantelli
  std::vector<double> per_length_renyi;  // index h - 1
  double effective_r_max = 0.0;
  std::string r_max_source;
  double delta = 0.0;
};

// Short stable identifier for a policy (hash of its JSON form).
std::string policy_id(const PolicyParams& policy);

// Rolls out m_h episodes truncated at h for every h. Trajectory (h, i) draws
// from its own stream derive_seed(seed, kCollection, h, i), so the result is
// identical for any worker count.
TruncatedBatch collect_batch(const Environment& env, const PolicyParams& policy, const Dcs& dcs,
                             std::uint64_t seed, int workers = 1);

// Throws ValidationError unless the batch matches the schedule.
void check_conforms(const TruncatedBatch& batch, const Dcs& dcs);

// γ^t / n_t for t < T. Rejects a γ other than the one the schedule was built for.
std::vector<double> step_weights(const Dcs& dcs, double gamma);

// Σ_{t<h} γ^t r_t / n_t for one trajectory.
double weighted_return(const Trajectory& tr, const std::vector<double>& weights);

double on_policy_estimate(const TruncatedBatch& batch, const Dcs& dcs, double gamma);

// point ± width, width = reward_range * sqrt(1/2 log(2/δ) Σ c_t/n_t).
Interval hoeffding_interval(double point, const Dcs& dcs, double gamma, double delta,
                            double reward_range = 1.0);

double log_importance_weight(const Trajectory& tr, const PolicyParams& target,
                             const PolicyParams& behavior);
double importance_weight(const Trajectory& tr, const PolicyParams& target,
                         const PolicyParams& behavior);

double off_policy_estimate(const TruncatedBatch& batch, const Dcs& dcs, double gamma,
                           const PolicyParams& target, const PolicyParams& behavior,
                           std::optional<double> iw_clip = std::nullopt);

// Average over trajectories of length >= h of Π_{t<h} d2(target(.|s_t) || behavior(.|s_t)).
double empirical_renyi(const TruncatedBatch& batch, const PolicyParams& target,
                       const PolicyParams& behavior, int h);
// All h = 1..T in one pass; entry h - 1.
std::vector<double> per_length_renyi(const TruncatedBatch& batch, const PolicyParams& target,
                                     const PolicyParams& behavior);

double cantelli_beta(double delta);

// φ_h = r_max Σ_{t<h} γ^t / n_t, entry h - 1.
std::vector<double> phi(const Dcs& dcs, double gamma, double r_max);

// point - sqrt(β Σ_h m_h φ_h^2 d2(h)).
double off_policy_ci_tight(double point, const Dcs& dcs, double gamma,
                           const std::vector<double>& renyi_by_length, double delta, double r_max);
double off_policy_ci_tight(double point, const TruncatedBatch& batch, const Dcs& dcs, double gamma,
                           const PolicyParams& target, const PolicyParams& behavior, double delta,
                           double r_max);
// point - sqrt(β d2(T) r_max^2 Σ c_t / n_t).
double off_policy_ci_loose(double point, const Dcs& dcs, double gamma, double renyi_T,
                           double delta, double r_max);

// max(max |r| over the batch, floor).
RMax effective_r_max(const TruncatedBatch& batch, std::optional<double> floor = std::nullopt);

EstimateReport evaluate_on_policy(const TruncatedBatch& batch, const Dcs& dcs, double gamma,
                                  double delta, double reward_range = 1.0);
EstimateReport evaluate_off_policy(const TruncatedBatch& batch, const Dcs& dcs, double gamma,
                                   const PolicyParams& target, const PolicyParams& behavior,
                                   double delta, std::optional<double> iw_clip = std::nullopt,
                                   std::optional<double> r_min_max = std::nullopt);

// Line-oriented text form, see README.
void write_batch(std::ostream& out, const TruncatedBatch& batch);
TruncatedBatch read_batch(std::istream& in);

}  // namespace truncmc
