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

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "truncmc/policies.hpp"
#include "truncmc/rng.hpp"

namespace truncmc {

struct EnvState {
  std::vector<double> obs;
  int t = 0;
  bool absorbed = false;
  // Variant-specific hidden state (corridor position, dam storage, ...).
  double x = 0.0;
};

struct StepResult {
  EnvState next;
  double reward = 0.0;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual int obs_dim() const = 0;
  virtual int num_actions() const = 0;
  int horizon() const { return horizon_; }

  virtual EnvState reset(Rng& rng) const = 0;
  // Throws DomainError past the horizon or for an invalid action.
  StepResult step(const EnvState& s, int action, Rng& rng) const;

  // Feature map that brings observations to roughly unit scale.
  virtual FeatureMap recommended_features() const { return FeatureMap::identity(); }
  virtual nlohmann::json config_json() const = 0;

 protected:
  explicit Environment(int horizon) : horizon_(horizon) {}
  virtual StepResult do_step(const EnvState& s, int action, Rng& rng) const = 0;

 private:
  int horizon_;
};

// Evaluation MDP whose state is the time index. Rewards are Gaussian around
// fixed means at eleven milestone steps {0, T/10, ..., 9T/10, T-1} and zero
// elsewhere, so the expected return of a time-dependent policy is exact.
class MilestoneEnv final : public Environment {
 public:
  static constexpr int kMilestones = 11;
  static constexpr std::array<double, kMilestones> kMeanA{1, 4, 3, 1, 1.5, 0.4, 4, 4.1, 3, 2, 4};
  static constexpr std::array<double, kMilestones> kMeanB{4, 1, 1, 3, 4, 1.5, 0.1, 5, 1, 1, 4};

  explicit MilestoneEnv(int horizon = 100, double reward_std = 0.1);

  std::string name() const override { return "milestone"; }
  int obs_dim() const override { return 1; }
  int num_actions() const override { return 2; }
  EnvState reset(Rng& rng) const override;
  FeatureMap recommended_features() const override;
  nlohmann::json config_json() const override;

  // Milestone index of step t, or -1.
  int milestone_index(int t) const;
  const std::vector<int>& milestone_steps() const { return steps_; }
  double reward_std() const { return reward_std_; }

  // Expected discounted return of a policy; gamma in (0, 1].
  double exact_return(const PolicyParams& policy, double gamma) const;

 protected:
  StepResult do_step(const EnvState& s, int action, Rng& rng) const override;

 private:
  double reward_std_;
  std::vector<int> steps_;
  std::vector<int> index_of_step_;
};

// One-dimensional corridor; action 0 goes right, action 1 goes left.
class CorridorEnv final : public Environment {
 public:
  enum class Reward { kSparse, kDense };
  struct Params {
    Reward reward = Reward::kSparse;
    double x_max = 12.0;
    double goal = 12.0;
    double success_prob = 0.9;
    double noise_std = 0.1;
    double dense_magnitude = 0.2;
  };

  CorridorEnv(int horizon, Params params);
  static CorridorEnv sparse(double success_prob = 0.9);  // T = 100, x_max = x_g = 12
  static CorridorEnv dense(double success_prob = 0.9);   // T = 1000, x_max = x_g = 1000

  std::string name() const override;
  int obs_dim() const override { return 1; }
  int num_actions() const override { return 2; }
  EnvState reset(Rng& rng) const override;
  FeatureMap recommended_features() const override;
  nlohmann::json config_json() const override;
  const Params& params() const { return p_; }
  bool at_goal(double x) const;

 protected:
  StepResult do_step(const EnvState& s, int action, Rng& rng) const override;

 private:
  Params p_;
};

// Reservoir operation. One decision is held for `days_per_decision`
// simulated days; the step reward is the sum of the daily rewards and the
// horizon counts decisions.
class DamEnv final : public Environment {
 public:
  using InflowFn = std::function<double(int day, Rng& rng)>;
  struct Params {
    double demand = 10.0;
    double flood_threshold = 300.0;
    double flood_weight = 0.5;
    double demand_weight = 0.5;
    double reward_scale = 0.01;
    double initial_storage = 200.0;
    int days_per_decision = 3;
    int num_actions = 21;  // releases 0..20
    double inflow_noise_std = 2.0;
  };
  static constexpr std::array<double, 6> kBasisCenters{60, 120, 180, 240, 300, 360};

  explicit DamEnv(int horizon = 360);
  DamEnv(int horizon, Params params, InflowFn inflow = {});

  std::string name() const override { return "dam"; }
  int obs_dim() const override { return 7; }
  int num_actions() const override { return p_.num_actions; }
  EnvState reset(Rng& rng) const override;
  nlohmann::json config_json() const override;
  const Params& params() const { return p_; }

  double daily_reward(double storage, double release) const;
  // Default profile: 4 + 8 max(0, sin(2π(day - 120)/365))^2 + N(0, σ).
  static double mean_inflow(int day);
  std::vector<double> observe(double storage, int day) const;

 protected:
  StepResult do_step(const EnvState& s, int action, Rng& rng) const override;

 private:
  Params p_;
  InflowFn inflow_;
};

// Deterministic chain with a single zero-mean ±1 reward at the last step.
class FinalRewardChainEnv final : public Environment {
 public:
  explicit FinalRewardChainEnv(int horizon = 10) : Environment(horizon) {}
  std::string name() const override { return "final-reward-chain"; }
  int obs_dim() const override { return 1; }
  int num_actions() const override { return 2; }
  EnvState reset(Rng& rng) const override;
  nlohmann::json config_json() const override;

 protected:
  StepResult do_step(const EnvState& s, int action, Rng& rng) const override;
};

// Builds an environment from a variant tag: milestone, corridor-sparse,
// corridor-dense, dam, final-reward-chain. horizon <= 0 picks the default.
std::unique_ptr<Environment> make_environment(const std::string& variant, int horizon = 0,
                                              const nlohmann::json& options = {});

// A state-independent softmax policy with the given action probabilities.
PolicyParams constant_policy(int obs_dim, const std::vector<double>& probs);

}  // namespace truncmc
