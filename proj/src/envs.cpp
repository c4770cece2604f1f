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

#include "truncmc/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "truncmc/errors.hpp"

namespace truncmc {

StepResult Environment::step(const EnvState& s, int action, Rng& rng) const {
  if (s.t >= horizon_) {
    throw DomainError(name() + ": step past the horizon " + std::to_string(horizon_));
  }
  if (action < 0 || action >= num_actions()) {
    throw DomainError(name() + ": invalid action " + std::to_string(action));
  }
  return do_step(s, action, rng);
}

// ---------------------------------------------------------------- milestone

MilestoneEnv::MilestoneEnv(int horizon, double reward_std)
    : Environment(horizon), reward_std_(reward_std) {
  if (horizon < 20 || horizon % 10 != 0) {
    throw DomainError("milestone horizon must be a multiple of 10 and at least 20");
  }
  if (!(reward_std >= 0.0)) throw DomainError("milestone reward std must be non-negative");
  for (int i = 0; i < 10; ++i) steps_.push_back(i * horizon / 10);
  steps_.push_back(horizon - 1);
  index_of_step_.assign(horizon, -1);
  for (int i = 0; i < kMilestones; ++i) index_of_step_[steps_[i]] = i;
}

int MilestoneEnv::milestone_index(int t) const {
  return (t >= 0 && t < horizon()) ? index_of_step_[t] : -1;
}

EnvState MilestoneEnv::reset(Rng&) const { return EnvState{{0.0}, 0, false, 0.0}; }

FeatureMap MilestoneEnv::recommended_features() const {
  return FeatureMap::affine({0.0}, {1.0 / horizon()});
}

nlohmann::json MilestoneEnv::config_json() const {
  return {{"variant", name()}, {"horizon", horizon()}, {"reward_std", reward_std_}};
}

StepResult MilestoneEnv::do_step(const EnvState& s, int action, Rng& rng) const {
  StepResult r;
  r.next = s;
  r.next.t = s.t + 1;
  r.next.obs = {static_cast<double>(r.next.t)};
  const int i = milestone_index(s.t);
  if (i >= 0) {
    const double mean = action == 0 ? kMeanA[i] : kMeanB[i];
    r.reward = mean + reward_std_ * std::normal_distribution<double>(0.0, 1.0)(rng);
  }
  return r;
}

double MilestoneEnv::exact_return(const PolicyParams& policy, double gamma) const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in (0, 1]");
  double j = 0.0;
  for (int i = 0; i < kMilestones; ++i) {
    const int t = steps_[i];
    const auto p = action_distribution(policy, std::vector<double>{static_cast<double>(t)});
    j += std::pow(gamma, t) * (p[0] * kMeanA[i] + p[1] * kMeanB[i]);
  }
  return j;
}

// ----------------------------------------------------------------- corridor

CorridorEnv::CorridorEnv(int horizon, Params params) : Environment(horizon), p_(params) {
  if (horizon < 1) throw DomainError("corridor horizon must be positive");
  if (!(p_.x_max > 0.0)) throw DomainError("corridor x_max must be positive");
  if (!(p_.success_prob > 0.5 && p_.success_prob <= 1.0)) {
    throw DomainError("corridor success probability must lie in (0.5, 1]");
  }
}

CorridorEnv CorridorEnv::sparse(double success_prob) {
  Params p;
  p.reward = Reward::kSparse;
  p.x_max = p.goal = 12.0;
  p.success_prob = success_prob;
  return CorridorEnv(100, p);
}

CorridorEnv CorridorEnv::dense(double success_prob) {
  Params p;
  p.reward = Reward::kDense;
  p.x_max = p.goal = 1000.0;
  p.success_prob = success_prob;
  return CorridorEnv(1000, p);
}

std::string CorridorEnv::name() const {
  return p_.reward == Reward::kSparse ? "corridor-sparse" : "corridor-dense";
}

bool CorridorEnv::at_goal(double x) const { return std::abs(x - p_.goal) < 0.5; }

EnvState CorridorEnv::reset(Rng&) const { return EnvState{{0.0}, 0, false, 0.0}; }

FeatureMap CorridorEnv::recommended_features() const {
  return FeatureMap::affine({0.0}, {1.0 / p_.x_max});
}

nlohmann::json CorridorEnv::config_json() const {
  return {{"variant", name()},          {"horizon", horizon()},
          {"x_max", p_.x_max},          {"goal", p_.goal},
          {"success_prob", p_.success_prob}, {"noise_std", p_.noise_std},
          {"dense_magnitude", p_.dense_magnitude}};
}

StepResult CorridorEnv::do_step(const EnvState& s, int action, Rng& rng) const {
  StepResult r;
  r.next = s;
  r.next.t = s.t + 1;
  const bool goal_now = s.absorbed || at_goal(s.x);
  if (goal_now) {
    r.next.absorbed = true;
    r.reward = p_.reward == Reward::kSparse ? 1.0 : 0.0;
    return r;
  }
  const double intended = action == 0 ? 1.0 : -1.0;
  const bool success = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p_.success_prob;
  const double dir = success ? intended : -intended;
  const double noise = p_.noise_std * std::normal_distribution<double>(0.0, 1.0)(rng);
  r.next.x = std::clamp(s.x + dir + noise, -p_.x_max, p_.x_max);
  r.next.obs = {r.next.x};
  r.next.absorbed = at_goal(r.next.x);
  r.reward = p_.reward == Reward::kSparse ? 0.0 : p_.dense_magnitude * dir;
  return r;
}

// ---------------------------------------------------------------------- dam

DamEnv::DamEnv(int horizon) : DamEnv(horizon, Params{}) {}

DamEnv::DamEnv(int horizon, Params params, InflowFn inflow)
    : Environment(horizon), p_(params), inflow_(std::move(inflow)) {
  if (horizon < 1) throw DomainError("dam horizon must be positive");
  if (p_.days_per_decision < 1) throw DomainError("dam days_per_decision must be positive");
  if (p_.num_actions < 2) throw DomainError("dam needs at least two release levels");
  if (!inflow_) {
    const double sd = p_.inflow_noise_std;
    inflow_ = [sd](int day, Rng& rng) {
      return mean_inflow(day) + sd * std::normal_distribution<double>(0.0, 1.0)(rng);
    };
  }
}

double DamEnv::mean_inflow(int day) {
  const double v = std::sin(2.0 * std::numbers::pi * (day - 120) / 365.0);
  const double pos = std::max(0.0, v);
  return 4.0 + 8.0 * pos * pos;
}

double DamEnv::daily_reward(double storage, double release) const {
  const double flood = std::max(0.0, storage - p_.flood_threshold);
  const double shortfall = std::max(0.0, p_.demand - release);
  return p_.reward_scale * (-p_.flood_weight * flood - p_.demand_weight * shortfall * shortfall);
}

std::vector<double> DamEnv::observe(double storage, int day) const {
  std::vector<double> o(7);
  o[0] = 2.0 * (storage - 50.0) / 450.0 - 1.0;
  const int doy = day % 365;
  for (int i = 0; i < 6; ++i) o[i + 1] = 2.0 * std::abs(doy - kBasisCenters[i]) / 360.0 - 1.0;
  return o;
}

EnvState DamEnv::reset(Rng&) const {
  EnvState s;
  s.x = p_.initial_storage;
  s.obs = observe(s.x, 0);
  return s;
}

nlohmann::json DamEnv::config_json() const {
  return {{"variant", name()},
          {"horizon", horizon()},
          {"horizon_unit", "decisions"},
          {"days_per_decision", p_.days_per_decision},
          {"demand", p_.demand},
          {"flood_threshold", p_.flood_threshold},
          {"flood_weight", p_.flood_weight},
          {"demand_weight", p_.demand_weight},
          {"reward_scale", p_.reward_scale},
          {"initial_storage", p_.initial_storage},
          {"num_actions", p_.num_actions},
          {"inflow_noise_std", p_.inflow_noise_std},
          {"inflow_profile", "4 + 8*max(0, sin(2*pi*(day-120)/365))^2 + noise"}};
}

StepResult DamEnv::do_step(const EnvState& s, int action, Rng& rng) const {
  StepResult r;
  r.next = s;
  r.next.t = s.t + 1;
  const double release = static_cast<double>(action);
  double storage = s.x;
  int day = s.t * p_.days_per_decision;
  for (int d = 0; d < p_.days_per_decision; ++d, ++day) {
    r.reward += daily_reward(storage, release);
    storage = std::max(storage - release + inflow_(day, rng), 0.0);
  }
  r.next.x = storage;
  r.next.obs = observe(storage, day);
  return r;
}

// ------------------------------------------------------- final-reward chain

EnvState FinalRewardChainEnv::reset(Rng&) const { return EnvState{{0.0}, 0, false, 0.0}; }

nlohmann::json FinalRewardChainEnv::config_json() const {
  return {{"variant", name()}, {"horizon", horizon()}};
}

StepResult FinalRewardChainEnv::do_step(const EnvState& s, int, Rng& rng) const {
  StepResult r;
  r.next = s;
  r.next.t = s.t + 1;
  r.next.obs = {static_cast<double>(r.next.t)};
  if (s.t == horizon() - 1) r.reward = (rng() & 1ULL) ? 1.0 : -1.0;
  return r;
}

// ------------------------------------------------------------------ factory

std::unique_ptr<Environment> make_environment(const std::string& variant, int horizon,
                                              const nlohmann::json& options) {
  auto opt = [&](const char* key, double def) {
    return options.is_object() && options.contains(key) ? options.at(key).get<double>() : def;
  };
  if (variant == "milestone") {
    return std::make_unique<MilestoneEnv>(horizon > 0 ? horizon : 100, opt("reward_std", 0.1));
  }
  if (variant == "corridor-sparse" || variant == "corridor-dense") {
    const bool sparse = variant == "corridor-sparse";
    CorridorEnv base = sparse ? CorridorEnv::sparse() : CorridorEnv::dense();
    CorridorEnv::Params p = base.params();
    p.success_prob = opt("success_prob", p.success_prob);
    p.x_max = opt("x_max", p.x_max);
    p.goal = opt("goal", p.x_max);
    p.noise_std = opt("noise_std", p.noise_std);
    return std::make_unique<CorridorEnv>(horizon > 0 ? horizon : base.horizon(), p);
  }
  if (variant == "dam") {
    DamEnv::Params p;
    p.inflow_noise_std = opt("inflow_noise_std", p.inflow_noise_std);
    p.days_per_decision = static_cast<int>(opt("days_per_decision", p.days_per_decision));
    return std::make_unique<DamEnv>(horizon > 0 ? horizon : 360, p);
  }
  if (variant == "final-reward-chain") {
    return std::make_unique<FinalRewardChainEnv>(horizon > 0 ? horizon : 10);
  }
  throw ValidationError("unknown environment '" + variant + "'");
}

PolicyParams constant_policy(int obs_dim, const std::vector<double>& probs) {
  PolicyParams p = make_linear_softmax(obs_dim, static_cast<int>(probs.size()));
  const std::size_t bias = static_cast<std::size_t>(obs_dim) * probs.size();
  for (std::size_t a = 0; a < probs.size(); ++a) {
    if (!(probs[a] > 0.0)) throw DomainError("constant policy probabilities must be positive");
    p.theta[bias + a] = std::log(probs[a]);
  }
  return p;
}

}  // namespace truncmc
