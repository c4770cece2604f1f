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

#include "truncmc/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "truncmc/errors.hpp"

namespace truncmc {

namespace {

constexpr double kBehaviorProbFloor = 1e-300;

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
}

void check_r_max(double r_max) {
  if (!(r_max > 0.0) || !std::isfinite(r_max)) throw DomainError("r_max must be positive");
}

Trajectory rollout(const Environment& env, const PolicyParams& policy, int h, Rng& rng,
                   ForwardCache& cache) {
  Trajectory tr;
  tr.states.reserve(h);
  tr.actions.reserve(h);
  tr.rewards.reserve(h);
  EnvState s = env.reset(rng);
  for (int t = 0; t < h; ++t) {
    forward(policy, s.obs, cache);
    const int a = sample_from(cache.probs, rng);
    StepResult r = env.step(s, a, rng);
    tr.states.push_back(std::move(s.obs));
    tr.actions.push_back(a);
    tr.rewards.push_back(r.reward);
    s = std::move(r.next);
  }
  tr.final_state = std::move(s.obs);
  return tr;
}

}  // namespace

std::int64_t TruncatedBatch::transitions() const {
  std::int64_t n = 0;
  for (const auto& group : by_length) {
    for (const auto& tr : group) n += tr.length();
  }
  return n;
}

std::string policy_id(const PolicyParams& policy) {
  const std::string s = to_json(policy).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TruncatedBatch collect_batch(const Environment& env, const PolicyParams& policy, const Dcs& dcs,
                             std::uint64_t seed, int workers) {
  if (env.horizon() < dcs.horizon) {
    throw DimensionError("environment horizon " + std::to_string(env.horizon()) +
                         " is shorter than the schedule horizon " + std::to_string(dcs.horizon));
  }
  if (env.obs_dim() != policy.obs_dim || env.num_actions() != policy.num_actions) {
    throw DimensionError("policy does not match the environment's observation/action spaces");
  }
  TruncatedBatch batch;
  batch.dcs = dcs;
  batch.behavior_policy_id = policy_id(policy);
  batch.by_length.resize(dcs.horizon);

  std::vector<std::pair<int, std::int64_t>> jobs;
  for (int h = 1; h <= dcs.horizon; ++h) {
    batch.by_length[h - 1].resize(dcs.m[h - 1]);
    for (std::int64_t i = 0; i < dcs.m[h - 1]; ++i) jobs.emplace_back(h, i);
  }

  auto run_job = [&](std::size_t j, ForwardCache& cache) {
    const auto [h, i] = jobs[j];
    Rng rng(derive_seed(seed, StreamPurpose::kCollection, static_cast<std::uint64_t>(h),
                        static_cast<std::uint64_t>(i)));
    batch.by_length[h - 1][i] = rollout(env, policy, h, rng, cache);
  };

  workers = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  if (workers == 1) {
    ForwardCache cache;
    for (std::size_t j = 0; j < jobs.size(); ++j) run_job(j, cache);
    return batch;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      ForwardCache cache;
      try {
        for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) run_job(j, cache);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        next = jobs.size();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return batch;
}

void check_conforms(const TruncatedBatch& batch, const Dcs& dcs) {
  if (static_cast<int>(batch.by_length.size()) != dcs.horizon) {
    throw ValidationError("batch horizon does not match the schedule");
  }
  for (int h = 1; h <= dcs.horizon; ++h) {
    const auto& group = batch.by_length[h - 1];
    if (static_cast<std::int64_t>(group.size()) != dcs.m[h - 1]) {
      throw ValidationError("batch holds " + std::to_string(group.size()) +
                            " trajectories of length " + std::to_string(h) + ", schedule has " +
                            std::to_string(dcs.m[h - 1]));
    }
    for (const auto& tr : group) {
      if (tr.length() != h || static_cast<int>(tr.rewards.size()) != h ||
          static_cast<int>(tr.states.size()) != h) {
        throw ValidationError("trajectory stored under length " + std::to_string(h) +
                              " has inconsistent length");
      }
    }
  }
  if (dcs.m.back() < 1) throw BiasedScheduleError("biased schedule: m_T = 0");
}

std::vector<double> step_weights(const Dcs& dcs, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in (0, 1]");
  if (dcs.gamma && *dcs.gamma != gamma) {
    throw ValidationError("schedule was optimized for gamma=" + std::to_string(*dcs.gamma) +
                          ", estimate requested with gamma=" + std::to_string(gamma));
  }
  if (dcs.m.empty() || dcs.m.back() < 1) throw BiasedScheduleError("biased schedule: m_T = 0");
  std::vector<double> w(dcs.horizon);
  double g = 1.0;
  for (int t = 0; t < dcs.horizon; ++t) {
    w[t] = g / static_cast<double>(dcs.n[t]);
    g *= gamma;
  }
  return w;
}

double weighted_return(const Trajectory& tr, const std::vector<double>& weights) {
  double s = 0.0;
  for (int t = 0; t < tr.length(); ++t) s += tr.rewards[t] * weights[t];
  return s;
}

double on_policy_estimate(const TruncatedBatch& batch, const Dcs& dcs, double gamma) {
  check_conforms(batch, dcs);
  const auto w = step_weights(dcs, gamma);
  double total = 0.0;
  for (const auto& group : batch.by_length) {
    for (const auto& tr : group) total += weighted_return(tr, w);
  }
  return total;
}

Interval hoeffding_interval(double point, const Dcs& dcs, double gamma, double delta,
                            double reward_range) {
  if (!(reward_range > 0.0)) throw DomainError("reward range must be positive");
  if (dcs.gamma && *dcs.gamma != gamma) {
    throw ValidationError("schedule was optimized for a different gamma");
  }
  const double w = reward_range * ci_width(dcs.n, coefficients(gamma, dcs.horizon), delta);
  return {point - w, point + w};
}

double log_importance_weight(const Trajectory& tr, const PolicyParams& target,
                             const PolicyParams& behavior) {
  check_compatible(target, behavior);
  ForwardCache ct, cb;
  double s = 0.0;
  for (int t = 0; t < tr.length(); ++t) {
    forward(behavior, tr.states[t], cb);
    const int a = tr.actions[t];
    if (!(cb.probs[a] >= kBehaviorProbFloor)) {
      throw AbsoluteContinuityError("behavior policy gives probability " +
                                    std::to_string(cb.probs[a]) + " to a logged action");
    }
    forward(target, tr.states[t], ct);
    s += ct.log_probs[a] - cb.log_probs[a];
  }
  return s;
}

double importance_weight(const Trajectory& tr, const PolicyParams& target,
                         const PolicyParams& behavior) {
  return std::exp(log_importance_weight(tr, target, behavior));
}

double off_policy_estimate(const TruncatedBatch& batch, const Dcs& dcs, double gamma,
                           const PolicyParams& target, const PolicyParams& behavior,
                           std::optional<double> iw_clip) {
  check_conforms(batch, dcs);
  if (iw_clip && !(*iw_clip > 0.0)) throw DomainError("importance weight clip must be positive");
  const auto w = step_weights(dcs, gamma);
  double total = 0.0;
  for (const auto& group : batch.by_length) {
    for (const auto& tr : group) {
      double omega = importance_weight(tr, target, behavior);
      if (iw_clip) omega = std::min(omega, *iw_clip);
      total += omega * weighted_return(tr, w);
    }
  }
  return total;
}

std::vector<double> per_length_renyi(const TruncatedBatch& batch, const PolicyParams& target,
                                     const PolicyParams& behavior) {
  check_compatible(target, behavior);
  const int T = static_cast<int>(batch.by_length.size());
  std::vector<double> sum(T, 0.0);
  std::vector<std::int64_t> count(T, 0);
  ForwardCache ct, cb;
  for (const auto& group : batch.by_length) {
    for (const auto& tr : group) {
      double prod = 1.0;
      for (int t = 0; t < tr.length(); ++t) {
        forward(target, tr.states[t], ct);
        forward(behavior, tr.states[t], cb);
        prod *= renyi2(ct.probs, cb.probs);
        sum[t] += prod;
        ++count[t];
      }
    }
  }
  std::vector<double> out(T, std::numeric_limits<double>::quiet_NaN());
  for (int t = 0; t < T; ++t) {
    if (count[t] > 0) out[t] = sum[t] / static_cast<double>(count[t]);
  }
  return out;
}

double empirical_renyi(const TruncatedBatch& batch, const PolicyParams& target,
                       const PolicyParams& behavior, int h) {
  const int T = static_cast<int>(batch.by_length.size());
  if (h < 1 || h > T) throw DomainError("length h outside [1, T]");
  const auto all = per_length_renyi(batch, target, behavior);
  if (std::isnan(all[h - 1])) {
    throw DomainError("no trajectory of length >= " + std::to_string(h) + " in the batch");
  }
  return all[h - 1];
}

double cantelli_beta(double delta) {
  check_delta(delta);
  return (1.0 - delta) / delta;
}

std::vector<double> phi(const Dcs& dcs, double gamma, double r_max) {
  const auto w = step_weights(dcs, gamma);
  std::vector<double> out(dcs.horizon);
  double acc = 0.0;
  for (int h = 1; h <= dcs.horizon; ++h) {
    acc += w[h - 1];
    out[h - 1] = r_max * acc;
  }
  return out;
}

double off_policy_ci_tight(double point, const Dcs& dcs, double gamma,
                           const std::vector<double>& renyi_by_length, double delta,
                           double r_max) {
  check_r_max(r_max);
  const double beta = cantelli_beta(delta);
  if (static_cast<int>(renyi_by_length.size()) != dcs.horizon) {
    throw DimensionError("one Renyi value per length is required");
  }
  const auto f = phi(dcs, gamma, r_max);
  double s = 0.0;
  for (int h = 1; h <= dcs.horizon; ++h) {
    if (dcs.m[h - 1] == 0) continue;
    s += static_cast<double>(dcs.m[h - 1]) * f[h - 1] * f[h - 1] * renyi_by_length[h - 1];
  }
  return point - std::sqrt(beta * s);
}

double off_policy_ci_tight(double point, const TruncatedBatch& batch, const Dcs& dcs, double gamma,
                           const PolicyParams& target, const PolicyParams& behavior, double delta,
                           double r_max) {
  check_conforms(batch, dcs);
  return off_policy_ci_tight(point, dcs, gamma, per_length_renyi(batch, target, behavior), delta,
                             r_max);
}

double off_policy_ci_loose(double point, const Dcs& dcs, double gamma, double renyi_T,
                           double delta, double r_max) {
  check_r_max(r_max);
  if (!(renyi_T >= 1.0)) throw DomainError("Renyi divergence must be >= 1");
  const double beta = cantelli_beta(delta);
  if (dcs.gamma && *dcs.gamma != gamma) {
    throw ValidationError("schedule was optimized for a different gamma");
  }
  const double s = weighted_inverse_sum(dcs.n, coefficients(gamma, dcs.horizon));
  return point - std::sqrt(beta * renyi_T * r_max * r_max * s);
}

RMax effective_r_max(const TruncatedBatch& batch, std::optional<double> floor) {
  bool any = false;
  double m = 0.0;
  for (const auto& group : batch.by_length) {
    for (const auto& tr : group) {
      for (double r : tr.rewards) {
        m = std::max(m, std::abs(r));
        any = true;
      }
    }
  }
  if (!any) throw ValidationError("effective_r_max of an empty batch");
  if (floor && *floor > m) return {*floor, "floor"};
  return {m, "empirical"};
}

EstimateReport evaluate_on_policy(const TruncatedBatch& batch, const Dcs& dcs, double gamma,
                                  double delta, double reward_range) {
  EstimateReport rep;
  rep.point = on_policy_estimate(batch, dcs, gamma);
  const auto iv = hoeffding_interval(rep.point, dcs, gamma, delta, reward_range);
  rep.half_width = iv.upper - rep.point;
  rep.per_length_renyi.assign(dcs.horizon, 1.0);
  const RMax rm = effective_r_max(batch);
  rep.effective_r_max = rm.value;
  rep.r_max_source = rm.source;
  rep.delta = delta;
  return rep;
}

EstimateReport evaluate_off_policy(const TruncatedBatch& batch, const Dcs& dcs, double gamma,
                                   const PolicyParams& target, const PolicyParams& behavior,
                                   double delta, std::optional<double> iw_clip,
                                   std::optional<double> r_min_max) {
  EstimateReport rep;
  rep.point = off_policy_estimate(batch, dcs, gamma, target, behavior, iw_clip);
  rep.per_length_renyi = per_length_renyi(batch, target, behavior);
  const RMax rm = effective_r_max(batch, r_min_max);
  rep.effective_r_max = rm.value;
  rep.r_max_source = rm.source;
  rep.delta = delta;
  if (rm.value > 0.0) {
    rep.ci_lower = off_policy_ci_tight(rep.point, dcs, gamma, rep.per_length_renyi, delta, rm.value);
  } else {
    check_delta(delta);
    rep.ci_lower = rep.point;  // all rewards zero: the estimate is exact
  }
  return rep;
}

}  // namespace truncmc
