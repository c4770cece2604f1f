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

#include "truncmc/ttpois.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "truncmc/errors.hpp"

namespace truncmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::string to_string(DcsMode m) { return m == DcsMode::kOptimal ? "optimal" : "uniform"; }

DcsMode dcs_mode_from_string(const std::string& s) {
  if (s == "optimal" || s == "ttpois") return DcsMode::kOptimal;
  if (s == "uniform" || s == "pois") return DcsMode::kUniform;
  throw ValidationError("unknown schedule mode '" + s + "'");
}

void OptimConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  if (budget < 1) throw DomainError("budget must be positive");
  if (online_iterations < 0 || offline_iterations < 1) {
    throw DomainError("iteration counts must be positive");
  }
  if (iw_clip && !(*iw_clip > 0.0)) throw DomainError("iw_clip must be positive");
  if (r_min_max && !(*r_min_max > 0.0)) throw DomainError("r_min_max must be positive");
  if (!(line_search.initial_step > 0.0) || !(line_search.shrink > 0.0 && line_search.shrink < 1.0) ||
      line_search.max_halvings < 0) {
    throw DomainError("invalid line search parameters");
  }
  if (eval_episodes < 1) throw DomainError("eval_episodes must be positive");
  if (workers < 1) throw DomainError("workers must be positive");
}

nlohmann::json OptimConfig::to_json() const {
  nlohmann::json j;
  j["dcs"] = to_string(mode);
  j["gamma"] = gamma;
  j["budget"] = budget;
  j["delta"] = delta;
  j["online_iterations"] = online_iterations;
  j["offline_iterations"] = offline_iterations;
  j["iw_clip"] = iw_clip ? nlohmann::json(*iw_clip) : nlohmann::json(nullptr);
  j["r_min_max"] = r_min_max ? nlohmann::json(*r_min_max) : nlohmann::json(nullptr);
  j["line_search"] = {{"initial_step", line_search.initial_step},
                      {"shrink", line_search.shrink},
                      {"max_halvings", line_search.max_halvings}};
  j["eval_episodes"] = eval_episodes;
  j["seed"] = seed;
  return j;
}

// ---------------------------------------------------------------- surrogate

struct Surrogate::Pass {
  std::vector<double> log_w;                  // per trajectory
  std::vector<std::vector<double>> d2;        // per trajectory and step
  std::vector<std::vector<double>> prefix;    // Π_{t<h} d2, entry h - 1
  std::vector<double> renyi_sum;              // per h
};

Surrogate::Surrogate(const TruncatedBatch& batch, const PolicyParams& behavior, const Dcs& dcs,
                     const OptimConfig& config, double r_max)
    : behavior_(&behavior), clip_(config.iw_clip), horizon_(dcs.horizon) {
  check_conforms(batch, dcs);
  const auto w = step_weights(dcs, config.gamma);
  const double beta = cantelli_beta(config.delta);
  const auto f = phi(dcs, config.gamma, r_max);
  weight_.resize(horizon_);
  count_.resize(horizon_);
  for (int h = 1; h <= horizon_; ++h) {
    weight_[h - 1] = beta * static_cast<double>(dcs.m[h - 1]) * f[h - 1] * f[h - 1];
    count_[h - 1] = static_cast<double>(dcs.n[h - 1]);
  }
  ForwardCache cache;
  for (const auto& group : batch.by_length) {
    for (const auto& tr : group) {
      Traj t;
      t.weighted_return = weighted_return(tr, w);
      t.steps.reserve(tr.length());
      for (int k = 0; k < tr.length(); ++k) {
        forward(behavior, tr.states[k], cache);
        t.steps.push_back({&tr.states[k], tr.actions[k], cache.log_probs[tr.actions[k]], cache.probs});
      }
      trajs_.push_back(std::move(t));
    }
  }
}

void Surrogate::run_pass(const PolicyParams& target, Pass& pass) const {
  check_compatible(target, *behavior_);
  const std::size_t J = trajs_.size();
  pass.log_w.assign(J, 0.0);
  pass.d2.resize(J);
  pass.prefix.resize(J);
  pass.renyi_sum.assign(horizon_, 0.0);
  ForwardCache cache;
  for (std::size_t j = 0; j < J; ++j) {
    const auto& tr = trajs_[j];
    const std::size_t L = tr.steps.size();
    pass.d2[j].resize(L);
    pass.prefix[j].resize(L);
    double lw = 0.0, prod = 1.0;
    for (std::size_t t = 0; t < L; ++t) {
      const Step& st = tr.steps[t];
      forward(target, *st.obs, cache);
      lw += cache.log_probs[st.action] - st.behavior_log_prob;
      const double d = renyi2(cache.probs, st.behavior_probs);
      prod *= d;
      pass.d2[j][t] = d;
      pass.prefix[j][t] = prod;
      pass.renyi_sum[t] += prod;
    }
    pass.log_w[j] = lw;
  }
}

Surrogate::Value Surrogate::evaluate(const PolicyParams& target) const {
  Pass pass;
  run_pass(target, pass);
  Value v;
  double est = 0.0;
  for (std::size_t j = 0; j < trajs_.size(); ++j) {
    double omega = std::exp(pass.log_w[j]);
    if (clip_ && omega > *clip_) {
      omega = *clip_;
      ++v.clipped;
    }
    est += omega * trajs_[j].weighted_return;
  }
  v.renyi.resize(horizon_);
  double pen2 = 0.0;
  for (int h = 0; h < horizon_; ++h) {
    v.renyi[h] = pass.renyi_sum[h] / count_[h];
    if (weight_[h] != 0.0) pen2 += weight_[h] * v.renyi[h];
  }
  v.estimate = est;
  v.penalty = std::sqrt(pen2);
  v.objective = est - v.penalty;
  if (!std::isfinite(v.objective)) v.objective = kNegInf;
  return v;
}

std::vector<double> Surrogate::gradient(const PolicyParams& target) const {
  Pass pass;
  run_pass(target, pass);
  double pen2 = 0.0;
  for (int h = 0; h < horizon_; ++h) {
    if (weight_[h] != 0.0) pen2 += weight_[h] * pass.renyi_sum[h] / count_[h];
  }
  const double penalty = std::sqrt(pen2);
  // d penalty / d D_h = W_h / (2 penalty); D_h averages prefix products.
  const double pen_scale = penalty > 0.0 ? 0.5 / penalty : 0.0;

  std::vector<double> grad(target.theta.size(), 0.0), work, dl(target.num_actions);
  ForwardCache cache;
  for (std::size_t j = 0; j < trajs_.size(); ++j) {
    const auto& tr = trajs_[j];
    const std::size_t L = tr.steps.size();
    const double omega = std::exp(pass.log_w[j]);
    const bool clipped = clip_ && omega > *clip_;
    const double score_coef = clipped ? 0.0 : omega * tr.weighted_return;

    // suffix[t] = Σ_{h=t+1}^{L} (W_h / N_h) Π_{u<h} d2_u
    double suffix = 0.0;
    std::vector<double> d2_coef(L, 0.0);
    for (std::size_t t = L; t-- > 0;) {
      if (weight_[t] != 0.0) suffix += weight_[t] / count_[t] * pass.prefix[j][t];
      d2_coef[t] = -pen_scale * suffix / pass.d2[j][t];
    }
    for (std::size_t t = 0; t < L; ++t) {
      const Step& st = tr.steps[t];
      if (score_coef == 0.0 && d2_coef[t] == 0.0) continue;
      forward(target, *st.obs, cache);
      renyi2_dlogits(cache.probs, st.behavior_probs, pass.d2[j][t], dl);
      for (int a = 0; a < target.num_actions; ++a) {
        const double score = (a == st.action ? 1.0 : 0.0) - cache.probs[a];
        dl[a] = score_coef * score + d2_coef[t] * dl[a];
      }
      backward(target, cache, dl, 1.0, grad, work);
    }
  }
  return grad;
}

// -------------------------------------------------------------- line search

LineSearchResult line_search(const std::vector<double>& theta, const std::vector<double>& gradient,
                             const std::function<double(const std::vector<double>&)>& objective,
                             const LineSearchConfig& config,
                             std::optional<double> current_value) {
  LineSearchResult res;
  res.theta = theta;
  res.value = current_value ? *current_value : objective(theta);
  double norm2 = 0.0;
  for (double g : gradient) norm2 += g * g;
  const double norm = std::sqrt(norm2);
  if (!(norm > 0.0) || !std::isfinite(norm)) return res;

  std::vector<double> cand(theta.size());
  double step = config.initial_step;
  for (int k = 0; k <= config.max_halvings; ++k, step *= config.shrink) {
    for (std::size_t i = 0; i < theta.size(); ++i) cand[i] = theta[i] + step * gradient[i] / norm;
    const double v = objective(cand);
    if (std::isfinite(v) && v > res.value) {
      res.theta = cand;
      res.step = step;
      res.value = v;
      res.accepted = true;
      return res;
    }
  }
  return res;
}

// --------------------------------------------------------------------- loop

Returns evaluate_policy(const Environment& env, const PolicyParams& policy, double gamma,
                        int episodes, std::uint64_t seed, std::uint64_t iteration) {
  Returns out;
  ForwardCache cache;
  for (int e = 0; e < episodes; ++e) {
    Rng rng(derive_seed(seed, StreamPurpose::kEvaluation, iteration, static_cast<std::uint64_t>(e)));
    EnvState s = env.reset(rng);
    double disc = 1.0, g = 0.0, u = 0.0;
    for (int t = 0; t < env.horizon(); ++t) {
      forward(policy, s.obs, cache);
      const int a = sample_from(cache.probs, rng);
      StepResult r = env.step(s, a, rng);
      g += disc * r.reward;
      u += r.reward;
      disc *= gamma;
      s = std::move(r.next);
    }
    out.discounted += g;
    out.undiscounted += u;
  }
  out.discounted /= episodes;
  out.undiscounted /= episodes;
  return out;
}

Dcs optimizer_schedule(const OptimConfig& config, int horizon) {
  Dcs d = config.mode == DcsMode::kOptimal ? optimal_dcs(config.gamma, horizon, config.budget)
                                           : uniform_dcs(horizon, config.budget);
  d.gamma = config.gamma;
  return d;
}

RunResult run(const Environment& env, const PolicyParams& initial, const OptimConfig& config,
              const IterationCallback& on_iteration) {
  config.validate();
  if (env.obs_dim() != initial.obs_dim || env.num_actions() != initial.num_actions) {
    throw DimensionError("initial policy does not match the environment");
  }
  RunResult result;
  result.dcs = optimizer_schedule(config, env.horizon());
  const Dcs& dcs = result.dcs;

  PolicyParams theta = initial;
  {
    IterationLog log0;
    const Returns r = evaluate_policy(env, theta, config.gamma, config.eval_episodes, config.seed, 0);
    log0.disc_return = r.discounted;
    log0.undisc_return = r.undiscounted;
    log0.surrogate_final = std::numeric_limits<double>::quiet_NaN();
    log0.batch_estimate = std::numeric_limits<double>::quiet_NaN();
    log0.r_max_eff = std::numeric_limits<double>::quiet_NaN();
    result.logs.push_back(log0);
    if (on_iteration) on_iteration(result.logs.back());
  }

  for (int j = 1; j <= config.online_iterations; ++j) {
    const std::uint64_t collect_seed =
        derive_seed(config.seed, StreamPurpose::kCollection, static_cast<std::uint64_t>(j));
    const TruncatedBatch batch = collect_batch(env, theta, dcs, collect_seed, config.workers);
    const RMax rm = effective_r_max(batch, config.r_min_max);

    IterationLog log;
    log.iteration = j;
    log.r_max_eff = rm.value;
    log.r_max_source = rm.source;
    log.batch_estimate = on_policy_estimate(batch, dcs, config.gamma);

    PolicyParams target = theta;
    if (rm.value > 0.0) {
      const Surrogate sur(batch, theta, dcs, config, rm.value);
      PolicyParams probe = target;
      auto objective = [&](const std::vector<double>& th) {
        probe.theta = th;
        return sur(probe);
      };
      log.surrogate_values.push_back(sur(target));
      for (int k = 0; k < config.offline_iterations; ++k) {
        const auto g = sur.gradient(target);
        if (!all_finite(g)) break;
        const auto ls = line_search(target.theta, g, objective, config.line_search,
                                    log.surrogate_values.back());
        if (!ls.accepted) break;
        if (ls.value < log.surrogate_values.back()) {
          throw InternalError("accepted line-search step decreased the surrogate");
        }
        target.theta = ls.theta;
        log.surrogate_values.push_back(ls.value);
        log.step_sizes.push_back(ls.step);
      }
      const auto v = sur.evaluate(target);
      log.renyi_last = v.renyi.back();
      log.renyi_max = *std::max_element(v.renyi.begin(), v.renyi.end());
      log.clipped = v.clipped;
    } else {
      // No reward signal in the batch: the surrogate is identically zero.
      log.surrogate_values.push_back(0.0);
    }
    log.surrogate_final = log.surrogate_values.back();
    log.step_count = static_cast<int>(log.step_sizes.size());
    theta = target;

    const Returns r = evaluate_policy(env, theta, config.gamma, config.eval_episodes, config.seed,
                                      static_cast<std::uint64_t>(j));
    log.disc_return = r.discounted;
    log.undisc_return = r.undiscounted;
    result.logs.push_back(std::move(log));
    if (on_iteration) on_iteration(result.logs.back());
  }
  result.final_policy = theta;
  return result;
}

nlohmann::json to_json(const IterationLog& log) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"iteration", log.iteration},
          {"surrogate_values", log.surrogate_values},
          {"step_sizes", log.step_sizes},
          {"surrogate_final", num(log.surrogate_final)},
          {"batch_estimate", num(log.batch_estimate)},
          {"disc_return", log.disc_return},
          {"undisc_return", log.undisc_return},
          {"step_count", log.step_count},
          {"r_max_eff", num(log.r_max_eff)},
          {"r_max_source", log.r_max_source},
          {"renyi_last", log.renyi_last},
          {"renyi_max", log.renyi_max},
          {"clipped", log.clipped}};
}

}  // namespace truncmc
