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

#include "truncmc/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "truncmc/errors.hpp"

namespace truncmc {

namespace {

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw DomainError("gamma must lie in (0, 1), got " + std::to_string(gamma));
  }
}

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw DomainError("delta must lie in (0, 1), got " + std::to_string(delta));
  }
}

// (Λ - T + b) √c_b <= S_b, i.e. n̄_b would not exceed one if the cutover were
// at b. Both threshold conditions are phrased through this single predicate
// so that adjacent candidates are evaluated with identical arithmetic.
bool tail_saturated(const Coefficients& co, std::int64_t budget, int b) {
  if (b >= co.horizon) return true;
  if (b <= 0) return false;
  const double free_budget = static_cast<double>(budget - co.horizon + b);
  return free_budget * co.sqrt_c[b] <= co.sqrt_c_prefix[b];
}

}  // namespace

double Coefficients::sum() const { return std::accumulate(c.begin(), c.end(), 0.0); }

std::int64_t Dcs::trajectory_count() const {
  return std::accumulate(m.begin(), m.end(), std::int64_t{0});
}

Coefficients coefficients(double gamma, int horizon) {
  check_gamma(gamma);
  if (horizon < 1) throw DomainError("horizon must be >= 1");
  const int T = horizon;

  // geo[k] = 1 + γ + ... + γ^{k-1}, pow[t] = γ^t, both by accumulation.
  std::vector<double> geo(T + 1, 0.0), pw(T + 1, 1.0);
  for (int k = 1; k <= T; ++k) {
    geo[k] = 1.0 + gamma * geo[k - 1];
    pw[k] = pw[k - 1] * gamma;
  }

  Coefficients co;
  co.gamma = gamma;
  co.horizon = T;
  co.c.resize(T);
  // (γ^t + γ^{t+1} - 2γ^T)/(1-γ) = γ^t geo[T-t] + γ^{t+1} geo[T-t-1], which
  // avoids the cancellation of the direct form when γ is close to one.
  for (int t = 0; t < T; ++t) {
    co.c[t] = pw[t] * (pw[t] * geo[T - t] + pw[t + 1] * geo[T - t - 1]);
    if (t > 0 && co.c[t] >= co.c[t - 1]) co.c[t] = std::nextafter(co.c[t - 1], 0.0);
  }
  if (!(co.c[T - 1] >= std::numeric_limits<double>::min())) {
    throw DomainError("coefficient table underflows for gamma=" + std::to_string(gamma) +
                      ", T=" + std::to_string(T));
  }
  co.sqrt_c.resize(T);
  co.sqrt_c_prefix.assign(T + 1, 0.0);
  for (int t = 0; t < T; ++t) {
    co.sqrt_c[t] = std::sqrt(co.c[t]);
    co.sqrt_c_prefix[t + 1] = co.sqrt_c_prefix[t] + co.sqrt_c[t];
  }
  return co;
}

std::vector<std::int64_t> m_to_n(std::span<const std::int64_t> m) {
  if (m.empty()) throw DimensionError("m must be non-empty");
  const std::size_t T = m.size();
  std::vector<std::int64_t> n(T);
  for (std::size_t h = 0; h < T; ++h) {
    if (m[h] < 0) throw ValidationError("m entries must be non-negative");
  }
  n[T - 1] = m[T - 1];
  for (std::size_t t = T - 1; t-- > 0;) n[t] = n[t + 1] + m[t];
  return n;
}

std::vector<std::int64_t> n_to_m(std::span<const std::int64_t> n) {
  if (n.empty()) throw DimensionError("n must be non-empty");
  const std::size_t T = n.size();
  std::vector<std::int64_t> m(T);
  for (std::size_t t = 0; t < T; ++t) {
    if (n[t] < 1) throw ValidationError("n entries must be positive");
    if (t + 1 < T && n[t] < n[t + 1]) throw ValidationError("n must be non-increasing");
  }
  for (std::size_t t = 0; t + 1 < T; ++t) m[t] = n[t] - n[t + 1];
  m[T - 1] = n[T - 1];
  return m;
}

Dcs validate_dcs(std::span<const std::int64_t> m, std::int64_t budget) {
  if (m.empty()) throw DimensionError("m must be non-empty");
  std::int64_t spent = 0;
  for (std::size_t h = 0; h < m.size(); ++h) {
    if (m[h] < 0) throw ValidationError("m entries must be non-negative");
    spent += m[h] * static_cast<std::int64_t>(h + 1);
  }
  if (spent != budget) {
    throw BudgetMismatchError("budget mismatch: sum of h*m_h is " + std::to_string(spent) +
                              ", expected " + std::to_string(budget));
  }
  if (m.back() == 0) {
    throw BiasedScheduleError("biased schedule: no full-length trajectory (m_T = 0)");
  }
  Dcs d;
  d.budget = budget;
  d.horizon = static_cast<int>(m.size());
  d.m.assign(m.begin(), m.end());
  d.n = m_to_n(m);
  return d;
}

Dcs dcs_from_n(std::span<const std::int64_t> n) {
  auto m = n_to_m(n);
  const std::int64_t budget = std::accumulate(n.begin(), n.end(), std::int64_t{0});
  return validate_dcs(m, budget);
}

Dcs uniform_dcs(int horizon, std::int64_t budget) {
  if (horizon < 1) throw DomainError("horizon must be >= 1");
  const std::int64_t k = budget / horizon;
  if (k < 1) {
    throw DomainError("budget " + std::to_string(budget) + " is below the horizon " +
                      std::to_string(horizon));
  }
  std::vector<std::int64_t> m(horizon, 0);
  m.back() = k;
  return validate_dcs(m, k * horizon);
}

int count_cutover_candidates(const Coefficients& co, std::int64_t budget) {
  int count = 0;
  for (int h = 1; h <= co.horizon; ++h) {
    if (tail_saturated(co, budget, h) && !tail_saturated(co, budget, h - 1)) ++count;
  }
  return count;
}

RelaxedSolution solve_relaxed(const Coefficients& co, std::int64_t budget) {
  const int T = co.horizon;
  if (budget < T) {
    throw DomainError("budget " + std::to_string(budget) + " is below the horizon " +
                      std::to_string(T));
  }
  RelaxedSolution sol;
  sol.gamma = co.gamma;
  sol.horizon = T;
  sol.budget = budget;

  if (budget == T) {
    sol.h_star = 1;
    sol.n_bar.assign(T, 1.0);
  } else {
    int h_star = 0;
    for (int h = 1; h <= T; ++h) {
      if (tail_saturated(co, budget, h) && !tail_saturated(co, budget, h - 1)) {
        h_star = h;
        break;
      }
    }
    if (h_star == 0) throw InternalError("no cutover index satisfies the optimality conditions");
    sol.h_star = h_star;
    sol.n_bar.assign(T, 1.0);
    const double scale = static_cast<double>(budget - T + h_star) / co.sqrt_c_prefix[h_star];
    for (int t = 0; t < h_star; ++t) sol.n_bar[t] = co.sqrt_c[t] * scale;
  }
  double obj = 0.0;
  for (int t = 0; t < T; ++t) obj += co.c[t] / sol.n_bar[t];
  sol.objective = obj;
  return sol;
}

RelaxedSolution solve_relaxed(double gamma, int horizon, std::int64_t budget) {
  return solve_relaxed(coefficients(gamma, horizon), budget);
}

Dcs round_dcs(const RelaxedSolution& relaxed, std::int64_t budget) {
  const int T = relaxed.horizon;
  if (static_cast<int>(relaxed.n_bar.size()) != T) throw DimensionError("n_bar length mismatch");
  std::vector<std::int64_t> n(T);
  std::int64_t floor_sum = 0;
  for (int t = 0; t < T; ++t) {
    double v = relaxed.n_bar[t];
    const double r = std::round(v);
    if (std::abs(v - r) <= 1e-9 * std::max(1.0, r)) v = r;
    n[t] = static_cast<std::int64_t>(std::floor(v));
    floor_sum += n[t];
  }
  const std::int64_t k = budget - floor_sum;
  if (k < 0 || k > T) {
    throw InternalError("rounding remainder " + std::to_string(k) + " outside [0, T]");
  }
  for (std::int64_t t = 0; t < k; ++t) n[t] += 1;
  Dcs d = dcs_from_n(n);
  d.gamma = relaxed.gamma;
  return d;
}

Dcs optimal_dcs(double gamma, int horizon, std::int64_t budget) {
  return round_dcs(solve_relaxed(gamma, horizon, budget), budget);
}

double weighted_inverse_sum(std::span<const std::int64_t> n, const Coefficients& co) {
  if (static_cast<int>(n.size()) != co.horizon) throw DimensionError("n length != horizon");
  double s = 0.0;
  for (int t = 0; t < co.horizon; ++t) {
    if (n[t] < 1) throw DomainError("n entries must be positive");
    s += co.c[t] / static_cast<double>(n[t]);
  }
  return s;
}

double ci_width(std::span<const std::int64_t> n, const Coefficients& co, double delta) {
  check_delta(delta);
  return std::sqrt(0.5 * std::log(2.0 / delta) * weighted_inverse_sum(n, co));
}

double ci_width(std::span<const double> n, const Coefficients& co, double delta) {
  check_delta(delta);
  if (static_cast<int>(n.size()) != co.horizon) throw DimensionError("n length != horizon");
  double s = 0.0;
  for (int t = 0; t < co.horizon; ++t) {
    if (!(n[t] > 0.0)) throw DomainError("n entries must be positive");
    s += co.c[t] / n[t];
  }
  return std::sqrt(0.5 * std::log(2.0 / delta) * s);
}

double lambda0(const Coefficients& co) {
  return co.sqrt_c_prefix.back() / co.sqrt_c.back();
}

PacBudget pac_budget(double epsilon, double delta, double gamma, int horizon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DomainError("epsilon must be positive");
  check_delta(delta);
  check_gamma(gamma);
  if (horizon < 1) throw DomainError("horizon must be >= 1");
  const double lg = std::log(2.0 / delta);
  const double one_m = 1.0 - gamma;
  const double e2 = epsilon * epsilon;
  PacBudget p;
  p.uniform = PacBudget::kConstant * horizon * lg / (one_m * one_m * e2);
  p.discount_only = PacBudget::kConstant * lg / (one_m * one_m * one_m * e2);
  p.optimized = std::min(p.uniform, p.discount_only);
  // c_0 in closed form: (1 + γ - 2γ^T)/(1-γ).
  const double c0 = (1.0 + gamma - 2.0 * std::pow(gamma, horizon)) / one_m;
  p.condition_holds = 8.0 * horizon * e2 <= lg * c0;
  return p;
}

double approximation_ratio_bound(const RelaxedSolution& relaxed) {
  const double last = relaxed.n_bar.back();
  if (last > 1.0) return std::min(std::sqrt(2.0), std::sqrt(last / (last - 1.0)));
  return std::sqrt(2.0);
}

Dcs brute_force_optimal(double gamma, int horizon, std::int64_t budget) {
  if (horizon > 6 || budget > 24) {
    throw DomainError("brute_force_optimal is limited to T <= 6 and budget <= 24");
  }
  const Coefficients co = coefficients(gamma, horizon);
  if (budget < horizon) throw DomainError("budget below the horizon");
  const int T = horizon;

  std::vector<std::int64_t> cur(T), best;
  double best_val = std::numeric_limits<double>::infinity();

  auto recurse = [&](auto&& self, int t, std::int64_t remaining, std::int64_t cap,
                     double acc) -> void {
    const int slots = T - t;
    if (slots == 0) {
      if (remaining == 0 && acc < best_val) {
        best_val = acc;
        best = cur;
      }
      return;
    }
    // A non-increasing tail must start at or above its average and leave at
    // least one sample for each later slot.
    const std::int64_t hi = std::min(cap, remaining - (slots - 1));
    const std::int64_t lo = (remaining + slots - 1) / slots;
    for (std::int64_t v = hi; v >= lo; --v) {
      cur[t] = v;
      self(self, t + 1, remaining - v, v, acc + co.c[t] / static_cast<double>(v));
    }
  };
  recurse(recurse, 0, budget, budget, 0.0);
  if (best.empty()) throw InternalError("enumeration found no feasible schedule");
  Dcs d = dcs_from_n(best);
  d.gamma = gamma;
  return d;
}

}  // namespace truncmc
