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

// Budget-optimal trajectory-length schedules.
//
// A data collection strategy (Dcs) spends a budget of Λ transitions on m_h
// trajectories of each length h = 1..T. Equivalently n_t counts the samples
// gathered at step t. The width of the Hoeffding-style confidence interval
// around the truncated estimator is
//
//     f(n) = sqrt( 1/2 log(2/δ) Σ_t c_t / n_t ),
//     c_t  = γ^t (γ^t + γ^{t+1} - 2γ^T) / (1 - γ),
//
// and this module minimizes it: a closed-form solution of the continuous
// relaxation, followed by floor-and-distribute rounding that is within √2 of
// the integer optimum.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace truncmc {

struct Coefficients {
  double gamma = 0.0;
  int horizon = 0;
  std::vector<double> c;              // c_0 .. c_{T-1}
  std::vector<double> sqrt_c;         // √c_t
  std::vector<double> sqrt_c_prefix;  // size T+1, prefix[h] = Σ_{i<h} √c_i

  double sum() const;
};

struct Dcs {
  std::int64_t budget = 0;
  int horizon = 0;
  std::vector<std::int64_t> m;  // m[h-1]: trajectories of length h
  std::vector<std::int64_t> n;  // n[t]: samples collected at step t
  // Discount the schedule was optimized for. Unset for schedules that do not
  // depend on γ (uniform, hand-built).
  std::optional<double> gamma;

  std::int64_t trajectory_count() const;
  std::int64_t full_length_count() const { return m.back(); }
};

struct RelaxedSolution {
  double gamma = 0.0;
  int horizon = 0;
  std::int64_t budget = 0;
  int h_star = 1;
  std::vector<double> n_bar;
  // Σ_t c_t / n̄_t. The confidence width is sqrt(1/2 log(2/δ) * objective).
  double objective = 0.0;
};

struct PacBudget {
  static constexpr double kConstant = 12.0;
  double optimized = 0.0;  // min of the two bounds below
  double uniform = 0.0;    // 12 T log(2/δ) / ((1-γ)^2 ε^2)
  double discount_only = 0.0;  // 12 log(2/δ) / ((1-γ)^3 ε^2)
  bool condition_holds = false;  // 8 T ε^2 <= log(2/δ) c_0
  double improvement_factor() const { return uniform / optimized; }
};

Coefficients coefficients(double gamma, int horizon);

std::vector<std::int64_t> m_to_n(std::span<const std::int64_t> m);
std::vector<std::int64_t> n_to_m(std::span<const std::int64_t> n);

// Throws BudgetMismatchError if Σ h m_h != budget, BiasedScheduleError if
// m_T == 0.
Dcs validate_dcs(std::span<const std::int64_t> m, std::int64_t budget);
Dcs dcs_from_n(std::span<const std::int64_t> n);

// K = floor(budget / T) full-length trajectories; spends K*T transitions.
Dcs uniform_dcs(int horizon, std::int64_t budget);

RelaxedSolution solve_relaxed(const Coefficients& coeffs, std::int64_t budget);
RelaxedSolution solve_relaxed(double gamma, int horizon, std::int64_t budget);

// Number of cutover indices h that satisfy both KKT threshold conditions.
// Exactly one in exact arithmetic.
int count_cutover_candidates(const Coefficients& coeffs, std::int64_t budget);

Dcs round_dcs(const RelaxedSolution& relaxed, std::int64_t budget);

// solve_relaxed followed by round_dcs.
Dcs optimal_dcs(double gamma, int horizon, std::int64_t budget);

double ci_width(std::span<const std::int64_t> n, const Coefficients& coeffs, double delta);
double ci_width(std::span<const double> n, const Coefficients& coeffs, double delta);

// Σ_t c_t / n_t, the δ-free part of the width.
double weighted_inverse_sum(std::span<const std::int64_t> n, const Coefficients& coeffs);

// Budget above which the relaxed solution has h* = T.
double lambda0(const Coefficients& coeffs);

PacBudget pac_budget(double epsilon, double delta, double gamma, int horizon);

// √(n̄_{T-1} / (n̄_{T-1} - 1)) when n̄_{T-1} > 1, else √2.
double approximation_ratio_bound(const RelaxedSolution& relaxed);

// Exhaustive minimizer of Σ c_t/n_t over non-increasing positive integer
// vectors summing to the budget. Test oracle; guarded to T <= 6, Λ <= 24.
Dcs brute_force_optimal(double gamma, int horizon, std::int64_t budget);

}  // namespace truncmc
