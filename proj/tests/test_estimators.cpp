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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "truncmc/errors.hpp"

namespace truncmc {
namespace {

using I64 = std::vector<std::int64_t>;

Trajectory make_traj(std::vector<double> rewards, int action = 0) {
  Trajectory tr;
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    tr.states.push_back({static_cast<double>(t)});
    tr.actions.push_back(action);
  }
  tr.rewards = std::move(rewards);
  tr.final_state = {static_cast<double>(tr.rewards.size())};
  return tr;
}

TruncatedBatch constant_batch(const Dcs& d, double r) {
  TruncatedBatch b;
  b.dcs = d;
  b.by_length.resize(d.horizon);
  for (int h = 1; h <= d.horizon; ++h) {
    for (std::int64_t i = 0; i < d.m[h - 1]; ++i) b.by_length[h - 1].push_back(make_traj(std::vector<double>(h, r)));
  }
  return b;
}

Dcs random_dcs(std::mt19937_64& rng, int T) {
  I64 m(T);
  for (auto& v : m) v = static_cast<std::int64_t>(rng() % 4);
  m.back() = 1 + static_cast<std::int64_t>(rng() % 3);
  std::int64_t budget = 0;
  for (int h = 0; h < T; ++h) budget += m[h] * (h + 1);
  return validate_dcs(m, budget);
}

TEST(OnPolicy, ConstantRewardsTelescope) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const int T = 1 + static_cast<int>(rng() % 12);
    const auto d = random_dcs(rng, T);
    const double g = 0.9;
    EXPECT_NEAR(on_policy_estimate(constant_batch(d, 1.0), d, g), (1 - std::pow(g, T)) / (1 - g), 1e-12);
  }
}

TEST(OnPolicy, HandExample) {
  const auto d = dcs_from_n(I64{2, 1});
  TruncatedBatch b;
  b.dcs = d;
  b.by_length = {{make_traj({1.0})}, {make_traj({0.0, 1.0})}};
  EXPECT_NEAR(on_policy_estimate(b, d, 0.9), 1.4, 1e-15);
}

TEST(OnPolicy, UniformIsPlainAverage) {
  const auto d = uniform_dcs(3, 9);
  TruncatedBatch b;
  b.dcs = d;
  b.by_length.resize(3);
  b.by_length[2] = {make_traj({1, 2, 3}), make_traj({0, 1, 0}), make_traj({2, 0, 5})};
  const double g = 0.5;
  double expect = 0;
  for (const auto& tr : b.by_length[2]) {
    double s = 0, p = 1;
    for (double r : tr.rewards) {
      s += p * r;
      p *= g;
    }
    expect += s / 3;
  }
  EXPECT_NEAR(on_policy_estimate(b, d, g), expect, 1e-14);
}

TEST(OnPolicy, RejectsMismatch) {
  auto d = optimal_dcs(0.5, 2, 12);
  auto b = constant_batch(d, 1.0);
  EXPECT_THROW(on_policy_estimate(b, d, 0.9), ValidationError);
  b.by_length[0].pop_back();
  EXPECT_THROW(on_policy_estimate(b, d, 0.5), ValidationError);
  Dcs biased = d;
  biased.m = {12, 0};
  EXPECT_THROW(step_weights(biased, 0.5), BiasedScheduleError);
}

TEST(Hoeffding, Examples) {
  auto d = dcs_from_n(I64{9, 3});
  const auto iv = hoeffding_interval(0.0, d, 0.5, 0.1);
  EXPECT_NEAR(iv.upper, 0.676521, 1e-6);
  EXPECT_NEAR(iv.lower, -0.676521, 1e-6);
  double prev = 1e9;
  for (double delta : {0.1, 0.5, 0.9, 0.99, 0.9999}) {
    const double w = hoeffding_interval(0.0, d, 0.5, delta).upper;
    EXPECT_LT(w, prev);
    prev = w;
  }
  EXPECT_NEAR(hoeffding_interval(0.0, d, 0.5, 0.1, 4.0).upper, 4 * 0.676521, 4e-6);
  const auto u = uniform_dcs(4, 20);
  const auto co = coefficients(0.8, 4);
  EXPECT_NEAR(hoeffding_interval(0, u, 0.8, 0.05).upper,
              std::sqrt(std::log(2 / 0.05) / (2 * 5.0) * co.sum()), 1e-14);
}

TEST(ImportanceWeight, Examples) {
  const auto target = constant_policy(1, {0.6, 0.4});
  const auto behavior = constant_policy(1, {0.3, 0.7});
  const auto tr = make_traj({0.0, 0.0}, 0);
  EXPECT_NEAR(importance_weight(tr, target, behavior), 4.0, 1e-12);
  EXPECT_EQ(importance_weight(tr, behavior, behavior), 1.0);
}

TEST(OffPolicy, ClipAndWeight) {
  const auto target = constant_policy(1, {0.8, 0.2});
  const auto behavior = constant_policy(1, {0.2, 0.8});
  const auto d = dcs_from_n(I64{1});
  TruncatedBatch b;
  b.dcs = d;
  b.by_length = {{make_traj({1.0}, 0)}};
  EXPECT_NEAR(off_policy_estimate(b, d, 0.9, target, behavior), 4.0, 1e-12);
  EXPECT_NEAR(off_policy_estimate(b, d, 0.9, target, behavior, 2.0), 2.0, 1e-15);
}

TEST(OffPolicy, SamePolicyIsBitwiseOnPolicy) {
  const MilestoneEnv env(100);
  auto pol = make_linear_softmax(1, 2, env.recommended_features());
  pol.theta = {0.7, -0.4, 0.1, 0.0};
  for (std::int64_t budget : {150, 1000}) {
    const auto d = optimal_dcs(0.95, 100, budget);
    const auto b = collect_batch(env, pol, d, 77);
    EXPECT_EQ(off_policy_estimate(b, d, 0.95, pol, pol), on_policy_estimate(b, d, 0.95));
    EXPECT_EQ(off_policy_estimate(b, d, 0.95, pol, pol, 100.0), on_policy_estimate(b, d, 0.95));
  }
}

TEST(Renyi, Examples) {
  const auto p = constant_policy(1, {0.6, 0.4});
  const auto q = constant_policy(1, {0.5, 0.5});
  const auto d = dcs_from_n(I64{3, 2});
  const auto b = constant_batch(d, 0.0);
  EXPECT_NEAR(empirical_renyi(b, p, q, 1), 1.04, 1e-14);
  EXPECT_NEAR(empirical_renyi(b, p, q, 2), 1.04 * 1.04, 1e-14);
  EXPECT_EQ(empirical_renyi(b, q, q, 2), 1.0);
  EXPECT_THROW(empirical_renyi(b, p, q, 3), DomainError);
}

TEST(Renyi, MonotoneOnMilestoneBatches) {
  const MilestoneEnv env(100);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0, 1);
  for (int i = 0; i < 20; ++i) {
    auto beh = make_linear_softmax(1, 2, env.recommended_features());
    auto tgt = beh;
    for (auto& v : beh.theta) v = n(rng);
    for (auto& v : tgt.theta) v = n(rng);
    const auto d = optimal_dcs(0.9, 100, 400 + 50 * i);
    const auto b = collect_batch(env, beh, d, 1000 + i);
    const auto r = per_length_renyi(b, tgt, beh);
    for (int h = 0; h < 100; ++h) {
      ASSERT_GE(r[h], 1.0);
      if (h > 0) ASSERT_GE(r[h], r[h - 1]);
    }
  }
}

TEST(Identity, WeightedSquaresEqualCoefficientSum) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ug(0.05, 0.99);
  for (int i = 0; i < 200; ++i) {
    const int T = 1 + static_cast<int>(rng() % 12);
    const double g = ug(rng);
    const auto d = random_dcs(rng, T);
    const auto f = phi(d, g, 1.0);
    double lhs = 0;
    for (int h = 1; h <= T; ++h) lhs += d.m[h - 1] * f[h - 1] * f[h - 1];
    const double rhs = weighted_inverse_sum(d.n, coefficients(g, T));
    EXPECT_NEAR(lhs, rhs, 1e-10 * rhs);
  }
}

TEST(Cantelli, Reductions) {
  const auto d = uniform_dcs(5, 40);
  const double g = 0.9, delta = 0.2, rmax = 2.0, beta = 4.0;
  EXPECT_DOUBLE_EQ(cantelli_beta(0.5), 1.0);
  const std::vector<double> ones(5, 1.0);
  // Unnormalized reward scale r_max Σ γ^t, as in the uniform-schedule bound.
  const double scale = rmax * (1 - std::pow(g, 5)) / (1 - g);
  EXPECT_NEAR(phi(d, g, rmax).back() * 8, scale, 1e-12);
  EXPECT_NEAR(off_policy_ci_tight(3.0, d, g, ones, delta, rmax), 3.0 - scale * std::sqrt(beta * 5 / 40.0), 1e-12);
  const double K = 8;
  const double sumc = coefficients(g, 5).sum();
  EXPECT_NEAR(off_policy_ci_loose(3.0, d, g, 1.0, delta, rmax), 3.0 - rmax * std::sqrt(beta * sumc / K), 1e-12);
  EXPECT_NEAR(off_policy_ci_loose(3.0, d, g, 1.0, delta, rmax), off_policy_ci_tight(3.0, d, g, ones, delta, rmax), 1e-12);
  EXPECT_LT(off_policy_ci_loose(3.0, d, g, 1.5, delta, rmax), off_policy_ci_loose(3.0, d, g, 1.2, delta, rmax));
  const auto d2 = optimal_dcs(g, 5, 40);
  const std::vector<double> flat(5, 1.7);
  EXPECT_NEAR(off_policy_ci_loose(0, d2, g, 1.7, delta, rmax), off_policy_ci_tight(0, d2, g, flat, delta, rmax), 1e-12);
}

TEST(Cantelli, TightDominatesLoose) {
  const MilestoneEnv env(20);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  for (int i = 0; i < 30; ++i) {
    auto beh = make_linear_softmax(1, 2, env.recommended_features());
    auto tgt = beh;
    for (auto& v : beh.theta) v = n(rng);
    for (auto& v : tgt.theta) v = n(rng);
    const auto d = optimal_dcs(0.8, 20, 60 + 7 * i);
    const auto b = collect_batch(env, beh, d, 300 + i);
    const auto rep = evaluate_off_policy(b, d, 0.8, tgt, beh, 0.2);
    const double loose = off_policy_ci_loose(rep.point, d, 0.8, rep.per_length_renyi.back(), 0.2, rep.effective_r_max);
    EXPECT_GE(*rep.ci_lower, loose - 1e-12);
  }
}

TEST(RMax, Examples) {
  const auto d = dcs_from_n(I64{1});
  TruncatedBatch b;
  b.dcs = d;
  b.by_length = {{make_traj({-0.2})}};
  b.by_length[0].push_back(make_traj({0.1}));
  EXPECT_DOUBLE_EQ(effective_r_max(b).value, 0.2);
  EXPECT_EQ(effective_r_max(b).source, "empirical");
  b.by_length = {{make_traj({0.01})}};
  EXPECT_EQ(effective_r_max(b, 5.0).value, 5.0);
  EXPECT_EQ(effective_r_max(b, 5.0).source, "floor");
  EXPECT_EQ(effective_r_max(b, 0.001).value, 0.01);
  b.by_length = {{}};
  EXPECT_THROW(effective_r_max(b), ValidationError);
}

TEST(Collect, ConformsAndIsWorkerInvariant) {
  const auto env = CorridorEnv::sparse();
  auto pol = make_mlp_tanh(1, 2, {8, 4}, env.recommended_features());
  normc_init(pol, 5);
  const auto d = optimal_dcs(0.95, 100, 1300);
  const auto b1 = collect_batch(env, pol, d, 42, 1);
  const auto b4 = collect_batch(env, pol, d, 42, 4);
  check_conforms(b1, d);
  EXPECT_EQ(b1.transitions(), 1300);
  std::ostringstream s1, s4;
  write_batch(s1, b1);
  write_batch(s4, b4);
  EXPECT_EQ(s1.str(), s4.str());
  const auto small = collect_batch(env, pol, optimal_dcs(0.5, 2, 12), 1);
  EXPECT_EQ(small.by_length[0].size(), 6u);
  EXPECT_EQ(small.by_length[1].size(), 3u);
  EXPECT_THROW(collect_batch(env, make_linear_softmax(2, 2), d, 1), DimensionError);
  EXPECT_THROW(collect_batch(env, pol, uniform_dcs(200, 400), 1), DimensionError);
}

TEST(Collect, SerializationRoundTrip) {
  const DamEnv env(30);
  auto pol = make_linear_softmax(7, 21);
  normc_init(pol, 3);
  const auto d = optimal_dcs(0.95, 30, 200);
  const auto b = collect_batch(env, pol, d, 8);
  std::stringstream ss;
  write_batch(ss, b);
  const auto r = read_batch(ss);
  EXPECT_EQ(r.dcs.m, d.m);
  EXPECT_EQ(*r.dcs.gamma, 0.95);
  EXPECT_EQ(r.behavior_policy_id, policy_id(pol));
  EXPECT_EQ(on_policy_estimate(r, r.dcs, 0.95), on_policy_estimate(b, d, 0.95));
  std::stringstream bad("# trunc-mc-batch v1\nhorizon 1\nbudget 1\nm 1\ngamma none\nbehavior x\n1\t0\t0\n");
  EXPECT_THROW(read_batch(bad), ValidationError);
}

TEST(OnPolicy, UnbiasedOnMilestone) {
  const MilestoneEnv env(20);
  auto pol = make_linear_softmax(1, 2, env.recommended_features());
  pol.theta = {1.2, -0.8, -0.2, 0.3};
  const double g = 0.9;
  const double J = env.exact_return(pol, g);
  const auto d = optimal_dcs(g, 20, 100);
  const int N = 3000;
  double s = 0, s2 = 0;
  for (int i = 0; i < N; ++i) {
    const double v = on_policy_estimate(collect_batch(env, pol, d, 10000 + i), d, g);
    s += v;
    s2 += v * v;
  }
  const double mean = s / N;
  const double se = std::sqrt((s2 / N - mean * mean) / N);
  EXPECT_LT(std::abs(mean - J), 4 * se);
}

}  // namespace
}  // namespace truncmc
