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

// Discrete-action stochastic policies with hand-written reverse passes.
//
// Both architectures are a stack of dense layers: linear-softmax has no
// hidden layer, mlp-tanh has tanh hidden layers and a linear output layer.
// Logits are clamped to [-30, 30] before the softmax so every action keeps
// positive probability.
//
// Flat parameter layout, layer by layer from the input: W (out x in,
// row-major) followed by b (out).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "truncmc/rng.hpp"

namespace truncmc {

inline constexpr double kLogitClamp = 30.0;

enum class Architecture { kLinearSoftmax, kMlpTanh };

std::string to_string(Architecture a);
Architecture architecture_from_string(const std::string& s);

// Observation -> network input. "affine" computes (obs - offset) * scale.
struct FeatureMap {
  std::string kind = "identity";
  std::vector<double> offset;
  std::vector<double> scale;

  static FeatureMap identity() { return {}; }
  static FeatureMap affine(std::vector<double> offset, std::vector<double> scale);
  void apply(std::span<const double> obs, std::vector<double>& out) const;
};

struct PolicyParams {
  Architecture arch = Architecture::kLinearSoftmax;
  int obs_dim = 0;
  int num_actions = 0;
  std::vector<int> hidden;
  FeatureMap features;
  std::vector<double> theta;

  // Layer widths from input to output: obs_dim, hidden..., num_actions.
  std::vector<int> widths() const;
  std::size_t param_count() const;
};

PolicyParams make_linear_softmax(int obs_dim, int num_actions, FeatureMap features = {});
PolicyParams make_mlp_tanh(int obs_dim, int num_actions, std::vector<int> hidden,
                           FeatureMap features = {});

// Standard normal weights, each unit's incoming weight row rescaled to unit
// norm, zero biases.
void normc_init(PolicyParams& params, std::uint64_t seed);

// Activations of one forward pass, reusable across calls to avoid
// reallocation. Stores everything the reverse pass needs.
struct ForwardCache {
  std::vector<std::vector<double>> acts;  // acts[0] = features, acts[l] = layer l output
  std::vector<double> logits;             // clamped
  std::vector<unsigned char> clamped;     // 1 where the clamp is active
  std::vector<double> probs;
  std::vector<double> log_probs;
  std::vector<double> scratch;
};

void forward(const PolicyParams& params, std::span<const double> obs, ForwardCache& cache);

// grad += scale * d(objective)/dθ given d(objective)/d(logits) for the pass
// stored in cache. The clamp passes zero gradient where active.
void backward(const PolicyParams& params, const ForwardCache& cache,
              std::span<const double> dlogits, double scale, std::span<double> grad,
              std::vector<double>& work);

std::vector<double> action_distribution(const PolicyParams& params, std::span<const double> obs);
double log_prob(const PolicyParams& params, std::span<const double> obs, int action);
int sample_action(const PolicyParams& params, std::span<const double> obs, Rng& rng);
// Same, from an already computed distribution.
int sample_from(std::span<const double> probs, Rng& rng);

std::vector<double> grad_log_prob(const PolicyParams& params, std::span<const double> obs,
                                  int action);

// Σ_a p(a)^2 / q(a) for p = target(.|s), q = behavior(.|s).
double renyi2(std::span<const double> p, std::span<const double> q);
// d renyi2 / d target logits: 2 p_k (p_k / q_k - d2).
void renyi2_dlogits(std::span<const double> p, std::span<const double> q, double d2,
                    std::span<double> out);

double state_renyi2(const PolicyParams& target, const PolicyParams& behavior,
                    std::span<const double> obs);
std::vector<double> state_renyi2_grad(const PolicyParams& target, const PolicyParams& behavior,
                                      std::span<const double> obs);

nlohmann::json to_json(const PolicyParams& params);
PolicyParams policy_from_json(const nlohmann::json& j);

// Throws DimensionError if the two policies are not defined on the same
// observation and action spaces.
void check_compatible(const PolicyParams& a, const PolicyParams& b);

}  // namespace truncmc
