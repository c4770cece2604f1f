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

#include "truncmc/policies.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "truncmc/errors.hpp"

namespace truncmc {

std::string to_string(Architecture a) {
  return a == Architecture::kLinearSoftmax ? "linear-softmax" : "mlp-tanh";
}

Architecture architecture_from_string(const std::string& s) {
  if (s == "linear-softmax") return Architecture::kLinearSoftmax;
  if (s == "mlp-tanh") return Architecture::kMlpTanh;
  throw ValidationError("unknown policy architecture '" + s + "'");
}

FeatureMap FeatureMap::affine(std::vector<double> offset, std::vector<double> scale) {
  if (offset.size() != scale.size()) throw DimensionError("feature offset/scale length mismatch");
  FeatureMap f;
  f.kind = "affine";
  f.offset = std::move(offset);
  f.scale = std::move(scale);
  return f;
}

void FeatureMap::apply(std::span<const double> obs, std::vector<double>& out) const {
  out.assign(obs.begin(), obs.end());
  if (kind == "identity") return;
  if (obs.size() != offset.size()) throw DimensionError("observation does not match feature map");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - offset[i]) * scale[i];
}

std::vector<int> PolicyParams::widths() const {
  std::vector<int> w;
  w.push_back(obs_dim);
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(num_actions);
  return w;
}

std::size_t PolicyParams::param_count() const {
  const auto w = widths();
  std::size_t n = 0;
  for (std::size_t l = 1; l < w.size(); ++l) n += static_cast<std::size_t>(w[l]) * (w[l - 1] + 1);
  return n;
}

namespace {

PolicyParams make(Architecture arch, int obs_dim, int num_actions, std::vector<int> hidden,
                  FeatureMap features) {
  if (obs_dim < 1 || num_actions < 2) {
    throw DimensionError("policy needs obs_dim >= 1 and at least two actions");
  }
  for (int h : hidden) {
    if (h < 1) throw DimensionError("hidden layer widths must be positive");
  }
  if (features.kind != "identity" && static_cast<int>(features.offset.size()) != obs_dim) {
    throw DimensionError("feature map dimension does not match obs_dim");
  }
  PolicyParams p;
  p.arch = arch;
  p.obs_dim = obs_dim;
  p.num_actions = num_actions;
  p.hidden = std::move(hidden);
  p.features = std::move(features);
  p.theta.assign(p.param_count(), 0.0);
  return p;
}

void check_obs(const PolicyParams& p, std::span<const double> obs) {
  if (static_cast<int>(obs.size()) != p.obs_dim) {
    throw DimensionError("observation has dimension " + std::to_string(obs.size()) +
                         ", policy expects " + std::to_string(p.obs_dim));
  }
}

}  // namespace

PolicyParams make_linear_softmax(int obs_dim, int num_actions, FeatureMap features) {
  return make(Architecture::kLinearSoftmax, obs_dim, num_actions, {}, std::move(features));
}

PolicyParams make_mlp_tanh(int obs_dim, int num_actions, std::vector<int> hidden,
                           FeatureMap features) {
  if (hidden.empty()) throw DimensionError("mlp-tanh needs at least one hidden layer");
  return make(Architecture::kMlpTanh, obs_dim, num_actions, std::move(hidden),
              std::move(features));
}

void normc_init(PolicyParams& params, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto w = params.widths();
  std::size_t off = 0;
  for (std::size_t l = 1; l < w.size(); ++l) {
    const int out = w[l], in = w[l - 1];
    for (int r = 0; r < out; ++r) {
      double norm2 = 0.0;
      for (int c = 0; c < in; ++c) {
        const double v = normal(rng);
        params.theta[off + r * in + c] = v;
        norm2 += v * v;
      }
      const double inv = 1.0 / std::sqrt(norm2);
      for (int c = 0; c < in; ++c) params.theta[off + r * in + c] *= inv;
    }
    off += static_cast<std::size_t>(out) * in;
    for (int r = 0; r < out; ++r) params.theta[off + r] = 0.0;
    off += out;
  }
}

void forward(const PolicyParams& params, std::span<const double> obs, ForwardCache& cache) {
  check_obs(params, obs);
  const auto w = params.widths();
  const std::size_t L = w.size() - 1;
  cache.acts.resize(L);
  params.features.apply(obs, cache.acts[0]);

  const double* th = params.theta.data();
  std::vector<double>* out = nullptr;
  for (std::size_t l = 1; l <= L; ++l) {
    const int nout = w[l], nin = w[l - 1];
    const std::vector<double>& in = cache.acts[l - 1];
    out = (l == L) ? &cache.logits : &cache.acts[l];
    out->assign(nout, 0.0);
    const double* W = th;
    const double* b = th + static_cast<std::size_t>(nout) * nin;
    for (int r = 0; r < nout; ++r) {
      double s = b[r];
      const double* row = W + static_cast<std::size_t>(r) * nin;
      for (int c = 0; c < nin; ++c) s += row[c] * in[c];
      (*out)[r] = (l == L) ? s : std::tanh(s);
    }
    th = b + nout;
  }

  const int A = params.num_actions;
  cache.clamped.assign(A, 0);
  double zmax = -kLogitClamp;
  for (int a = 0; a < A; ++a) {
    double& z = cache.logits[a];
    if (z > kLogitClamp) {
      z = kLogitClamp;
      cache.clamped[a] = 1;
    } else if (z < -kLogitClamp) {
      z = -kLogitClamp;
      cache.clamped[a] = 1;
    }
    zmax = std::max(zmax, z);
  }
  double sum = 0.0;
  cache.probs.resize(A);
  for (int a = 0; a < A; ++a) {
    cache.probs[a] = std::exp(cache.logits[a] - zmax);
    sum += cache.probs[a];
  }
  const double log_sum = std::log(sum) + zmax;
  cache.log_probs.resize(A);
  for (int a = 0; a < A; ++a) {
    cache.probs[a] /= sum;
    cache.log_probs[a] = cache.logits[a] - log_sum;
  }
}

void backward(const PolicyParams& params, const ForwardCache& cache,
              std::span<const double> dlogits, double scale, std::span<double> grad,
              std::vector<double>& work) {
  if (grad.size() != params.theta.size()) throw DimensionError("gradient buffer size mismatch");
  const auto w = params.widths();
  const std::size_t L = w.size() - 1;

  std::vector<double> delta(dlogits.begin(), dlogits.end());
  for (std::size_t a = 0; a < delta.size(); ++a) {
    delta[a] = cache.clamped[a] ? 0.0 : delta[a] * scale;
  }

  // Offsets of each layer's block in θ.
  std::vector<std::size_t> off(L + 1, 0);
  for (std::size_t l = 1; l <= L; ++l) {
    off[l] = off[l - 1] + static_cast<std::size_t>(w[l]) * (w[l - 1] + 1);
  }

  for (std::size_t l = L; l >= 1; --l) {
    const int nout = w[l], nin = w[l - 1];
    const std::vector<double>& in = cache.acts[l - 1];
    double* gW = grad.data() + off[l - 1];
    double* gb = gW + static_cast<std::size_t>(nout) * nin;
    const double* W = params.theta.data() + off[l - 1];
    for (int r = 0; r < nout; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      double* row = gW + static_cast<std::size_t>(r) * nin;
      for (int c = 0; c < nin; ++c) row[c] += d * in[c];
      gb[r] += d;
    }
    if (l == 1) break;
    work.assign(nin, 0.0);
    for (int r = 0; r < nout; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const double* row = W + static_cast<std::size_t>(r) * nin;
      for (int c = 0; c < nin; ++c) work[c] += row[c] * d;
    }
    for (int c = 0; c < nin; ++c) work[c] *= 1.0 - in[c] * in[c];
    delta.swap(work);
  }
}

std::vector<double> action_distribution(const PolicyParams& params, std::span<const double> obs) {
  ForwardCache cache;
  forward(params, obs, cache);
  return cache.probs;
}

double log_prob(const PolicyParams& params, std::span<const double> obs, int action) {
  if (action < 0 || action >= params.num_actions) throw DimensionError("action out of range");
  ForwardCache cache;
  forward(params, obs, cache);
  return cache.log_probs[action];
}

int sample_from(std::span<const double> probs, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double acc = 0.0;
  for (std::size_t a = 0; a + 1 < probs.size(); ++a) {
    acc += probs[a];
    if (x < acc) return static_cast<int>(a);
  }
  return static_cast<int>(probs.size()) - 1;
}

int sample_action(const PolicyParams& params, std::span<const double> obs, Rng& rng) {
  ForwardCache cache;
  forward(params, obs, cache);
  return sample_from(cache.probs, rng);
}

std::vector<double> grad_log_prob(const PolicyParams& params, std::span<const double> obs,
                                  int action) {
  if (action < 0 || action >= params.num_actions) throw DimensionError("action out of range");
  ForwardCache cache;
  forward(params, obs, cache);
  std::vector<double> dl(params.num_actions);
  for (int a = 0; a < params.num_actions; ++a) dl[a] = (a == action ? 1.0 : 0.0) - cache.probs[a];
  std::vector<double> g(params.theta.size(), 0.0), work;
  backward(params, cache, dl, 1.0, g, work);
  return g;
}

double renyi2(std::span<const double> p, std::span<const double> q) {
  // Identical distributions: exactly one, not Σ p rounded.
  if (std::equal(p.begin(), p.end(), q.begin(), q.end())) return 1.0;
  double s = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) s += p[a] * p[a] / q[a];
  return s;
}

void renyi2_dlogits(std::span<const double> p, std::span<const double> q, double d2,
                    std::span<double> out) {
  for (std::size_t k = 0; k < p.size(); ++k) out[k] = 2.0 * p[k] * (p[k] / q[k] - d2);
}

void check_compatible(const PolicyParams& a, const PolicyParams& b) {
  if (a.obs_dim != b.obs_dim || a.num_actions != b.num_actions) {
    throw DimensionError("policies act on different observation/action spaces");
  }
}

double state_renyi2(const PolicyParams& target, const PolicyParams& behavior,
                    std::span<const double> obs) {
  check_compatible(target, behavior);
  const auto p = action_distribution(target, obs);
  const auto q = action_distribution(behavior, obs);
  return renyi2(p, q);
}

std::vector<double> state_renyi2_grad(const PolicyParams& target, const PolicyParams& behavior,
                                      std::span<const double> obs) {
  check_compatible(target, behavior);
  ForwardCache cache;
  forward(target, obs, cache);
  const auto q = action_distribution(behavior, obs);
  const double d2 = renyi2(cache.probs, q);
  std::vector<double> dl(target.num_actions);
  renyi2_dlogits(cache.probs, q, d2, dl);
  std::vector<double> g(target.theta.size(), 0.0), work;
  backward(target, cache, dl, 1.0, g, work);
  return g;
}

nlohmann::json to_json(const PolicyParams& p) {
  nlohmann::json j;
  j["architecture"] = to_string(p.arch);
  j["obs_dim"] = p.obs_dim;
  j["num_actions"] = p.num_actions;
  j["hidden"] = p.hidden;
  j["features"] = {{"kind", p.features.kind},
                   {"offset", p.features.offset},
                   {"scale", p.features.scale}};
  j["theta"] = p.theta;
  return j;
}

PolicyParams policy_from_json(const nlohmann::json& j) {
  try {
    const auto arch = architecture_from_string(j.at("architecture").get<std::string>());
    FeatureMap f;
    if (j.contains("features")) {
      const auto& fj = j.at("features");
      f.kind = fj.at("kind").get<std::string>();
      if (f.kind == "affine") {
        f = FeatureMap::affine(fj.at("offset").get<std::vector<double>>(),
                               fj.at("scale").get<std::vector<double>>());
      } else if (f.kind != "identity") {
        throw ValidationError("unknown feature map '" + f.kind + "'");
      }
    }
    const int d = j.at("obs_dim").get<int>();
    const int A = j.at("num_actions").get<int>();
    PolicyParams p = arch == Architecture::kLinearSoftmax
                         ? make_linear_softmax(d, A, f)
                         : make_mlp_tanh(d, A, j.at("hidden").get<std::vector<int>>(), f);
    const auto theta = j.at("theta").get<std::vector<double>>();
    if (theta.size() != p.param_count()) {
      throw DimensionError("parameter vector has " + std::to_string(theta.size()) +
                           " entries, architecture needs " + std::to_string(p.param_count()));
    }
    p.theta = theta;
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed policy JSON: ") + e.what());
  }
}

}  // namespace truncmc
