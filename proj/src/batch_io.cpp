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

// Text serialization of truncated batches.
//
//   # trunc-mc-batch v1
//   horizon <T>
//   budget <Λ>
//   m <m_1> ... <m_T>
//   gamma <γ | none>
//   behavior <policy id>
//   <h> TAB (<obs> TAB <action> TAB <reward>){h} TAB <final obs>
//
// One record line per trajectory, ordered by ascending h then index.
// Observations are comma-separated; reals use 17 significant digits.

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "truncmc/errors.hpp"
#include "truncmc/estimators.hpp"

namespace truncmc {

namespace {

constexpr const char* kMagic = "# trunc-mc-batch v1";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_vec(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += fmt(v[i]);
  }
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ValidationError("batch: bad number '" + s + "'");
  }
  if (used != s.size()) throw ValidationError("batch: bad number '" + s + "'");
  return v;
}

std::vector<double> parse_vec(const std::string& s) {
  std::vector<double> v;
  if (s.empty()) return v;
  for (const auto& part : split(s, ',')) v.push_back(parse_double(part));
  return v;
}

std::string expect_key(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("batch: missing '" + key + "' line");
  if (line.rfind(key + " ", 0) != 0) {
    throw ValidationError("batch: expected '" + key + "', got '" + line + "'");
  }
  return line.substr(key.size() + 1);
}

}  // namespace

void write_batch(std::ostream& out, const TruncatedBatch& batch) {
  const Dcs& d = batch.dcs;
  out << kMagic << '\n';
  out << "horizon " << d.horizon << '\n';
  out << "budget " << d.budget << '\n';
  out << "m";
  for (auto v : d.m) out << ' ' << v;
  out << '\n';
  out << "gamma " << (d.gamma ? fmt(*d.gamma) : std::string("none")) << '\n';
  out << "behavior " << batch.behavior_policy_id << '\n';
  for (const auto& group : batch.by_length) {
    for (const auto& tr : group) {
      out << tr.length();
      for (int t = 0; t < tr.length(); ++t) {
        out << '\t' << fmt_vec(tr.states[t]) << '\t' << tr.actions[t] << '\t' << fmt(tr.rewards[t]);
      }
      out << '\t' << fmt_vec(tr.final_state) << '\n';
    }
  }
}

TruncatedBatch read_batch(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw ValidationError("batch: bad header");
  const int T = std::stoi(expect_key(in, "horizon"));
  const std::int64_t budget = std::stoll(expect_key(in, "budget"));
  std::vector<std::int64_t> m;
  {
    std::istringstream ss(expect_key(in, "m"));
    for (std::int64_t v; ss >> v;) m.push_back(v);
  }
  if (static_cast<int>(m.size()) != T) throw ValidationError("batch: m has wrong length");
  TruncatedBatch b;
  b.dcs = validate_dcs(m, budget);
  const std::string g = expect_key(in, "gamma");
  if (g != "none") b.dcs.gamma = parse_double(g);
  b.behavior_policy_id = expect_key(in, "behavior");
  b.by_length.resize(T);

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    const int h = std::stoi(f[0]);
    if (h < 1 || h > T) throw ValidationError("batch: record length out of range");
    if (static_cast<int>(f.size()) != 3 * h + 2) {
      throw ValidationError("batch: record of length " + std::to_string(h) + " has " +
                            std::to_string(f.size()) + " fields");
    }
    Trajectory tr;
    for (int t = 0; t < h; ++t) {
      tr.states.push_back(parse_vec(f[1 + 3 * t]));
      tr.actions.push_back(std::stoi(f[2 + 3 * t]));
      tr.rewards.push_back(parse_double(f[3 + 3 * t]));
    }
    tr.final_state = parse_vec(f.back());
    b.by_length[h - 1].push_back(std::move(tr));
  }
  check_conforms(b, b.dcs);
  return b;
}

}  // namespace truncmc
