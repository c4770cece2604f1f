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

#include "truncmc/harness/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <sstream>

namespace truncmc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream ss(trim(v));
  T x{};
  ss >> x;
  if (ss.fail() || !ss.eof()) throw ArgumentError("bad value '" + v + "' for " + key);
  return x;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
  std::vector<T> out;
  for (const auto& item : split_list(v)) out.push_back(parse_number<T>(key, item));
  return out;
}

bool is_none(const std::string& v) { return trim(v) == "none" || trim(v).empty(); }

std::optional<double> parse_opt(const std::string& key, const std::string& v) {
  if (is_none(v)) return std::nullopt;
  return parse_number<double>(key, v);
}

}  // namespace

const std::vector<std::string>& settings_keys() {
  static const std::vector<std::string> keys{
      "seed",          "out",           "workers",     "gamma",
      "horizon",       "budget",        "delta",       "env",
      "mode",          "dcs",           "repeats",     "target",
      "behavior",      "reward_range",  "algo",        "seeds",
      "online_iterations", "offline_iterations", "iw_clip", "r_min_max",
      "policy",        "hidden",        "initial_step", "shrink",
      "max_halvings",  "eval_episodes", "epsilon"};
  return keys;
}

void Settings::apply(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "seed") seed = parse_number<std::uint64_t>(key, v);
  else if (key == "out") out = v;
  else if (key == "workers") workers = parse_number<int>(key, v);
  else if (key == "gamma") gamma = parse_opt(key, v);
  else if (key == "horizon") horizon = is_none(v) ? std::nullopt : std::optional<int>(parse_number<int>(key, v));
  else if (key == "budget") budgets = parse_list<std::int64_t>(key, v);
  else if (key == "delta") delta = parse_opt(key, v);
  else if (key == "env") env = v;
  else if (key == "mode") mode = v;
  else if (key == "dcs") dcs = v;
  else if (key == "repeats") repeats = parse_number<int>(key, v);
  else if (key == "target") target = parse_list<double>(key, v);
  else if (key == "behavior") behavior = parse_list<double>(key, v);
  else if (key == "reward_range") reward_range = parse_opt(key, v);
  else if (key == "algo") {
    algos.clear();
    for (const auto& a : split_list(v)) {
      if (a == "both") {
        algos.push_back("ttpois");
        algos.push_back("pois");
      } else {
        algos.push_back(a);
      }
    }
  } else if (key == "seeds") seeds = parse_number<int>(key, v);
  else if (key == "online_iterations") online_iterations = parse_number<int>(key, v);
  else if (key == "offline_iterations") offline_iterations = parse_number<int>(key, v);
  else if (key == "iw_clip") {
    iw_clip = parse_opt(key, v);
    iw_clip_set = true;
  } else if (key == "r_min_max") r_min_max = parse_opt(key, v);
  else if (key == "policy") policy = v;
  else if (key == "hidden") hidden = parse_list<int>(key, v);
  else if (key == "initial_step") line_search.initial_step = parse_number<double>(key, v);
  else if (key == "shrink") line_search.shrink = parse_number<double>(key, v);
  else if (key == "max_halvings") line_search.max_halvings = parse_number<int>(key, v);
  else if (key == "eval_episodes") eval_episodes = parse_number<int>(key, v);
  else if (key == "epsilon") epsilon = parse_number<double>(key, v);
  else throw ArgumentError("unknown setting '" + key + "'");
}

nlohmann::json Settings::to_json() const {
  auto opt = [](const auto& o) { return o ? nlohmann::json(*o) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["seed"] = seed;
  j["out"] = out;
  j["workers"] = workers;
  j["gamma"] = opt(gamma);
  j["horizon"] = opt(horizon);
  j["budget"] = budgets;
  j["delta"] = opt(delta);
  j["env"] = env;
  j["mode"] = mode;
  j["dcs"] = dcs;
  j["repeats"] = repeats;
  j["target"] = target;
  j["behavior"] = behavior;
  j["reward_range"] = opt(reward_range);
  j["algo"] = algos;
  j["seeds"] = seeds;
  j["online_iterations"] = online_iterations;
  j["offline_iterations"] = offline_iterations;
  j["iw_clip"] = opt(iw_clip);
  j["r_min_max"] = opt(r_min_max);
  j["policy"] = policy;
  j["hidden"] = hidden;
  j["initial_step"] = line_search.initial_step;
  j["shrink"] = line_search.shrink;
  j["max_halvings"] = line_search.max_halvings;
  j["eval_episodes"] = eval_episodes;
  j["epsilon"] = epsilon;
  return j;
}

namespace {

std::string json_to_text(const nlohmann::json& v) {
  if (v.is_null()) return "none";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + json_to_text(v[i]);
    return s;
  }
  if (v.is_number_float()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return buf;
  }
  return v.dump();
}

}  // namespace

void load_config_file(const std::string& path, const std::string& command, Settings& s) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot read config file '" + path + "'");
  const bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  if (is_json) {
    nlohmann::json m;
    try {
      m = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ArgumentError("malformed manifest '" + path + "': " + e.what());
    }
    if (!m.contains("config") || !m["config"].is_object()) {
      throw ArgumentError("manifest '" + path + "' has no config object");
    }
    if (m.contains("command") && m["command"] != command) {
      throw ArgumentError("manifest '" + path + "' was written by '" +
                          m["command"].get<std::string>() + "', not '" + command + "'");
    }
    for (const auto& [k, v] : m["config"].items()) {
      s.apply(k, json_to_text(v));
    }
    return;
  }
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ArgumentError("malformed config '" + path + "': " + e.what());
  }
  for (const char* section : {"run", command.c_str()}) {
    const auto node = tree.get_child_optional(section);
    if (!node) continue;
    for (const auto& [k, v] : *node) s.apply(k, v.data());
  }
  for (const auto& [k, v] : tree) {
    if (k != "run" && k != "schedule" && k != "evaluate" && k != "optimize" && k != "pac") {
      throw ArgumentError("unknown config section [" + k + "]");
    }
    (void)v;
  }
}

}  // namespace truncmc
