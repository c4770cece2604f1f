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

// trunc-mc: command-line front end.
//
//   trunc-mc schedule --gamma 0.95 --horizon 100 --budget 5000
//   trunc-mc evaluate --budget 500,1000 --dcs both --repeats 50
//   trunc-mc optimize --env corridor-dense --algo both --seeds 5
//   trunc-mc pac --epsilon 0.5 --delta 0.1 --gamma 0.99 --horizon 100
//   trunc-mc optimize --config results/manifest.json --out replay
//
// Exit status: 0 success, 2 bad arguments, 3 domain or validation error,
// 4 internal invariant violation.

#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "truncmc/errors.hpp"
#include "truncmc/harness/commands.hpp"
#include "truncmc/harness/config.hpp"

namespace {

constexpr int kExitArgument = 2;
constexpr int kExitDomain = 3;
constexpr int kExitInternal = 4;

struct FlagSpec {
  const char* key;
  const char* help;
};

// Flags shared by all subcommands, and those specific to each.
const std::vector<FlagSpec> kCommon{
    {"gamma", "discount factor"},
    {"horizon", "horizon T"},
    {"delta", "confidence level"},
    {"seed", "master seed"},
    {"workers", "worker threads"},
    {"out", "output directory"},
};
const std::map<std::string, std::vector<FlagSpec>> kSpecific{
    {"schedule", {{"budget", "transition budget"}}},
    {"evaluate",
     {{"budget", "comma-separated budgets"},
      {"env", "environment (milestone)"},
      {"mode", "on or off"},
      {"dcs", "optimal, uniform or both"},
      {"repeats", "independent estimations per budget and schedule"},
      {"target", "target action probabilities (off mode)"},
      {"behavior", "behavior action probabilities"},
      {"reward-range", "reward range for the on-policy interval"},
      {"iw-clip", "importance-weight clip, or none"},
      {"r-min-max", "floor for the reward scale (off mode)"}}},
    {"optimize",
     {{"budget", "transition budget per iteration"},
      {"env", "corridor-sparse, corridor-dense or dam"},
      {"algo", "ttpois, pois or both"},
      {"seeds", "number of seeds"},
      {"online-iterations", "data-collection rounds"},
      {"offline-iterations", "gradient steps per round"},
      {"iw-clip", "importance-weight clip, or none"},
      {"r-min-max", "floor for the reward scale"},
      {"policy", "linear-softmax or mlp-tanh"},
      {"hidden", "hidden widths, comma-separated"},
      {"initial-step", "line-search first step"},
      {"shrink", "line-search shrink factor"},
      {"max-halvings", "line-search shrink count"},
      {"eval-episodes", "evaluation rollouts per iteration"}}},
    {"pac", {{"epsilon", "target accuracy"}}},
};

std::string to_key(std::string flag) {
  for (char& c : flag) {
    if (c == '-') c = '_';
  }
  return flag;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truncated-trajectory Monte Carlo estimation and policy optimization", "trunc-mc"};
  app.require_subcommand(1);

  struct Parsed {
    std::string config;
    std::map<std::string, std::string> values;
  };
  std::map<std::string, Parsed> parsed;
  for (const auto& [name, flags] : kSpecific) {
    auto* sub = app.add_subcommand(name);
    Parsed& p = parsed[name];
    sub->add_option("--config", p.config, "INI config file or manifest.json to replay");
    for (const auto* list : {&kCommon, &flags}) {
      for (const auto& f : *list) {
        sub->add_option(std::string("--") + f.key, p.values[f.key], f.help);
      }
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitArgument;
  }

  try {
    auto* sub = app.get_subcommands().front();
    truncmc::Settings s;
    s.command = sub->get_name();
    const Parsed& p = parsed.at(s.command);
    if (!p.config.empty()) truncmc::load_config_file(p.config, s.command, s);
    for (const auto& [flag, value] : p.values) {
      if (sub->count(std::string("--") + flag) > 0) s.apply(to_key(flag), value);
    }
    truncmc::run_command(s, std::cout);
    return 0;
  } catch (const truncmc::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitArgument;
  } catch (const truncmc::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const truncmc::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
