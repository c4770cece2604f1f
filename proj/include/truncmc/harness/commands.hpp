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

// Experiment drivers behind the `trunc-mc` subcommands. Each one fills in
// per-command defaults, writes its tables under Settings::out and finishes
// with an atomically written manifest.json carrying the resolved settings.

#include <ostream>
#include <string>

#include "json.hpp"
#include "truncmc/harness/config.hpp"

namespace truncmc {

// Fills unset options with the defaults of `s.command` (and of `s.env`).
void resolve_defaults(Settings& s);

nlohmann::json cmd_schedule(Settings s, std::ostream& report);
nlohmann::json cmd_evaluate(Settings s, std::ostream& report);
nlohmann::json cmd_optimize(Settings s, std::ostream& report);
nlohmann::json cmd_pac(Settings s, std::ostream& report);

// Dispatches on s.command.
nlohmann::json run_command(const Settings& s, std::ostream& report);

// Writes through a temporary file in the same directory, then renames.
void write_file_atomic(const std::string& path, const std::string& content);

// Summary of the schedule for (γ, T, Λ, δ), as written to schedule_summary.json.
nlohmann::json schedule_summary(double gamma, int horizon, std::int64_t budget, double delta);

}  // namespace truncmc
