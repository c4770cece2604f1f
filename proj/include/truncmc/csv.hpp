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

// Tidy CSV output. Every file starts with a schema line
//   # trunc-mc schema_version=1 kind=<kind>
// followed by the header row. Fields are quoted RFC-4180 style when needed;
// non-finite reals are written as empty fields.

#include <cstdint>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace truncmc {

inline constexpr int kCsvSchemaVersion = 1;

class CsvWriter {
 public:
  using Field = std::variant<std::string, double, std::int64_t>;

  CsvWriter(const std::string& path, const std::string& kind, const std::vector<std::string>& columns);
  void row(const std::vector<Field>& fields);
  void close();

  static std::string format(const Field& f);
  static std::string format_real(double v);

 private:
  std::ofstream out_;
  std::string path_;
  std::size_t columns_;
};

}  // namespace truncmc
