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

#include "truncmc/csv.hpp"

#include <cmath>
#include <cstdio>

#include "truncmc/errors.hpp"

namespace truncmc {

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

CsvWriter::CsvWriter(const std::string& path, const std::string& kind,
                     const std::vector<std::string>& columns)
    : out_(path), path_(path), columns_(columns.size()) {
  if (!out_) throw ValidationError("cannot open '" + path + "' for writing");
  out_ << "# trunc-mc schema_version=" << kCsvSchemaVersion << " kind=" << kind << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << quote(columns[i]);
  out_ << '\n';
}

std::string CsvWriter::format_real(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string CsvWriter::format(const Field& f) {
  if (const auto* s = std::get_if<std::string>(&f)) return quote(*s);
  if (const auto* d = std::get_if<double>(&f)) return format_real(*d);
  return std::to_string(std::get<std::int64_t>(f));
}

void CsvWriter::row(const std::vector<Field>& fields) {
  if (fields.size() != columns_) throw InternalError("CSV row width does not match header");
  for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << format(fields[i]);
  out_ << '\n';
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw ValidationError("failed writing '" + path_ + "'");
}

}  // namespace truncmc
