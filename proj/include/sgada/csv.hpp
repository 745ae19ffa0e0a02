// Copyright 2026 The SGADA Authors.
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

// Minimal helpers for the project's comma-separated files. No quoting:
// every field in these formats is numeric or a bare identifier.

#ifndef SGADA_CSV_HPP_
#define SGADA_CSV_HPP_

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sgada {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, long line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  long line() const { return line_; }

 private:
  long line_;
};

std::vector<std::string_view> split_fields(std::string_view line,
                                           char sep = ',');

/// Strict full-field conversions; `source` and `line` only label errors.
double parse_real(std::string_view field, const std::string& source,
                  long line);
long parse_integer(std::string_view field, const std::string& source,
                   long line);

std::string format_real(double v);  // 17 significant digits

std::string_view trim(std::string_view s);

}  // namespace sgada

#endif  // SGADA_CSV_HPP_
