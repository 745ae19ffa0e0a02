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

// Command-line front end. Every configuration key is also a `--key value`
// flag; `--set key=value` is accepted as well. Exit codes: 0 success,
// 1 runtime failure, 2 usage error.

#ifndef SGADA_CLI_HPP_
#define SGADA_CLI_HPP_

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sgada {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct Command {
  std::string verb;
  std::string config_path;
  /// Empty when neither --out nor SGADA_OUT_DIR was given.
  std::string out_dir;
  std::vector<std::pair<std::string, std::string>> overrides;
  bool resume = false;
  bool verbose = false;
  /// evaluate: checkpoint file relative to out_dir, and extractor.
  std::string checkpoint = "checkpoints/latest.ckpt";
  std::string extractor = "target";
};

class UsageError : public std::runtime_error {
 public:
  UsageError(const std::string& what, std::string usage)
      : std::runtime_error(what), usage_(std::move(usage)) {}
  const std::string& usage() const { return usage_; }

 private:
  std::string usage_;
};

/// Help requested explicitly; carries the help text.
class HelpRequested : public std::runtime_error {
 public:
  explicit HelpRequested(std::string text)
      : std::runtime_error("help requested"), text_(std::move(text)) {}
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

const std::vector<std::string>& cli_verbs();

/// Strict parse of the arguments after the program name. Throws UsageError.
/// `env_out_dir` stands in for SGADA_OUT_DIR.
Command parse_args(std::span<const std::string> args,
                   std::optional<std::string> env_out_dir = std::nullopt);

/// Executes a parsed command; returns the exit code.
int run_command(const Command& cmd, std::ostream& out, std::ostream& err);

/// parse_args() plus run_command(), with SGADA_OUT_DIR read from the
/// environment.
int cli_main(std::span<const std::string> args, std::ostream& out,
             std::ostream& err);

}  // namespace sgada

#endif  // SGADA_CLI_HPP_
