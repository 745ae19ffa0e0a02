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

#include "sgada/checkpoint.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace sgada {
namespace {

void write_block(std::ostream& out, const std::string& name, const Matrix& m) {
  out << name << '\n' << m.rows() << '\n' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ' ';
      out << fmt::format("{:.17g}", m(r, c));
    }
    out << '\n';
  }
}

class BlockReader {
 public:
  explicit BlockReader(std::istream& in) : in_(in) {}

  std::string line() {
    std::string s;
    if (!std::getline(in_, s)) {
      throw CheckpointError(fmt::format("checkpoint truncated at line {}",
                                        line_no_ + 1));
    }
    ++line_no_;
    return s;
  }

  long integer() {
    const std::string s = line();
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw CheckpointError(
          fmt::format("checkpoint line {}: expected integer, got '{}'",
                      line_no_, s));
    }
    return v;
  }

  void block(const std::string& name, Matrix& target) {
    const std::string got = line();
    if (got != name) {
      throw CheckpointError(fmt::format(
          "checkpoint line {}: expected block '{}', found '{}'", line_no_,
          name, got));
    }
    const long rows = integer();
    const long cols = integer();
    if (rows != target.rows() || cols != target.cols()) {
      throw CheckpointError(fmt::format(
          "checkpoint block '{}' is {}x{}, model expects {}", name, rows,
          cols, shape_string(target)));
    }
    for (long r = 0; r < rows; ++r) {
      std::istringstream row(line());
      for (long c = 0; c < cols; ++c) {
        std::string token;
        if (!(row >> token)) {
          throw CheckpointError(fmt::format(
              "checkpoint line {}: row has fewer than {} values", line_no_,
              cols));
        }
        double v = 0;
        auto [ptr, ec] =
            std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc() || ptr != token.data() + token.size()) {
          throw CheckpointError(fmt::format(
              "checkpoint line {}: bad number '{}'", line_no_, token));
        }
        target(r, c) = v;
      }
    }
  }

 private:
  std::istream& in_;
  long line_no_ = 0;
};

}  // namespace

void write_checkpoint(std::ostream& out,
                      std::span<const NamedParameter> params) {
  out << kCheckpointMagic << '\n';
  for (const auto& [name, p] : params) write_block(out, name, p->value);
  for (const auto& [name, p] : params) {
    write_block(out, name + "#adam_m", p->adam_m);
    write_block(out, name + "#adam_v", p->adam_v);
    write_block(out, name + "#adam_step",
                Matrix::Constant(1, 1, static_cast<double>(p->step_count)));
  }
}

void read_checkpoint(std::istream& in,
                     std::span<const NamedParameter> params) {
  BlockReader reader(in);
  if (reader.line() != kCheckpointMagic) {
    throw CheckpointError("not a checkpoint: missing 'SGADA-CKPT v1' header");
  }
  for (const auto& [name, p] : params) reader.block(name, p->value);
  for (const auto& [name, p] : params) {
    reader.block(name + "#adam_m", p->adam_m);
    reader.block(name + "#adam_v", p->adam_v);
    Matrix step(1, 1);
    reader.block(name + "#adam_step", step);
    p->step_count = static_cast<std::int64_t>(step(0, 0));
    p->zero_grad();
  }
}

void save_checkpoint(const std::filesystem::path& path, ModelBundle& bundle) {
  // Written to a sibling file first so an interrupted write never replaces
  // a good checkpoint.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    const auto params = named_parameters(bundle);
    write_checkpoint(out, params);
    if (!out) throw CheckpointError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void load_checkpoint(const std::filesystem::path& path, ModelBundle& bundle) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const auto params = named_parameters(bundle);
  try {
    read_checkpoint(in, params);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace sgada
