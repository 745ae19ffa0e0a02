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

// Text checkpoints.
//
//   SGADA-CKPT v1
//   <name>
//   <rows>
//   <cols>
//   <row 0 values, space separated, 17 significant digits>
//   ...
//
// Parameter value blocks come first, in named_parameters() order, followed
// by optimizer blocks for each parameter in the same order:
// "<name>#adam_m", "<name>#adam_v" and the 1x1 "<name>#adam_step".

#ifndef SGADA_CHECKPOINT_HPP_
#define SGADA_CHECKPOINT_HPP_

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>

#include "sgada/nets.hpp"

namespace sgada {

inline constexpr const char* kCheckpointMagic = "SGADA-CKPT v1";

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_checkpoint(std::ostream& out,
                      std::span<const NamedParameter> params);
/// Reads into existing parameters; names and shapes must match exactly.
void read_checkpoint(std::istream& in, std::span<const NamedParameter> params);

void save_checkpoint(const std::filesystem::path& path, ModelBundle& bundle);
void load_checkpoint(const std::filesystem::path& path, ModelBundle& bundle);

}  // namespace sgada

#endif  // SGADA_CHECKPOINT_HPP_
