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

#include "sgada/losses.hpp"

#include <string>

namespace sgada {
namespace {

void require_column(Var v, const char* what) {
  if (v.rows() < 1) throw ContractError(std::string(what) + ": empty batch");
  if (v.cols() != 1) {
    throw ShapeError(std::string(what) + ": expected n x 1, got " +
                     shape_string(v.value()));
  }
}

LossValue mean_cross_entropy(Var probs, std::span<const int> labels,
                             const char* what) {
  if (probs.rows() < 1 || labels.empty()) {
    throw ContractError(std::string(what) + ": empty batch");
  }
  return LossValue::of(probs.tape->mean_neg_log_picked(probs, labels));
}

}  // namespace

LossValue disc_loss(Var d_on_source, Var d_on_target) {
  require_column(d_on_source, "disc_loss");
  require_column(d_on_target, "disc_loss");
  Tape& tape = *d_on_source.tape;
  return LossValue::of(tape.mean_neg_log(d_on_source) +
                       tape.mean_neg_log_complement(d_on_target));
}

LossValue adv_feature_loss(Var d_on_target, bool unnegated) {
  require_column(d_on_target, "adv_feature_loss");
  Var loss = d_on_target.tape->mean_neg_log(d_on_target);
  return LossValue::of(unnegated ? -loss : loss);
}

LossValue self_training_loss(Var probs, std::span<const int> pseudo_labels) {
  return mean_cross_entropy(probs, pseudo_labels, "self_training_loss");
}

LossValue target_update_objective(const LossValue& adv,
                                  const LossValue& selftrain, double lambda) {
  if (!(lambda >= 0)) {
    throw ContractError("target_update_objective: lambda must be >= 0");
  }
  return LossValue::of(adv.scalar + lambda * selftrain.scalar);
}

LossValue supervised_ce_loss(Var probs, std::span<const int> labels) {
  return mean_cross_entropy(probs, labels, "supervised_ce_loss");
}

}  // namespace sgada
