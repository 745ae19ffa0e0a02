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

// Training objectives of the adaptation pipeline. Every loss is a per-batch
// mean over clamped probabilities.
//
//   disc_loss          -mean log D(F_s(x_s)) - mean log(1 - D(F_t(x_t)))
//   adv_feature_loss   -mean log D(F_t(x_t))          (inverted-label form)
//   self_training_loss  mean -log C(F_t(x_t))[y_hat]
//   target objective    adv + lambda * self_training

#ifndef SGADA_LOSSES_HPP_
#define SGADA_LOSSES_HPP_

#include <span>

#include "sgada/autodiff.hpp"

namespace sgada {

struct LossValue {
  Var scalar;
  double detached = 0;

  static LossValue of(Var v) { return LossValue{v, v.item()}; }
};

LossValue disc_loss(Var d_on_source, Var d_on_target);

/// -mean log D(F_t(x_t)). With `unnegated` the sign-flipped form
/// +mean log D(F_t(x_t)) is returned instead; it exists only for ablation.
LossValue adv_feature_loss(Var d_on_target, bool unnegated = false);

LossValue self_training_loss(Var probs, std::span<const int> pseudo_labels);

LossValue target_update_objective(const LossValue& adv,
                                  const LossValue& selftrain, double lambda);

LossValue supervised_ce_loss(Var probs, std::span<const int> labels);

}  // namespace sgada

#endif  // SGADA_LOSSES_HPP_
