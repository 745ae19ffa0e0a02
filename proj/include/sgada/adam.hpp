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

#ifndef SGADA_ADAM_HPP_
#define SGADA_ADAM_HPP_

#include <cmath>
#include <span>
#include <type_traits>

#include "sgada/autodiff.hpp"

namespace sgada {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update per parameter, then clears the gradients.
template <typename Scalar = double>
void adam_step(
    std::type_identity_t<std::span<BasicParameter<Scalar>* const>> params,
    const AdamOptions& opt) {
  if (!(opt.lr > 0) || opt.beta1 < 0 || opt.beta1 >= 1 || opt.beta2 < 0 ||
      opt.beta2 >= 1) {
    throw ContractError("adam_step: lr must be > 0 and betas in [0, 1)");
  }
  const Scalar b1 = Scalar(opt.beta1);
  const Scalar b2 = Scalar(opt.beta2);
  for (BasicParameter<Scalar>* p : params) {
    p->step_count += 1;
    const Scalar t = Scalar(p->step_count);
    p->adam_m = b1 * p->adam_m + (Scalar(1) - b1) * p->grad;
    p->adam_v = b2 * p->adam_v + (Scalar(1) - b2) * p->grad.cwiseAbs2();
    const Scalar m_corr = Scalar(1) - std::pow(b1, t);
    const Scalar v_corr = Scalar(1) - std::pow(b2, t);
    p->value.array() -=
        Scalar(opt.lr) * (p->adam_m.array() / m_corr) /
        ((p->adam_v.array() / v_corr).sqrt() + Scalar(opt.eps));
    p->grad.setZero();
  }
}

}  // namespace sgada

#endif  // SGADA_ADAM_HPP_
