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

#ifndef SGADA_GRAD_CHECK_HPP_
#define SGADA_GRAD_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "sgada/autodiff.hpp"
#include "sgada/random.hpp"

namespace sgada {

/// Relative error between an analytic and a numeric derivative. The 1e-6
/// floor keeps near-zero derivatives from dominating the ratio.
inline double relative_error(double analytic, double numeric) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

/// Compares reverse-mode gradients against central differences on
/// `n_probes` randomly chosen parameter entries and returns the worst
/// relative error.
///
/// `loss_fn(tape)` must rebuild the loss on a fresh tape from the current
/// parameter values. A probe is only accepted when the perturbed
/// evaluations at +h and -h take the same ReLU/clamp branches as the
/// unperturbed one, so kinks are never straddled. Parameter values are
/// restored exactly and gradients are left cleared.
template <typename LossFn, typename Scalar = double>
Scalar grad_check(
    LossFn&& loss_fn,
    std::type_identity_t<std::span<BasicParameter<Scalar>* const>> params,
    int n_probes, std::type_identity_t<Scalar> h, std::uint64_t seed = 0) {
  if (n_probes < 1 || !(h > 0) || params.empty()) {
    throw ContractError("grad_check: need n_probes >= 1, h > 0, parameters");
  }
  for (auto* p : params) p->zero_grad();
  std::uint64_t base_signature = 0;
  {
    BasicTape<Scalar> tape;
    BasicVar<Scalar> loss = loss_fn(tape);
    tape.backward(loss);
    base_signature = tape.branch_signature();
  }
  std::vector<MatrixX<Scalar>> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) {
    analytic.push_back(p->grad);
    p->zero_grad();
  }

  auto evaluate = [&](std::uint64_t& signature) {
    BasicTape<Scalar> tape;
    const Scalar value = loss_fn(tape).item();
    signature = tape.branch_signature();
    return value;
  };

  std::vector<std::size_t> sizes;
  std::size_t total = 0;
  for (auto* p : params) {
    sizes.push_back(static_cast<std::size_t>(p->value.size()));
    total += sizes.back();
  }

  Rng rng(seed);
  Scalar worst = 0;
  int accepted = 0;
  const int max_attempts = 50 * n_probes;
  for (int attempt = 0; attempt < max_attempts && accepted < n_probes;
       ++attempt) {
    std::size_t flat = static_cast<std::size_t>(rng.below(total));
    std::size_t which = 0;
    while (flat >= sizes[which]) flat -= sizes[which++];
    auto* p = params[which];
    Scalar& entry = p->value.data()[flat];
    const Scalar original = entry;

    std::uint64_t sig_plus = 0;
    std::uint64_t sig_minus = 0;
    entry = original + h;
    const Scalar plus = evaluate(sig_plus);
    entry = original - h;
    const Scalar minus = evaluate(sig_minus);
    entry = original;
    if (sig_plus != base_signature || sig_minus != base_signature) continue;

    const Scalar numeric = (plus - minus) / (Scalar(2) * h);
    const Scalar exact = analytic[which].data()[flat];
    worst = std::max(worst, Scalar(relative_error(double(exact),
                                                  double(numeric))));
    ++accepted;
  }
  if (accepted == 0) {
    throw ContractError("grad_check: every probe straddled a kink");
  }
  return worst;
}

}  // namespace sgada

#endif  // SGADA_GRAD_CHECK_HPP_
