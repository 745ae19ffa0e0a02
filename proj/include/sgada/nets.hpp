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

// The four networks of the adaptation pipeline: source extractor F_s,
// target extractor F_t, classifier C and domain discriminator D.

#ifndef SGADA_NETS_HPP_
#define SGADA_NETS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sgada/autodiff.hpp"
#include "sgada/random.hpp"

namespace sgada {

struct ExtractorSpec {
  int input_dim = 2;
  std::vector<int> hidden_dims = {16, 16};
  int feature_dim = 8;

  /// Throws ContractError unless there is a hidden layer and all dims >= 1.
  void validate() const;
};

struct DenseLayer {
  Parameter weight;  // fan_in x fan_out
  Parameter bias;    // 1 x fan_out
};

/// Hidden layers are affine + ReLU; the last layer is affine only.
struct Extractor {
  std::vector<DenseLayer> layers;
};

struct Classifier {
  DenseLayer layer;
};

/// feature_dim -> disc_hidden -> disc_hidden -> 1.
struct Discriminator {
  std::vector<DenseLayer> layers;
};

struct ModelBundle {
  ExtractorSpec spec;
  int n_classes = 3;
  int disc_hidden = 16;
  Extractor f_source;
  Extractor f_target;
  Classifier classifier;
  Discriminator discriminator;
};

/// Uniform(+-sqrt(6 / (fan_in + fan_out))) weights, zero biases.
DenseLayer make_dense(int fan_in, int fan_out, Rng& rng);

ModelBundle make_bundle(const ExtractorSpec& spec, int n_classes,
                        int disc_hidden, std::uint64_t seed);

Var extract(Extractor& net, Var x);
Var classifier_logits(Classifier& c, Var features);
/// Row-wise class probabilities.
Var classify(Classifier& c, Var features);
/// Probability that each feature row came from the source domain, 1 column.
Var discriminate(Discriminator& d, Var features);

/// Deep-copies F_s into F_t and zeroes F_t's optimizer state.
void clone_source_to_target(ModelBundle& bundle);
void reinit_discriminator(ModelBundle& bundle, std::uint64_t seed);

std::vector<Parameter*> parameters(Extractor& net);
std::vector<Parameter*> parameters(Classifier& c);
std::vector<Parameter*> parameters(Discriminator& d);

using NamedParameter = std::pair<std::string, Parameter*>;
/// Every parameter in a fixed order: f_source, f_target, classifier,
/// discriminator; e.g. "f_source.0.weight".
std::vector<NamedParameter> named_parameters(ModelBundle& bundle);

/// FNV-1a over the raw bytes of every value matrix.
std::uint64_t parameter_hash(std::span<Parameter* const> params);

struct Prediction {
  int label = 0;
  double confidence = 0;
};

/// Argmax class and its probability for each row of `probs`.
std::vector<Prediction> argmax_rows(const Matrix& probs);

}  // namespace sgada

#endif  // SGADA_NETS_HPP_
