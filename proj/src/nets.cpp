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

#include "sgada/nets.hpp"

#include <cmath>
#include <cstring>

namespace sgada {

void ExtractorSpec::validate() const {
  if (input_dim < 1 || feature_dim < 1 || hidden_dims.empty()) {
    throw ContractError(
        "extractor needs input_dim >= 1, feature_dim >= 1 and a hidden layer");
  }
  for (int h : hidden_dims) {
    if (h < 1) throw ContractError("extractor hidden dims must be >= 1");
  }
}

DenseLayer make_dense(int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    w.data()[k] = rng.uniform(-limit, limit);
  }
  return DenseLayer{Parameter(std::move(w)),
                    Parameter(Matrix::Zero(1, fan_out))};
}

namespace {

Extractor make_extractor(const ExtractorSpec& spec, Rng& rng) {
  Extractor net;
  int fan_in = spec.input_dim;
  for (int h : spec.hidden_dims) {
    net.layers.push_back(make_dense(fan_in, h, rng));
    fan_in = h;
  }
  net.layers.push_back(make_dense(fan_in, spec.feature_dim, rng));
  return net;
}

Discriminator make_discriminator(int feature_dim, int hidden, Rng& rng) {
  Discriminator d;
  d.layers.push_back(make_dense(feature_dim, hidden, rng));
  d.layers.push_back(make_dense(hidden, hidden, rng));
  d.layers.push_back(make_dense(hidden, 1, rng));
  return d;
}

Var dense(DenseLayer& layer, Var x) {
  Tape& tape = *x.tape;
  return rowwise_affine(x, tape.parameter(layer.weight),
                        tape.parameter(layer.bias));
}

void append(std::vector<Parameter*>& out, DenseLayer& layer) {
  out.push_back(&layer.weight);
  out.push_back(&layer.bias);
}

void append_named(std::vector<NamedParameter>& out, const std::string& prefix,
                  std::vector<DenseLayer>& layers) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string stem = prefix + "." + std::to_string(i);
    out.emplace_back(stem + ".weight", &layers[i].weight);
    out.emplace_back(stem + ".bias", &layers[i].bias);
  }
}

}  // namespace

ModelBundle make_bundle(const ExtractorSpec& spec, int n_classes,
                        int disc_hidden, std::uint64_t seed) {
  spec.validate();
  if (n_classes < 2 || disc_hidden < 1) {
    throw ContractError("model needs n_classes >= 2 and disc_hidden >= 1");
  }
  ModelBundle bundle;
  bundle.spec = spec;
  bundle.n_classes = n_classes;
  bundle.disc_hidden = disc_hidden;

  Rng extractor_rng(derive_seed(seed, "f_source"));
  bundle.f_source = make_extractor(spec, extractor_rng);
  bundle.f_target = bundle.f_source;

  Rng classifier_rng(derive_seed(seed, "classifier"));
  bundle.classifier.layer =
      make_dense(spec.feature_dim, n_classes, classifier_rng);

  Rng disc_rng(derive_seed(seed, "discriminator"));
  bundle.discriminator =
      make_discriminator(spec.feature_dim, disc_hidden, disc_rng);
  return bundle;
}

Var extract(Extractor& net, Var x) {
  if (net.layers.empty()) throw ContractError("extract: empty extractor");
  const Eigen::Index expected = net.layers.front().weight.rows();
  if (x.cols() != expected) {
    throw ShapeError("extract: input " + shape_string(x.value()) +
                     " but extractor expects " + std::to_string(expected) +
                     " columns");
  }
  Var h = x;
  for (std::size_t i = 0; i + 1 < net.layers.size(); ++i) {
    h = relu(dense(net.layers[i], h));
  }
  return dense(net.layers.back(), h);
}

Var classifier_logits(Classifier& c, Var features) {
  return dense(c.layer, features);
}

Var classify(Classifier& c, Var features) {
  return softmax_rows(classifier_logits(c, features));
}

Var discriminate(Discriminator& d, Var features) {
  Var h = relu(dense(d.layers[0], features));
  h = relu(dense(d.layers[1], h));
  return sigmoid(dense(d.layers[2], h));
}

void clone_source_to_target(ModelBundle& bundle) {
  bundle.f_target = bundle.f_source;
  for (Parameter* p : parameters(bundle.f_target)) {
    p->zero_grad();
    p->reset_optimizer();
  }
}

void reinit_discriminator(ModelBundle& bundle, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "discriminator"));
  bundle.discriminator =
      make_discriminator(bundle.spec.feature_dim, bundle.disc_hidden, rng);
}

std::vector<Parameter*> parameters(Extractor& net) {
  std::vector<Parameter*> out;
  for (DenseLayer& layer : net.layers) append(out, layer);
  return out;
}

std::vector<Parameter*> parameters(Classifier& c) {
  std::vector<Parameter*> out;
  append(out, c.layer);
  return out;
}

std::vector<Parameter*> parameters(Discriminator& d) {
  std::vector<Parameter*> out;
  for (DenseLayer& layer : d.layers) append(out, layer);
  return out;
}

std::vector<NamedParameter> named_parameters(ModelBundle& bundle) {
  std::vector<NamedParameter> out;
  append_named(out, "f_source", bundle.f_source.layers);
  append_named(out, "f_target", bundle.f_target.layers);
  out.emplace_back("classifier.0.weight", &bundle.classifier.layer.weight);
  out.emplace_back("classifier.0.bias", &bundle.classifier.layer.bias);
  append_named(out, "discriminator", bundle.discriminator.layers);
  return out;
}

std::uint64_t parameter_hash(std::span<Parameter* const> params) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const Parameter* p : params) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p->value.data());
    const std::size_t n = static_cast<std::size_t>(p->value.size()) * sizeof(double);
    for (std::size_t k = 0; k < n; ++k) {
      h ^= bytes[k];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::vector<Prediction> argmax_rows(const Matrix& probs) {
  std::vector<Prediction> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index best = 0;
    const double top = probs.row(r).maxCoeff(&best);
    out[static_cast<std::size_t>(r)] = {static_cast<int>(best), top};
  }
  return out;
}

}  // namespace sgada
