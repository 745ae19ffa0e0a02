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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "sgada/adam.hpp"
#include "sgada/checkpoint.hpp"
#include "sgada/nets.hpp"

namespace sgada {
namespace {

ModelBundle small_bundle(std::uint64_t seed = 1) {
  return make_bundle(ExtractorSpec{}, 3, 16, seed);
}

Matrix inputs(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return x;
}

TEST(ExtractorSpec, Validation) {
  EXPECT_NO_THROW(ExtractorSpec{}.validate());
  EXPECT_THROW((ExtractorSpec{2, {}, 8}.validate()), ContractError);
  EXPECT_THROW((ExtractorSpec{2, {16, 0}, 8}.validate()), ContractError);
  EXPECT_THROW((ExtractorSpec{0, {16}, 8}.validate()), ContractError);
}

TEST(MakeBundle, ShapesFollowTheSpec) {
  ModelBundle b = small_bundle();
  ASSERT_EQ(b.f_source.layers.size(), 3u);
  EXPECT_EQ(b.f_source.layers[0].weight.value.rows(), 2);
  EXPECT_EQ(b.f_source.layers[0].weight.value.cols(), 16);
  EXPECT_EQ(b.f_source.layers[2].weight.value.cols(), 8);
  EXPECT_EQ(b.classifier.layer.weight.value.rows(), 8);
  EXPECT_EQ(b.classifier.layer.weight.value.cols(), 3);
  ASSERT_EQ(b.discriminator.layers.size(), 3u);
  EXPECT_EQ(b.discriminator.layers[1].weight.value.cols(), 16);
  EXPECT_EQ(b.discriminator.layers[2].weight.value.cols(), 1);
  for (std::size_t l = 0; l < b.f_source.layers.size(); ++l) {
    EXPECT_EQ(b.f_source.layers[l].weight.value,
              b.f_target.layers[l].weight.value);
  }
}

TEST(MakeDense, GlorotBoundsAndZeroBias) {
  Rng rng(3);
  const DenseLayer layer = make_dense(10, 6, rng);
  const double bound = std::sqrt(6.0 / 16.0);
  EXPECT_LE(layer.weight.value.cwiseAbs().maxCoeff(), bound);
  EXPECT_EQ(layer.bias.value, Matrix::Zero(1, 6));
}

TEST(Extract, EmptyBatch) {
  ModelBundle b = small_bundle();
  Tape t;
  const Var f = extract(b.f_source, t.constant(Matrix(0, 2)));
  EXPECT_EQ(f.rows(), 0);
  EXPECT_EQ(f.cols(), 8);
}

TEST(Extract, IdenticalRowsGiveIdenticalOutputs) {
  ModelBundle b = small_bundle();
  Matrix x(3, 2);
  x << 0.3, -1.2, 0.3, -1.2, 0.3, -1.2;
  Tape t;
  const Matrix f = extract(b.f_source, t.constant(x)).value();
  EXPECT_EQ(f.row(0), f.row(1));
  EXPECT_EQ(f.row(1), f.row(2));
}

TEST(Extract, IdentityNetwork) {
  Extractor net;
  for (int l = 0; l < 2; ++l) {
    net.layers.push_back(DenseLayer{Parameter(Matrix::Identity(2, 2)),
                                    Parameter(Matrix::Zero(1, 2))});
  }
  Matrix x(2, 2);
  x << 0.5, 2.0, 1.5, 0.25;
  Tape t;
  EXPECT_EQ(extract(net, t.constant(x)).value(), x);
}

TEST(Extract, WrongWidthThrows) {
  ModelBundle b = small_bundle();
  Tape t;
  EXPECT_THROW(extract(b.f_source, t.constant(Matrix::Zero(2, 3))),
               ShapeError);
}

TEST(Classify, ZeroWeightsGiveUniform) {
  Classifier c{DenseLayer{Parameter(Matrix::Zero(8, 3)),
                          Parameter(Matrix::Zero(1, 3))}};
  Tape t;
  const Matrix p = classify(c, t.constant(Matrix::Ones(4, 8))).value();
  EXPECT_TRUE(p.isApprox(Matrix::Constant(4, 3, 1.0 / 3.0), 1e-15));
}

TEST(Classify, ArgmaxInvariantToLogitShift) {
  ModelBundle b = small_bundle();
  const Matrix x = inputs(20, 4);
  Tape t;
  const auto before =
      argmax_rows(classify(b.classifier, extract(b.f_source, t.constant(x)))
                      .value());
  b.classifier.layer.bias.value.array() += 5.0;
  Tape t2;
  const auto after = argmax_rows(
      classify(b.classifier, extract(b.f_source, t2.constant(x))).value());
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(before[i].label, after[i].label);
  }
}

TEST(Classify, ConfidenceAtLeastOneOverK) {
  ModelBundle b = small_bundle(5);
  Tape t;
  const Matrix p =
      classify(b.classifier, extract(b.f_source, t.constant(inputs(200, 6))))
          .value();
  for (const Prediction& pr : argmax_rows(p)) {
    EXPECT_GE(pr.confidence, 1.0 / 3.0);
  }
}

TEST(ArgmaxRows, Example) {
  Matrix p(1, 3);
  p << 0.7, 0.2, 0.1;
  const auto pr = argmax_rows(p);
  EXPECT_EQ(pr[0].label, 0);
  EXPECT_EQ(pr[0].confidence, 0.7);
}

TEST(Discriminate, ZeroFinalLayerGivesHalf) {
  ModelBundle b = small_bundle();
  b.discriminator.layers.back().weight.value.setZero();
  Tape t;
  const Matrix d =
      discriminate(b.discriminator,
                   extract(b.f_source, t.constant(inputs(5, 7))))
          .value();
  EXPECT_EQ(d.rows(), 5);
  EXPECT_EQ(d.cols(), 1);
  EXPECT_EQ(d, Matrix::Constant(5, 1, 0.5));
}

TEST(Discriminate, OutputsClampedAndMonotoneInBias) {
  ModelBundle b = small_bundle();
  const Matrix x = inputs(30, 8);
  Matrix prev;
  for (double bias : {-100.0, -1.0, 0.0, 1.0, 100.0}) {
    b.discriminator.layers.back().bias.value(0, 0) = bias;
    Tape t;
    const Matrix d =
        discriminate(b.discriminator, extract(b.f_source, t.constant(x)))
            .value();
    EXPECT_GE(d.minCoeff(), kProbabilityFloor);
    EXPECT_LE(d.maxCoeff(), 1.0 - kProbabilityFloor);
    if (prev.size() > 0 && std::abs(bias) < 50) {
      EXPECT_TRUE((d.array() > prev.array()).all());
    }
    prev = d;
  }
}

TEST(CloneSourceToTarget, CopiesAndResetsOptimizer) {
  ModelBundle b = small_bundle();
  // Give F_t its own history first.
  for (auto* p : parameters(b.f_target)) {
    p->grad.setOnes();
  }
  adam_step(parameters(b.f_target), AdamOptions{.lr = 0.1});
  clone_source_to_target(b);
  const Matrix x = inputs(10, 9);
  Tape t;
  EXPECT_EQ(extract(b.f_target, t.constant(x)).value(),
            extract(b.f_source, t.constant(x)).value());
  for (auto* p : parameters(b.f_target)) {
    EXPECT_EQ(p->step_count, 0);
    EXPECT_EQ(p->adam_m.cwiseAbs().sum(), 0.0);
  }
  // D cannot tell the two apart on identical inputs.
  EXPECT_EQ(
      discriminate(b.discriminator, extract(b.f_target, t.constant(x))).value(),
      discriminate(b.discriminator, extract(b.f_source, t.constant(x))).value());

  const std::uint64_t source_hash = parameter_hash(parameters(b.f_source));
  for (auto* p : parameters(b.f_target)) p->grad.setOnes();
  adam_step(parameters(b.f_target), AdamOptions{.lr = 0.1});
  EXPECT_EQ(parameter_hash(parameters(b.f_source)), source_hash);
  EXPECT_NE(parameter_hash(parameters(b.f_target)), source_hash);
}

TEST(ParameterHash, SensitiveToEveryEntry) {
  ModelBundle b = small_bundle();
  const auto params = parameters(b.classifier);
  const std::uint64_t h = parameter_hash(params);
  params[0]->value(3, 1) = std::nextafter(params[0]->value(3, 1), 10.0);
  EXPECT_NE(parameter_hash(params), h);
}

TEST(NamedParameters, FixedOrderAndNames) {
  ModelBundle b = small_bundle();
  const auto named = named_parameters(b);
  ASSERT_EQ(named.size(), 6u + 6u + 2u + 6u);
  EXPECT_EQ(named.front().first, "f_source.0.weight");
  EXPECT_EQ(named[6].first, "f_target.0.weight");
  EXPECT_EQ(named[12].first, "classifier.0.weight");
  EXPECT_EQ(named.back().first, "discriminator.2.bias");
}

TEST(Checkpoint, RoundTripIsBitExact) {
  ModelBundle a = small_bundle(1);
  for (auto* p : parameters(a.f_target)) p->grad.setConstant(0.37);
  adam_step(parameters(a.f_target), AdamOptions{.lr = 1e-3});
  std::stringstream ss;
  write_checkpoint(ss, named_parameters(a));
  EXPECT_EQ(ss.str().rfind(kCheckpointMagic, 0), 0u);

  ModelBundle b = small_bundle(2);
  read_checkpoint(ss, named_parameters(b));
  const auto na = named_parameters(a);
  const auto nb = named_parameters(b);
  for (std::size_t i = 0; i < na.size(); ++i) {
    EXPECT_EQ(na[i].second->value, nb[i].second->value) << na[i].first;
    EXPECT_EQ(na[i].second->adam_m, nb[i].second->adam_m);
    EXPECT_EQ(na[i].second->adam_v, nb[i].second->adam_v);
    EXPECT_EQ(na[i].second->step_count, nb[i].second->step_count);
  }
}

TEST(Checkpoint, ShapeMismatchIsRejected) {
  ModelBundle a = small_bundle();
  std::stringstream ss;
  write_checkpoint(ss, named_parameters(a));
  ModelBundle wide = make_bundle(ExtractorSpec{2, {32, 16}, 8}, 3, 16, 1);
  EXPECT_THROW(read_checkpoint(ss, named_parameters(wide)), CheckpointError);
}

TEST(Checkpoint, BadMagicAndTruncation) {
  ModelBundle a = small_bundle();
  std::stringstream bad("NOT-A-CHECKPOINT\n");
  EXPECT_THROW(read_checkpoint(bad, named_parameters(a)), CheckpointError);
  std::stringstream full;
  write_checkpoint(full, named_parameters(a));
  std::stringstream truncated(full.str().substr(0, full.str().size() / 2));
  EXPECT_THROW(read_checkpoint(truncated, named_parameters(a)),
               CheckpointError);
}

}  // namespace
}  // namespace sgada
