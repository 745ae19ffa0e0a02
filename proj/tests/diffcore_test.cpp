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
#include <vector>

#include "sgada/adam.hpp"
#include "sgada/autodiff.hpp"
#include "sgada/grad_check.hpp"
#include "sgada/random.hpp"

namespace sgada {
namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-2.0, 2.0);
  }
  return m;
}

// Plain triple loop, used as the matmul oracle.
Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double acc = 0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

TEST(Matmul, MatchesTripleLoop) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix a = random_matrix(1 + seed % 5, 2 + seed % 3, seed);
    const Matrix b = random_matrix(2 + seed % 3, 1 + seed % 4, seed + 100);
    Tape tape;
    const Matrix got = matmul(tape.constant(a), tape.constant(b)).value();
    EXPECT_TRUE(got.isApprox(naive_matmul(a, b), 1e-14));
  }
}

TEST(Matmul, IdentityIsExact) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix a = random_matrix(3, 4, seed);
    Tape tape;
    const Matrix got =
        matmul(tape.constant(a), tape.constant(Matrix::Identity(4, 4)))
            .value();
    EXPECT_EQ(got, a);
  }
}

TEST(Matmul, ShapeMismatchThrows) {
  Tape tape;
  EXPECT_THROW(matmul(tape.constant(Matrix::Zero(2, 3)),
                      tape.constant(Matrix::Zero(2, 3))),
               ShapeError);
}

TEST(Affine, Examples) {
  Tape tape;
  Matrix x(1, 2), w(2, 2), b(1, 2);
  x << 1, 1;
  w << 1, 0, 0, 1;
  b << 2, 3;
  Matrix expected(1, 2);
  expected << 3, 4;
  EXPECT_EQ(rowwise_affine(tape.constant(x), tape.constant(w),
                           tape.constant(b))
                .value(),
            expected);

  const Matrix w2 = random_matrix(3, 2, 7);
  const Matrix b2 = random_matrix(1, 2, 8);
  EXPECT_EQ(rowwise_affine(tape.constant(Matrix::Zero(1, 3)),
                           tape.constant(w2), tape.constant(b2))
                .value(),
            b2);

  const Matrix x3 = random_matrix(4, 3, 9);
  EXPECT_EQ(rowwise_affine(tape.constant(x3),
                           tape.constant(Matrix::Identity(3, 3)),
                           tape.constant(Matrix::Zero(1, 3)))
                .value(),
            x3);
}

TEST(Relu, Examples) {
  Tape tape;
  Matrix x(1, 4), expected(1, 4);
  x << -0.5, 0.5, -3, 3;
  expected << 0, 0.5, 0, 3;
  EXPECT_EQ(relu(tape.constant(x)).value(), expected);
  EXPECT_EQ(relu(tape.constant(Matrix::Zero(2, 2))).value(),
            Matrix::Zero(2, 2));
  Matrix y(1, 2), ey(1, 2);
  y << -1, 2;
  ey << 0, 2;
  EXPECT_EQ(relu(tape.constant(y)).value(), ey);
}

TEST(Softmax, Examples) {
  Tape tape;
  const Matrix u = softmax_rows(tape.constant(Matrix::Zero(1, 3))).value();
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(u(0, j), 1.0 / 3.0, 1e-15);

  for (double c : {-50.0, 0.0, 3.5, 400.0}) {
    Matrix x(1, 2);
    x << c, c + std::log(2.0);
    const Matrix p = softmax_rows(tape.constant(x)).value();
    EXPECT_NEAR(p(0, 0), 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(p(0, 1), 2.0 / 3.0, 1e-12);
  }

  Matrix big(1, 2);
  big << 1000, 0;
  const Matrix p = softmax_rows(tape.constant(big)).value();
  EXPECT_TRUE(std::isfinite(p(0, 0)) && std::isfinite(p(0, 1)));
  EXPECT_NEAR(p(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(p(0, 1), 0.0, 1e-12);
}

TEST(Softmax, RowsSumToOneProperty) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Tape tape;
    const Matrix x = 10.0 * random_matrix(5, 4, seed);
    const Matrix p = softmax_rows(tape.constant(x)).value();
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-12);
      for (Eigen::Index c = 0; c < p.cols(); ++c) {
        EXPECT_GT(p(r, c), 0.0);
        EXPECT_LT(p(r, c), 1.0);
      }
    }
  }
}

TEST(Sigmoid, Examples) {
  Tape tape;
  EXPECT_EQ(sigmoid(tape.constant(Matrix::Zero(1, 1))).value()(0, 0), 0.5);
  const double hi = sigmoid(tape.constant(Matrix::Constant(1, 1, 1000.0)))
                        .value()(0, 0);
  const double lo = sigmoid(tape.constant(Matrix::Constant(1, 1, -1000.0)))
                        .value()(0, 0);
  EXPECT_LE(hi, 1.0 - kProbabilityFloor);
  EXPECT_GE(lo, kProbabilityFloor);
  EXPECT_LT(hi, 1.0);
  EXPECT_GT(lo, 0.0);
}

TEST(Sigmoid, SymmetryProperty) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Tape tape;
    const Matrix x = 8.0 * random_matrix(3, 3, seed);
    const Matrix a = sigmoid(tape.constant(x)).value();
    const Matrix b = sigmoid(tape.constant(Matrix(-x))).value();
    EXPECT_LT(((a + b).array() - 1.0).abs().maxCoeff(), 1e-12);
  }
}

TEST(Backward, SumOfSquaresGivesTwiceW) {
  Parameter w(random_matrix(3, 2, 1));
  Tape tape;
  const Var wv = tape.parameter(w);
  backward(sum(hadamard(wv, wv)));
  EXPECT_TRUE(w.grad.isApprox(2.0 * w.value, 1e-15));
}

TEST(Backward, DisconnectedParameterGetsZero) {
  Parameter w(random_matrix(2, 2, 2));
  Parameter v(random_matrix(2, 2, 3));
  Tape tape;
  tape.parameter(w);
  const Var vv = tape.parameter(v);
  backward(sum(vv));
  EXPECT_EQ(w.grad, Matrix::Zero(2, 2));
  EXPECT_EQ(v.grad, Matrix::Ones(2, 2));
}

TEST(Backward, NonScalarLossThrows) {
  Parameter w(random_matrix(2, 2, 4));
  Tape tape;
  EXPECT_THROW(backward(tape.parameter(w)), ContractError);
}

TEST(Backward, GradientsAccumulateUntilCleared) {
  Parameter w(random_matrix(2, 3, 5));
  for (int pass = 0; pass < 2; ++pass) {
    Tape tape;
    backward(sum(tape.parameter(w)));
  }
  EXPECT_EQ(w.grad, Matrix::Constant(2, 3, 2.0));
  w.zero_grad();
  EXPECT_EQ(w.grad, Matrix::Zero(2, 3));
}

// grad of (L1 + L2) equals grad L1 + grad L2 under the same graph.
TEST(Backward, LinearityProperty) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Parameter w(random_matrix(3, 4, seed));
    const Matrix x = random_matrix(5, 3, seed + 50);
    auto loss1 = [&](Tape& t) {
      return sum(relu(matmul(t.constant(x), t.parameter(w))));
    };
    auto loss2 = [&](Tape& t) {
      const Var h = matmul(t.constant(x), t.parameter(w));
      return sum(hadamard(h, h));
    };
    Matrix g1, g2;
    {
      Tape t;
      backward(loss1(t));
      g1 = w.grad;
      w.zero_grad();
    }
    {
      Tape t;
      backward(loss2(t));
      g2 = w.grad;
      w.zero_grad();
    }
    Tape t;
    backward(loss1(t) + loss2(t));
    EXPECT_TRUE(w.grad.isApprox(g1 + g2, 1e-13));
  }
}

TEST(Backward, DetachStopsGradient) {
  Parameter w(random_matrix(2, 2, 6));
  Tape tape;
  const Var wv = tape.parameter(w);
  backward(sum(hadamard(detach(wv), wv)));
  EXPECT_TRUE(w.grad.isApprox(w.value, 1e-15));
}

TEST(Adam, FirstStepMagnitudeIsLr) {
  for (double scale : {1e-6, 1e-2, 1.0, 1e3}) {
    Parameter p(Matrix::Zero(2, 3));
    p.grad = Matrix::Constant(2, 3, scale);
    Parameter* ps[] = {&p};
    adam_step(ps, AdamOptions{.lr = 0.01});
    for (Eigen::Index i = 0; i < 6; ++i) {
      EXPECT_NEAR(std::abs(p.value.reshaped()(i)), 0.01, 0.01 * 1e-8 / scale + 1e-15);
    }
    EXPECT_EQ(p.step_count, 1);
    EXPECT_EQ(p.grad, Matrix::Zero(2, 3));
  }
}

TEST(Adam, ZeroGradientLeavesValue) {
  const Matrix start = random_matrix(2, 2, 9);
  Parameter p(start);
  Parameter* ps[] = {&p};
  adam_step(ps, AdamOptions{});
  EXPECT_EQ(p.value, start);
}

TEST(Adam, MatchesScalarRecurrence) {
  // Independent transcription of the bias-corrected recurrence.
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 1.0;
  double theta = 0.5, m = 0, v = 0;
  std::vector<double> expected;
  for (int t = 1; t <= 2; ++t) {
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    theta -= lr * mhat / (std::sqrt(vhat) + eps);
    expected.push_back(theta);
  }
  // Frozen: theta_1 = theta_2 + 0.1 = 0.4 within eps effects.
  EXPECT_NEAR(expected[0], 0.4, 1e-8);
  EXPECT_NEAR(expected[1], 0.3, 1e-8);

  Parameter p(Matrix::Constant(1, 1, 0.5));
  Parameter* ps[] = {&p};
  for (int t = 0; t < 2; ++t) {
    p.grad(0, 0) = g;
    adam_step(ps, AdamOptions{lr, b1, b2, eps});
    EXPECT_NEAR(p.value(0, 0), expected[static_cast<std::size_t>(t)], 1e-15);
  }
}

TEST(Adam, RejectsBadOptions) {
  Parameter p(Matrix::Zero(1, 1));
  Parameter* ps[] = {&p};
  EXPECT_THROW(adam_step(ps, AdamOptions{.lr = 0}), ContractError);
  EXPECT_THROW(adam_step(ps, AdamOptions{.beta1 = 1.0}), ContractError);
}

TEST(GradCheck, QuadraticIsNearlyExact) {
  Parameter w(random_matrix(4, 3, 11));
  std::vector<Parameter*> ps{&w};
  const double err = grad_check(
      [&](Tape& t) {
        const Var wv = t.parameter(w);
        return sum(hadamard(wv, wv));
      },
      ps, 12, 1e-5);
  EXPECT_LT(err, 1e-8);
  EXPECT_EQ(w.grad, Matrix::Zero(4, 3));
}

TEST(GradCheck, RestoresParameters) {
  const Matrix start = random_matrix(3, 3, 12);
  Parameter w(start);
  std::vector<Parameter*> ps{&w};
  grad_check([&](Tape& t) { return sum(relu(t.parameter(w))); }, ps, 20,
             1e-5);
  EXPECT_EQ(w.value, start);
}

TEST(GradCheck, DeadReluRegionAwayFromKink) {
  // Half of the pre-activations are negative, so whole units are dead.
  Parameter w(random_matrix(3, 6, 13));
  Parameter b(Matrix::Constant(1, 6, -1.0));
  const Matrix x = random_matrix(8, 3, 14);
  std::vector<Parameter*> ps{&w, &b};
  const double err = grad_check(
      [&](Tape& t) {
        const Var h = relu(rowwise_affine(t.constant(x), t.parameter(w),
                                          t.parameter(b)));
        return sum(hadamard(h, h));
      },
      ps, 50, 1e-5, 3);
  EXPECT_LT(err, 1e-4);
}

TEST(GradCheck, DetectsWrongGradient) {
  // detach() hides one factor from backward, so the analytic gradient is
  // half the true one.
  Parameter w(random_matrix(2, 2, 15));
  std::vector<Parameter*> ps{&w};
  const double err = grad_check(
      [&](Tape& t) {
        const Var wv = t.parameter(w);
        return sum(hadamard(detach(wv), wv));
      },
      ps, 8, 1e-5);
  EXPECT_GT(err, 0.3);
}

TEST(Random, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    differs |= x != c.next();
  }
  EXPECT_TRUE(differs);
}

TEST(Random, BelowStaysInRange) {
  Rng rng(1);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto k = rng.below(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_GT(c, 800);
}

TEST(Random, PermutationIsAPermutation) {
  auto p = permutation(100, 5);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], i);
}

TEST(Random, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(0, "a"), derive_seed(0, "b"));
  EXPECT_NE(derive_seed(0, 1), derive_seed(1, 1));
  EXPECT_EQ(derive_seed(9, "x"), derive_seed(9, "x"));
}

}  // namespace
}  // namespace sgada
