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

// Dense row-major matrices with a tape-based reverse-mode differentiator.
//
// A BasicTape records every operation applied to its variables in
// topological order. Calling backward() on a 1x1 variable walks the tape in
// reverse and accumulates d(loss)/d(param) into each reachable
// BasicParameter::grad. Gradients are never cleared implicitly; adam_step()
// or zero_grad() does that.

#ifndef SGADA_AUTODIFF_HPP_
#define SGADA_AUTODIFF_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <deque>
#include <vector>

namespace sgada {

template <typename Scalar>
using MatrixX =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = MatrixX<double>;

/// Lower clamp applied to every probability before it reaches a logarithm.
inline constexpr double kProbabilityFloor = 1e-12;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

template <typename Derived>
std::string shape_string(const Eigen::EigenBase<Derived>& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

/// A trainable matrix with its gradient accumulator and Adam moments.
template <typename Scalar>
struct BasicParameter {
  MatrixX<Scalar> value;
  MatrixX<Scalar> grad;
  MatrixX<Scalar> adam_m;
  MatrixX<Scalar> adam_v;
  std::int64_t step_count = 0;

  BasicParameter() = default;
  explicit BasicParameter(MatrixX<Scalar> initial)
      : value(std::move(initial)),
        grad(MatrixX<Scalar>::Zero(value.rows(), value.cols())),
        adam_m(MatrixX<Scalar>::Zero(value.rows(), value.cols())),
        adam_v(MatrixX<Scalar>::Zero(value.rows(), value.cols())) {}

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }

  void zero_grad() { grad.setZero(); }

  void reset_optimizer() {
    adam_m.setZero();
    adam_v.setZero();
    step_count = 0;
  }
};

using Parameter = BasicParameter<double>;

enum class OpKind {
  kConstant,
  kParameter,
  kMatMul,
  kAffine,
  kRelu,
  kSigmoid,
  kSoftmaxRows,
  kAdd,
  kScale,
  kHadamard,
  kSum,
  kMeanNegLog,
  kMeanNegLogComplement,
  kMeanNegLogPicked,
};

template <typename Scalar>
class BasicTape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <typename Scalar>
struct BasicVar {
  BasicTape<Scalar>* tape = nullptr;
  std::size_t index = 0;

  const MatrixX<Scalar>& value() const { return tape->value(*this); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Scalar item() const;
};

template <typename Scalar>
class BasicTape {
 public:
  using Var = BasicVar<Scalar>;
  using Mat = MatrixX<Scalar>;

  struct Node {
    OpKind kind = OpKind::kConstant;
    std::vector<std::size_t> inputs;
    Mat value;
    std::vector<int> picks;
    Scalar scalar = Scalar(0);
    BasicParameter<Scalar>* param = nullptr;
    bool requires_grad = false;
  };

  BasicTape() = default;
  BasicTape(const BasicTape&) = delete;
  BasicTape& operator=(const BasicTape&) = delete;

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t i) const { return nodes_.at(i); }
  const Mat& value(Var v) const { return nodes_.at(v.index).value; }

  Var constant(Mat m) {
    Node n;
    n.kind = OpKind::kConstant;
    n.value = std::move(m);
    return push(std::move(n));
  }

  Var parameter(BasicParameter<Scalar>& p) {
    Node n;
    n.kind = OpKind::kParameter;
    n.value = p.value;
    n.param = &p;
    n.requires_grad = true;
    return push(std::move(n));
  }

  /// A constant copy of `v`; gradients do not flow through it.
  Var detach(Var v) { return constant(value(v)); }

  Var matmul(Var a, Var b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    if (av.cols() != bv.rows()) {
      throw ShapeError("matmul: cannot multiply " + shape_string(av) + " by " +
                       shape_string(bv));
    }
    Node n;
    n.kind = OpKind::kMatMul;
    n.inputs = {a.index, b.index};
    n.value.noalias() = av * bv;
    return push(std::move(n));
  }

  Var affine(Var x, Var w, Var b) {
    const Mat& xv = value(x);
    const Mat& wv = value(w);
    const Mat& bv = value(b);
    if (xv.cols() != wv.rows() || bv.rows() != 1 || bv.cols() != wv.cols()) {
      throw ShapeError("rowwise_affine: input " + shape_string(xv) +
                       ", weight " + shape_string(wv) + ", bias " +
                       shape_string(bv));
    }
    Node n;
    n.kind = OpKind::kAffine;
    n.inputs = {x.index, w.index, b.index};
    n.value.noalias() = xv * wv;
    n.value.rowwise() += bv.row(0);
    return push(std::move(n));
  }

  Var relu(Var x) {
    Node n;
    n.kind = OpKind::kRelu;
    n.inputs = {x.index};
    n.value = value(x).cwiseMax(Scalar(0));
    return push(std::move(n));
  }

  /// Logistic function, clamped into [1e-12, 1 - 1e-12].
  Var sigmoid(Var x) {
    Node n;
    n.kind = OpKind::kSigmoid;
    n.inputs = {x.index};
    n.value = value(x).unaryExpr([](Scalar z) {
      const Scalar y = z >= Scalar(0)
                           ? Scalar(1) / (Scalar(1) + std::exp(-z))
                           : std::exp(z) / (Scalar(1) + std::exp(z));
      return std::clamp(y, Scalar(kProbabilityFloor),
                        Scalar(1) - Scalar(kProbabilityFloor));
    });
    return push(std::move(n));
  }

  Var softmax_rows(Var x) {
    const Mat& xv = value(x);
    Node n;
    n.kind = OpKind::kSoftmaxRows;
    n.inputs = {x.index};
    n.value.resize(xv.rows(), xv.cols());
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
      const Scalar top = xv.row(r).maxCoeff();
      n.value.row(r) = (xv.row(r).array() - top).exp().matrix();
      n.value.row(r) /= n.value.row(r).sum();
    }
    return push(std::move(n));
  }

  Var add(Var a, Var b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
      throw ShapeError("add: " + shape_string(av) + " vs " + shape_string(bv));
    }
    Node n;
    n.kind = OpKind::kAdd;
    n.inputs = {a.index, b.index};
    n.value = av + bv;
    return push(std::move(n));
  }

  Var scale(Var a, Scalar s) {
    Node n;
    n.kind = OpKind::kScale;
    n.inputs = {a.index};
    n.scalar = s;
    n.value = value(a) * s;
    return push(std::move(n));
  }

  Var hadamard(Var a, Var b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
      throw ShapeError("hadamard: " + shape_string(av) + " vs " +
                       shape_string(bv));
    }
    Node n;
    n.kind = OpKind::kHadamard;
    n.inputs = {a.index, b.index};
    n.value = av.cwiseProduct(bv);
    return push(std::move(n));
  }

  Var sum(Var a) {
    Node n;
    n.kind = OpKind::kSum;
    n.inputs = {a.index};
    n.value = Mat::Constant(1, 1, value(a).sum());
    return push(std::move(n));
  }

  /// -(1/N) sum log(clamp(x)) over all N entries.
  Var mean_neg_log(Var x) { return neg_log_reduce(x, OpKind::kMeanNegLog); }

  /// -(1/N) sum log(clamp(1 - x)) over all N entries.
  Var mean_neg_log_complement(Var x) {
    return neg_log_reduce(x, OpKind::kMeanNegLogComplement);
  }

  /// -(1/N) sum_i log(clamp(p[i, picks[i]])) for an N-row matrix p.
  Var mean_neg_log_picked(Var p, std::span<const int> picks) {
    const Mat& pv = value(p);
    if (pv.rows() == 0) {
      throw ContractError("mean_neg_log_picked: empty batch");
    }
    if (static_cast<Eigen::Index>(picks.size()) != pv.rows()) {
      throw ShapeError("mean_neg_log_picked: " + std::to_string(picks.size()) +
                       " labels for " + shape_string(pv) + " probabilities");
    }
    Node n;
    n.kind = OpKind::kMeanNegLogPicked;
    n.inputs = {p.index};
    n.picks.assign(picks.begin(), picks.end());
    Scalar total = 0;
    for (Eigen::Index r = 0; r < pv.rows(); ++r) {
      const int k = n.picks[r];
      if (k < 0 || k >= pv.cols()) {
        throw ContractError("mean_neg_log_picked: label " + std::to_string(k) +
                            " outside [0, " + std::to_string(pv.cols()) + ")");
      }
      total -= std::log(clamp_probability(pv(r, k)));
    }
    n.value = Mat::Constant(1, 1, total / Scalar(pv.rows()));
    return push(std::move(n));
  }

  /// Accumulates d(loss)/d(param) into every parameter reachable from loss.
  void backward(Var loss) {
    const Mat& lv = value(loss);
    if (lv.rows() != 1 || lv.cols() != 1) {
      throw ContractError("backward: loss must be 1x1, got " +
                          shape_string(lv));
    }
    std::vector<Mat> adjoint(loss.index + 1);
    adjoint[loss.index] = Mat::Ones(1, 1);
    for (std::size_t i = loss.index + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || adjoint[i].size() == 0) continue;
      propagate(n, adjoint[i], adjoint);
    }
  }

  /// Hash of every non-smooth branch taken on this tape: ReLU masks and
  /// probability clamps. Two evaluations with equal signatures lie on the
  /// same smooth piece of the loss.
  std::uint64_t branch_signature() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t bit) {
      h ^= bit;
      h *= 1099511628211ULL;
    };
    for (const Node& n : nodes_) {
      switch (n.kind) {
        case OpKind::kRelu: {
          const Mat& in = nodes_[n.inputs[0]].value;
          for (Eigen::Index k = 0; k < in.size(); ++k) mix(in.data()[k] > 0);
          break;
        }
        case OpKind::kSigmoid:
          for (Eigen::Index k = 0; k < n.value.size(); ++k) {
            mix(is_clamped(n.value.data()[k]) ? 2 : 3);
          }
          break;
        case OpKind::kMeanNegLog:
        case OpKind::kMeanNegLogComplement: {
          const Mat& in = nodes_[n.inputs[0]].value;
          for (Eigen::Index k = 0; k < in.size(); ++k) {
            const Scalar p = n.kind == OpKind::kMeanNegLog
                                 ? in.data()[k]
                                 : Scalar(1) - in.data()[k];
            mix(p < Scalar(kProbabilityFloor) ? 4 : 5);
          }
          break;
        }
        case OpKind::kMeanNegLogPicked: {
          const Mat& in = nodes_[n.inputs[0]].value;
          for (std::size_t r = 0; r < n.picks.size(); ++r) {
            mix(in(static_cast<Eigen::Index>(r), n.picks[r]) <
                        Scalar(kProbabilityFloor)
                    ? 6
                    : 7);
          }
          break;
        }
        default:
          break;
      }
    }
    return h;
  }

 private:
  static Scalar clamp_probability(Scalar p) {
    return std::clamp(p, Scalar(kProbabilityFloor),
                      Scalar(1) - Scalar(kProbabilityFloor));
  }

  static bool is_clamped(Scalar y) {
    return y <= Scalar(kProbabilityFloor) ||
           y >= Scalar(1) - Scalar(kProbabilityFloor);
  }

  Var push(Node n) {
    for (std::size_t in : n.inputs) {
      n.requires_grad = n.requires_grad || nodes_[in].requires_grad;
    }
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
  }

  Var neg_log_reduce(Var x, OpKind kind) {
    const Mat& xv = value(x);
    if (xv.size() == 0) throw ContractError("log loss: empty batch");
    Node n;
    n.kind = kind;
    n.inputs = {x.index};
    Scalar total = 0;
    for (Eigen::Index k = 0; k < xv.size(); ++k) {
      const Scalar p =
          kind == OpKind::kMeanNegLog ? xv.data()[k] : Scalar(1) - xv.data()[k];
      total -= std::log(clamp_probability(p));
    }
    n.value = Mat::Constant(1, 1, total / Scalar(xv.size()));
    return push(std::move(n));
  }

  void accumulate(std::vector<Mat>& adjoint, std::size_t target,
                  const Mat& delta) {
    if (!nodes_[target].requires_grad) return;
    if (adjoint[target].size() == 0) {
      adjoint[target] = delta;
    } else {
      adjoint[target] += delta;
    }
  }

  void propagate(Node& n, const Mat& g, std::vector<Mat>& adjoint) {
    switch (n.kind) {
      case OpKind::kConstant:
        break;
      case OpKind::kParameter:
        n.param->grad += g;
        break;
      case OpKind::kMatMul: {
        const Mat& a = nodes_[n.inputs[0]].value;
        const Mat& b = nodes_[n.inputs[1]].value;
        if (nodes_[n.inputs[0]].requires_grad) {
          accumulate(adjoint, n.inputs[0], g * b.transpose());
        }
        if (nodes_[n.inputs[1]].requires_grad) {
          accumulate(adjoint, n.inputs[1], a.transpose() * g);
        }
        break;
      }
      case OpKind::kAffine: {
        const Mat& x = nodes_[n.inputs[0]].value;
        const Mat& w = nodes_[n.inputs[1]].value;
        if (nodes_[n.inputs[0]].requires_grad) {
          accumulate(adjoint, n.inputs[0], g * w.transpose());
        }
        if (nodes_[n.inputs[1]].requires_grad) {
          accumulate(adjoint, n.inputs[1], x.transpose() * g);
        }
        if (nodes_[n.inputs[2]].requires_grad) {
          accumulate(adjoint, n.inputs[2], g.colwise().sum());
        }
        break;
      }
      case OpKind::kRelu: {
        const Mat& x = nodes_[n.inputs[0]].value;
        accumulate(adjoint, n.inputs[0],
                   (x.array() > Scalar(0)).select(g.array(), Scalar(0)).matrix());
        break;
      }
      case OpKind::kSigmoid: {
        const Mat& y = n.value;
        Mat d = g.cwiseProduct(
            y.unaryExpr([](Scalar v) {
              return is_clamped(v) ? Scalar(0) : v * (Scalar(1) - v);
            }));
        accumulate(adjoint, n.inputs[0], d);
        break;
      }
      case OpKind::kSoftmaxRows: {
        const Mat& y = n.value;
        Mat d(y.rows(), y.cols());
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
          const Scalar dot = g.row(r).dot(y.row(r));
          d.row(r) = (y.row(r).array() * (g.row(r).array() - dot)).matrix();
        }
        accumulate(adjoint, n.inputs[0], d);
        break;
      }
      case OpKind::kAdd:
        accumulate(adjoint, n.inputs[0], g);
        accumulate(adjoint, n.inputs[1], g);
        break;
      case OpKind::kScale:
        accumulate(adjoint, n.inputs[0], g * n.scalar);
        break;
      case OpKind::kHadamard: {
        const Mat& a = nodes_[n.inputs[0]].value;
        const Mat& b = nodes_[n.inputs[1]].value;
        if (nodes_[n.inputs[0]].requires_grad) {
          accumulate(adjoint, n.inputs[0], g.cwiseProduct(b));
        }
        if (nodes_[n.inputs[1]].requires_grad) {
          accumulate(adjoint, n.inputs[1], g.cwiseProduct(a));
        }
        break;
      }
      case OpKind::kSum: {
        const Mat& a = nodes_[n.inputs[0]].value;
        accumulate(adjoint, n.inputs[0],
                   Mat::Constant(a.rows(), a.cols(), g(0, 0)));
        break;
      }
      case OpKind::kMeanNegLog:
      case OpKind::kMeanNegLogComplement: {
        const Mat& x = nodes_[n.inputs[0]].value;
        const Scalar coeff = g(0, 0) / Scalar(x.size());
        const bool complement = n.kind == OpKind::kMeanNegLogComplement;
        Mat d = x.unaryExpr([&](Scalar v) {
          const Scalar p = complement ? Scalar(1) - v : v;
          if (p < Scalar(kProbabilityFloor)) return Scalar(0);
          return complement ? coeff / p : -coeff / p;
        });
        accumulate(adjoint, n.inputs[0], d);
        break;
      }
      case OpKind::kMeanNegLogPicked: {
        const Mat& p = nodes_[n.inputs[0]].value;
        const Scalar coeff = g(0, 0) / Scalar(p.rows());
        Mat d = Mat::Zero(p.rows(), p.cols());
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
          const Scalar v = p(r, n.picks[r]);
          if (v >= Scalar(kProbabilityFloor)) d(r, n.picks[r]) = -coeff / v;
        }
        accumulate(adjoint, n.inputs[0], d);
        break;
      }
    }
  }

  std::deque<Node> nodes_;  // stable references across push_back
};

using Tape = BasicTape<double>;
using Var = BasicVar<double>;

template <typename Scalar>
Scalar BasicVar<Scalar>::item() const {
  const auto& m = value();
  if (m.rows() != 1 || m.cols() != 1) {
    throw ContractError("item: expected 1x1, got " + shape_string(m));
  }
  return m(0, 0);
}

// Expression-style free functions over tape variables.

template <typename Scalar>
BasicVar<Scalar> matmul(BasicVar<Scalar> a, BasicVar<Scalar> b) {
  return a.tape->matmul(a, b);
}

template <typename Scalar>
BasicVar<Scalar> rowwise_affine(BasicVar<Scalar> x, BasicVar<Scalar> w,
                                BasicVar<Scalar> b) {
  return x.tape->affine(x, w, b);
}

template <typename Scalar>
BasicVar<Scalar> relu(BasicVar<Scalar> x) {
  return x.tape->relu(x);
}

template <typename Scalar>
BasicVar<Scalar> sigmoid(BasicVar<Scalar> x) {
  return x.tape->sigmoid(x);
}

template <typename Scalar>
BasicVar<Scalar> softmax_rows(BasicVar<Scalar> x) {
  return x.tape->softmax_rows(x);
}

template <typename Scalar>
BasicVar<Scalar> sum(BasicVar<Scalar> x) {
  return x.tape->sum(x);
}

template <typename Scalar>
BasicVar<Scalar> hadamard(BasicVar<Scalar> a, BasicVar<Scalar> b) {
  return a.tape->hadamard(a, b);
}

template <typename Scalar>
BasicVar<Scalar> detach(BasicVar<Scalar> x) {
  return x.tape->detach(x);
}

template <typename Scalar>
BasicVar<Scalar> operator+(BasicVar<Scalar> a, BasicVar<Scalar> b) {
  return a.tape->add(a, b);
}

template <typename Scalar>
BasicVar<Scalar> operator*(Scalar s, BasicVar<Scalar> a) {
  return a.tape->scale(a, s);
}

template <typename Scalar>
BasicVar<Scalar> operator-(BasicVar<Scalar> a) {
  return a.tape->scale(a, Scalar(-1));
}

template <typename Scalar>
void backward(BasicVar<Scalar> loss) {
  loss.tape->backward(loss);
}

inline void zero_grad(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

}  // namespace sgada

#endif  // SGADA_AUTODIFF_HPP_
