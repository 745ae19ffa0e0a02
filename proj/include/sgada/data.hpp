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

// Labeled feature datasets, synthetic domain-shift generators, CSV
// ingestion, stratified splitting and seeded mini-batching.

#ifndef SGADA_DATA_HPP_
#define SGADA_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sgada/autodiff.hpp"

namespace sgada {

enum class Domain { kSource, kTarget };

std::string_view to_string(Domain d);

/// Counts reads of target-domain labels made while a training scope is
/// open. Training code must never look at target labels; tests assert the
/// count stays zero.
class TargetLabelGuard {
 public:
  static std::int64_t reads();
  static void reset();
  static bool training();

  /// Marks the enclosing region as training. Nests.
  class Scope {
   public:
    Scope();
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;
  };

 private:
  friend class LabeledDataset;
  static void record_read(std::int64_t n);
};

class LabeledDataset {
 public:
  static constexpr int kUnlabeled = -1;

  LabeledDataset() = default;
  /// Throws ContractError if labels and rows disagree or a label is outside
  /// {-1} U [0, class_names.size()).
  LabeledDataset(Matrix features, std::vector<int> labels, Domain domain,
                 std::vector<std::string> class_names);

  const Matrix& features() const { return features_; }
  std::size_t size() const { return static_cast<std::size_t>(features_.rows()); }
  int dim() const { return static_cast<int>(features_.cols()); }
  Domain domain() const { return domain_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  int n_classes() const { return static_cast<int>(class_names_.size()); }

  /// Label of row i, or -1. Target reads are counted by TargetLabelGuard.
  int label(std::size_t i) const;
  /// All labels. Target reads are counted by TargetLabelGuard.
  std::span<const int> labels() const;

  /// Rows in the given order.
  LabeledDataset subset(std::span<const std::size_t> rows) const;

  /// Same rows and labels, tagged with another domain.
  LabeledDataset with_domain(Domain d) const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&);

 private:
  void note_read(std::size_t n) const;

  Matrix features_;
  std::vector<int> labels_;
  Domain domain_ = Domain::kSource;
  std::vector<std::string> class_names_;
};

enum class Generator { kTwoMoons, kGaussianMixture };

std::string_view to_string(Generator g);
Generator parse_generator(std::string_view text);

struct ShiftSpec {
  Generator generator = Generator::kGaussianMixture;
  std::vector<int> n_per_class;
  double noise_sigma = 1.0;
  /// Target-only rotation about the origin in the first two coordinates.
  double rotation_deg = 0;
  /// Target-only translation; empty means zero. Length must equal dim.
  std::vector<double> mean_shift;
  std::uint64_t seed = 0;
  int dim = 2;
  /// Radius of the circle the Gaussian component means sit on.
  double class_separation = 3.0;
  std::vector<std::string> class_names;

  void validate() const;
};

/// Noiseless source point for class `label` at arc parameter t in [0, pi].
/// Class 0 is the upper arc, class 1 the lower arc, class 2 the upper arc
/// translated by (2, 0).
Eigen::Vector2d two_moons_point(int label, double t);

/// Applies the target-domain rotation and mean shift to a noiseless point.
Eigen::VectorXd apply_shift(const Eigen::VectorXd& point,
                            const ShiftSpec& spec);

/// Deterministic in spec.seed. Rows are grouped by class in class order.
/// With zero rotation and shift the target draw equals the source draw.
LabeledDataset generate(const ShiftSpec& spec, Domain domain);

/// "f0,...,f{d-1},label,domain" with 17-significant-digit values.
void save_csv(const LabeledDataset& ds, const std::filesystem::path& path);
/// Class names default to class0..class{K-1} where K covers every label
/// seen, unless `class_names` is given.
LabeledDataset load_csv(const std::filesystem::path& path,
                        std::vector<std::string> class_names = {});

struct Split {
  LabeledDataset train;
  LabeledDataset val;
  LabeledDataset test;
};

struct SplitFractions {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

/// Stratified by label (unlabeled rows form their own stratum).
Split split(const LabeledDataset& ds, const SplitFractions& fractions,
            std::uint64_t seed);

using Batch = std::vector<std::size_t>;

/// Shuffled row batches for one epoch; the last batch may be short.
std::vector<Batch> batches(std::size_t n, int batch_size, std::uint64_t seed,
                           std::int64_t epoch);

/// Endless batch stream: cycles through fresh epoch-style permutations.
class BatchStream {
 public:
  BatchStream(std::size_t n, int batch_size, std::uint64_t seed);

  const Batch& next();

 private:
  std::size_t n_;
  int batch_size_;
  std::uint64_t seed_;
  std::int64_t cycle_ = -1;
  std::size_t pos_ = 0;
  std::vector<Batch> current_;
};

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);

}  // namespace sgada

#endif  // SGADA_DATA_HPP_
