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

#include "sgada/data.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <numbers>

#include "sgada/csv.hpp"
#include "sgada/random.hpp"

namespace sgada {
namespace {

thread_local std::int64_t g_target_label_reads = 0;
thread_local int g_training_depth = 0;

}  // namespace

std::string_view to_string(Domain d) {
  return d == Domain::kSource ? "source" : "target";
}

std::int64_t TargetLabelGuard::reads() { return g_target_label_reads; }
void TargetLabelGuard::reset() { g_target_label_reads = 0; }
bool TargetLabelGuard::training() { return g_training_depth > 0; }
void TargetLabelGuard::record_read(std::int64_t n) {
  if (g_training_depth > 0) g_target_label_reads += n;
}
TargetLabelGuard::Scope::Scope() { ++g_training_depth; }
TargetLabelGuard::Scope::~Scope() { --g_training_depth; }

LabeledDataset::LabeledDataset(Matrix features, std::vector<int> labels,
                               Domain domain,
                               std::vector<std::string> class_names)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      domain_(domain),
      class_names_(std::move(class_names)) {
  if (labels_.size() != static_cast<std::size_t>(features_.rows())) {
    throw ContractError(fmt::format("dataset has {} rows but {} labels",
                                    features_.rows(), labels_.size()));
  }
  const int k = n_classes();
  for (int y : labels_) {
    if (y != kUnlabeled && (y < 0 || y >= k)) {
      throw ContractError(
          fmt::format("label {} outside {{-1}} U [0, {})", y, k));
    }
  }
}

void LabeledDataset::note_read(std::size_t n) const {
  if (domain_ == Domain::kTarget) {
    TargetLabelGuard::record_read(static_cast<std::int64_t>(n));
  }
}

int LabeledDataset::label(std::size_t i) const {
  note_read(1);
  return labels_.at(i);
}

std::span<const int> LabeledDataset::labels() const {
  note_read(labels_.size());
  return labels_;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.features_ = gather_rows(features_, rows);
  out.labels_.reserve(rows.size());
  for (std::size_t r : rows) out.labels_.push_back(labels_.at(r));
  out.domain_ = domain_;
  out.class_names_ = class_names_;
  return out;
}

LabeledDataset LabeledDataset::with_domain(Domain d) const {
  LabeledDataset out = *this;
  out.domain_ = d;
  return out;
}

bool operator==(const LabeledDataset& a, const LabeledDataset& b) {
  return a.domain_ == b.domain_ && a.labels_ == b.labels_ &&
         a.class_names_ == b.class_names_ &&
         a.features_.rows() == b.features_.rows() &&
         a.features_.cols() == b.features_.cols() &&
         a.features_ == b.features_;
}

std::string_view to_string(Generator g) {
  return g == Generator::kTwoMoons ? "two_moons" : "gaussian_mixture";
}

Generator parse_generator(std::string_view text) {
  if (text == "two_moons") return Generator::kTwoMoons;
  if (text == "gaussian_mixture") return Generator::kGaussianMixture;
  throw std::invalid_argument(fmt::format(
      "unknown generator '{}' (two_moons, gaussian_mixture)", text));
}

void ShiftSpec::validate() const {
  int populated = 0;
  for (int n : n_per_class) {
    if (n < 0) throw ContractError("n_per_class entries must be >= 0");
    if (n > 0) ++populated;
  }
  if (n_per_class.size() < 2 || populated < 2) {
    throw ContractError("need at least two classes with at least one sample");
  }
  if (generator == Generator::kTwoMoons &&
      (n_per_class.size() < 2 || n_per_class.size() > 3)) {
    throw ContractError(fmt::format(
        "two_moons supports 2 or 3 classes, got {}", n_per_class.size()));
  }
  if (dim < 2) throw ContractError("generated data needs dim >= 2");
  if (generator == Generator::kTwoMoons && dim != 2) {
    throw ContractError("two_moons is two-dimensional");
  }
  if (!mean_shift.empty() && static_cast<int>(mean_shift.size()) != dim) {
    throw ContractError(fmt::format("mean_shift has {} entries for dim {}",
                                    mean_shift.size(), dim));
  }
  if (noise_sigma < 0) throw ContractError("noise_sigma must be >= 0");
  if (!class_names.empty() && class_names.size() != n_per_class.size()) {
    throw ContractError("class_names must match n_per_class");
  }
}

Eigen::Vector2d two_moons_point(int label, double t) {
  switch (label) {
    case 0:
      return {std::cos(t), std::sin(t)};
    case 1:
      return {1.0 - std::cos(t), 0.5 - std::sin(t)};
    case 2:
      return {2.0 + std::cos(t), std::sin(t)};
    default:
      throw ContractError(fmt::format("two_moons has no class {}", label));
  }
}

Eigen::VectorXd apply_shift(const Eigen::VectorXd& point,
                            const ShiftSpec& spec) {
  Eigen::VectorXd out = point;
  if (spec.rotation_deg != 0) {
    const double a = spec.rotation_deg * std::numbers::pi / 180.0;
    const double c = std::cos(a);
    const double s = std::sin(a);
    out(0) = c * point(0) - s * point(1);
    out(1) = s * point(0) + c * point(1);
  }
  for (std::size_t k = 0; k < spec.mean_shift.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) += spec.mean_shift[k];
  }
  return out;
}

LabeledDataset generate(const ShiftSpec& spec, Domain domain) {
  spec.validate();
  const int k = static_cast<int>(spec.n_per_class.size());
  std::vector<std::string> names = spec.class_names;
  if (names.empty()) {
    for (int c = 0; c < k; ++c) names.push_back(fmt::format("class{}", c));
  }
  int total = 0;
  for (int n : spec.n_per_class) total += n;

  Matrix features(total, spec.dim);
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(total));
  Rng rng(spec.seed);
  Eigen::Index row = 0;
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd center = Eigen::VectorXd::Zero(spec.dim);
    if (spec.generator == Generator::kGaussianMixture) {
      const double angle = 2.0 * std::numbers::pi * c / k;
      center(0) = spec.class_separation * std::cos(angle);
      center(1) = spec.class_separation * std::sin(angle);
    }
    for (int i = 0; i < spec.n_per_class[c]; ++i, ++row) {
      Eigen::VectorXd point = center;
      if (spec.generator == Generator::kTwoMoons) {
        point = two_moons_point(c, rng.uniform(0.0, std::numbers::pi));
      }
      if (domain == Domain::kTarget) point = apply_shift(point, spec);
      for (int d = 0; d < spec.dim; ++d) {
        point(d) += spec.noise_sigma * rng.normal();
      }
      features.row(row) = point.transpose();
      labels.push_back(c);
    }
  }
  return LabeledDataset(std::move(features), std::move(labels), domain,
                        std::move(names));
}

void save_csv(const LabeledDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (int d = 0; d < ds.dim(); ++d) out << 'f' << d << ',';
  out << "label,domain\n";
  const Matrix& x = ds.features();
  const std::vector<int> labels(ds.labels().begin(), ds.labels().end());
  const std::string_view domain = to_string(ds.domain());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) out << format_real(x(r, c)) << ',';
    out << labels[static_cast<std::size_t>(r)] << ',' << domain << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

LabeledDataset load_csv(const std::filesystem::path& path,
                        std::vector<std::string> class_names) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string source = path.string();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  const auto header = split_fields(trim(line));
  if (header.size() < 2 || header[header.size() - 2] != "label" ||
      header.back() != "domain") {
    throw ParseError(source, 1, "header must be f0,...,f{d-1},label,domain");
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t d = 0; d < dim; ++d) {
    if (header[d] != fmt::format("f{}", d)) {
      throw ParseError(source, 1,
                       fmt::format("expected column 'f{}', found '{}'", d,
                                   header[d]));
    }
  }

  std::vector<double> values;
  std::vector<int> labels;
  std::optional<Domain> domain;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_fields(trim(line));
    if (f.size() != dim + 2) {
      throw ParseError(source, line_no,
                       fmt::format("expected {} fields, got {}", dim + 2,
                                   f.size()));
    }
    for (std::size_t d = 0; d < dim; ++d) {
      values.push_back(parse_real(f[d], source, line_no));
    }
    const long y = parse_integer(f[dim], source, line_no);
    if (y < LabeledDataset::kUnlabeled) {
      throw ParseError(source, line_no, fmt::format("invalid label {}", y));
    }
    labels.push_back(static_cast<int>(y));
    Domain row_domain;
    if (f[dim + 1] == "source") {
      row_domain = Domain::kSource;
    } else if (f[dim + 1] == "target") {
      row_domain = Domain::kTarget;
    } else {
      throw ParseError(source, line_no,
                       fmt::format("domain must be source or target, got '{}'",
                                   f[dim + 1]));
    }
    if (domain && *domain != row_domain) {
      throw ParseError(source, line_no, "rows mix source and target domains");
    }
    domain = row_domain;
  }

  if (class_names.empty()) {
    int k = 0;
    for (int y : labels) k = std::max(k, y + 1);
    for (int c = 0; c < k; ++c) class_names.push_back(fmt::format("class{}", c));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= static_cast<int>(class_names.size())) {
      throw ParseError(source, static_cast<long>(i) + 2,
                       fmt::format("label {} but only {} classes", labels[i],
                                   class_names.size()));
    }
  }
  const auto n = static_cast<Eigen::Index>(labels.size());
  Matrix features(n, static_cast<Eigen::Index>(dim));
  std::copy(values.begin(), values.end(), features.data());
  return LabeledDataset(std::move(features), std::move(labels),
                        domain.value_or(Domain::kSource),
                        std::move(class_names));
}

Split split(const LabeledDataset& ds, const SplitFractions& fractions,
            std::uint64_t seed) {
  const double sum = fractions.train + fractions.val + fractions.test;
  if (!(fractions.train > 0) || !(fractions.val > 0) || !(fractions.test > 0) ||
      std::abs(sum - 1.0) > 1e-9) {
    throw ContractError(
        "split fractions must all be positive and sum to 1");
  }
  if (TargetLabelGuard::training()) {
    throw ContractError("split must not run inside a training scope");
  }
  const auto labels = ds.labels();
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < labels.size(); ++i) strata[labels[i]].push_back(i);

  std::vector<std::size_t> train, val, test;
  for (auto& [label, rows] : strata) {
    const std::size_t n = rows.size();
    if (n < 3) {
      throw ContractError(fmt::format(
          "class {} has {} samples, fewer than the 3 partitions", label, n));
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(label + 1)));
    rng.shuffle(std::span<std::size_t>(rows));
    auto n_train = static_cast<std::size_t>(std::llround(fractions.train * n));
    auto n_val = static_cast<std::size_t>(std::llround(fractions.val * n));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 2);
    n_val = std::clamp<std::size_t>(n_val, 1, n - n_train - 1);
    train.insert(train.end(), rows.begin(), rows.begin() + n_train);
    val.insert(val.end(), rows.begin() + n_train,
               rows.begin() + n_train + n_val);
    test.insert(test.end(), rows.begin() + n_train + n_val, rows.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  std::sort(test.begin(), test.end());
  return Split{ds.subset(train), ds.subset(val), ds.subset(test)};
}

std::vector<Batch> batches(std::size_t n, int batch_size, std::uint64_t seed,
                           std::int64_t epoch) {
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
  const auto order =
      permutation(n, derive_seed(seed, static_cast<std::uint64_t>(epoch)));
  std::vector<Batch> out;
  for (std::size_t start = 0; start < n;
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(n, start + static_cast<std::size_t>(batch_size));
    out.emplace_back(order.begin() + start, order.begin() + end);
  }
  return out;
}

BatchStream::BatchStream(std::size_t n, int batch_size, std::uint64_t seed)
    : n_(n), batch_size_(batch_size), seed_(seed) {
  if (n == 0) throw ContractError("BatchStream over an empty set");
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
}

const Batch& BatchStream::next() {
  if (pos_ >= current_.size()) {
    current_ = batches(n_, batch_size_, seed_, ++cycle_);
    pos_ = 0;
  }
  return current_[pos_++];
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
        m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace sgada
