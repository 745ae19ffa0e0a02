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

// Classification metrics: per-class accuracy, macro average, confusion.
// Accuracies are percentages.

#ifndef SGADA_METRICS_HPP_
#define SGADA_METRICS_HPP_

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sgada {

using ConfusionMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;

struct MetricsReport {
  std::vector<std::string> class_names;
  /// Undefined for classes absent from the evaluated set.
  std::vector<std::optional<double>> per_class;
  std::optional<double> macro;
  double overall = 0;
  long n_samples = 0;
  /// Rows are true classes, columns predicted classes.
  ConfusionMatrix confusion;

  std::vector<int> absent_classes() const;
};

/// Unweighted mean over the defined entries; undefined if none are.
std::optional<double> macro_average(
    std::span<const std::optional<double>> per_class);

MetricsReport metrics_from_confusion(const ConfusionMatrix& confusion,
                                     std::vector<std::string> class_names);
MetricsReport metrics_from_predictions(std::span<const int> truth,
                                       std::span<const int> predicted,
                                       std::vector<std::string> class_names);

/// `key = value` lines, two-decimal accuracies.
std::string metrics_text(const MetricsReport& m);
/// class,n_samples,n_correct,accuracy rows plus macro and overall rows;
/// accuracies at full precision.
std::string metrics_csv(const MetricsReport& m);
MetricsReport read_metrics_csv(const std::filesystem::path& path);

}  // namespace sgada

#endif  // SGADA_METRICS_HPP_
