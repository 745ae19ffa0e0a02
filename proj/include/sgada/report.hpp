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

// Report rendering for a finished (or partial) run directory: the accuracy
// table across phases, the pseudo-label selection tables and plot-ready CSVs.

#ifndef SGADA_REPORT_HPP_
#define SGADA_REPORT_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgada/pipeline.hpp"

namespace sgada {

/// Raised when required run artifacts are absent; lists every missing file.
class MissingArtifactsError : public std::runtime_error {
 public:
  MissingArtifactsError(std::filesystem::path run_dir,
                        std::vector<std::string> missing);
  const std::vector<std::string>& missing() const { return missing_; }

 private:
  std::vector<std::string> missing_;
};

struct AccuracyRow {
  std::string name;
  std::vector<std::optional<double>> per_class;
  std::optional<double> macro;
};

/// Per-class and macro accuracies, one row per phase, two decimals.
std::string accuracy_table(std::span<const std::string> class_names,
                           std::span<const AccuracyRow> rows);

/// Samples, selected, correctly selected and precision per scenario.
std::string scenarios_table(std::span<const ScenarioStats> scenarios,
                            std::span<const std::string> class_names);

struct RenderedReport {
  std::string text;
  /// phase,epoch,metric,value
  std::string loss_curves_csv;
  /// phase,<feature columns>,label,predicted
  std::string embeddings_csv;
};

/// Reads the run directory. Phase rows always come in the order
/// source-only, warm-up, SGADA, skipping phases not evaluated yet.
RenderedReport render_report(const std::filesystem::path& run_dir);

/// render_report() written to report.txt, loss_curves.csv, embeddings.csv.
RenderedReport write_report(const std::filesystem::path& run_dir);

}  // namespace sgada

#endif  // SGADA_REPORT_HPP_
