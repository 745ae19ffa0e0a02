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

// Dual-confidence pseudo-label selection and selection audits.

#ifndef SGADA_PSEUDO_HPP_
#define SGADA_PSEUDO_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sgada {

struct TargetPrediction {
  int sample_index = 0;
  int predicted_class = 0;
  double cls_confidence = 0;
  double disc_source_prob = 0.5;
};

enum class SelectionMode { kClsOnly, kDiscOnly, kClsAndDisc };

std::string_view to_string(SelectionMode mode);
/// Accepts "cls_only", "disc_only", "cls_and_disc".
SelectionMode parse_selection_mode(std::string_view text);

struct SelectionRule {
  double tau_cls = 0.79;
  double tau_disc = 0.87;
  SelectionMode mode = SelectionMode::kClsAndDisc;
  /// Ablation: the target-confidence branch skips the classifier threshold.
  bool waive_cls_in_branch2 = false;
};

/// Discriminator clause: D calls the sample source (d >= 0.5), or calls it
/// target with confidence 1 - d strictly below tau_disc.
bool discriminator_accepts(double disc_source_prob, double tau_disc);
bool accepts(const TargetPrediction& p, const SelectionRule& rule);

struct PseudoLabel {
  int sample_index = 0;
  int label = 0;
  double cls_confidence = 0;
  double disc_source_prob = 0;
};

struct PseudoLabelSet {
  std::vector<PseudoLabel> entries;  // ascending sample_index
  double tau_cls = 0;
  double tau_disc = 0;
  int generation_epoch = 0;

  std::size_t n_hat_t() const { return entries.size(); }
};

PseudoLabelSet select(std::span<const TargetPrediction> preds,
                      const SelectionRule& rule);

struct ClassSelection {
  int n_samples = 0;
  int n_selected = 0;
  int n_correct = 0;

  /// n_correct / n_selected; undefined when nothing was selected.
  std::optional<double> precision() const;
};

struct SelectionStats {
  std::vector<ClassSelection> per_class;

  int total_selected() const;
  int total_correct() const;
  std::optional<double> overall_precision() const;
};

/// Per-class counts keyed by predicted class; n_samples counts true labels.
SelectionStats audit(const PseudoLabelSet& selected,
                     std::span<const int> true_labels, int n_classes);

struct SweepRow {
  double tau_cls = 0;
  double tau_disc = 0;
  int n_selected = 0;
  std::optional<double> precision;
};

/// Every (tau_cls, tau_disc) pair on {0, step, 2 step, ..., 1}.
std::vector<SweepRow> threshold_sweep(std::span<const TargetPrediction> preds,
                                      std::span<const int> true_labels,
                                      double grid_step,
                                      SelectionMode mode = SelectionMode::kClsAndDisc);

void save_pseudo_labels(const PseudoLabelSet& set,
                        const std::filesystem::path& path);
PseudoLabelSet load_pseudo_labels(const std::filesystem::path& path);

/// Precision columns are percentages with two decimals, blank if undefined.
std::string selection_stats_csv(const SelectionStats& stats,
                                std::span<const std::string> class_names);
/// Fixed-width table, one column per class.
std::string selection_stats_table(const SelectionStats& stats,
                                  std::span<const std::string> class_names,
                                  std::string_view title);

}  // namespace sgada

#endif  // SGADA_PSEUDO_HPP_
