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

#include "sgada/pseudo.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sgada/autodiff.hpp"
#include "sgada/csv.hpp"

namespace sgada {

std::string_view to_string(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::kClsOnly:
      return "cls_only";
    case SelectionMode::kDiscOnly:
      return "disc_only";
    case SelectionMode::kClsAndDisc:
      return "cls_and_disc";
  }
  return "cls_and_disc";
}

SelectionMode parse_selection_mode(std::string_view text) {
  if (text == "cls_only") return SelectionMode::kClsOnly;
  if (text == "disc_only") return SelectionMode::kDiscOnly;
  if (text == "cls_and_disc") return SelectionMode::kClsAndDisc;
  throw std::invalid_argument(
      fmt::format("unknown selection mode '{}' (cls_only, disc_only, "
                  "cls_and_disc)",
                  text));
}

bool discriminator_accepts(double disc_source_prob, double tau_disc) {
  return disc_source_prob >= 0.5 || (1.0 - disc_source_prob) < tau_disc;
}

bool accepts(const TargetPrediction& p, const SelectionRule& rule) {
  const bool cls = p.cls_confidence >= rule.tau_cls;
  switch (rule.mode) {
    case SelectionMode::kClsOnly:
      return cls;
    case SelectionMode::kDiscOnly:
      return discriminator_accepts(p.disc_source_prob, rule.tau_disc);
    case SelectionMode::kClsAndDisc:
      if (rule.waive_cls_in_branch2 && p.disc_source_prob < 0.5) {
        return (1.0 - p.disc_source_prob) < rule.tau_disc;
      }
      return cls && discriminator_accepts(p.disc_source_prob, rule.tau_disc);
  }
  return false;
}

PseudoLabelSet select(std::span<const TargetPrediction> preds,
                      const SelectionRule& rule) {
  if (rule.tau_cls < 0 || rule.tau_cls > 1 || rule.tau_disc < 0 ||
      rule.tau_disc > 1) {
    throw ContractError("select: thresholds must lie in [0, 1]");
  }
  PseudoLabelSet out;
  out.tau_cls = rule.tau_cls;
  out.tau_disc = rule.tau_disc;
  for (const TargetPrediction& p : preds) {
    if (!accepts(p, rule)) continue;
    out.entries.push_back(PseudoLabel{p.sample_index, p.predicted_class,
                                      p.cls_confidence, p.disc_source_prob});
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const PseudoLabel& a, const PseudoLabel& b) {
              return a.sample_index < b.sample_index;
            });
  for (std::size_t i = 1; i < out.entries.size(); ++i) {
    if (out.entries[i].sample_index == out.entries[i - 1].sample_index) {
      throw ContractError(fmt::format("select: duplicate sample index {}",
                                      out.entries[i].sample_index));
    }
  }
  return out;
}

std::optional<double> ClassSelection::precision() const {
  if (n_selected == 0) return std::nullopt;
  return static_cast<double>(n_correct) / n_selected;
}

int SelectionStats::total_selected() const {
  int n = 0;
  for (const auto& c : per_class) n += c.n_selected;
  return n;
}

int SelectionStats::total_correct() const {
  int n = 0;
  for (const auto& c : per_class) n += c.n_correct;
  return n;
}

std::optional<double> SelectionStats::overall_precision() const {
  const int selected = total_selected();
  if (selected == 0) return std::nullopt;
  return static_cast<double>(total_correct()) / selected;
}

SelectionStats audit(const PseudoLabelSet& selected,
                     std::span<const int> true_labels, int n_classes) {
  SelectionStats stats;
  stats.per_class.resize(static_cast<std::size_t>(n_classes));
  for (int y : true_labels) {
    if (y >= 0 && y < n_classes) stats.per_class[y].n_samples += 1;
  }
  for (const PseudoLabel& e : selected.entries) {
    if (e.sample_index < 0 ||
        static_cast<std::size_t>(e.sample_index) >= true_labels.size()) {
      throw ContractError(fmt::format(
          "audit: sample index {} outside target set of {}", e.sample_index,
          true_labels.size()));
    }
    if (e.label < 0 || e.label >= n_classes) {
      throw ContractError(fmt::format("audit: pseudo-label {} outside [0, {})",
                                      e.label, n_classes));
    }
    ClassSelection& c = stats.per_class[e.label];
    c.n_selected += 1;
    if (true_labels[e.sample_index] == e.label) c.n_correct += 1;
  }
  return stats;
}

std::vector<SweepRow> threshold_sweep(std::span<const TargetPrediction> preds,
                                      std::span<const int> true_labels,
                                      double grid_step, SelectionMode mode) {
  if (!(grid_step > 0) || grid_step > 0.5) {
    throw ContractError("threshold_sweep: grid_step must be in (0, 0.5]");
  }
  const int steps = static_cast<int>(std::floor(1.0 / grid_step + 1e-9));
  std::vector<double> grid;
  for (int k = 0; k <= steps; ++k) grid.push_back(std::min(1.0, k * grid_step));
  if (grid.back() < 1.0) grid.push_back(1.0);

  std::vector<SweepRow> rows;
  rows.reserve(grid.size() * grid.size());
  for (double tc : grid) {
    for (double td : grid) {
      const SelectionRule rule{tc, td, mode, false};
      int n = 0;
      int correct = 0;
      for (const TargetPrediction& p : preds) {
        if (!accepts(p, rule)) continue;
        ++n;
        const auto i = static_cast<std::size_t>(p.sample_index);
        if (i < true_labels.size() && true_labels[i] == p.predicted_class) {
          ++correct;
        }
      }
      SweepRow row{tc, td, n, std::nullopt};
      if (n > 0) row.precision = static_cast<double>(correct) / n;
      rows.push_back(row);
    }
  }
  return rows;
}

void save_pseudo_labels(const PseudoLabelSet& set,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "sample_index,pseudo_label,cls_confidence,disc_source_prob\n";
  for (const PseudoLabel& e : set.entries) {
    out << e.sample_index << ',' << e.label << ','
        << format_real(e.cls_confidence) << ','
        << format_real(e.disc_source_prob) << '\n';
  }
}

PseudoLabelSet load_pseudo_labels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string source = path.string();
  std::string line;
  long line_no = 1;
  if (!std::getline(in, line) ||
      trim(line) != "sample_index,pseudo_label,cls_confidence,disc_source_prob") {
    throw ParseError(source, 1, "expected pseudo-label header");
  }
  PseudoLabelSet set;
  std::set<int> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 4) {
      throw ParseError(source, line_no,
                       fmt::format("expected 4 fields, got {}", f.size()));
    }
    PseudoLabel e;
    e.sample_index = static_cast<int>(parse_integer(f[0], source, line_no));
    e.label = static_cast<int>(parse_integer(f[1], source, line_no));
    e.cls_confidence = parse_real(f[2], source, line_no);
    e.disc_source_prob = parse_real(f[3], source, line_no);
    if (!seen.insert(e.sample_index).second) {
      throw ParseError(source, line_no, "duplicate sample_index");
    }
    set.entries.push_back(e);
  }
  return set;
}

namespace {

std::string precision_cell(const std::optional<double>& p) {
  return p ? fmt::format("{:.2f}", 100.0 * *p) : std::string();
}

}  // namespace

std::string selection_stats_csv(const SelectionStats& stats,
                                std::span<const std::string> class_names) {
  std::ostringstream out;
  out << "class,n_samples,n_selected,n_correct,precision\n";
  for (std::size_t c = 0; c < stats.per_class.size(); ++c) {
    const ClassSelection& s = stats.per_class[c];
    const std::string name =
        c < class_names.size() ? class_names[c] : fmt::format("class{}", c);
    out << name << ',' << s.n_samples << ',' << s.n_selected << ','
        << s.n_correct << ',' << precision_cell(s.precision()) << '\n';
  }
  return out.str();
}

std::string selection_stats_table(const SelectionStats& stats,
                                  std::span<const std::string> class_names,
                                  std::string_view title) {
  constexpr int kLabelWidth = 38;
  constexpr int kCellWidth = 10;
  std::string out = fmt::format("{}\n", title);
  out += fmt::format("{:<{}}", "", kLabelWidth);
  for (std::size_t c = 0; c < stats.per_class.size(); ++c) {
    const std::string name =
        c < class_names.size() ? class_names[c] : fmt::format("class{}", c);
    out += fmt::format("{:>{}}", name, kCellWidth);
  }
  out += '\n';
  auto row = [&](std::string_view label, auto cell) {
    out += fmt::format("{:<{}}", label, kLabelWidth);
    for (const ClassSelection& s : stats.per_class) {
      out += fmt::format("{:>{}}", cell(s), kCellWidth);
    }
    out += '\n';
  };
  row("Number of samples",
      [](const ClassSelection& s) { return std::to_string(s.n_samples); });
  row("Number of selected samples",
      [](const ClassSelection& s) { return std::to_string(s.n_selected); });
  row("Number of correctly selected samples",
      [](const ClassSelection& s) { return std::to_string(s.n_correct); });
  row("Accuracy of selected samples (%)", [](const ClassSelection& s) {
    return precision_cell(s.precision());
  });
  return out;
}

}  // namespace sgada
