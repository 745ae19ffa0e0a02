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

#include "sgada/report.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sgada/csv.hpp"
#include "sgada/metrics.hpp"

namespace sgada {

namespace {

using nlohmann::json;

struct PhaseInfo {
  const char* key;    // metrics_<key>.csv, features_<key>.csv
  const char* stage;  // manifest stage name
  const char* label;  // table row label
};

constexpr PhaseInfo kEvalPhases[] = {
    {"source_only", "eval_source_only", "Source only"},
    {"warmup", "eval_warmup", "Warm-up"},
    {"sgada", "eval_sgada", "SGADA"},
};

constexpr const char* kTrainingPhases[] = {"pretrain", "warmup", "sgada"};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

std::string cell(const std::optional<double>& v) {
  return v ? fmt::format("{:.2f}", *v) : std::string("-");
}

std::string class_name(std::span<const std::string> names, std::size_t c) {
  return c < names.size() ? names[c] : fmt::format("class{}", c);
}

}  // namespace

MissingArtifactsError::MissingArtifactsError(std::filesystem::path run_dir,
                                             std::vector<std::string> missing)
    : std::runtime_error(fmt::format("{}: missing run artifacts: {}",
                                     run_dir.string(), join(missing))),
      missing_(std::move(missing)) {}

std::string accuracy_table(std::span<const std::string> class_names,
                           std::span<const AccuracyRow> rows) {
  constexpr int kLabelWidth = 14;
  constexpr int kCellWidth = 10;
  std::string out = fmt::format("{:<{}}", "Method", kLabelWidth);
  for (const auto& name : class_names) {
    out += fmt::format("{:>{}}", name, kCellWidth);
  }
  out += fmt::format("{:>{}}\n", "Average", kCellWidth);
  for (const AccuracyRow& row : rows) {
    out += fmt::format("{:<{}}", row.name, kLabelWidth);
    for (std::size_t c = 0; c < class_names.size(); ++c) {
      const auto v = c < row.per_class.size() ? row.per_class[c]
                                               : std::optional<double>();
      out += fmt::format("{:>{}}", cell(v), kCellWidth);
    }
    out += fmt::format("{:>{}}\n", cell(row.macro), kCellWidth);
  }
  return out;
}

std::string scenarios_table(std::span<const ScenarioStats> scenarios,
                            std::span<const std::string> class_names) {
  constexpr int kLabelWidth = 20;
  constexpr int kCellWidth = 22;
  std::string out = fmt::format("{:<{}}", "Scenario", kLabelWidth);
  std::size_t n_classes = class_names.size();
  for (const auto& s : scenarios) {
    n_classes = std::max(n_classes, s.stats.per_class.size());
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    out += fmt::format("{:>{}}", class_name(class_names, c), kCellWidth);
  }
  out += fmt::format("{:>{}}\n", "Overall", kCellWidth);
  auto entry = [](int selected, int correct, std::optional<double> p) {
    return fmt::format("{}/{} ({})", correct, selected,
                       p ? fmt::format("{:.2f}%", 100.0 * *p) : "-");
  };
  for (const ScenarioStats& s : scenarios) {
    out += fmt::format("{:<{}}", s.name, kLabelWidth);
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (c < s.stats.per_class.size()) {
        const ClassSelection& cs = s.stats.per_class[c];
        out += fmt::format("{:>{}}",
                           entry(cs.n_selected, cs.n_correct, cs.precision()),
                           kCellWidth);
      } else {
        out += fmt::format("{:>{}}", "-", kCellWidth);
      }
    }
    out += fmt::format("{:>{}}\n",
                       entry(s.stats.total_selected(), s.stats.total_correct(),
                             s.stats.overall_precision()),
                       kCellWidth);
  }
  out += "cells: correct/selected (precision)\n";
  return out;
}

RenderedReport render_report(const std::filesystem::path& run_dir) {
  auto exists = [&](const std::string& name) {
    return std::filesystem::is_regular_file(run_dir / name);
  };
  if (!exists("manifest.json")) {
    std::vector<std::string> missing;
    for (const auto& name : run_artifacts()) {
      if (!exists(name)) missing.push_back(name);
    }
    throw MissingArtifactsError(run_dir, std::move(missing));
  }
  json manifest;
  try {
    manifest = json::parse(read_file(run_dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw std::runtime_error(fmt::format(
        "{}: {}", (run_dir / "manifest.json").string(), e.what()));
  }
  const json stages = manifest.value("stages", json::object());

  // Every artifact a recorded stage claims must be present.
  std::vector<std::string> missing;
  for (const auto& [stage, entry] : stages.items()) {
    for (const auto& artifact : entry.value("artifacts", json::array())) {
      const std::string name = artifact.get<std::string>();
      if (!exists(name)) missing.push_back(name);
    }
  }
  if (!missing.empty()) throw MissingArtifactsError(run_dir, missing);

  RenderedReport report;
  std::string& text = report.text;
  text += fmt::format("config_hash = {}\nseed = {}\n",
                      manifest.value("config_hash", std::string()),
                      manifest.value("seed", std::uint64_t{0}));
  std::vector<std::string> completed;
  for (const auto& [stage, entry] : stages.items()) completed.push_back(stage);
  text += fmt::format("stages = {}\n", join(completed));

  std::vector<std::string> class_names;
  std::vector<AccuracyRow> rows;
  std::vector<std::string> overall_lines;
  for (const PhaseInfo& phase : kEvalPhases) {
    if (!stages.contains(phase.stage)) continue;
    const MetricsReport m =
        read_metrics_csv(run_dir / fmt::format("metrics_{}.csv", phase.key));
    if (class_names.empty()) class_names = m.class_names;
    rows.push_back(AccuracyRow{phase.label, m.per_class, m.macro});
    overall_lines.push_back(fmt::format("{:<14}{:>10.2f}  (n = {})\n",
                                        phase.label, m.overall, m.n_samples));
  }
  text += "\nPer-class accuracy on the target test set (%)\n";
  if (rows.empty()) {
    text += "(no evaluation recorded)\n";
  } else {
    text += accuracy_table(class_names, rows);
    text += "\nOverall accuracy (%)\n";
    for (const auto& line : overall_lines) text += line;
  }

  if (stages.contains("pseudo_label")) {
    const json& entry = stages["pseudo_label"];
    std::vector<std::string> scenario_classes;
    const auto scenarios = read_scenarios_csv(
        run_dir / "selection_scenarios.csv", &scenario_classes);
    text += fmt::format("\nPseudo-label selection on the target training set "
                        "(n_hat_t = {})\n",
                        entry.value("n_hat_t", 0));
    text += scenarios_table(scenarios, scenario_classes);
  }

  std::string& curves = report.loss_curves_csv;
  curves = "phase,epoch,metric,value\n";
  for (const char* phase : kTrainingPhases) {
    if (!stages.contains(phase)) continue;
    const PhaseRecord record = read_phase_record_csv(
        run_dir / fmt::format("history_{}.csv", phase), phase);
    for (std::size_t e = 0; e < record.epochs.size(); ++e) {
      for (std::size_t c = 0; c < record.columns.size(); ++c) {
        curves += fmt::format("{},{},{},{}\n", phase, e + 1,
                              record.columns[c],
                              format_real(record.epochs[e][c]));
      }
    }
  }

  std::string& emb = report.embeddings_csv;
  for (const PhaseInfo& phase : kEvalPhases) {
    if (!stages.contains(phase.stage)) continue;
    std::istringstream in(
        read_file(run_dir / fmt::format("features_{}.csv", phase.key)));
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (header) {
        if (emb.empty()) emb = "phase," + line + "\n";
        header = false;
        continue;
      }
      emb += fmt::format("{},{}\n", phase.key, line);
    }
  }
  if (emb.empty()) emb = "phase\n";
  return report;
}

RenderedReport write_report(const std::filesystem::path& run_dir) {
  RenderedReport report = render_report(run_dir);
  write_file(run_dir / "report.txt", report.text);
  write_file(run_dir / "loss_curves.csv", report.loss_curves_csv);
  write_file(run_dir / "embeddings.csv", report.embeddings_csv);
  return report;
}

}  // namespace sgada
