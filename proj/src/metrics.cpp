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

#include "sgada/metrics.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sgada/csv.hpp"

namespace sgada {

std::vector<int> MetricsReport::absent_classes() const {
  std::vector<int> out;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    if (!per_class[c]) out.push_back(static_cast<int>(c));
  }
  return out;
}

std::optional<double> macro_average(
    std::span<const std::optional<double>> per_class) {
  double total = 0;
  int n = 0;
  for (const auto& a : per_class) {
    if (!a) continue;
    total += *a;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return total / n;
}

MetricsReport metrics_from_confusion(const ConfusionMatrix& confusion,
                                     std::vector<std::string> class_names) {
  if (confusion.rows() != confusion.cols()) {
    throw std::invalid_argument("confusion matrix must be square");
  }
  MetricsReport m;
  m.confusion = confusion;
  m.class_names = std::move(class_names);
  const auto k = static_cast<std::size_t>(confusion.rows());
  while (m.class_names.size() < k) {
    m.class_names.push_back(fmt::format("class{}", m.class_names.size()));
  }
  m.per_class.resize(k);
  long correct = 0;
  for (Eigen::Index c = 0; c < confusion.rows(); ++c) {
    const long row_total = confusion.row(c).sum();
    correct += confusion(c, c);
    m.n_samples += row_total;
    if (row_total > 0) {
      m.per_class[static_cast<std::size_t>(c)] =
          100.0 * static_cast<double>(confusion(c, c)) / row_total;
    }
  }
  m.macro = macro_average(m.per_class);
  m.overall = m.n_samples > 0 ? 100.0 * correct / m.n_samples : 0.0;
  return m;
}

MetricsReport metrics_from_predictions(std::span<const int> truth,
                                       std::span<const int> predicted,
                                       std::vector<std::string> class_names) {
  if (truth.size() != predicted.size()) {
    throw std::invalid_argument("truth and predictions differ in length");
  }
  const auto k = static_cast<Eigen::Index>(class_names.size());
  ConfusionMatrix confusion = ConfusionMatrix::Zero(k, k);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= k || predicted[i] < 0 ||
        predicted[i] >= k) {
      throw std::invalid_argument(
          fmt::format("label outside [0, {}) at row {}", k, i));
    }
    confusion(truth[i], predicted[i]) += 1;
  }
  return metrics_from_confusion(confusion, std::move(class_names));
}

namespace {

std::string two_decimals(const std::optional<double>& v) {
  return v ? fmt::format("{:.2f}", *v) : std::string("undefined");
}

}  // namespace

std::string metrics_text(const MetricsReport& m) {
  std::string out;
  out += fmt::format("n_samples = {}\n", m.n_samples);
  for (std::size_t c = 0; c < m.per_class.size(); ++c) {
    out += fmt::format("accuracy.{} = {}\n", m.class_names[c],
                       two_decimals(m.per_class[c]));
  }
  out += fmt::format("macro_average = {}\n", two_decimals(m.macro));
  out += fmt::format("overall_accuracy = {:.2f}\n", m.overall);
  for (int c : m.absent_classes()) {
    out += fmt::format("flag.absent_class = {}\n", m.class_names[c]);
  }
  for (Eigen::Index r = 0; r < m.confusion.rows(); ++r) {
    out += fmt::format("confusion.{} =", m.class_names[r]);
    for (Eigen::Index c = 0; c < m.confusion.cols(); ++c) {
      out += fmt::format(" {}", m.confusion(r, c));
    }
    out += '\n';
  }
  return out;
}

std::string metrics_csv(const MetricsReport& m) {
  std::ostringstream out;
  out << "class,n_samples,n_correct,accuracy";
  for (const auto& name : m.class_names) out << ",pred_" << name;
  out << '\n';
  for (std::size_t c = 0; c < m.per_class.size(); ++c) {
    const auto r = static_cast<Eigen::Index>(c);
    out << m.class_names[c] << ',' << m.confusion.row(r).sum() << ','
        << m.confusion(r, r) << ','
        << (m.per_class[c] ? format_real(*m.per_class[c]) : "");
    for (Eigen::Index p = 0; p < m.confusion.cols(); ++p) {
      out << ',' << m.confusion(r, p);
    }
    out << '\n';
  }
  out << "macro,,," << (m.macro ? format_real(*m.macro) : "") << '\n';
  out << "overall," << m.n_samples << ",," << format_real(m.overall) << '\n';
  return out.str();
}

MetricsReport read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string source = path.string();
  std::string line;
  long line_no = 1;
  if (!std::getline(in, line)) throw ParseError(source, 1, "empty file");
  const auto header = split_fields(trim(line));
  if (header.size() < 4 || header[0] != "class") {
    throw ParseError(source, 1, "not a metrics CSV");
  }
  const std::size_t k = header.size() - 4;
  std::vector<std::string> names;
  ConfusionMatrix confusion = ConfusionMatrix::Zero(
      static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = split_fields(trim(line));
    if (f.empty() || f[0] == "macro" || f[0] == "overall") continue;
    if (f.size() != header.size() || names.size() >= k) {
      throw ParseError(source, line_no, "malformed class row");
    }
    const auto r = static_cast<Eigen::Index>(names.size());
    names.emplace_back(f[0]);
    for (std::size_t p = 0; p < k; ++p) {
      confusion(r, static_cast<Eigen::Index>(p)) =
          parse_integer(f[4 + p], source, line_no);
    }
  }
  if (names.size() != k) throw ParseError(source, line_no, "missing class rows");
  return metrics_from_confusion(confusion, std::move(names));
}

}  // namespace sgada
