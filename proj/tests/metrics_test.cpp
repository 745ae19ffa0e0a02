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

#include <filesystem>
#include <fstream>

#include "sgada/metrics.hpp"

namespace sgada {
namespace {

const std::vector<std::string> kNames{"bicycle", "car", "person"};

// Confusion with the given per-class hit counts out of 10000 per class.
ConfusionMatrix confusion_with_hits(std::initializer_list<long> hits) {
  ConfusionMatrix m = ConfusionMatrix::Zero(3, 3);
  int c = 0;
  for (long h : hits) {
    m(c, c) = h;
    m(c, (c + 1) % 3) = 10000 - h;
    ++c;
  }
  return m;
}

TEST(MacroAverage, ReferenceRows) {
  const std::vector<std::optional<double>> a{69.89, 83.89, 86.52};
  const std::vector<std::optional<double>> b{87.13, 94.44, 92.03};
  EXPECT_NEAR(*macro_average(a), 80.10, 0.005);
  EXPECT_NEAR(*macro_average(b), 91.20, 0.005);
}

TEST(MacroAverage, ThroughConfusionMatrices) {
  EXPECT_NEAR(
      *metrics_from_confusion(confusion_with_hits({6989, 8389, 8652}), kNames)
           .macro,
      80.10, 0.005);
  EXPECT_NEAR(
      *metrics_from_confusion(confusion_with_hits({8713, 9444, 9203}), kNames)
           .macro,
      91.20, 0.005);
}

TEST(Metrics, PerfectPredictions) {
  const std::vector<int> y{0, 1, 2, 2, 1, 0, 1};
  const MetricsReport m = metrics_from_predictions(y, y, kNames);
  for (const auto& acc : m.per_class) EXPECT_EQ(*acc, 100.0);
  EXPECT_EQ(*m.macro, 100.0);
  EXPECT_EQ(m.overall, 100.0);
  ConfusionMatrix diag = ConfusionMatrix::Zero(3, 3);
  diag.diagonal() << 2, 3, 2;
  EXPECT_EQ(m.confusion, diag);
}

TEST(Metrics, MacroIsUnweightedOverallIsWeighted) {
  // Class 0: 1/2 right; class 1: 8/8 right.
  const std::vector<int> y{0, 0, 1, 1, 1, 1, 1, 1, 1, 1};
  const std::vector<int> p{0, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  const MetricsReport m =
      metrics_from_predictions(y, p, std::vector<std::string>{"a", "b"});
  EXPECT_DOUBLE_EQ(*m.macro, 75.0);
  EXPECT_DOUBLE_EQ(m.overall, 90.0);
}

TEST(Metrics, AbsentClassIsUndefinedAndFlagged) {
  const std::vector<int> y{0, 0, 2};
  const std::vector<int> p{0, 1, 2};
  const MetricsReport m = metrics_from_predictions(y, p, kNames);
  EXPECT_FALSE(m.per_class[1].has_value());
  EXPECT_EQ(m.absent_classes(), std::vector<int>{1});
  EXPECT_DOUBLE_EQ(*m.macro, 75.0);  // mean of 50 and 100 only
  const std::string text = metrics_text(m);
  EXPECT_NE(text.find("accuracy.car = undefined"), std::string::npos);
  EXPECT_NE(text.find("flag.absent_class = car"), std::string::npos);
}

TEST(Metrics, TextUsesTwoDecimals) {
  const MetricsReport m =
      metrics_from_confusion(confusion_with_hits({6989, 8389, 8652}), kNames);
  const std::string text = metrics_text(m);
  EXPECT_NE(text.find("accuracy.bicycle = 69.89"), std::string::npos);
  EXPECT_NE(text.find("macro_average = 80.10"), std::string::npos);
}

TEST(Metrics, CsvRoundTrip) {
  const MetricsReport m =
      metrics_from_confusion(confusion_with_hits({6989, 8389, 8652}), kNames);
  const auto path = std::filesystem::temp_directory_path() / "sgada_m.csv";
  std::ofstream(path, std::ios::binary) << metrics_csv(m);
  const MetricsReport back = read_metrics_csv(path);
  EXPECT_EQ(back.class_names, m.class_names);
  EXPECT_EQ(back.confusion, m.confusion);
  EXPECT_EQ(back.macro, m.macro);
  EXPECT_EQ(back.overall, m.overall);
  std::filesystem::remove(path);
}

TEST(Metrics, RejectsOutOfRangeLabels) {
  const std::vector<int> y{0, 3};
  const std::vector<int> p{0, 1};
  EXPECT_THROW(metrics_from_predictions(y, p, kNames), std::invalid_argument);
}

}  // namespace
}  // namespace sgada
