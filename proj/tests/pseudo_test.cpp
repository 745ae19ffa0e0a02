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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "sgada/pseudo.hpp"
#include "sgada/random.hpp"

namespace sgada {
namespace {

// Independent transcription of the selection rule.
bool oracle_accepts(double conf, double d, double tau_cls, double tau_disc,
                    SelectionMode mode) {
  const bool cls_ok = conf >= tau_cls;
  const bool disc_ok = d >= 0.5 || (1.0 - d) < tau_disc;
  switch (mode) {
    case SelectionMode::kClsOnly:
      return cls_ok;
    case SelectionMode::kDiscOnly:
      return disc_ok;
    case SelectionMode::kClsAndDisc:
      return cls_ok && disc_ok;
  }
  return false;
}

TargetPrediction pred(int i, int cls, double conf, double d) {
  return TargetPrediction{i, cls, conf, d};
}

std::vector<TargetPrediction> random_preds(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TargetPrediction> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(pred(i, static_cast<int>(rng.below(3)),
                       1.0 / 3.0 + rng.uniform() * 2.0 / 3.0,
                       std::clamp(rng.uniform(), 1e-6, 1 - 1e-6)));
  }
  return out;
}

TEST(Select, RuleBranches) {
  const SelectionRule rule{0.79, 0.87, SelectionMode::kClsAndDisc};
  EXPECT_TRUE(accepts(pred(0, 1, 0.85, 0.60), rule));
  EXPECT_TRUE(accepts(pred(0, 1, 0.85, 0.20), rule));
  EXPECT_FALSE(accepts(pred(0, 1, 0.70, 0.90), rule));
  EXPECT_FALSE(accepts(pred(0, 1, 0.85, 0.10), rule));
}

TEST(Select, BoundaryConventions) {
  const SelectionRule rule{0.79, 0.87, SelectionMode::kClsAndDisc};
  EXPECT_TRUE(accepts(pred(0, 0, 0.79, 0.5), rule));       // tau_cls inclusive
  EXPECT_TRUE(discriminator_accepts(0.5, 0.0));            // source side inclusive
  EXPECT_FALSE(discriminator_accepts(0.25, 0.75));         // strict target side
  EXPECT_TRUE(discriminator_accepts(0.25, 0.7500001));
}

TEST(Select, WaivedClassifierThresholdInTargetBranch) {
  SelectionRule rule{0.79, 0.87, SelectionMode::kClsAndDisc, true};
  EXPECT_TRUE(accepts(pred(0, 0, 0.40, 0.20), rule));
  EXPECT_FALSE(accepts(pred(0, 0, 0.40, 0.60), rule));
  EXPECT_FALSE(accepts(pred(0, 0, 0.95, 0.10), rule));
}

// 101 x 101 grid against the transcription and the closed form.
TEST(Select, GridOracleAndClosedForm) {
  const SelectionRule rule{0.79, 0.87, SelectionMode::kClsAndDisc};
  int mismatches = 0, closed_mismatches = 0;
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const double conf = i / 100.0;
      const double d = j / 100.0;
      const bool got = accepts(pred(0, 0, conf, d), rule);
      mismatches += got != oracle_accepts(conf, d, 0.79, 0.87,
                                          SelectionMode::kClsAndDisc);
      closed_mismatches += got != (conf >= 0.79 && d > 0.13);
    }
  }
  EXPECT_EQ(mismatches, 0);
  EXPECT_EQ(closed_mismatches, 0);
}

TEST(Select, SortedEntriesAndPseudoLabelIsPrediction) {
  std::vector<TargetPrediction> preds{pred(7, 2, 0.9, 0.6), pred(3, 1, 0.95, 0.4),
                                      pred(5, 0, 0.5, 0.9)};
  const PseudoLabelSet set = select(preds, SelectionRule{});
  ASSERT_EQ(set.n_hat_t(), 2u);
  EXPECT_EQ(set.entries[0].sample_index, 3);
  EXPECT_EQ(set.entries[0].label, 1);
  EXPECT_EQ(set.entries[1].sample_index, 7);
  EXPECT_EQ(set.entries[1].label, 2);
  EXPECT_EQ(set.tau_cls, 0.79);
  EXPECT_EQ(set.tau_disc, 0.87);
}

TEST(Select, OrderIndependentProperty) {
  auto preds = random_preds(200, 1);
  const PseudoLabelSet a = select(preds, SelectionRule{});
  std::mt19937 g(5);
  std::shuffle(preds.begin(), preds.end(), g);
  const PseudoLabelSet b = select(preds, SelectionRule{});
  ASSERT_EQ(a.n_hat_t(), b.n_hat_t());
  for (std::size_t i = 0; i < a.n_hat_t(); ++i) {
    EXPECT_EQ(a.entries[i].sample_index, b.entries[i].sample_index);
    EXPECT_EQ(a.entries[i].label, b.entries[i].label);
  }
}

TEST(Select, MonotoneAndModeDominance) {
  const auto preds = random_preds(300, 2);
  auto selected = [&](double tc, double td, SelectionMode m) {
    std::vector<int> idx;
    for (const auto& e : select(preds, SelectionRule{tc, td, m}).entries) {
      idx.push_back(e.sample_index);
    }
    return idx;
  };
  auto subset = [](const std::vector<int>& a, const std::vector<int>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
  };
  for (double tc = 0.35; tc <= 1.0; tc += 0.05) {
    EXPECT_TRUE(subset(selected(tc, 0.87, SelectionMode::kClsAndDisc),
                       selected(tc - 0.05, 0.87, SelectionMode::kClsAndDisc)));
    EXPECT_TRUE(subset(selected(tc, 0.87, SelectionMode::kClsAndDisc),
                       selected(tc, 0.87, SelectionMode::kClsOnly)));
  }
  for (double td = 0.05; td <= 1.0; td += 0.05) {
    EXPECT_TRUE(subset(selected(0.5, td - 0.05, SelectionMode::kClsAndDisc),
                       selected(0.5, td, SelectionMode::kClsAndDisc)));
  }
}

TEST(Select, RejectsBadThresholds) {
  const auto preds = random_preds(5, 3);
  EXPECT_THROW(select(preds, SelectionRule{1.2, 0.5}), std::exception);
  EXPECT_THROW(select(preds, SelectionRule{0.5, -0.1}), std::exception);
}

TEST(Audit, ReferenceCountsGiveReferencePrecision) {
  ClassSelection a{5000, 3995, 2901};
  ClassSelection b{5000, 3557, 2873};
  EXPECT_NEAR(100.0 * *a.precision(), 72.62, 0.005);
  EXPECT_NEAR(100.0 * *b.precision(), 80.77, 0.005);
}

TEST(Audit, CountsByPredictedClass) {
  // Two true class-0 samples, three class-1, one class-2.
  const std::vector<int> truth{0, 0, 1, 1, 1, 2};
  PseudoLabelSet set;
  set.entries = {{0, 0, 0.9, 0.6}, {2, 0, 0.9, 0.6}, {3, 0, 0.9, 0.6},
                 {4, 1, 0.9, 0.6}};
  const SelectionStats s = audit(set, truth, 3);
  EXPECT_EQ(s.per_class[0].n_samples, 2);
  EXPECT_EQ(s.per_class[0].n_selected, 3);  // more than its true count
  EXPECT_EQ(s.per_class[0].n_correct, 1);
  EXPECT_EQ(s.per_class[1].n_selected, 1);
  EXPECT_EQ(s.per_class[1].n_correct, 1);
  EXPECT_EQ(s.per_class[2].n_selected, 0);
  EXPECT_FALSE(s.per_class[2].precision().has_value());
  EXPECT_EQ(s.total_selected(), 4);
  EXPECT_EQ(s.total_correct(), 2);
  EXPECT_DOUBLE_EQ(*s.overall_precision(), 0.5);
  for (const auto& c : s.per_class) EXPECT_LE(c.n_correct, c.n_selected);
}

TEST(Audit, OutOfRangeIndexThrows) {
  const std::vector<int> truth{0, 1};
  PseudoLabelSet set;
  set.entries = {{5, 0, 0.9, 0.6}};
  EXPECT_THROW(audit(set, truth, 2), std::logic_error);
}

TEST(Audit, EmptyClassRendersBlank) {
  SelectionStats s;
  s.per_class = {{10, 4, 3}, {5, 0, 0}};
  const std::vector<std::string> names{"a", "b"};
  const std::string csv = selection_stats_csv(s, names);
  EXPECT_NE(csv.find("a,10,4,3,75.00\n"), std::string::npos);
  EXPECT_NE(csv.find("b,5,0,0,\n"), std::string::npos);
  const std::string table = selection_stats_table(s, names, "t");
  EXPECT_NE(table.find("75.00"), std::string::npos);
}

TEST(ThresholdSweep, MatchesBruteForce) {
  const auto preds = random_preds(120, 4);
  std::vector<int> truth;
  Rng rng(9);
  for (const auto& p : preds) {
    truth.push_back(rng.uniform() < 0.7 ? p.predicted_class
                                        : static_cast<int>(rng.below(3)));
  }
  for (SelectionMode mode : {SelectionMode::kClsOnly, SelectionMode::kDiscOnly,
                             SelectionMode::kClsAndDisc}) {
    const auto rows = threshold_sweep(preds, truth, 0.05, mode);
    ASSERT_EQ(rows.size(), 21u * 21u);
    for (const SweepRow& r : rows) {
      int n = 0, correct = 0;
      for (const auto& p : preds) {
        if (oracle_accepts(p.cls_confidence, p.disc_source_prob, r.tau_cls,
                           r.tau_disc, mode)) {
          ++n;
          correct += truth[static_cast<std::size_t>(p.sample_index)] ==
                     p.predicted_class;
        }
      }
      ASSERT_EQ(r.n_selected, n) << r.tau_cls << " " << r.tau_disc;
      if (n == 0) {
        EXPECT_FALSE(r.precision.has_value());
      } else {
        EXPECT_DOUBLE_EQ(*r.precision, static_cast<double>(correct) / n);
      }
    }
  }
}

TEST(ThresholdSweep, VacuousAndDegenerateCorners) {
  const auto preds = random_preds(50, 6);
  const std::vector<int> truth(50, 0);
  const auto rows = threshold_sweep(preds, truth, 0.5);
  for (const SweepRow& r : rows) {
    if (r.tau_cls == 0.0 && r.tau_disc == 1.0) EXPECT_EQ(r.n_selected, 50);
    if (r.tau_cls == 1.0) EXPECT_LE(r.n_selected, 1);
  }
  EXPECT_THROW(threshold_sweep(preds, truth, 0.0), std::exception);
  EXPECT_THROW(threshold_sweep(preds, truth, 0.6), std::exception);
}

TEST(PseudoLabelCsv, RoundTrip) {
  PseudoLabelSet set = select(random_preds(40, 7), SelectionRule{});
  const auto path = std::filesystem::temp_directory_path() / "sgada_pl.csv";
  save_pseudo_labels(set, path);
  const PseudoLabelSet back = load_pseudo_labels(path);
  ASSERT_EQ(back.n_hat_t(), set.n_hat_t());
  for (std::size_t i = 0; i < set.n_hat_t(); ++i) {
    EXPECT_EQ(back.entries[i].sample_index, set.entries[i].sample_index);
    EXPECT_EQ(back.entries[i].label, set.entries[i].label);
    EXPECT_EQ(back.entries[i].cls_confidence, set.entries[i].cls_confidence);
    EXPECT_EQ(back.entries[i].disc_source_prob,
              set.entries[i].disc_source_prob);
  }
  std::filesystem::remove(path);
}

TEST(SelectionMode, ParseRoundTrip) {
  for (SelectionMode m : {SelectionMode::kClsOnly, SelectionMode::kDiscOnly,
                          SelectionMode::kClsAndDisc}) {
    EXPECT_EQ(parse_selection_mode(to_string(m)), m);
  }
  EXPECT_THROW(parse_selection_mode("both"), std::exception);
}

}  // namespace
}  // namespace sgada
