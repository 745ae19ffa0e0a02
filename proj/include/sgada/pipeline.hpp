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

// The three-phase adaptation procedure and its run orchestration:
//
//   pretrain_source     F_s and C on labeled source data
//   warmup_adda         F_t := F_s, then alternate D / F_t adversarial steps
//   generate_pseudolabels   frozen F_t, C, D score every target sample
//   sgada_adapt         adversarial steps plus lambda-weighted self-training
//
// run_all() chains the phases with evaluations, writes every artifact under
// one directory and can resume from the last epoch checkpoint.

#ifndef SGADA_PIPELINE_HPP_
#define SGADA_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgada/config.hpp"
#include "sgada/data.hpp"
#include "sgada/losses.hpp"
#include "sgada/metrics.hpp"
#include "sgada/nets.hpp"
#include "sgada/pseudo.hpp"

namespace sgada {

/// Per-epoch logged values of one phase.
struct PhaseRecord {
  std::string phase;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> epochs;
  std::vector<std::string> notes;
  double wall_time = 0;

  std::size_t epochs_run() const { return epochs.size(); }
  std::vector<double> column(std::string_view name) const;
};

/// "epoch,<columns...>" with full-precision values.
std::string phase_record_csv(const PhaseRecord& record);
PhaseRecord read_phase_record_csv(const std::filesystem::path& path,
                                  std::string phase);

struct AdaptationData {
  LabeledDataset source_train;
  LabeledDataset source_val;
  LabeledDataset source_test;
  LabeledDataset target_train;
  LabeledDataset target_val;
  LabeledDataset target_test;
};

AdaptationData prepare_data(const ExperimentConfig& config);
/// Source and target datasets before splitting.
std::pair<LabeledDataset, LabeledDataset> load_domains(
    const ExperimentConfig& config);
ModelBundle init_bundle(const ExperimentConfig& config, int input_dim,
                        int n_classes);

/// Epoch-level control for resumable phases.
struct PhaseControl {
  int start_epoch = 0;
  /// Epochs already logged before start_epoch.
  PhaseRecord history;
  /// Called after every epoch; returning false stops the phase early.
  std::function<bool(int epochs_done, const PhaseRecord&)> on_epoch_end;
};

PhaseRecord pretrain_source(const ExperimentConfig& config,
                            ModelBundle& bundle,
                            const LabeledDataset& source_train,
                            PhaseControl control = {});

PhaseRecord warmup_adda(const ExperimentConfig& config, ModelBundle& bundle,
                        const LabeledDataset& source_train,
                        const LabeledDataset& target_train,
                        PhaseControl control = {});

/// Scores every target row with the current F_t, C and D.
std::vector<TargetPrediction> predict_target(ModelBundle& bundle,
                                             const Matrix& target_features);

PseudoLabelSet generate_pseudolabels(const ExperimentConfig& config,
                                     ModelBundle& bundle,
                                     const LabeledDataset& target_train,
                                     int generation_epoch = 0);

PhaseRecord sgada_adapt(const ExperimentConfig& config, ModelBundle& bundle,
                        const LabeledDataset& source_train,
                        const LabeledDataset& target_train,
                        PseudoLabelSet plabels, PhaseControl control = {},
                        std::function<void(const PseudoLabelSet&)>
                            on_regenerate = {});

// Single adversarial iteration pieces, exposed for tests.

struct DiscStepResult {
  double loss = 0;
  double d_source_mean = 0;
  double d_target_mean = 0;
  double domain_accuracy = 0;
};

/// Updates D on Eq.-style discriminator loss with F_s, F_t outputs detached.
DiscStepResult discriminator_step(const ExperimentConfig& config,
                                  ModelBundle& bundle, const Matrix& source_x,
                                  const Matrix& target_x);

struct TargetStepResult {
  double adv = 0;
  double selftrain = 0;
  double objective = 0;
};

/// Accumulates the F_t objective gradient without stepping. With no
/// pseudo-labeled batch the self-training term is skipped. Gradients that
/// land on C and D are cleared.
TargetStepResult accumulate_target_gradient(
    const ExperimentConfig& config, ModelBundle& bundle,
    const Matrix& target_x, const Matrix* pseudo_x,
    std::span<const int> pseudo_y, double lambda);

/// accumulate_target_gradient followed by an Adam step on F_t only.
TargetStepResult target_extractor_step(const ExperimentConfig& config,
                                       ModelBundle& bundle,
                                       const Matrix& target_x,
                                       const Matrix* pseudo_x,
                                       std::span<const int> pseudo_y,
                                       double lambda);

struct AdversarialEpochOptions {
  std::string stream_tag;
  int epoch = 0;
  double lambda = 0;
  const PseudoLabelSet* plabels = nullptr;
};

/// One epoch over the target training set: per target batch, one D step
/// then ft_steps_per_disc_step F_t steps. Returns the logged row.
std::vector<double> run_adversarial_epoch(const ExperimentConfig& config,
                                          ModelBundle& bundle,
                                          const LabeledDataset& source_train,
                                          const LabeledDataset& target_train,
                                          const AdversarialEpochOptions& opt);

enum class ExtractorChoice { kSource, kTarget };

MetricsReport evaluate(ModelBundle& bundle, const LabeledDataset& ds,
                       ExtractorChoice use_extractor);

/// Features of every row of `ds` under the chosen extractor, with true and
/// predicted labels appended.
std::string feature_dump_csv(ModelBundle& bundle, const LabeledDataset& ds,
                             ExtractorChoice use_extractor);

// Run orchestration.

enum class Stage {
  kPretrain,
  kEvalSourceOnly,
  kWarmup,
  kEvalWarmup,
  kPseudoLabel,
  kSgada,
  kEvalSgada,
  kDone,
};

std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);

struct RunOptions {
  bool resume = false;
  /// Stop (after checkpointing) once this many epochs ran in this call.
  std::optional<int> halt_after_epochs;
  /// Run stages up to and including this one.
  Stage last_stage = Stage::kEvalSgada;
  bool verbose = false;
};

struct ScenarioStats {
  std::string name;
  SelectionStats stats;
};

struct RunResult {
  bool completed = false;
  Stage next_stage = Stage::kPretrain;
  std::map<std::string, MetricsReport> metrics;  // by phase name
  std::vector<ScenarioStats> scenarios;
  std::optional<double> classifier_accuracy_on_target_train;
  std::int64_t target_label_reads_during_training = 0;
};

/// Next stage recorded in a run directory, if it holds a run.
std::optional<Stage> read_next_stage(const std::filesystem::path& out_dir);

/// Names of the files a completed run leaves in its directory.
std::vector<std::string> run_artifacts();

RunResult run_all(const ExperimentConfig& config,
                  const std::filesystem::path& out_dir,
                  const RunOptions& options = {});

/// Classifier-only, discriminator-only and combined selections on the
/// target training set with the warm-up networks, plus every-sample
/// "all_predictions" as the classifier-accuracy reference.
std::vector<ScenarioStats> selection_scenarios(
    const ExperimentConfig& config, ModelBundle& bundle,
    const LabeledDataset& target_train);

std::string scenarios_csv(const std::vector<ScenarioStats>& scenarios,
                          std::span<const std::string> class_names);
std::vector<ScenarioStats> read_scenarios_csv(
    const std::filesystem::path& path, std::vector<std::string>* class_names);

}  // namespace sgada

#endif  // SGADA_PIPELINE_HPP_
