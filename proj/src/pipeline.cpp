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

#include "sgada/pipeline.hpp"

#include <fmt/format.h>

#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sgada/adam.hpp"
#include "sgada/checkpoint.hpp"
#include "sgada/csv.hpp"
#include "sgada/random.hpp"

namespace sgada {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

AdamOptions adam_options(const ExperimentConfig& c, double lr) {
  return AdamOptions{lr, c.adam_beta1, c.adam_beta2, c.adam_eps};
}

std::vector<Parameter*> concat(std::vector<Parameter*> a,
                               const std::vector<Parameter*>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void clear_grads(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->zero_grad();
}

std::string hex(std::uint64_t v) { return fmt::format("{:016x}", v); }

void require_unchanged(std::uint64_t before, std::uint64_t after,
                       std::string_view what, std::string_view phase) {
  if (before != after) {
    throw std::logic_error(
        fmt::format("{} changed during {}, which must keep it frozen", what,
                    phase));
  }
}

const std::vector<std::string> kAdversarialColumns = {
    "disc_loss",     "adv_loss",      "selftrain_loss",
    "d_source_mean", "d_target_mean", "domain_accuracy"};

}  // namespace

std::vector<double> PhaseRecord::column(std::string_view name) const {
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] != name) continue;
    std::vector<double> out;
    for (const auto& row : epochs) out.push_back(row.at(c));
    return out;
  }
  throw std::out_of_range(fmt::format("no column '{}' in {} record", name,
                                      phase));
}

std::string phase_record_csv(const PhaseRecord& record) {
  std::string out = "epoch";
  for (const auto& c : record.columns) out += "," + c;
  out += '\n';
  for (std::size_t e = 0; e < record.epochs.size(); ++e) {
    out += std::to_string(e + 1);
    for (double v : record.epochs[e]) out += "," + format_real(v);
    out += '\n';
  }
  return out;
}

PhaseRecord read_phase_record_csv(const std::filesystem::path& path,
                                  std::string phase) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string source = path.string();
  PhaseRecord record;
  record.phase = std::move(phase);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "empty history");
  const auto header = split_fields(trim(line));
  if (header.empty() || header[0] != "epoch") {
    throw ParseError(source, 1, "history header must start with 'epoch'");
  }
  for (std::size_t i = 1; i < header.size(); ++i) {
    record.columns.emplace_back(header[i]);
  }
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_fields(trim(line));
    if (f.size() != header.size()) {
      throw ParseError(source, line_no, "history row width mismatch");
    }
    std::vector<double> row;
    for (std::size_t i = 1; i < f.size(); ++i) {
      row.push_back(parse_real(f[i], source, line_no));
    }
    record.epochs.push_back(std::move(row));
  }
  return record;
}

std::pair<LabeledDataset, LabeledDataset> load_domains(
    const ExperimentConfig& config) {
  if (config.benchmark == "csv") {
    LabeledDataset source = load_csv(config.source_csv, config.class_names);
    LabeledDataset target = load_csv(config.target_csv, config.class_names);
    return {source.with_domain(Domain::kSource),
            target.with_domain(Domain::kTarget)};
  }
  ShiftSpec spec;
  spec.generator = config.generator;
  spec.noise_sigma = config.noise_sigma;
  spec.rotation_deg = config.rotation_deg;
  spec.mean_shift = config.mean_shift;
  spec.dim = config.data_dim;
  spec.class_separation = config.class_separation;
  spec.class_names = config.class_names;

  ShiftSpec source_spec = spec;
  source_spec.n_per_class = config.source_counts;
  source_spec.seed = derive_seed(config.seed, "source-data");
  ShiftSpec target_spec = spec;
  target_spec.n_per_class = config.target_counts;
  target_spec.seed = derive_seed(config.seed, "target-data");
  return {generate(source_spec, Domain::kSource),
          generate(target_spec, Domain::kTarget)};
}

AdaptationData prepare_data(const ExperimentConfig& config) {
  auto [source, target] = load_domains(config);
  if (source.dim() != target.dim()) {
    throw ContractError(fmt::format(
        "source has {} features per row, target has {}", source.dim(),
        target.dim()));
  }
  const SplitFractions fractions{config.split.at(0), config.split.at(1),
                                 config.split.at(2)};
  Split s = split(source, fractions, derive_seed(config.seed, "split-source"));
  Split t = split(target, fractions, derive_seed(config.seed, "split-target"));
  return AdaptationData{std::move(s.train), std::move(s.val),
                        std::move(s.test),  std::move(t.train),
                        std::move(t.val),   std::move(t.test)};
}

ModelBundle init_bundle(const ExperimentConfig& config, int input_dim,
                        int n_classes) {
  ExtractorSpec spec{input_dim, config.hidden_dims, config.feature_dim};
  return make_bundle(spec, n_classes, config.disc_hidden,
                     derive_seed(config.seed, "init"));
}

PhaseRecord pretrain_source(const ExperimentConfig& config,
                            ModelBundle& bundle,
                            const LabeledDataset& source_train,
                            PhaseControl control) {
  const auto labels = source_train.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      throw ContractError(
          fmt::format("pretrain_source: source row {} is unlabeled", i));
    }
  }
  const auto start = Clock::now();
  PhaseRecord record = std::move(control.history);
  record.phase = "pretrain";
  record.columns = {"loss", "accuracy"};
  if (config.epochs_pretrain <= control.start_epoch) return record;
  if (source_train.size() == 0) {
    throw ContractError("pretrain_source: empty source training set");
  }

  TargetLabelGuard::Scope training;
  const auto params = concat(parameters(bundle.f_source),
                             parameters(bundle.classifier));
  clear_grads(params);
  const AdamOptions opt = adam_options(config, config.lr_pretrain);
  const Matrix& x_all = source_train.features();
  const double n = static_cast<double>(source_train.size());

  for (int epoch = control.start_epoch; epoch < config.epochs_pretrain;
       ++epoch) {
    double loss_sum = 0;
    long correct = 0;
    for (const Batch& batch : batches(source_train.size(), config.batch_size,
                                      derive_seed(config.seed, "pretrain"),
                                      epoch)) {
      std::vector<int> y;
      y.reserve(batch.size());
      for (std::size_t i : batch) y.push_back(labels[i]);
      Tape tape;
      Var probs = classify(bundle.classifier,
                           extract(bundle.f_source,
                                   tape.constant(gather_rows(x_all, batch))));
      const LossValue loss = supervised_ce_loss(probs, y);
      tape.backward(loss.scalar);
      adam_step(params, opt);
      loss_sum += loss.detached * static_cast<double>(batch.size());
      const auto preds = argmax_rows(probs.value());
      for (std::size_t i = 0; i < preds.size(); ++i) {
        correct += preds[i].label == y[i];
      }
    }
    record.epochs.push_back({loss_sum / n, 100.0 * correct / n});
    if (control.on_epoch_end && !control.on_epoch_end(epoch + 1, record)) {
      break;
    }
  }
  record.wall_time += seconds_since(start);
  return record;
}

DiscStepResult discriminator_step(const ExperimentConfig& config,
                                  ModelBundle& bundle, const Matrix& source_x,
                                  const Matrix& target_x) {
  Tape tape;
  Var fs = detach(extract(bundle.f_source, tape.constant(source_x)));
  Var ft = detach(extract(bundle.f_target, tape.constant(target_x)));
  Var d_source = discriminate(bundle.discriminator, fs);
  Var d_target = discriminate(bundle.discriminator, ft);
  const LossValue loss = disc_loss(d_source, d_target);
  tape.backward(loss.scalar);
  adam_step(parameters(bundle.discriminator),
            adam_options(config, config.lr_disc));

  DiscStepResult r;
  r.loss = loss.detached;
  r.d_source_mean = d_source.value().mean();
  r.d_target_mean = d_target.value().mean();
  const long hits = (d_source.value().array() >= 0.5).count() +
                    (d_target.value().array() < 0.5).count();
  r.domain_accuracy =
      100.0 * static_cast<double>(hits) /
      static_cast<double>(d_source.rows() + d_target.rows());
  return r;
}

TargetStepResult accumulate_target_gradient(
    const ExperimentConfig& config, ModelBundle& bundle,
    const Matrix& target_x, const Matrix* pseudo_x,
    std::span<const int> pseudo_y, double lambda) {
  Tape tape;
  Var d_target = discriminate(bundle.discriminator,
                              extract(bundle.f_target, tape.constant(target_x)));
  const LossValue adv = adv_feature_loss(d_target, config.paper_literal_advf);
  TargetStepResult r;
  r.adv = adv.detached;
  LossValue objective = adv;
  if (pseudo_x != nullptr && pseudo_x->rows() > 0) {
    Var probs = classify(bundle.classifier,
                         extract(bundle.f_target, tape.constant(*pseudo_x)));
    const LossValue selftrain = self_training_loss(probs, pseudo_y);
    r.selftrain = selftrain.detached;
    objective = target_update_objective(adv, selftrain, lambda);
  }
  r.objective = objective.detached;
  tape.backward(objective.scalar);
  clear_grads(parameters(bundle.classifier));
  clear_grads(parameters(bundle.discriminator));
  return r;
}

TargetStepResult target_extractor_step(const ExperimentConfig& config,
                                       ModelBundle& bundle,
                                       const Matrix& target_x,
                                       const Matrix* pseudo_x,
                                       std::span<const int> pseudo_y,
                                       double lambda) {
  const TargetStepResult r = accumulate_target_gradient(
      config, bundle, target_x, pseudo_x, pseudo_y, lambda);
  adam_step(parameters(bundle.f_target), adam_options(config, config.lr_ft));
  return r;
}

std::vector<double> run_adversarial_epoch(const ExperimentConfig& config,
                                          ModelBundle& bundle,
                                          const LabeledDataset& source_train,
                                          const LabeledDataset& target_train,
                                          const AdversarialEpochOptions& opt) {
  if (source_train.size() == 0 || target_train.size() == 0) {
    throw ContractError("adversarial epoch needs source and target samples");
  }
  TargetLabelGuard::Scope training;
  const std::uint64_t epoch_key = static_cast<std::uint64_t>(opt.epoch);
  const auto target_batches =
      batches(target_train.size(), config.batch_size,
              derive_seed(config.seed, opt.stream_tag + "/target"), opt.epoch);
  BatchStream source_stream(
      source_train.size(), config.batch_size,
      derive_seed(derive_seed(config.seed, opt.stream_tag + "/source"),
                  epoch_key));
  std::optional<BatchStream> pseudo_stream;
  if (opt.plabels != nullptr && opt.plabels->n_hat_t() > 0) {
    pseudo_stream.emplace(
        opt.plabels->n_hat_t(), config.batch_size,
        derive_seed(derive_seed(config.seed, opt.stream_tag + "/pseudo"),
                    epoch_key));
  }

  const Matrix& source_all = source_train.features();
  const Matrix& target_all = target_train.features();
  std::vector<double> sums(kAdversarialColumns.size(), 0.0);
  double ft_steps = 0;
  for (const Batch& tb : target_batches) {
    const Matrix target_x = gather_rows(target_all, tb);
    const Matrix source_x = gather_rows(source_all, source_stream.next());
    const DiscStepResult d =
        discriminator_step(config, bundle, source_x, target_x);
    sums[0] += d.loss;
    sums[3] += d.d_source_mean;
    sums[4] += d.d_target_mean;
    sums[5] += d.domain_accuracy;
    for (int k = 0; k < config.ft_steps_per_disc_step; ++k) {
      Matrix pseudo_x;
      std::vector<int> pseudo_y;
      if (pseudo_stream) {
        const Batch& pb = pseudo_stream->next();
        std::vector<std::size_t> rows;
        rows.reserve(pb.size());
        for (std::size_t i : pb) {
          const PseudoLabel& e = opt.plabels->entries[i];
          rows.push_back(static_cast<std::size_t>(e.sample_index));
          pseudo_y.push_back(e.label);
        }
        pseudo_x = gather_rows(target_all, rows);
      }
      const TargetStepResult t = target_extractor_step(
          config, bundle, target_x, pseudo_stream ? &pseudo_x : nullptr,
          pseudo_y, opt.lambda);
      sums[1] += t.adv;
      sums[2] += t.selftrain;
      ft_steps += 1;
    }
  }
  const double iterations = static_cast<double>(target_batches.size());
  for (std::size_t c : {0, 3, 4, 5}) sums[c] /= iterations;
  sums[1] /= ft_steps;
  sums[2] /= ft_steps;
  return sums;
}

PhaseRecord warmup_adda(const ExperimentConfig& config, ModelBundle& bundle,
                        const LabeledDataset& source_train,
                        const LabeledDataset& target_train,
                        PhaseControl control) {
  const auto start = Clock::now();
  if (control.start_epoch == 0) {
    clone_source_to_target(bundle);
    for (Parameter* p : parameters(bundle.discriminator)) {
      p->zero_grad();
      p->reset_optimizer();
    }
  }
  const std::uint64_t fs_hash = parameter_hash(parameters(bundle.f_source));
  const std::uint64_t c_hash = parameter_hash(parameters(bundle.classifier));

  PhaseRecord record = std::move(control.history);
  record.phase = "warmup";
  record.columns = kAdversarialColumns;
  for (int epoch = control.start_epoch; epoch < config.epochs_warmup;
       ++epoch) {
    record.epochs.push_back(run_adversarial_epoch(
        config, bundle, source_train, target_train,
        AdversarialEpochOptions{"warmup", epoch, 0.0, nullptr}));
    if (control.on_epoch_end && !control.on_epoch_end(epoch + 1, record)) {
      break;
    }
  }
  require_unchanged(fs_hash, parameter_hash(parameters(bundle.f_source)),
                    "F_s", "warm-up");
  require_unchanged(c_hash, parameter_hash(parameters(bundle.classifier)),
                    "C", "warm-up");
  record.wall_time += seconds_since(start);
  return record;
}

std::vector<TargetPrediction> predict_target(ModelBundle& bundle,
                                             const Matrix& target_features) {
  Tape tape;
  Var features = extract(bundle.f_target, tape.constant(target_features));
  Var probs = classify(bundle.classifier, features);
  Var d = discriminate(bundle.discriminator, features);
  const auto top = argmax_rows(probs.value());
  std::vector<TargetPrediction> out(top.size());
  for (std::size_t i = 0; i < top.size(); ++i) {
    out[i] = TargetPrediction{static_cast<int>(i), top[i].label,
                              top[i].confidence,
                              d.value()(static_cast<Eigen::Index>(i), 0)};
  }
  return out;
}

PseudoLabelSet generate_pseudolabels(const ExperimentConfig& config,
                                     ModelBundle& bundle,
                                     const LabeledDataset& target_train,
                                     int generation_epoch) {
  const auto frozen = concat(concat(parameters(bundle.f_target),
                                    parameters(bundle.classifier)),
                             parameters(bundle.discriminator));
  const std::uint64_t before = parameter_hash(frozen);
  const auto preds = predict_target(bundle, target_train.features());
  PseudoLabelSet set = select(preds, config.selection_rule());
  set.generation_epoch = generation_epoch;
  require_unchanged(before, parameter_hash(frozen), "F_t, C or D",
                    "pseudo-label generation");
  return set;
}

PhaseRecord sgada_adapt(const ExperimentConfig& config, ModelBundle& bundle,
                        const LabeledDataset& source_train,
                        const LabeledDataset& target_train,
                        PseudoLabelSet plabels, PhaseControl control,
                        std::function<void(const PseudoLabelSet&)>
                            on_regenerate) {
  const auto start = Clock::now();
  if (control.start_epoch == 0) {
    if (config.reinit_disc_for_sgada) {
      reinit_discriminator(bundle, derive_seed(config.seed, "sgada-disc"));
    } else {
      for (Parameter* p : parameters(bundle.discriminator)) {
        p->zero_grad();
        p->reset_optimizer();
      }
    }
  }
  const std::uint64_t fs_hash = parameter_hash(parameters(bundle.f_source));
  const std::uint64_t c_hash = parameter_hash(parameters(bundle.classifier));

  PhaseRecord record = std::move(control.history);
  record.phase = "sgada";
  record.columns = kAdversarialColumns;
  record.columns.push_back("n_pseudo");
  auto note_empty = [&record](int epoch) {
    const std::string note = fmt::format(
        "epoch {}: empty pseudo-label set, self-training term skipped",
        epoch + 1);
    record.notes.push_back(note);
    fmt::print(stderr, "warning: {}\n", note);
  };

  for (int epoch = control.start_epoch; epoch < config.epochs_sgada; ++epoch) {
    if (config.regenerate_every_k > 0 && epoch > 0 &&
        epoch % config.regenerate_every_k == 0) {
      plabels = generate_pseudolabels(config, bundle, target_train, epoch);
      if (on_regenerate) on_regenerate(plabels);
    }
    if (plabels.n_hat_t() == 0) note_empty(epoch);
    auto row = run_adversarial_epoch(
        config, bundle, source_train, target_train,
        AdversarialEpochOptions{"sgada", epoch, config.lambda,
                                plabels.n_hat_t() > 0 ? &plabels : nullptr});
    row.push_back(static_cast<double>(plabels.n_hat_t()));
    record.epochs.push_back(std::move(row));
    if (control.on_epoch_end && !control.on_epoch_end(epoch + 1, record)) {
      break;
    }
  }
  require_unchanged(fs_hash, parameter_hash(parameters(bundle.f_source)),
                    "F_s", "self-training adaptation");
  require_unchanged(c_hash, parameter_hash(parameters(bundle.classifier)),
                    "C", "self-training adaptation");
  record.wall_time += seconds_since(start);
  return record;
}

namespace {

Matrix class_probabilities(ModelBundle& bundle, const Matrix& x,
                           ExtractorChoice use_extractor, Matrix* features) {
  Tape tape;
  Extractor& net = use_extractor == ExtractorChoice::kSource
                       ? bundle.f_source
                       : bundle.f_target;
  Var f = extract(net, tape.constant(x));
  if (features != nullptr) *features = f.value();
  return classify(bundle.classifier, f).value();
}

std::vector<int> require_labels(const LabeledDataset& ds, const char* what) {
  const auto labels = ds.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      throw ContractError(fmt::format("{}: row {} is unlabeled", what, i));
    }
  }
  return {labels.begin(), labels.end()};
}

}  // namespace

MetricsReport evaluate(ModelBundle& bundle, const LabeledDataset& ds,
                       ExtractorChoice use_extractor) {
  const std::vector<int> truth = require_labels(ds, "evaluate");
  const Matrix probs =
      class_probabilities(bundle, ds.features(), use_extractor, nullptr);
  std::vector<int> predicted;
  predicted.reserve(truth.size());
  for (const Prediction& p : argmax_rows(probs)) predicted.push_back(p.label);
  std::vector<std::string> names = ds.class_names();
  while (static_cast<int>(names.size()) < bundle.n_classes) {
    names.push_back(fmt::format("class{}", names.size()));
  }
  return metrics_from_predictions(truth, predicted, std::move(names));
}

std::string feature_dump_csv(ModelBundle& bundle, const LabeledDataset& ds,
                             ExtractorChoice use_extractor) {
  const std::vector<int> truth = require_labels(ds, "feature_dump_csv");
  Matrix features;
  const Matrix probs =
      class_probabilities(bundle, ds.features(), use_extractor, &features);
  const auto preds = argmax_rows(probs);
  std::string out;
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    out += fmt::format("f{},", c);
  }
  out += "label,predicted\n";
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      out += format_real(features(r, c));
      out += ',';
    }
    out += fmt::format("{},{}\n", truth[static_cast<std::size_t>(r)],
                       preds[static_cast<std::size_t>(r)].label);
  }
  return out;
}

std::vector<ScenarioStats> selection_scenarios(
    const ExperimentConfig& config, ModelBundle& bundle,
    const LabeledDataset& target_train) {
  const auto preds = predict_target(bundle, target_train.features());
  const std::vector<int> truth =
      require_labels(target_train, "selection_scenarios");
  std::vector<ScenarioStats> out;
  auto run = [&](std::string name, SelectionRule rule) {
    out.push_back(ScenarioStats{
        std::move(name), audit(select(preds, rule), truth, bundle.n_classes)});
  };
  SelectionRule rule = config.selection_rule();
  rule.waive_cls_in_branch2 = false;
  rule.mode = SelectionMode::kClsOnly;
  run("cls_only", rule);
  rule.mode = SelectionMode::kDiscOnly;
  run("disc_only", rule);
  rule.mode = SelectionMode::kClsAndDisc;
  run("cls_and_disc", rule);
  run("all_predictions",
      SelectionRule{0.0, 1.0, SelectionMode::kClsOnly, false});
  return out;
}

std::string scenarios_csv(const std::vector<ScenarioStats>& scenarios,
                          std::span<const std::string> class_names) {
  std::string out = "scenario,class,n_samples,n_selected,n_correct,precision\n";
  for (const ScenarioStats& s : scenarios) {
    for (std::size_t c = 0; c < s.stats.per_class.size(); ++c) {
      const ClassSelection& cs = s.stats.per_class[c];
      const auto p = cs.precision();
      out += fmt::format(
          "{},{},{},{},{},{}\n", s.name,
          c < class_names.size() ? class_names[c] : fmt::format("class{}", c),
          cs.n_samples, cs.n_selected, cs.n_correct,
          p ? format_real(*p) : std::string());
    }
  }
  return out;
}

std::vector<ScenarioStats> read_scenarios_csv(
    const std::filesystem::path& path, std::vector<std::string>* class_names) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string source = path.string();
  std::string line;
  long line_no = 1;
  if (!std::getline(in, line) ||
      trim(line) != "scenario,class,n_samples,n_selected,n_correct,precision") {
    throw ParseError(source, 1, "not a selection scenarios CSV");
  }
  std::vector<ScenarioStats> out;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_fields(trim(line));
    if (f.size() != 6) throw ParseError(source, line_no, "expected 6 fields");
    if (out.empty() || out.back().name != f[0]) {
      out.push_back(ScenarioStats{std::string(f[0]), {}});
    }
    if (out.size() == 1) names.emplace_back(f[1]);
    ClassSelection cs;
    cs.n_samples = static_cast<int>(parse_integer(f[2], source, line_no));
    cs.n_selected = static_cast<int>(parse_integer(f[3], source, line_no));
    cs.n_correct = static_cast<int>(parse_integer(f[4], source, line_no));
    out.back().stats.per_class.push_back(cs);
  }
  if (class_names != nullptr) *class_names = std::move(names);
  return out;
}

// ---------------------------------------------------------------------------
// Run orchestration.

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kPretrain:
      return "pretrain";
    case Stage::kEvalSourceOnly:
      return "eval_source_only";
    case Stage::kWarmup:
      return "warmup";
    case Stage::kEvalWarmup:
      return "eval_warmup";
    case Stage::kPseudoLabel:
      return "pseudo_label";
    case Stage::kSgada:
      return "sgada";
    case Stage::kEvalSgada:
      return "eval_sgada";
    case Stage::kDone:
      return "done";
  }
  return "done";
}

Stage parse_stage(std::string_view s) {
  for (int k = 0; k <= static_cast<int>(Stage::kDone); ++k) {
    if (to_string(static_cast<Stage>(k)) == s) return static_cast<Stage>(k);
  }
  throw std::invalid_argument(fmt::format("unknown stage '{}'", s));
}

std::vector<std::string> run_artifacts() {
  return {"manifest.json",
          "state.json",
          "config.cfg",
          "checkpoints/pretrain.ckpt",
          "checkpoints/warmup.ckpt",
          "checkpoints/sgada.ckpt",
          "checkpoints/latest.ckpt",
          "history_pretrain.csv",
          "history_warmup.csv",
          "history_sgada.csv",
          "metrics_source_only.txt",
          "metrics_source_only.csv",
          "metrics_warmup.txt",
          "metrics_warmup.csv",
          "metrics_sgada.txt",
          "metrics_sgada.csv",
          "features_source_only.csv",
          "features_warmup.csv",
          "features_sgada.csv",
          "pseudo_labels.csv",
          "selection_stats.csv",
          "selection_stats.txt",
          "selection_scenarios.csv"};
}

namespace {

using nlohmann::json;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

class Run {
 public:
  Run(const ExperimentConfig& config, std::filesystem::path dir,
      const RunOptions& options)
      : config_(config), dir_(std::move(dir)), options_(options) {}

  RunResult execute() {
    config_.validate();
    std::filesystem::create_directories(dir_ / "checkpoints");
    const bool resuming =
        options_.resume && std::filesystem::exists(dir_ / "state.json");
    if (resuming) {
      manifest_ = read_json(dir_ / "manifest.json");
      if (manifest_.value("config_hash", "") != hex(config_.hash())) {
        throw std::runtime_error(fmt::format(
            "{}: configuration differs from the one this run started with",
            (dir_ / "manifest.json").string()));
      }
      const json state = read_json(dir_ / "state.json");
      stage_ = parse_stage(state.at("next_stage").get<std::string>());
      epochs_done_ = state.at("epochs_done").get<int>();
    } else {
      manifest_ = json{{"config_hash", hex(config_.hash())},
                       {"seed", config_.seed},
                       {"stages", json::object()}};
      write_text(dir_ / "config.cfg", config_.to_text());
      write_manifest();
      write_state();
    }

    data_ = prepare_data(config_);
    bundle_ = init_bundle(config_, data_.source_train.dim(),
                          static_cast<int>(config_.class_names.size()));
    if (stage_ != Stage::kPretrain || epochs_done_ > 0) {
      load_checkpoint(dir_ / "checkpoints/latest.ckpt", bundle_);
    }

    const std::int64_t reads_before = TargetLabelGuard::reads();
    while (stage_ != Stage::kDone && stage_ <= options_.last_stage) {
      if (!run_stage()) break;
    }
    RunResult result = collect();
    result.target_label_reads_during_training =
        TargetLabelGuard::reads() - reads_before;
    return result;
  }

 private:
  std::filesystem::path path(std::string_view name) const {
    return dir_ / std::string(name);
  }

  void log(const std::string& msg) const {
    if (options_.verbose) fmt::print(stderr, "{}\n", msg);
  }

  void write_manifest() {
    write_text(path("manifest.json"), manifest_.dump(2) + "\n");
  }

  void write_state() {
    const json state{{"next_stage", std::string(to_string(stage_))},
                     {"epochs_done", epochs_done_}};
    write_text(path("state.json"), state.dump(2) + "\n");
  }

  json hashes() {
    return json{
        {"f_source", hex(parameter_hash(parameters(bundle_.f_source)))},
        {"f_target", hex(parameter_hash(parameters(bundle_.f_target)))},
        {"classifier", hex(parameter_hash(parameters(bundle_.classifier)))},
        {"discriminator",
         hex(parameter_hash(parameters(bundle_.discriminator)))}};
  }

  /// F_s and C must match what pre-training left behind.
  void check_frozen() {
    const json& stages = manifest_["stages"];
    if (!stages.contains("pretrain")) return;
    const json& frozen = stages["pretrain"]["hashes"];
    const json now = hashes();
    for (const char* key : {"f_source", "classifier"}) {
      if (frozen.at(key) != now.at(key)) {
        throw std::logic_error(fmt::format(
            "{} changed after pre-training (stage {})", key,
            to_string(stage_)));
      }
    }
  }

  void finish_stage(std::vector<std::string> artifacts, double wall_time,
                    json extra = json::object()) {
    json entry{{"artifacts", std::move(artifacts)},
               {"wall_time_s", wall_time},
               {"hashes", hashes()}};
    entry.update(extra);
    manifest_["stages"][std::string(to_string(stage_))] = std::move(entry);
    save_checkpoint(path("checkpoints/latest.ckpt"), bundle_);
    check_frozen();
    stage_ = static_cast<Stage>(static_cast<int>(stage_) + 1);
    epochs_done_ = 0;
    write_manifest();
    write_state();
  }

  PhaseControl control_for(const std::string& history_file,
                           const std::string& phase) {
    PhaseControl control;
    control.start_epoch = epochs_done_;
    if (epochs_done_ > 0) {
      control.history = read_phase_record_csv(path(history_file), phase);
      control.history.epochs.resize(static_cast<std::size_t>(epochs_done_));
    }
    control.on_epoch_end = [this, history_file](int done,
                                                const PhaseRecord& record) {
      write_text(path(history_file), phase_record_csv(record));
      save_checkpoint(path("checkpoints/latest.ckpt"), bundle_);
      epochs_done_ = done;
      write_state();
      const auto& last = record.epochs.back();
      std::string values;
      for (std::size_t c = 0; c < record.columns.size(); ++c) {
        values += fmt::format(" {}={:.4f}", record.columns[c], last[c]);
      }
      log(fmt::format("[{}] epoch {}{}", record.phase, done, values));
      ++epochs_this_call_;
      if (options_.halt_after_epochs &&
          epochs_this_call_ >= *options_.halt_after_epochs) {
        halted_ = true;
        return false;
      }
      return true;
    };
    return control;
  }

  void evaluation_stage(const std::string& name, ExtractorChoice which) {
    const auto start = Clock::now();
    const MetricsReport m = evaluate(bundle_, data_.target_test, which);
    write_text(path("metrics_" + name + ".txt"), metrics_text(m));
    write_text(path("metrics_" + name + ".csv"), metrics_csv(m));
    write_text(path("features_" + name + ".csv"),
               feature_dump_csv(bundle_, data_.target_test, which));
    log(fmt::format("[eval {}] macro={:.2f} overall={:.2f}", name,
                    m.macro.value_or(0.0), m.overall));
    finish_stage({"metrics_" + name + ".txt", "metrics_" + name + ".csv",
                  "features_" + name + ".csv"},
                 seconds_since(start));
  }

  template <typename PhaseFn>
  bool training_stage(const std::string& phase, const std::string& ckpt,
                      PhaseFn&& fn) {
    const std::string history_file = "history_" + phase + ".csv";
    const std::int64_t reads_before = TargetLabelGuard::reads();
    const PhaseRecord record = fn(control_for(history_file, phase));
    if (halted_) return false;
    write_text(path(history_file), phase_record_csv(record));
    save_checkpoint(path("checkpoints/" + ckpt), bundle_);
    json extra{{"target_label_reads", TargetLabelGuard::reads() - reads_before}};
    if (!record.notes.empty()) extra["notes"] = record.notes;
    finish_stage({history_file, "checkpoints/" + ckpt}, record.wall_time,
                 std::move(extra));
    return true;
  }

  bool run_stage() {
    switch (stage_) {
      case Stage::kPretrain:
        return training_stage("pretrain", "pretrain.ckpt",
                              [this](PhaseControl control) {
                                return pretrain_source(config_, bundle_,
                                                       data_.source_train,
                                                       std::move(control));
                              });
      case Stage::kEvalSourceOnly:
        evaluation_stage("source_only", ExtractorChoice::kSource);
        return true;
      case Stage::kWarmup:
        return training_stage("warmup", "warmup.ckpt",
                              [this](PhaseControl control) {
                                return warmup_adda(config_, bundle_,
                                                   data_.source_train,
                                                   data_.target_train,
                                                   std::move(control));
                              });
      case Stage::kEvalWarmup:
        evaluation_stage("warmup", ExtractorChoice::kTarget);
        return true;
      case Stage::kPseudoLabel:
        pseudo_label_stage();
        return true;
      case Stage::kSgada:
        return training_stage("sgada", "sgada.ckpt",
                              [this](PhaseControl control) {
                                return sgada_adapt(
                                    config_, bundle_, data_.source_train,
                                    data_.target_train, active_plabels(),
                                    std::move(control),
                                    [this](const PseudoLabelSet& set) {
                                      save_pseudo_labels(
                                          set,
                                          path("pseudo_labels_active.csv"));
                                    });
                              });
      case Stage::kEvalSgada:
        evaluation_stage("sgada", ExtractorChoice::kTarget);
        return true;
      case Stage::kDone:
        return false;
    }
    return false;
  }

  PseudoLabelSet active_plabels() {
    const auto active = path("pseudo_labels_active.csv");
    if (epochs_done_ > 0 && std::filesystem::exists(active)) {
      return load_pseudo_labels(active);
    }
    PseudoLabelSet set = load_pseudo_labels(path("pseudo_labels.csv"));
    set.tau_cls = config_.tau_cls;
    set.tau_disc = config_.tau_disc;
    save_pseudo_labels(set, active);
    return set;
  }

  void pseudo_label_stage() {
    const auto start = Clock::now();
    const PseudoLabelSet set =
        generate_pseudolabels(config_, bundle_, data_.target_train);
    save_pseudo_labels(set, path("pseudo_labels.csv"));
    const SelectionStats stats =
        audit(set, data_.target_train.labels(), bundle_.n_classes);
    write_text(path("selection_stats.csv"),
               selection_stats_csv(stats, config_.class_names));
    write_text(path("selection_stats.txt"),
               selection_stats_table(
                   stats, config_.class_names,
                   fmt::format("Pseudo-label selection ({})",
                               to_string(config_.selection_mode))));
    write_text(path("selection_scenarios.csv"),
               scenarios_csv(selection_scenarios(config_, bundle_,
                                                 data_.target_train),
                             config_.class_names));
    json extra{{"n_hat_t", set.n_hat_t()}};
    if (set.n_hat_t() == 0) {
      extra["warning"] = "empty pseudo-label set";
      fmt::print(stderr,
                 "warning: no target sample passed the selection rule\n");
    }
    log(fmt::format("[pseudo_label] selected {} of {} target samples",
                    set.n_hat_t(), data_.target_train.size()));
    finish_stage({"pseudo_labels.csv", "selection_stats.csv",
                  "selection_stats.txt", "selection_scenarios.csv"},
                 seconds_since(start), std::move(extra));
  }

  RunResult collect() {
    RunResult result;
    result.completed = stage_ == Stage::kDone;
    result.next_stage = stage_;
    const std::pair<const char*, Stage> evals[] = {
        {"source_only", Stage::kEvalSourceOnly},
        {"warmup", Stage::kEvalWarmup},
        {"sgada", Stage::kEvalSgada}};
    for (const auto& [name, stage] : evals) {
      if (stage_ > stage) {
        result.metrics[name] =
            read_metrics_csv(path(std::string("metrics_") + name + ".csv"));
      }
    }
    const auto scenarios = path("selection_scenarios.csv");
    if (stage_ > Stage::kPseudoLabel && std::filesystem::exists(scenarios)) {
      result.scenarios = read_scenarios_csv(scenarios, nullptr);
      for (const ScenarioStats& s : result.scenarios) {
        if (s.name == "all_predictions") {
          result.classifier_accuracy_on_target_train =
              s.stats.overall_precision();
        }
      }
    }
    return result;
  }

  ExperimentConfig config_;
  std::filesystem::path dir_;
  RunOptions options_;
  json manifest_;
  Stage stage_ = Stage::kPretrain;
  int epochs_done_ = 0;
  int epochs_this_call_ = 0;
  bool halted_ = false;
  AdaptationData data_;
  ModelBundle bundle_;
};

}  // namespace

std::optional<Stage> read_next_stage(const std::filesystem::path& out_dir) {
  const auto file = out_dir / "state.json";
  if (!std::filesystem::exists(file)) return std::nullopt;
  return parse_stage(read_json(file).at("next_stage").get<std::string>());
}

RunResult run_all(const ExperimentConfig& config,
                  const std::filesystem::path& out_dir,
                  const RunOptions& options) {
  return Run(config, out_dir, options).execute();
}

}  // namespace sgada
