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

#include "sgada/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include "sgada/checkpoint.hpp"
#include "sgada/config.hpp"
#include "sgada/csv.hpp"
#include "sgada/pipeline.hpp"
#include "sgada/report.hpp"

namespace sgada {

namespace {

struct VerbInfo {
  const char* name;
  const char* help;
};

constexpr VerbInfo kVerbs[] = {
    {"gen-data", "write source.csv and target.csv for the configured benchmark"},
    {"pretrain", "train F_s and C on source, then evaluate the source-only model"},
    {"warmup", "adversarial warm-up of F_t, then evaluate"},
    {"pseudo-label", "select pseudo-labels with the warm-up networks and audit them"},
    {"adapt", "self-training guided adaptation of F_t, then evaluate"},
    {"evaluate", "evaluate a checkpoint on the target test set"},
    {"run-all", "every phase end to end"},
    {"sweep", "threshold sweep over the warm-up predictions"},
    {"report", "render report.txt, loss_curves.csv and embeddings.csv"},
};

/// Stage a phase verb needs to have reached, and the last stage it runs.
struct PhasePlan {
  Stage first;
  Stage last;
};

std::optional<PhasePlan> phase_plan(std::string_view verb) {
  if (verb == "pretrain") return PhasePlan{Stage::kPretrain, Stage::kEvalSourceOnly};
  if (verb == "warmup") return PhasePlan{Stage::kWarmup, Stage::kEvalWarmup};
  if (verb == "pseudo-label") return PhasePlan{Stage::kPseudoLabel, Stage::kPseudoLabel};
  if (verb == "adapt") return PhasePlan{Stage::kSgada, Stage::kEvalSgada};
  if (verb == "run-all") return PhasePlan{Stage::kPretrain, Stage::kEvalSgada};
  return std::nullopt;
}

std::string previous_verb(Stage first) {
  switch (first) {
    case Stage::kWarmup:
      return "pretrain";
    case Stage::kPseudoLabel:
      return "warmup";
    case Stage::kSgada:
      return "pseudo-label";
    default:
      return "run-all";
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ExperimentConfig resolve_config(const Command& cmd, bool continuing) {
  ExperimentConfig config;
  const std::filesystem::path stored =
      std::filesystem::path(cmd.out_dir) / "config.cfg";
  if (!cmd.config_path.empty()) {
    config = load_config(cmd.config_path);
  } else if (continuing && std::filesystem::exists(stored)) {
    config = load_config(stored);
  }
  for (const auto& [key, value] : cmd.overrides) config.set(key, value);
  config.validate();
  return config;
}

/// Loads the checkpoint into a freshly initialized bundle for `config`.
std::pair<AdaptationData, ModelBundle> restore(
    const ExperimentConfig& config, const std::filesystem::path& checkpoint) {
  if (!std::filesystem::exists(checkpoint)) {
    throw std::runtime_error(fmt::format("missing checkpoint {}",
                                         checkpoint.string()));
  }
  AdaptationData data = prepare_data(config);
  ModelBundle bundle = init_bundle(config, data.source_train.dim(),
                                   static_cast<int>(config.class_names.size()));
  load_checkpoint(checkpoint, bundle);
  return {std::move(data), std::move(bundle)};
}

int run_phases(const Command& cmd, const PhasePlan& plan, std::ostream& out,
               std::ostream& err) {
  const std::filesystem::path dir(cmd.out_dir);
  const std::optional<Stage> next = read_next_stage(dir);
  const bool chained = plan.first != Stage::kPretrain;
  if (chained && (!next || *next < plan.first)) {
    err << fmt::format("error: {} has not completed the stages before '{}'; "
                       "run '{}' first\n",
                       dir.string(), cmd.verb, previous_verb(plan.first));
    return kExitFailure;
  }
  if (chained && *next > plan.last) {
    out << fmt::format("{}: '{}' already complete\n", dir.string(), cmd.verb);
    return kExitOk;
  }
  const bool resume = chained || cmd.resume;
  const ExperimentConfig config = resolve_config(cmd, resume);
  RunOptions options;
  options.resume = resume;
  options.last_stage = plan.last;
  options.verbose = cmd.verbose;
  const RunResult result = run_all(config, dir, options);
  if (result.next_stage <= plan.last) {
    err << fmt::format("error: run stopped before stage '{}' finished\n",
                       to_string(plan.last));
    return kExitFailure;
  }
  for (const auto& [phase, m] : result.metrics) {
    out << fmt::format("{}: macro = {:.2f} overall = {:.2f}\n", phase,
                       m.macro.value_or(0.0), m.overall);
  }
  out << fmt::format("next stage: {}\n", to_string(result.next_stage));
  return kExitOk;
}

int gen_data(const Command& cmd, std::ostream& out) {
  const ExperimentConfig config = resolve_config(cmd, false);
  if (config.benchmark == "csv") {
    throw std::runtime_error("gen-data needs a synthetic benchmark");
  }
  const auto [source, target] = load_domains(config);
  const std::filesystem::path dir(cmd.out_dir);
  std::filesystem::create_directories(dir);
  save_csv(source, dir / "source.csv");
  save_csv(target, dir / "target.csv");
  out << fmt::format("wrote {} source and {} target rows to {}\n",
                     source.size(), target.size(), dir.string());
  return kExitOk;
}

int evaluate_verb(const Command& cmd, std::ostream& out) {
  const std::filesystem::path dir(cmd.out_dir);
  const ExperimentConfig config = resolve_config(cmd, true);
  auto [data, bundle] = restore(config, dir / cmd.checkpoint);
  const MetricsReport m =
      evaluate(bundle, data.target_test,
               cmd.extractor == "source" ? ExtractorChoice::kSource
                                         : ExtractorChoice::kTarget);
  write_file(dir / "metrics_eval.txt", metrics_text(m));
  write_file(dir / "metrics_eval.csv", metrics_csv(m));
  out << metrics_text(m);
  return kExitOk;
}

int sweep_verb(const Command& cmd, std::ostream& out) {
  const std::filesystem::path dir(cmd.out_dir);
  const ExperimentConfig config = resolve_config(cmd, true);
  auto [data, bundle] = restore(config, dir / "checkpoints/warmup.ckpt");
  const auto preds = predict_target(bundle, data.target_train.features());
  const auto rows = threshold_sweep(preds, data.target_train.labels(),
                                    config.sweep_grid_step,
                                    config.selection_mode);
  std::string csv = "tau_cls,tau_disc,n_selected,precision\n";
  for (const SweepRow& r : rows) {
    csv += fmt::format("{},{},{},{}\n", format_real(r.tau_cls),
                       format_real(r.tau_disc), r.n_selected,
                       r.precision ? format_real(*r.precision) : "");
  }
  write_file(dir / "sweep.csv", csv);
  out << fmt::format("wrote {} threshold pairs ({}) to {}\n", rows.size(),
                     to_string(config.selection_mode),
                     (dir / "sweep.csv").string());
  return kExitOk;
}

}  // namespace

const std::vector<std::string>& cli_verbs() {
  static const std::vector<std::string> verbs = [] {
    std::vector<std::string> v;
    for (const VerbInfo& info : kVerbs) v.emplace_back(info.name);
    return v;
  }();
  return verbs;
}

Command parse_args(std::span<const std::string> args,
                   std::optional<std::string> env_out_dir) {
  CLI::App app{"Self-training guided adversarial domain adaptation", "sgada"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_help_flag("-h,--help", "print this help");

  Command cmd;
  std::string out_flag;
  std::vector<std::string> sets;
  app.add_option("--config", cmd.config_path, "configuration file");
  app.add_option("--out", out_flag, "run directory (default: $SGADA_OUT_DIR)");
  app.add_flag("--resume", cmd.resume, "continue the run in --out");
  app.add_flag("-v,--verbose", cmd.verbose, "log every epoch to stderr");
  app.add_option("--checkpoint", cmd.checkpoint,
                 "evaluate: checkpoint path inside the run directory");
  app.add_option("--extractor", cmd.extractor, "evaluate: source or target")
      ->check(CLI::IsMember({"source", "target"}));
  app.add_option("--set", sets, "override as key=value (repeatable)");

  std::map<std::string, std::string> values;
  for (const ConfigKey& key : config_keys()) {
    app.add_option("--" + key.name, values[key.name], key.help)
        ->group("Configuration keys");
  }
  for (const VerbInfo& info : kVerbs) app.add_subcommand(info.name, info.help);

  std::vector<std::string> argv_storage{"sgada"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    const std::string what =
        e.get_exit_code() == static_cast<int>(CLI::ExitCodes::RequiredError) &&
                app.get_subcommands().empty()
            ? std::string("no verb given")
            : std::string(e.what());
    throw UsageError(what, app.help());
  }

  cmd.verb = app.get_subcommands().front()->get_name();
  for (const ConfigKey& key : config_keys()) {
    if (app.count("--" + key.name) > 0) {
      cmd.overrides.emplace_back(key.name, values[key.name]);
    }
  }
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw UsageError(fmt::format("--set expects key=value, got '{}'", s),
                       app.help());
    }
    cmd.overrides.emplace_back(std::string(trim(s.substr(0, eq))),
                               std::string(trim(s.substr(eq + 1))));
  }
  // Values are checked against a scratch configuration so that typos
  // surface as usage errors before anything runs.
  ExperimentConfig scratch;
  for (const auto& [key, value] : cmd.overrides) {
    try {
      scratch.set(key, value);
    } catch (const ConfigError& e) {
      throw UsageError(e.what(), app.help());
    }
  }

  cmd.out_dir = !out_flag.empty() ? out_flag : env_out_dir.value_or("");
  if (cmd.out_dir.empty()) {
    throw UsageError("no output directory: pass --out or set SGADA_OUT_DIR",
                     app.help());
  }
  return cmd;
}

int run_command(const Command& cmd, std::ostream& out, std::ostream& err) {
  try {
    if (const auto plan = phase_plan(cmd.verb)) {
      return run_phases(cmd, *plan, out, err);
    }
    if (cmd.verb == "gen-data") return gen_data(cmd, out);
    if (cmd.verb == "evaluate") return evaluate_verb(cmd, out);
    if (cmd.verb == "sweep") return sweep_verb(cmd, out);
    if (cmd.verb == "report") {
      out << write_report(cmd.out_dir).text;
      return kExitOk;
    }
    err << fmt::format("error: unknown verb '{}'\n", cmd.verb);
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int cli_main(std::span<const std::string> args, std::ostream& out,
             std::ostream& err) {
  std::optional<std::string> env_out;
  if (const char* v = std::getenv("SGADA_OUT_DIR"); v != nullptr && *v) {
    env_out = v;
  }
  Command cmd;
  try {
    cmd = parse_args(args, env_out);
  } catch (const HelpRequested& h) {
    out << h.text();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << e.usage();
    return kExitUsage;
  }
  return run_command(cmd, out, err);
}

}  // namespace sgada
