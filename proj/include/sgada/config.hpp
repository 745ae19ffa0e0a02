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

// Experiment configuration: every hyperparameter, threshold, seed and data
// source of a run. Files are line-oriented `key = value` with `#` comments.

#ifndef SGADA_CONFIG_HPP_
#define SGADA_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sgada/data.hpp"
#include "sgada/nets.hpp"
#include "sgada/pseudo.hpp"

namespace sgada {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  // Data. "flir-toy" and "two-moons" are fixed synthetic presets;
  // "synthetic" uses the generator keys below; "csv" loads feature files.
  std::string benchmark = "flir-toy";
  std::string source_csv;
  std::string target_csv;
  Generator generator = Generator::kGaussianMixture;
  std::vector<int> source_counts = {520, 3840, 2630};
  std::vector<int> target_counts = {370, 3860, 2100};
  double noise_sigma = 1.0;
  double rotation_deg = 0;
  std::vector<double> mean_shift = {-0.26047226650039546, 1.477211629518312};
  double class_separation = 1.9;
  int data_dim = 2;
  std::vector<std::string> class_names = {"bicycle", "car", "person"};
  std::vector<double> split = {0.6, 0.2, 0.2};

  // Networks.
  std::vector<int> hidden_dims = {16, 16};
  int feature_dim = 8;
  int disc_hidden = 16;

  // Optimization.
  int batch_size = 32;
  int epochs_pretrain = 15;
  int epochs_warmup = 15;
  int epochs_sgada = 15;
  double lr_pretrain = 5e-4;
  double lr_ft = 1e-5;
  double lr_disc = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int ft_steps_per_disc_step = 1;

  // Self-training.
  double lambda = 0.25;
  double tau_cls = 0.79;
  double tau_disc = 0.87;
  SelectionMode selection_mode = SelectionMode::kClsAndDisc;
  int regenerate_every_k = 0;
  double sweep_grid_step = 0.01;

  std::uint64_t seed = 0;

  // Ablation flags.
  bool paper_literal_advf = false;
  bool waive_cls_in_branch2 = false;
  bool reinit_disc_for_sgada = false;

  /// Throws ConfigError on any violated invariant.
  void validate() const;

  SelectionRule selection_rule() const;

  /// Canonical `key = value` text of every key, in registry order.
  std::string to_text() const;
  /// FNV-1a of to_text().
  std::uint64_t hash() const;

  /// Sets one key from its textual value. Throws ConfigError for unknown
  /// keys or unparsable values.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<ConfigKey>& config_keys();
bool is_config_key(std::string_view key);

/// Parses `key = value` lines onto `base`. Errors carry the line number.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {},
                              const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path,
                             ExperimentConfig base = {});

}  // namespace sgada

#endif  // SGADA_CONFIG_HPP_
