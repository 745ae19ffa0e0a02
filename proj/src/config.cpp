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

#include "sgada/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sgada/csv.hpp"

namespace sgada {
namespace {

double to_real(std::string_view key, std::string_view text) {
  text = trim(text);
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() ||
      !std::isfinite(v)) {
    throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, text));
  }
  return v;
}

long long to_integer(std::string_view key, std::string_view text) {
  text = trim(text);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(
        fmt::format("{}: expected an integer, got '{}'", key, text));
  }
  return v;
}

int to_int(std::string_view key, std::string_view text) {
  return static_cast<int>(to_integer(key, text));
}

bool to_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(fmt::format("{}: expected true/false, got '{}'", key, text));
}

std::vector<std::string_view> list_items(std::string_view text) {
  std::vector<std::string_view> out;
  text = trim(text);
  if (text.empty()) return out;
  for (std::string_view item : split_fields(text)) out.push_back(trim(item));
  return out;
}

std::vector<int> to_int_list(std::string_view key, std::string_view text) {
  std::vector<int> out;
  for (auto item : list_items(text)) out.push_back(to_int(key, item));
  return out;
}

std::vector<double> to_real_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  for (auto item : list_items(text)) out.push_back(to_real(key, item));
  return out;
}

std::string real_text(double v) { return fmt::format("{}", v); }

template <typename T>
std::string join(const std::vector<T>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += real_text(items[i]);
    } else {
      out += fmt::format("{}", items[i]);
    }
  }
  return out;
}

void apply_preset(ExperimentConfig& c, std::string_view name) {
  if (name == "flir-toy") {
    const ExperimentConfig defaults;
    c.generator = defaults.generator;
    c.source_counts = defaults.source_counts;
    c.target_counts = defaults.target_counts;
    c.noise_sigma = defaults.noise_sigma;
    c.rotation_deg = defaults.rotation_deg;
    c.mean_shift = defaults.mean_shift;
    c.class_separation = defaults.class_separation;
    c.data_dim = defaults.data_dim;
    c.class_names = defaults.class_names;
  } else if (name == "two-moons") {
    c.generator = Generator::kTwoMoons;
    c.source_counts = {1000, 1000};
    c.target_counts = {1000, 1000};
    c.noise_sigma = 0.1;
    c.rotation_deg = 30;
    c.mean_shift = {0.0, 0.0};
    c.data_dim = 2;
    c.class_names = {"upper", "lower"};
  } else if (name != "csv") {
    throw ConfigError(fmt::format(
        "benchmark: expected flir-toy, two-moons or csv, got '{}'", name));
  }
}

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> keys;
  auto add = [&keys](std::string name, std::string help, auto set, auto get) {
    keys.push_back(ConfigKey{std::move(name), std::move(help), set, get});
  };
#define SGADA_REAL_KEY(field, help)                                         \
  add(#field, help,                                                         \
      [](ExperimentConfig& c, std::string_view v) {                         \
        c.field = to_real(#field, v);                                       \
      },                                                                    \
      [](const ExperimentConfig& c) { return real_text(c.field); })
#define SGADA_INT_KEY(field, help)                                          \
  add(#field, help,                                                         \
      [](ExperimentConfig& c, std::string_view v) {                         \
        c.field = to_int(#field, v);                                        \
      },                                                                    \
      [](const ExperimentConfig& c) { return fmt::format("{}", c.field); })
#define SGADA_BOOL_KEY(field, help)                                         \
  add(#field, help,                                                         \
      [](ExperimentConfig& c, std::string_view v) {                         \
        c.field = to_bool(#field, v);                                       \
      },                                                                    \
      [](const ExperimentConfig& c) {                                       \
        return std::string(c.field ? "true" : "false");                     \
      })

  add("benchmark", "flir-toy | two-moons | csv; presets reset data keys",
      [](ExperimentConfig& c, std::string_view v) {
        apply_preset(c, trim(v));
        c.benchmark = std::string(trim(v));
      },
      [](const ExperimentConfig& c) { return c.benchmark; });
  add("source_csv", "source feature CSV (benchmark = csv)",
      [](ExperimentConfig& c, std::string_view v) {
        c.source_csv = std::string(trim(v));
      },
      [](const ExperimentConfig& c) { return c.source_csv; });
  add("target_csv", "target feature CSV (benchmark = csv)",
      [](ExperimentConfig& c, std::string_view v) {
        c.target_csv = std::string(trim(v));
      },
      [](const ExperimentConfig& c) { return c.target_csv; });
  add("generator", "two_moons | gaussian_mixture",
      [](ExperimentConfig& c, std::string_view v) {
        try {
          c.generator = parse_generator(trim(v));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("generator: ") + e.what());
        }
      },
      [](const ExperimentConfig& c) {
        return std::string(to_string(c.generator));
      });
  add("source_counts", "samples per class in the source domain",
      [](ExperimentConfig& c, std::string_view v) {
        c.source_counts = to_int_list("source_counts", v);
      },
      [](const ExperimentConfig& c) { return join(c.source_counts); });
  add("target_counts", "samples per class in the target domain",
      [](ExperimentConfig& c, std::string_view v) {
        c.target_counts = to_int_list("target_counts", v);
      },
      [](const ExperimentConfig& c) { return join(c.target_counts); });
  SGADA_REAL_KEY(noise_sigma, "isotropic noise standard deviation");
  SGADA_REAL_KEY(rotation_deg, "target rotation in degrees");
  add("mean_shift", "target translation, one entry per data dimension",
      [](ExperimentConfig& c, std::string_view v) {
        c.mean_shift = to_real_list("mean_shift", v);
      },
      [](const ExperimentConfig& c) { return join(c.mean_shift); });
  SGADA_REAL_KEY(class_separation, "radius of the Gaussian class means");
  SGADA_INT_KEY(data_dim, "generated feature dimension");
  add("class_names", "comma-separated class names",
      [](ExperimentConfig& c, std::string_view v) {
        c.class_names.clear();
        for (auto item : list_items(v)) c.class_names.emplace_back(item);
      },
      [](const ExperimentConfig& c) { return join(c.class_names); });
  add("split", "train,val,test fractions",
      [](ExperimentConfig& c, std::string_view v) {
        c.split = to_real_list("split", v);
      },
      [](const ExperimentConfig& c) { return join(c.split); });
  add("hidden_dims", "extractor hidden widths",
      [](ExperimentConfig& c, std::string_view v) {
        c.hidden_dims = to_int_list("hidden_dims", v);
      },
      [](const ExperimentConfig& c) { return join(c.hidden_dims); });
  SGADA_INT_KEY(feature_dim, "extractor output width");
  SGADA_INT_KEY(disc_hidden, "discriminator hidden width");
  SGADA_INT_KEY(batch_size, "mini-batch size");
  SGADA_INT_KEY(epochs_pretrain, "source pre-training epochs");
  SGADA_INT_KEY(epochs_warmup, "adversarial warm-up epochs");
  SGADA_INT_KEY(epochs_sgada, "self-training adaptation epochs");
  SGADA_REAL_KEY(lr_pretrain, "pre-training learning rate");
  SGADA_REAL_KEY(lr_ft, "target extractor learning rate");
  SGADA_REAL_KEY(lr_disc, "discriminator learning rate");
  SGADA_REAL_KEY(adam_beta1, "Adam beta1");
  SGADA_REAL_KEY(adam_beta2, "Adam beta2");
  SGADA_REAL_KEY(adam_eps, "Adam epsilon");
  SGADA_INT_KEY(ft_steps_per_disc_step, "F_t updates per D update");
  SGADA_REAL_KEY(lambda, "self-training weight");
  SGADA_REAL_KEY(tau_cls, "classifier confidence threshold");
  SGADA_REAL_KEY(tau_disc, "discriminator target-confidence threshold");
  add("selection_mode", "cls_only | disc_only | cls_and_disc",
      [](ExperimentConfig& c, std::string_view v) {
        try {
          c.selection_mode = parse_selection_mode(trim(v));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("selection_mode: ") + e.what());
        }
      },
      [](const ExperimentConfig& c) {
        return std::string(to_string(c.selection_mode));
      });
  SGADA_INT_KEY(regenerate_every_k, "regenerate pseudo-labels every k epochs");
  SGADA_REAL_KEY(sweep_grid_step, "threshold sweep resolution");
  add("seed", "master seed",
      [](ExperimentConfig& c, std::string_view v) {
        const long long s = to_integer("seed", v);
        if (s < 0) throw ConfigError("seed: must be non-negative");
        c.seed = static_cast<std::uint64_t>(s);
      },
      [](const ExperimentConfig& c) { return fmt::format("{}", c.seed); });
  SGADA_BOOL_KEY(paper_literal_advf, "use the un-negated adversarial loss");
  SGADA_BOOL_KEY(waive_cls_in_branch2,
                 "skip the classifier threshold for target-branch samples");
  SGADA_BOOL_KEY(reinit_disc_for_sgada,
                 "re-initialize D instead of continuing from warm-up");
#undef SGADA_REAL_KEY
#undef SGADA_INT_KEY
#undef SGADA_BOOL_KEY
  return keys;
}

const ConfigKey* find_key(std::string_view name) {
  for (const ConfigKey& k : config_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

bool is_config_key(std::string_view key) { return find_key(key) != nullptr; }

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  const ConfigKey* k = find_key(key);
  if (k == nullptr) throw ConfigError(fmt::format("unknown key '{}'", key));
  k->set(*this, value);
}

std::string ExperimentConfig::get(std::string_view key) const {
  const ConfigKey* k = find_key(key);
  if (k == nullptr) throw ConfigError(fmt::format("unknown key '{}'", key));
  return k->get(*this);
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (!(lr_pretrain > 0) || !(lr_ft > 0) || !(lr_disc > 0)) {
    fail("learning rates must be > 0");
  }
  if (tau_cls < 0 || tau_cls > 1 || tau_disc < 0 || tau_disc > 1) {
    fail("tau_cls and tau_disc must lie in [0, 1]");
  }
  if (!(lambda >= 0)) fail("lambda must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (epochs_pretrain < 0 || epochs_warmup < 0 || epochs_sgada < 0) {
    fail("epoch counts must be >= 0");
  }
  if (adam_beta1 < 0 || adam_beta1 >= 1 || adam_beta2 < 0 || adam_beta2 >= 1) {
    fail("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0)) fail("adam_eps must be > 0");
  if (ft_steps_per_disc_step < 1) fail("ft_steps_per_disc_step must be >= 1");
  if (regenerate_every_k < 0) fail("regenerate_every_k must be >= 0");
  if (!(sweep_grid_step > 0) || sweep_grid_step > 0.5) {
    fail("sweep_grid_step must lie in (0, 0.5]");
  }
  if (split.size() != 3) fail("split needs three fractions");
  if (feature_dim < 1 || disc_hidden < 1 || hidden_dims.empty()) {
    fail("network dimensions must be >= 1 with at least one hidden layer");
  }
  for (int h : hidden_dims) {
    if (h < 1) fail("hidden_dims entries must be >= 1");
  }
  if (benchmark == "csv") {
    if (source_csv.empty() || target_csv.empty()) {
      fail("benchmark = csv needs source_csv and target_csv");
    }
  } else {
    if (source_counts.size() != target_counts.size()) {
      fail("source_counts and target_counts must have one entry per class");
    }
    if (class_names.size() != source_counts.size()) {
      fail("class_names must have one entry per class");
    }
  }
}

SelectionRule ExperimentConfig::selection_rule() const {
  return SelectionRule{tau_cls, tau_disc, selection_mode, waive_cls_in_branch2};
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const ConfigKey& k : config_keys()) {
    out += fmt::format("{} = {}\n", k.name, k.get(*this));
  }
  return out;
}

std::uint64_t ExperimentConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : to_text()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base,
                              const std::string& source) {
  long line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(
          fmt::format("{}:{}: expected 'key = value'", source, line_no));
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    try {
      base.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", source, line_no, e.what()));
    }
    if (end == text.size()) break;
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             ExperimentConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), std::move(base), path.string());
}

}  // namespace sgada
