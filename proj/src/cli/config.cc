// Copyright 2026 The LSFL Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "lsfl/byte_io.h"
#include "lsfl/experiment.h"

namespace lsfl {
namespace {

std::string Trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Resolver {
 public:
  explicit Resolver(std::map<std::string, std::string> values)
      : values_(std::move(values)) {}

  const std::string& Str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw InternalError("unresolved key " + key);
    return it->second;
  }

  bool IsSet(const std::string& key) const { return !Str(key).empty(); }

  int64_t Int(const std::string& key) const {
    const std::string& s = Str(key);
    int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw ConfigError(key + ": expected an integer, got '" + s + "'");
    }
    return v;
  }

  uint64_t U64(const std::string& key) const {
    const std::string& s = Str(key);
    uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw ConfigError(key + ": expected an unsigned integer, got '" + s +
                        "'");
    }
    return v;
  }

  double Real(const std::string& key) const {
    const std::string& s = Str(key);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
      throw ConfigError(key + ": expected a number, got '" + s + "'");
    }
    return v;
  }

  bool Bool(const std::string& key) const {
    const std::string& s = Str(key);
    if (s == "true" || s == "on" || s == "1") return true;
    if (s == "false" || s == "off" || s == "0") return false;
    throw ConfigError(key + ": expected true/false, got '" + s + "'");
  }

  std::vector<double> RealList(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(Str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = Trim(item);
      char* end = nullptr;
      const double v = std::strtod(item.c_str(), &end);
      if (item.empty() || end != item.c_str() + item.size()) {
        throw ConfigError(key + ": bad list item '" + item + "'");
      }
      out.push_back(v);
    }
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
};

int CheckedInt(int64_t v, const std::string& key, int64_t lo) {
  if (v < lo || v > 1'000'000'000) {
    throw ConfigError(key + " out of range");
  }
  return static_cast<int>(v);
}

}  // namespace

const char* RunModeName(RunMode mode) {
  switch (mode) {
    case RunMode::kLayerSkip:
      return "layer_skip";
    case RunMode::kFedAvgFull:
      return "fedavg_full";
    case RunMode::kCentralized:
      return "centralized";
    case RunMode::kLocalOnly:
      return "local_only";
  }
  return "?";
}

RunMode ParseRunMode(const std::string& name) {
  for (RunMode m : {RunMode::kLayerSkip, RunMode::kFedAvgFull,
                    RunMode::kCentralized, RunMode::kLocalOnly}) {
    if (name == RunModeName(m)) return m;
  }
  throw ConfigError("unknown mode '" + name +
                    "' (layer_skip, fedavg_full, centralized, local_only)");
}

const std::vector<ConfigKey>& ConfigKeys() {
  static const std::vector<ConfigKey> keys = {
      {"seed", "1", "master seed for data, init, training and masks"},
      {"task", "tagging", "tagging | multilabel"},
      {"mode", "layer_skip",
       "layer_skip | fedavg_full | centralized | local_only"},
      {"out_dir", "out", "directory for datasets and results"},
      {"grammar.vocab_size", "48", "token ids of the grammar"},
      {"grammar.num_types", "3", "entity types / labels K"},
      {"grammar.lexicon_size", "8", "tokens per entity lexicon"},
      {"grammar.num_shared", "0", "shared modifier tokens"},
      {"grammar.seq_len", "16", "tokens per sequence"},
      {"grammar.entity_rate", "0.3", "span start probability"},
      {"grammar.mean_span_len", "2", "geometric span length mean"},
      {"grammar.shared_rate", "0", "shared token rate inside spans"},
      {"grammar.ordered_spans", "true", "span tokens step through the lexicon"},
      {"grammar.type_probs", "", "comma list; empty = uniform"},
      {"data.pretrain_seqs", "2000", "unlabeled pretraining sequences"},
      {"data.train_seqs", "1000", "labeled sequences split across clients"},
      {"data.test_seqs", "200", "pooled held-out sequences"},
      {"data.num_clients", "10", "clients N"},
      {"data.alpha", "0.5", "Dirichlet concentration of the type skew"},
      {"model.n_blocks", nullptr, "transformer blocks L"},
      {"model.d_model", "32", "model width"},
      {"model.n_heads", "4", "attention heads"},
      {"model.d_ff", "64", "SwiGLU hidden width"},
      {"pretrain.seed", "auto", "corpus and backbone seed; auto = seed"},
      {"pretrain.steps", "8000", "masked-token pretraining steps"},
      {"pretrain.batch_size", "16", "pretraining batch size"},
      {"pretrain.lr", "0.002", "pretraining learning rate"},
      {"fed.k", "auto", "trainable top blocks; auto = max(1, L/4)"},
      {"fed.rounds", "100", "communication rounds R"},
      {"fed.client_fraction", "1", "fraction of clients per round"},
      {"fed.eval_every", "1", "evaluation cadence in rounds"},
      {"fed.head_aggregation", "true", "average heads (false keeps them local)"},
      {"fed.secure_agg", "true", "pairwise-masked aggregation"},
      {"fed.threads", "1", "worker threads for client updates"},
      {"train.lr", "0.003", "AdamW learning rate"},
      {"train.local_epochs", "1", "local epochs E"},
      {"train.batch_size", "8", "local batch size"},
      {"train.beta1", "0.9", "AdamW beta1"},
      {"train.beta2", "0.999", "AdamW beta2"},
      {"train.eps", "1e-08", "AdamW epsilon"},
      {"train.weight_decay", "0.01", "decoupled weight decay"},
      {"dp.enabled", "false", "DP-SGD on local steps"},
      {"dp.clip_norm", "1", "per-example clip norm C"},
      {"dp.sigma", "", "noise multiplier (excludes dp.epsilon)"},
      {"dp.epsilon", "", "target epsilon (excludes dp.sigma)"},
      {"dp.delta", "1e-05", "target delta"},
      {"dp.accounting_steps", "auto", "composition steps T; auto = rounds"},
      {"secagg.scale", "1048576", "fixed-point quantization scale"},
      {"ablate.k_list", "auto", "comma list; auto = 1, L/4, L/2, L"},
      {"ablate.include_all", "true", "add the all-layers row"},
  };
  return keys;
}

std::map<std::string, std::string> ParseKeyValues(const std::string& text) {
  std::set<std::string> known;
  for (const ConfigKey& k : ConfigKeys()) known.insert(k.name);
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (!known.count(key)) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" +
                        key + "'");
    }
    if (!out.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": repeated key '" + key + "'");
    }
  }
  return out;
}

ExperimentConfig ResolveConfig(
    const std::map<std::string, std::string>& values,
    const std::map<std::string, std::string>& overrides) {
  std::map<std::string, std::string> merged;
  ExperimentConfig cfg;
  for (const ConfigKey& k : ConfigKeys()) {
    std::optional<std::string> v;
    if (auto it = overrides.find(k.name); it != overrides.end()) {
      v = it->second;
    } else if (auto it2 = values.find(k.name); it2 != values.end()) {
      v = it2->second;
    } else if (k.default_value != nullptr) {
      v = k.default_value;
    }
    if (!v) throw ConfigError(std::string("missing required key ") + k.name);
    merged[k.name] = *v;
    cfg.resolved.emplace_back(k.name, *v);
  }
  for (const auto* source : {&values, &overrides}) {
    for (const auto& [key, v] : *source) {
      if (!merged.count(key)) throw ConfigError("unknown key '" + key + "'");
    }
  }
  const Resolver r(merged);

  cfg.seed = r.U64("seed");
  cfg.task = ParseTaskKind(r.Str("task"));
  if (cfg.task == TaskKind::kMlm) {
    throw ConfigError("task: mlm is only used for pretraining");
  }
  cfg.mode = ParseRunMode(r.Str("mode"));
  cfg.out_dir = r.Str("out_dir");

  GrammarConfig& g = cfg.grammar;
  g.vocab_size = CheckedInt(r.Int("grammar.vocab_size"), "grammar.vocab_size", 1);
  g.num_types = CheckedInt(r.Int("grammar.num_types"), "grammar.num_types", 1);
  g.lexicon_size =
      CheckedInt(r.Int("grammar.lexicon_size"), "grammar.lexicon_size", 1);
  g.num_shared = CheckedInt(r.Int("grammar.num_shared"), "grammar.num_shared", 0);
  g.seq_len = CheckedInt(r.Int("grammar.seq_len"), "grammar.seq_len", 1);
  g.entity_rate = r.Real("grammar.entity_rate");
  g.mean_span_len = r.Real("grammar.mean_span_len");
  g.shared_rate = r.Real("grammar.shared_rate");
  g.ordered_spans = r.Bool("grammar.ordered_spans");
  g.type_probs = r.RealList("grammar.type_probs");
  g.Validate();

  cfg.pretrain_seqs =
      CheckedInt(r.Int("data.pretrain_seqs"), "data.pretrain_seqs", 1);
  cfg.train_seqs = CheckedInt(r.Int("data.train_seqs"), "data.train_seqs", 1);
  cfg.test_seqs = CheckedInt(r.Int("data.test_seqs"), "data.test_seqs", 1);
  cfg.num_clients = CheckedInt(r.Int("data.num_clients"), "data.num_clients", 1);
  cfg.alpha = r.Real("data.alpha");
  if (!(cfg.alpha > 0.0)) throw ConfigError("data.alpha must be > 0");
  if (cfg.num_clients > cfg.train_seqs) {
    throw ConfigError("data.num_clients exceeds data.train_seqs");
  }

  cfg.n_blocks = CheckedInt(r.Int("model.n_blocks"), "model.n_blocks", 1);
  cfg.d_model = CheckedInt(r.Int("model.d_model"), "model.d_model", 1);
  cfg.n_heads = CheckedInt(r.Int("model.n_heads"), "model.n_heads", 1);
  cfg.d_ff = CheckedInt(r.Int("model.d_ff"), "model.d_ff", 1);

  cfg.pretrain_seed = r.Str("pretrain.seed") == "auto"
                          ? cfg.seed
                          : r.U64("pretrain.seed");
  cfg.pretrain_steps = r.Int("pretrain.steps");
  if (cfg.pretrain_steps < 0) throw ConfigError("pretrain.steps must be >= 0");
  cfg.pretrain.batch_size =
      CheckedInt(r.Int("pretrain.batch_size"), "pretrain.batch_size", 1);
  cfg.pretrain.adamw.lr = r.Real("pretrain.lr");

  const int L = cfg.n_blocks;
  const int auto_k = std::max(1, L / 4);
  cfg.k = r.Str("fed.k") == "auto" ? auto_k
                                   : CheckedInt(r.Int("fed.k"), "fed.k", 0);
  if (cfg.k > L) throw ConfigError("fed.k exceeds model.n_blocks");

  FederationConfig& fc = cfg.fed;
  fc.model = cfg.TaskModel();
  fc.rounds = CheckedInt(r.Int("fed.rounds"), "fed.rounds", 1);
  fc.client_fraction = r.Real("fed.client_fraction");
  fc.eval_every = CheckedInt(r.Int("fed.eval_every"), "fed.eval_every", 1);
  fc.train.head_aggregation = r.Bool("fed.head_aggregation");
  fc.secure_agg = r.Bool("fed.secure_agg");
  fc.threads = CheckedInt(r.Int("fed.threads"), "fed.threads", 1);
  fc.train.adamw.lr = r.Real("train.lr");
  fc.train.local_epochs =
      CheckedInt(r.Int("train.local_epochs"), "train.local_epochs", 1);
  fc.train.batch_size =
      CheckedInt(r.Int("train.batch_size"), "train.batch_size", 1);
  fc.train.adamw.beta1 = r.Real("train.beta1");
  fc.train.adamw.beta2 = r.Real("train.beta2");
  fc.train.adamw.eps = r.Real("train.eps");
  fc.train.adamw.weight_decay = r.Real("train.weight_decay");
  fc.master_seed = cfg.seed;
  fc.quant_scale = r.Real("secagg.scale");

  DPConfig& dp = fc.dp;
  dp.enabled = r.Bool("dp.enabled");
  dp.clip_norm = r.Real("dp.clip_norm");
  dp.delta = r.Real("dp.delta");
  dp.accounting_steps = r.Str("dp.accounting_steps") == "auto"
                            ? fc.rounds
                            : r.Int("dp.accounting_steps");
  if (r.IsSet("dp.sigma") && r.IsSet("dp.epsilon")) {
    throw ConfigError("dp.sigma and dp.epsilon are mutually exclusive");
  }
  if (r.IsSet("dp.sigma")) {
    dp.noise_multiplier = r.Real("dp.sigma");
  } else if (r.IsSet("dp.epsilon")) {
    dp.target_epsilon = r.Real("dp.epsilon");
    dp.noise_multiplier =
        CalibrateSigma(*dp.target_epsilon, dp.delta, dp.accounting_steps);
  } else if (dp.enabled) {
    throw ConfigError("dp.enabled needs dp.sigma or dp.epsilon");
  }
  fc.Validate();

  if (r.Str("ablate.k_list") == "auto") {
    std::set<int> ks = {1, std::max(1, L / 4), std::max(1, L / 2), L};
    cfg.ablate_k.assign(ks.begin(), ks.end());
  } else {
    for (double v : r.RealList("ablate.k_list")) {
      if (v != std::floor(v) || v < 0 || v > L) {
        throw ConfigError("ablate.k_list: k must be an integer in [0, L]");
      }
      cfg.ablate_k.push_back(static_cast<int>(v));
    }
  }
  cfg.ablate_all = r.Bool("ablate.include_all");
  return cfg;
}

ExperimentConfig LoadConfig(
    const std::string& path,
    const std::map<std::string, std::string>& overrides) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  return ResolveConfig(
      ParseKeyValues(std::string(bytes.begin(), bytes.end())), overrides);
}

ModelConfig ExperimentConfig::TaskModel() const {
  ModelConfig m;
  m.vocab_size = grammar.vocab_size + 1;
  m.d_model = d_model;
  m.n_heads = n_heads;
  m.n_blocks = n_blocks;
  m.d_ff = d_ff;
  m.max_seq_len = grammar.seq_len;
  m.task = task;
  m.num_types = grammar.num_types;
  m.Validate();
  return m;
}

ModelConfig ExperimentConfig::MlmModel() const {
  ModelConfig m = TaskModel();
  m.task = TaskKind::kMlm;
  return m;
}

FederationConfig ExperimentConfig::FederationFor(RunMode m) const {
  FederationConfig out = fed;
  switch (m) {
    case RunMode::kLayerSkip:
    case RunMode::kLocalOnly:
      out.strategy = PartitionStrategy::TopK(k);
      break;
    case RunMode::kFedAvgFull:
    case RunMode::kCentralized:
      out.strategy = PartitionStrategy::All();
      break;
  }
  return out;
}

std::string ExperimentConfig::Echo() const {
  std::string out = "# resolved configuration\n";
  for (const auto& [key, value] : resolved) {
    out += key + " = " + value + "\n";
  }
  return out;
}

}  // namespace lsfl
