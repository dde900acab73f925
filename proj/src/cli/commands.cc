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

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "lsfl/byte_io.h"
#include "lsfl/cli.h"
#include "lsfl/dataset_io.h"
#include "lsfl/wire.h"

namespace lsfl {
namespace {

namespace fs = std::filesystem;

std::string JoinPath(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void EnsureDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

void WriteText(const std::string& path, const std::string& text) {
  WriteFileBytes(path, std::span<const uint8_t>(
                           reinterpret_cast<const uint8_t*>(text.data()),
                           text.size()));
}

std::string ReadText(const std::string& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  return std::string(bytes.begin(), bytes.end());
}

std::string Hex64(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string ClientFile(size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "client_%03zu.fskd", i);
  return buf;
}

DatasetKind TaskDatasetKind(TaskKind task) {
  return task == TaskKind::kTagging ? DatasetKind::kTagging
                                    : DatasetKind::kMultilabel;
}

std::string Manifest(const ExperimentConfig& cfg, const ExperimentData& d) {
  std::ostringstream os;
  os << "# dataset manifest\n";
  os << "grammar_hash = " << Hex64(cfg.grammar.Hash()) << "\n";
  os << "grammar = " << cfg.grammar.ToString() << "\n";
  os << "task = " << TaskKindName(cfg.task) << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "pretrain_seed = " << cfg.pretrain_seed << "\n";
  os << "alpha = " << cfg.alpha << "\n";
  os << "corpus_seqs = " << d.corpus.size() << "\n";
  os << "train_examples = " << d.train.size() << "\n";
  os << "test_examples = " << d.test.size() << "\n";
  os << "num_clients = " << d.clients.size() << "\n";
  size_t total = d.test.size();
  for (size_t i = 0; i < d.clients.size(); ++i) {
    os << "client_" << i << "_examples = " << d.clients[i].examples.size()
       << "\n";
    total += d.clients[i].examples.size();
  }
  os << "total_examples = " << total << "\n";
  return os.str();
}

std::map<std::string, std::string> ParseManifest(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find(" = ");
    if (eq == std::string::npos) throw InputError("malformed manifest line");
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

uint64_t BackboneKey(const ExperimentConfig& cfg) {
  std::string key = "pretrain_seed=" + std::to_string(cfg.pretrain_seed);
  for (const auto& [name, value] : cfg.resolved) {
    if (name.rfind("grammar.", 0) == 0 || name.rfind("model.", 0) == 0 ||
        (name.rfind("pretrain.", 0) == 0 && name != "pretrain.seed") ||
        name == "data.pretrain_seqs") {
      key += ";" + name + "=" + value;
    }
  }
  return Fnv1a64(key);
}

struct RunOutput {
  std::string csv;
  CsvSummary summary;
};

RunOutput RunAndWrite(const ExperimentConfig& cfg, RunMode mode,
                      const FederationConfig& fc,
                      const ParamSet<float>& backbone,
                      const ExperimentData& data, const std::string& out_dir,
                      const std::string& stem) {
  RunResult res = RunExperiment(cfg, mode, fc, backbone, data);
  RunOutput out;
  out.csv = HistoryCsv(res.history);
  WriteText(JoinPath(out_dir, stem + ".csv"), out.csv);
  for (size_t i = 0; i < res.per_client.size(); ++i) {
    char name[48];
    std::snprintf(name, sizeof(name), "%s_client_%03zu.csv", stem.c_str(), i);
    WriteText(JoinPath(out_dir, name), HistoryCsv(res.per_client[i]));
  }
  out.summary = SummarizeHistoryCsv(out.csv);
  return out;
}

std::string RoundsText(const std::optional<int>& r) {
  return r ? std::to_string(*r) : "";
}

}  // namespace

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
      return kExitConfig;
    case ErrorCode::kInput:
    case ErrorCode::kDecode:
    case ErrorCode::kIo:
      return kExitData;
    case ErrorCode::kProtocol:
      return kExitProtocol;
    case ErrorCode::kInternal:
      return kExitInternal;
  }
  return kExitInternal;
}

void CmdGen(const ExperimentConfig& cfg, const std::string& out_dir) {
  EnsureDir(out_dir);
  const ExperimentData d = GenerateData(cfg);
  std::vector<Sample> corpus;
  corpus.reserve(d.corpus.size());
  for (const auto& seq : d.corpus) corpus.push_back(Sample{seq, {}, {}});
  const DatasetKind kind = TaskDatasetKind(cfg.task);
  WriteDataset(JoinPath(out_dir, "corpus.fskd"), corpus, DatasetKind::kCorpus);
  WriteDataset(JoinPath(out_dir, "train.fskd"), d.train, kind);
  WriteDataset(JoinPath(out_dir, "test.fskd"), d.test, kind);
  for (size_t i = 0; i < d.clients.size(); ++i) {
    WriteDataset(JoinPath(out_dir, ClientFile(i)), d.clients[i].examples,
                 kind);
  }
  WriteText(JoinPath(out_dir, "manifest.txt"), Manifest(cfg, d));
  WriteText(JoinPath(out_dir, "config.txt"), cfg.Echo());
}

ExperimentData LoadData(const ExperimentConfig& cfg,
                        const std::string& out_dir) {
  const std::string manifest_path = JoinPath(out_dir, "manifest.txt");
  if (!fs::exists(manifest_path)) {
    throw InputError("no datasets in " + out_dir + " (run gen first)");
  }
  auto m = ParseManifest(ReadText(manifest_path));
  auto expect = [&](const std::string& key, const std::string& want) {
    auto it = m.find(key);
    if (it == m.end() || it->second != want) {
      throw InputError("manifest " + key + " does not match the config (" +
                       (it == m.end() ? "missing" : it->second) + " vs " +
                       want + "); rerun gen");
    }
  };
  expect("grammar_hash", Hex64(cfg.grammar.Hash()));
  expect("task", TaskKindName(cfg.task));
  expect("seed", std::to_string(cfg.seed));
  expect("pretrain_seed", std::to_string(cfg.pretrain_seed));
  expect("num_clients", std::to_string(cfg.num_clients));

  ExperimentData d;
  for (const Sample& s :
       ReadDataset(JoinPath(out_dir, "corpus.fskd"), DatasetKind::kCorpus)) {
    d.corpus.push_back(s.tokens);
  }
  const DatasetKind kind = TaskDatasetKind(cfg.task);
  d.train = ReadDataset(JoinPath(out_dir, "train.fskd"), kind);
  d.test = ReadDataset(JoinPath(out_dir, "test.fskd"), kind);
  for (int i = 0; i < cfg.num_clients; ++i) {
    ClientDataset c;
    c.client_id = static_cast<uint32_t>(i);
    c.examples = ReadDataset(JoinPath(out_dir, ClientFile(i)), kind);
    c.type_histogram.assign(cfg.grammar.num_types + 1, 0);
    for (const Sample& s : c.examples) {
      ++c.type_histogram[DominantType(s, cfg.grammar)];
    }
    d.clients.push_back(std::move(c));
  }
  return d;
}

ParamSet<float> LoadOrPretrainBackbone(const ExperimentConfig& cfg,
                                       const ExperimentData& data,
                                       const std::string& out_dir) {
  const std::string path =
      JoinPath(out_dir, "backbone_" + Hex64(BackboneKey(cfg)) + ".fskp");
  if (fs::exists(path)) {
    auto decoded = DecodeUpdate(ReadFileBytes(path));
    if (auto* u = std::get_if<ClientUpdate<float>>(&decoded)) {
      return std::move(u->params);
    }
    throw InputError("backbone cache " + path + " is not an f32 frame");
  }
  ClientUpdate<float> u;
  u.weight = 1;
  u.params = PretrainBackbone(cfg, data);
  WriteFileBytes(path, EncodeUpdate(u));
  return std::move(u.params);
}

CsvSummary SummarizeHistoryCsv(const std::string& csv_text) {
  std::istringstream is(csv_text);
  std::string line;
  if (!std::getline(is, line)) throw InputError("history CSV is empty");
  const std::vector<std::string> header = SplitCsvLine(line);
  std::map<std::string, size_t> col;
  for (size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const std::string& name : SplitCsvLine(kHistoryCsvHeader)) {
    if (!col.count(name)) {
      throw InputError("history CSV lacks column '" + name + "'");
    }
  }
  CsvSummary s;
  std::vector<std::string> last;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells = SplitCsvLine(line);
    if (cells.size() != header.size()) {
      throw InputError("history CSV row " + std::to_string(row) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    }
    try {
      s.rounds.push_back(std::stoi(cells[col["round"]]));
      const std::string& micro = cells[col["micro_f1"]];
      s.micro_values.push_back(micro.empty() ? 0.0 : std::stod(micro));
      s.uplink_bytes += std::stoull(cells[col["uplink_bytes"]]);
      s.downlink_bytes += std::stoull(cells[col["downlink_bytes"]]);
    } catch (const std::logic_error&) {
      throw InputError("history CSV row " + std::to_string(row) +
                       " has a malformed number");
    }
    last = std::move(cells);
  }
  if (last.empty()) throw InputError("history CSV has no rows");
  s.final_round = s.rounds.back();
  s.micro_f1 = last[col["micro_f1"]];
  s.macro_f1 = last[col["macro_f1"]];
  s.auc = last[col["auc"]];
  s.comm_fraction = last[col["comm_fraction"]];
  s.rounds_to_90 = RoundsToFraction(s.rounds, s.micro_values, 0.9);
  return s;
}

std::string SummaryLine(const std::string& method, const CsvSummary& s) {
  return "method=" + method + " final_round=" + std::to_string(s.final_round) +
         " micro_f1=" + s.micro_f1 + " macro_f1=" + s.macro_f1 +
         " auc=" + s.auc + " comm_fraction=" + s.comm_fraction +
         " rounds_to_90=" + RoundsText(s.rounds_to_90) +
         " uplink_bytes=" + std::to_string(s.uplink_bytes);
}

std::string CmdRun(const ExperimentConfig& cfg, const std::string& out_dir) {
  const ExperimentData data = LoadData(cfg, out_dir);
  const ParamSet<float> backbone = LoadOrPretrainBackbone(cfg, data, out_dir);
  const FederationConfig fc = cfg.FederationFor(cfg.mode);
  const std::string mode = RunModeName(cfg.mode);
  const RunOutput run = RunAndWrite(cfg, cfg.mode, fc, backbone, data, out_dir,
                                    "history_" + mode);
  const LayerPartition partition = MakePartition(fc.model, fc.strategy);
  char extra[160];
  std::snprintf(extra, sizeof(extra),
                "strategy=%s param_fraction=%.6f param_fraction_no_head=%.6f",
                fc.strategy.ToString().c_str(),
                CommFraction(partition, fc.model, true),
                CommFraction(partition, fc.model, false));
  const std::string line = SummaryLine(mode, run.summary);
  WriteText(JoinPath(out_dir, "summary_" + mode + ".txt"),
            line + "\n" + extra + "\n");
  WriteText(JoinPath(out_dir, "config_" + mode + ".txt"), cfg.Echo());
  return line + "\n" + extra;
}

std::string CmdAblate(const ExperimentConfig& cfg, const std::string& out_dir) {
  const ExperimentData data = LoadData(cfg, out_dir);
  const ParamSet<float> backbone = LoadOrPretrainBackbone(cfg, data, out_dir);
  std::string table = "k,micro_f1,comm_fraction,rounds_to_90\n";
  auto add_row = [&](const std::string& k, const CsvSummary& s) {
    table += k + "," + s.micro_f1 + "," + s.comm_fraction + "," +
             RoundsText(s.rounds_to_90) + "\n";
  };
  for (int k : cfg.ablate_k) {
    FederationConfig fc = cfg.FederationFor(RunMode::kLayerSkip);
    fc.strategy = PartitionStrategy::TopK(k);
    const RunOutput run =
        RunAndWrite(cfg, RunMode::kLayerSkip, fc, backbone, data, out_dir,
                    "ablation_k" + std::to_string(k));
    add_row(std::to_string(k), run.summary);
  }
  if (cfg.ablate_all) {
    const FederationConfig fc = cfg.FederationFor(RunMode::kFedAvgFull);
    const RunOutput run = RunAndWrite(cfg, RunMode::kFedAvgFull, fc, backbone,
                                      data, out_dir, "ablation_all");
    add_row("all", run.summary);
  }
  WriteText(JoinPath(out_dir, "ablation.csv"), table);
  WriteText(JoinPath(out_dir, "config_ablate.txt"), cfg.Echo());
  return table;
}

}  // namespace lsfl
