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

#ifndef LSFL_CLI_H_
#define LSFL_CLI_H_

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lsfl/error.h"
#include "lsfl/experiment.h"

namespace lsfl {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitProtocol = 4;

int ExitCodeFor(ErrorCode code);

// Parses argv (subcommand first) and dispatches; returns the exit code.
// Errors are reported on `err`, summaries on `out`.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

// Writes corpus.fskd, train.fskd, test.fskd, client_NNN.fskd, manifest.txt
// and config.txt into `out_dir`.
void CmdGen(const ExperimentConfig& cfg, const std::string& out_dir);

// Loads what CmdGen wrote, checking the manifest against `cfg`.
ExperimentData LoadData(const ExperimentConfig& cfg,
                        const std::string& out_dir);

// Pretrained backbone for `cfg`, cached in `out_dir` under a name derived
// from the pretraining, model and grammar keys.
ParamSet<float> LoadOrPretrainBackbone(const ExperimentConfig& cfg,
                                       const ExperimentData& data,
                                       const std::string& out_dir);

// Numbers a run reports, all read back from its history CSV.
struct CsvSummary {
  int final_round = 0;
  std::string micro_f1;
  std::string macro_f1;
  std::string auc;
  std::string comm_fraction;
  std::optional<int> rounds_to_90;
  uint64_t uplink_bytes = 0;
  uint64_t downlink_bytes = 0;
  // Per row: round and micro-F1 (undefined as 0).
  std::vector<int> rounds;
  std::vector<double> micro_values;
};

// Throws InputError naming a missing column or malformed cell.
CsvSummary SummarizeHistoryCsv(const std::string& csv_text);

std::string SummaryLine(const std::string& method, const CsvSummary& s);

// Runs cfg.mode; writes history_<mode>.csv, summary_<mode>.txt and
// config_<mode>.txt. Returns the summary line.
std::string CmdRun(const ExperimentConfig& cfg, const std::string& out_dir);

// One layer-skip run per cfg.ablate_k (plus the all-layers row); writes
// ablation.csv with columns k, micro_f1, comm_fraction, rounds_to_90.
std::string CmdAblate(const ExperimentConfig& cfg, const std::string& out_dir);

// Markdown comparison table over history CSVs (method = file stem without
// "history_") plus one SVG line plot per metric. Returns the markdown.
std::string CmdReport(const std::vector<std::string>& csv_paths,
                      const std::string& out_dir);

}  // namespace lsfl

#endif  // LSFL_CLI_H_
