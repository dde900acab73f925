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

#include <filesystem>
#include <sstream>

#include "gtest/gtest.h"
#include "lsfl/byte_io.h"
#include "lsfl/cli.h"
#include "lsfl/dataset_io.h"

namespace lsfl {
namespace {

namespace fs = std::filesystem;

constexpr char kTinyConfig[] =
    "# tiny run\n"
    "model.n_blocks = 2\n"
    "model.d_model = 16\n"
    "model.n_heads = 2\n"
    "model.d_ff = 24\n"
    "grammar.vocab_size = 24\n"
    "grammar.num_types = 2\n"
    "grammar.lexicon_size = 5\n"
    "grammar.seq_len = 8\n"
    "data.pretrain_seqs = 60\n"
    "data.train_seqs = 60\n"
    "data.test_seqs = 20\n"
    "data.num_clients = 3\n"
    "pretrain.steps = 5\n"
    "fed.rounds = 2\n";

std::string ReadText(const fs::path& p) {
  const std::vector<uint8_t> b = ReadFileBytes(p.string());
  return std::string(b.begin(), b.end());
}

void WriteText(const fs::path& p, const std::string& s) {
  WriteFileBytes(p.string(),
                 std::span<const uint8_t>(
                     reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lsfl_cli_" + std::string(::testing::UnitTest::GetInstance()
                                          ->current_test_info()
                                          ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    config_ = (dir_ / "config.txt").string();
    WriteText(config_, kTinyConfig);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int Run(std::vector<std::string> args) {
    args.insert(args.begin(), "lsfl");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return RunCli(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  std::string Out(const std::string& name) const {
    return (dir_ / "out" / name).string();
  }

  fs::path dir_;
  std::string config_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST(ConfigTest, ParseKeyValues) {
  const auto kv =
      ParseKeyValues("seed = 1\n# note\n\n task=tagging # trailing\n");
  EXPECT_EQ(kv.at("seed"), "1");
  EXPECT_EQ(kv.at("task"), "tagging");
  EXPECT_THROW(ParseKeyValues("seed = 1\nseed = 2\n"), ConfigError);
  EXPECT_THROW(ParseKeyValues("a = 1\n"), ConfigError);
  EXPECT_THROW(ParseKeyValues("no equals sign\n"), ConfigError);
}

TEST(ConfigTest, ResolveDefaultsAndErrors) {
  try {
    ResolveConfig({});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("model.n_blocks"), std::string::npos);
  }
  EXPECT_THROW(ResolveConfig({{"model.n_blocks", "4"}, {"bogus", "1"}}),
               ConfigError);
  const ExperimentConfig cfg = ResolveConfig({{"model.n_blocks", "8"}});
  EXPECT_EQ(cfg.k, 2);
  EXPECT_EQ(cfg.ablate_k, (std::vector<int>{1, 2, 4, 8}));
  EXPECT_EQ(cfg.fed.dp.accounting_steps, 100);
  EXPECT_NE(cfg.Echo().find("model.d_model = 32"), std::string::npos);
  EXPECT_EQ(ResolveConfig({{"model.n_blocks", "8"}}, {{"seed", "9"}}).seed,
            9u);
}

TEST(ConfigTest, DpSigmaAndEpsilonAreExclusive) {
  std::map<std::string, std::string> kv = {{"model.n_blocks", "4"},
                                           {"dp.enabled", "true"}};
  EXPECT_THROW(ResolveConfig(kv), ConfigError);
  kv["dp.sigma"] = "1.0";
  EXPECT_EQ(ResolveConfig(kv).fed.dp.noise_multiplier, 1.0);
  kv["dp.epsilon"] = "4";
  EXPECT_THROW(ResolveConfig(kv), ConfigError);
  kv.erase("dp.sigma");
  kv["dp.accounting_steps"] = "1";
  EXPECT_NEAR(ResolveConfig(kv).fed.dp.noise_multiplier,
              CalibrateSigma(4, 1e-5, 1), 1e-15);
}

TEST_F(CliTest, GenIsDeterministicAndConserving) {
  ASSERT_EQ(Run({"gen", "--config", config_, "--out", Out("")}), kExitOk)
      << err_.str();
  const std::string train = ReadText(Out("train.fskd"));
  const std::string manifest = ReadText(Out("manifest.txt"));
  ASSERT_EQ(Run({"gen", "--config", config_, "--out", Out("")}), kExitOk);
  EXPECT_EQ(ReadText(Out("train.fskd")), train);
  EXPECT_EQ(ReadText(Out("client_002.fskd")).size() > 0, true);
  size_t client_total = 0;
  for (int c = 0; c < 3; ++c) {
    char name[32];
    std::snprintf(name, sizeof(name), "client_%03d.fskd", c);
    client_total += ReadDataset(Out(name), DatasetKind::kTagging).size();
  }
  EXPECT_NE(manifest.find("total_examples = " +
                          std::to_string(client_total + 20)),
            std::string::npos)
      << manifest;
  EXPECT_TRUE(fs::exists(Out("config.txt")));
}

TEST_F(CliTest, RunWritesHistoryAndIsReproducible) {
  ASSERT_EQ(Run({"gen", "--config", config_, "--out", Out("")}), kExitOk);
  ASSERT_EQ(Run({"run", "--config", config_, "--out", Out("")}), kExitOk)
      << err_.str();
  EXPECT_NE(out_.str().find("method=layer_skip"), std::string::npos);
  const std::string csv = ReadText(Out("history_layer_skip.csv"));
  int rows = 0;
  for (char ch : csv) rows += ch == '\n';
  EXPECT_EQ(rows, 1 + 2);
  ASSERT_EQ(Run({"run", "--config", config_, "--out", Out("")}), kExitOk);
  EXPECT_EQ(ReadText(Out("history_layer_skip.csv")), csv);
  EXPECT_TRUE(fs::exists(Out("config_layer_skip.txt")));

  ASSERT_EQ(Run({"run", "--config", config_, "--out", Out(""), "--mode",
                 "fedavg_full"}),
            kExitOk);
  const CsvSummary full =
      SummarizeHistoryCsv(ReadText(Out("history_fedavg_full.csv")));
  EXPECT_EQ(full.comm_fraction, "1.000000");
}

TEST_F(CliTest, RunWithoutGenIsADataError) {
  EXPECT_EQ(Run({"run", "--config", config_, "--out", Out("")}), kExitData);
  EXPECT_NE(err_.str().find("gen"), std::string::npos);
}

TEST_F(CliTest, ConfigErrorsExitWithTwo) {
  EXPECT_EQ(Run({"gen", "--out", Out("")}), kExitConfig);
  EXPECT_NE(err_.str().find("model.n_blocks"), std::string::npos);
  EXPECT_EQ(Run({"gen", "--config", config_, "--mode", "nope"}), kExitConfig);
  EXPECT_EQ(Run({"frobnicate"}), kExitConfig);
  WriteText(config_, std::string(kTinyConfig) + "unknown.key = 1\n");
  EXPECT_EQ(Run({"gen", "--config", config_}), kExitConfig);
  EXPECT_NE(err_.str().find("unknown.key"), std::string::npos);
}

TEST_F(CliTest, AblateRowsAndMonotoneFraction) {
  ASSERT_EQ(Run({"gen", "--config", config_, "--out", Out("")}), kExitOk);
  ASSERT_EQ(Run({"ablate", "--config", config_, "--out", Out("")}), kExitOk)
      << err_.str();
  std::istringstream table(ReadText(Out("ablation.csv")));
  std::string line;
  std::getline(table, line);
  EXPECT_EQ(line, "k,micro_f1,comm_fraction,rounds_to_90");
  std::vector<std::pair<std::string, double>> rows;
  while (std::getline(table, line)) {
    std::istringstream ls(line);
    std::string k, f1, cf;
    std::getline(ls, k, ',');
    std::getline(ls, f1, ',');
    std::getline(ls, cf, ',');
    rows.emplace_back(k, std::stod(cf));
  }
  ASSERT_EQ(rows.size(), 3u);  // k = 1, 2 and all
  EXPECT_EQ(rows[1].first, "2");
  EXPECT_LT(rows[0].second, rows[1].second);
  EXPECT_LT(rows[1].second, 1.0);
  EXPECT_EQ(rows[2].first, "all");
  EXPECT_EQ(rows[2].second, 1.0);
}

TEST_F(CliTest, ReportReproducesSummaryAndNamesMissingColumn) {
  ASSERT_EQ(Run({"gen", "--config", config_, "--out", Out("")}), kExitOk);
  ASSERT_EQ(Run({"run", "--config", config_, "--out", Out("")}), kExitOk);
  ASSERT_EQ(Run({"run", "--config", config_, "--out", Out(""), "--mode",
                 "local_only"}),
            kExitOk);
  const CsvSummary s =
      SummarizeHistoryCsv(ReadText(Out("history_layer_skip.csv")));
  const std::string report_dir = (dir_ / "report").string();
  ASSERT_EQ(Run({"report", Out("history_layer_skip.csv"),
                 Out("history_local_only.csv"), "--out", report_dir}),
            kExitOk)
      << err_.str();
  const std::string md = out_.str();
  EXPECT_NE(md.find("| layer_skip | 2 | " + s.micro_f1 + " | " + s.macro_f1),
            std::string::npos)
      << md;
  EXPECT_NE(md.find("| local_only |"), std::string::npos);
  int rows = 0;
  std::istringstream is(md);
  std::string line;
  while (std::getline(is, line)) rows += line.rfind("| ", 0) == 0;
  EXPECT_EQ(rows, 3);  // header + two methods
  EXPECT_TRUE(fs::exists(fs::path(report_dir) / "micro_f1.svg"));
  EXPECT_TRUE(fs::exists(fs::path(report_dir) / "report.md"));

  const std::string broken = (dir_ / "history_broken.csv").string();
  WriteText(broken, "round,micro_f1\n1,0.5\n");
  EXPECT_EQ(Run({"report", broken, "--out", report_dir}), kExitData);
  EXPECT_NE(err_.str().find("macro_f1"), std::string::npos) << err_.str();
}

}  // namespace
}  // namespace lsfl
