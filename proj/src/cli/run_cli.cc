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

#include <exception>
#include <map>

#include "CLI11.hpp"
#include "lsfl/cli.h"

namespace lsfl {
namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::string seed;
  std::string mode;
  std::vector<std::string> sets;
};

void AddCommonFlags(CLI::App* app, CommonFlags* f) {
  app->add_option("--config", f->config, "Config file (key = value lines)");
  app->add_option("--out", f->out, "Output directory (overrides out_dir)");
  app->add_option("--seed", f->seed, "Experiment seed (overrides seed)");
  app->add_option("--mode", f->mode,
                  "layer_skip, fedavg_full, centralized or local_only");
  app->add_option("--set", f->sets, "Extra key=value override (repeatable)");
}

ExperimentConfig ResolveFlags(const CommonFlags& f) {
  std::map<std::string, std::string> overrides;
  for (const std::string& kv : f.sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    }
    overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (!f.out.empty()) overrides["out_dir"] = f.out;
  if (!f.seed.empty()) overrides["seed"] = f.seed;
  if (!f.mode.empty()) overrides["mode"] = f.mode;
  if (f.config.empty()) return ResolveConfig({}, overrides);
  return LoadConfig(f.config, overrides);
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Layer-skipping federated fine-tuning simulator", "lsfl"};
  app.require_subcommand(1);
  CommonFlags gen_flags, run_flags, ablate_flags;
  CLI::App* gen = app.add_subcommand("gen", "Generate synthetic datasets");
  AddCommonFlags(gen, &gen_flags);
  CLI::App* run = app.add_subcommand("run", "Run one training mode");
  AddCommonFlags(run, &run_flags);
  CLI::App* ablate = app.add_subcommand("ablate", "Sweep trainable depth k");
  AddCommonFlags(ablate, &ablate_flags);
  CLI::App* report = app.add_subcommand("report", "Compare history CSVs");
  std::vector<std::string> csvs;
  std::string report_out = ".";
  report->add_option("csv", csvs, "History CSV files")->required();
  report->add_option("--out", report_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) {
      const ExperimentConfig cfg = ResolveFlags(gen_flags);
      CmdGen(cfg, cfg.out_dir);
      out << "wrote datasets to " << cfg.out_dir << "\n";
    } else if (*run) {
      const ExperimentConfig cfg = ResolveFlags(run_flags);
      out << CmdRun(cfg, cfg.out_dir) << "\n";
    } else if (*ablate) {
      const ExperimentConfig cfg = ResolveFlags(ablate_flags);
      out << CmdAblate(cfg, cfg.out_dir);
    } else if (*report) {
      out << CmdReport(csvs, report_out);
    }
  } catch (const Error& e) {
    err << "error (" << ErrorCodeName(e.code()) << "): " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace lsfl
