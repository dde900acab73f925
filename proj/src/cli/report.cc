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

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "lsfl/byte_io.h"
#include "lsfl/cli.h"

namespace lsfl {
namespace {

namespace fs = std::filesystem;

struct Series {
  std::string name;
  std::vector<int> rounds;
  std::vector<std::optional<double>> values;
};

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

// Metric-vs-round line plot; y spans [0, 1].
std::string PlotSvg(const std::string& metric, const std::vector<Series>& all) {
  constexpr double kW = 640, kH = 400, kLeft = 56, kRight = 150, kTop = 30,
                   kBottom = 44;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  int max_round = 1;
  for (const Series& s : all) {
    if (!s.rounds.empty()) max_round = std::max(max_round, s.rounds.back());
  }
  auto x_of = [&](double r) { return kLeft + pw * r / max_round; };
  auto y_of = [&](double v) { return kTop + ph * (1.0 - v); };

  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
     << "\" height=\"" << kH << "\" font-family=\"sans-serif\" "
     << "font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kLeft << "\" y=\"18\">" << metric
     << " vs round</text>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    os << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\""
       << y_of(v) << "\" y2=\"" << y_of(v)
       << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << y_of(v) + 4
       << "\" text-anchor=\"end\">" << v << "</text>\n";
  }
  os << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\""
     << y_of(0) << "\" y2=\"" << y_of(0) << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft << "\" y1=\"" << y_of(0)
     << "\" y2=\"" << y_of(1) << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << kLeft << "\" y=\"" << y_of(0) + 16
     << "\" text-anchor=\"middle\">0</text>\n";
  os << "<text x=\"" << kLeft + pw << "\" y=\"" << y_of(0) + 16
     << "\" text-anchor=\"middle\">" << max_round << "</text>\n";
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 8
     << "\" text-anchor=\"middle\">round</text>\n";

  for (size_t i = 0; i < all.size(); ++i) {
    const Series& s = all[i];
    const char* color = kColors[i % std::size(kColors)];
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\" points=\"";
    for (size_t j = 0; j < s.rounds.size(); ++j) {
      if (!s.values[j]) continue;
      os << x_of(s.rounds[j]) << "," << y_of(std::clamp(*s.values[j], 0.0, 1.0))
         << " ";
    }
    os << "\"/>\n";
    const double ly = kTop + 16.0 * i + 8;
    os << "<line x1=\"" << kW - kRight + 12 << "\" x2=\"" << kW - kRight + 32
       << "\" y1=\"" << ly << "\" y2=\"" << ly << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kW - kRight + 38 << "\" y=\"" << ly + 4 << "\">"
       << s.name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::optional<double> ParseCell(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  return std::stod(cell);
}

Series ReadSeries(const std::string& name, const std::string& csv,
                  const std::string& column) {
  Series s;
  s.name = name;
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  const size_t round_col =
      std::find(header.begin(), header.end(), "round") - header.begin();
  const size_t value_col =
      std::find(header.begin(), header.end(), column) - header.begin();
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.push_back("");
    s.rounds.push_back(std::stoi(cells[round_col]));
    s.values.push_back(ParseCell(cells[value_col]));
  }
  return s;
}

std::string MethodName(const std::string& path) {
  std::string stem = fs::path(path).stem().string();
  if (stem.rfind("history_", 0) == 0) stem = stem.substr(8);
  return stem;
}

}  // namespace

std::string CmdReport(const std::vector<std::string>& csv_paths,
                      const std::string& out_dir) {
  if (csv_paths.empty()) throw ConfigError("report needs at least one CSV");
  std::vector<std::pair<std::string, std::string>> inputs;
  for (const std::string& path : csv_paths) {
    const std::vector<uint8_t> bytes = ReadFileBytes(path);
    inputs.emplace_back(MethodName(path), std::string(bytes.begin(), bytes.end()));
  }

  std::string md =
      "| method | rounds | micro_f1 | macro_f1 | auc | comm_fraction | "
      "rounds_to_90 | uplink_bytes |\n"
      "|---|---|---|---|---|---|---|---|\n";
  for (const auto& [name, csv] : inputs) {
    CsvSummary s;
    try {
      s = SummarizeHistoryCsv(csv);
    } catch (const InputError& e) {
      throw InputError(name + ": " + e.what());
    }
    md += "| " + name + " | " + std::to_string(s.final_round) + " | " +
          s.micro_f1 + " | " + s.macro_f1 + " | " + s.auc + " | " +
          s.comm_fraction + " | " +
          (s.rounds_to_90 ? std::to_string(*s.rounds_to_90) : "") + " | " +
          std::to_string(s.uplink_bytes) + " |\n";
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory " + out_dir);
  std::string plots;
  for (const char* metric : {"micro_f1", "macro_f1", "auc"}) {
    std::vector<Series> series;
    bool any = false;
    for (const auto& [name, csv] : inputs) {
      series.push_back(ReadSeries(name, csv, metric));
      for (const auto& v : series.back().values) any = any || v.has_value();
    }
    if (!any) continue;
    const std::string file = std::string(metric) + ".svg";
    const std::string svg = PlotSvg(metric, series);
    WriteFileBytes((fs::path(out_dir) / file).string(),
                   std::span<const uint8_t>(
                       reinterpret_cast<const uint8_t*>(svg.data()), svg.size()));
    plots += "![" + std::string(metric) + "](" + file + ")\n";
  }
  const std::string report = md + (plots.empty() ? "" : "\n" + plots);
  WriteFileBytes((fs::path(out_dir) / "report.md").string(),
                 std::span<const uint8_t>(
                     reinterpret_cast<const uint8_t*>(report.data()),
                     report.size()));
  return report;
}

}  // namespace lsfl
