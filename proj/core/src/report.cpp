// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "searchrl/harness.hpp"

namespace searchrl {

namespace {

using nlohmann::json;

struct Series {
  std::string label;
  std::string color;
  std::vector<double> values;
};

// Minimal self-contained SVG line chart; no plotting backend required.
void write_line_chart(const std::string& path, const std::string& title,
                      const std::vector<Series>& series) {
  const double w = 720, h = 400, ml = 60, mr = 20, mt = 40, mb = 40;
  double lo = 0.0, hi = 1.0;
  bool any = false;
  for (const Series& s : series) {
    for (double v : s.values) {
      if (!any) {
        lo = hi = v;
        any = true;
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!any) return;
  if (hi - lo < 1e-12) {
    hi += 1.0;
    lo -= 1.0;
  }
  std::size_t n = 0;
  for (const Series& s : series) n = std::max(n, s.values.size());
  if (n < 2) n = 2;

  auto x_at = [&](std::size_t i, std::size_t len) {
    return ml + (w - ml - mr) * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(len - 1, 1));
  };
  auto y_at = [&](double v) { return h - mb - (h - mt - mb) * (v - lo) / (hi - lo); };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  svg << "<rect width='100%' height='100%' fill='white'/>\n";
  svg << "<text x='" << w / 2 << "' y='20' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";
  svg << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
      << "' stroke='black'/>\n";
  svg << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
      << "' stroke='black'/>\n";
  svg << "<text x='8' y='" << y_at(hi) + 4 << "' font-size='11'>" << hi << "</text>\n";
  svg << "<text x='8' y='" << y_at(lo) + 4 << "' font-size='11'>" << lo << "</text>\n";

  double legend_y = mt;
  for (const Series& s : series) {
    if (s.values.empty()) continue;
    svg << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      svg << x_at(i, s.values.size()) << "," << y_at(s.values[i]) << " ";
    }
    svg << "'/>\n";
    svg << "<text x='" << w - mr - 150 << "' y='" << legend_y << "' font-size='12' fill='"
        << s.color << "'>" << s.label << "</text>\n";
    legend_y += 16;
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot write " + path);
  out << svg.str();
}

void write_bar_chart(const std::string& path, const std::string& title,
                     const std::vector<std::pair<std::string, double>>& bars) {
  if (bars.empty()) return;
  const double w = 720, h = 400, ml = 60, mr = 20, mt = 40, mb = 60;
  double hi = 1.0;
  for (const auto& [label, v] : bars) hi = std::max(hi, v);

  double bw = (w - ml - mr) / static_cast<double>(bars.size());
  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  svg << "<rect width='100%' height='100%' fill='white'/>\n";
  svg << "<text x='" << w / 2 << "' y='20' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    double bh = (h - mt - mb) * bars[i].second / hi;
    double x = ml + bw * static_cast<double>(i);
    svg << "<rect x='" << x + 2 << "' y='" << h - mb - bh << "' width='" << bw - 4
        << "' height='" << bh << "' fill='steelblue'/>\n";
    svg << "<text x='" << x + bw / 2 << "' y='" << h - mb + 16
        << "' text-anchor='middle' font-size='11'>" << bars[i].first << "</text>\n";
    svg << "<text x='" << x + bw / 2 << "' y='" << h - mb - bh - 4
        << "' text-anchor='middle' font-size='10'>" << bars[i].second << "</text>\n";
  }
  svg << "</svg>\n";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot write " + path);
  out << svg.str();
}

}  // namespace

std::vector<std::string> write_report(const std::string& run_dir, const std::string& out_dir) {
  if (!std::filesystem::exists(run_dir)) {
    throw std::runtime_error("report: run directory not found: " + run_dir);
  }
  std::vector<StepMetrics> metrics = load_metrics(run_dir + "/metrics.jsonl");
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;

  std::string csv_path = out_dir + "/report.csv";
  {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("report: cannot write " + csv_path);
    csv << "step,mean_reward,mean_f1,mean_atom_reward,mean_tool_calls,alpha,entropy,"
           "window_mean,kl_mean,clip_fraction,interventions,eval_f1\n";
    csv.precision(17);
    for (const StepMetrics& m : metrics) {
      csv << m.step << ',' << m.mean_reward << ',' << m.mean_f1 << ',' << m.mean_atom_reward
          << ',' << m.mean_tool_calls << ',' << m.alpha << ',' << m.entropy << ','
          << m.window_mean << ',' << m.kl_mean << ',' << m.clip_fraction << ','
          << m.interventions << ',';
      if (m.eval_f1) csv << *m.eval_f1;
      csv << "\n";
    }
  }
  written.push_back(csv_path);

  auto column = [&](auto getter) {
    std::vector<double> v;
    v.reserve(metrics.size());
    for (const StepMetrics& m : metrics) v.push_back(getter(m));
    return v;
  };
  if (!metrics.empty()) {
    std::string p = out_dir + "/reward_curve.svg";
    write_line_chart(p, "reward per step",
                     {{"mean reward", "crimson", column([](auto& m) { return m.mean_reward; })},
                      {"mean F1", "seagreen", column([](auto& m) { return m.mean_f1; })},
                      {"mean atom reward", "darkorange",
                       column([](auto& m) { return m.mean_atom_reward; })}});
    written.push_back(p);
    p = out_dir + "/entropy_curve.svg";
    write_line_chart(p, "policy entropy per step",
                     {{"entropy", "navy", column([](auto& m) { return m.entropy; })},
                      {"window mean", "slategray",
                       column([](auto& m) { return m.window_mean; })}});
    written.push_back(p);
    p = out_dir + "/alpha_curve.svg";
    write_line_chart(p, "curriculum coefficient",
                     {{"alpha", "purple", column([](auto& m) { return m.alpha; })}});
    written.push_back(p);
  }

  std::string traj_path = run_dir + "/trajectories.jsonl";
  if (std::filesystem::exists(traj_path)) {
    std::map<std::size_t, double> hist;
    std::ifstream in(traj_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;
      hist[j.value("toolCalls", std::size_t{0})] += 1.0;
    }
    std::vector<std::pair<std::string, double>> bars;
    if (!hist.empty()) {
      std::size_t max_calls = hist.rbegin()->first;
      for (std::size_t c = 0; c <= max_calls; ++c) {
        bars.emplace_back(std::to_string(c), hist.count(c) ? hist[c] : 0.0);
      }
      std::string p = out_dir + "/tool_calls_hist.svg";
      write_bar_chart(p, "tool calls per trajectory", bars);
      written.push_back(p);
    }
  }
  return written;
}

}  // namespace searchrl
