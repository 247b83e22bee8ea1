#include "humorfuse/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

#include "humorfuse/error.hpp"

namespace humorfuse {

namespace {

constexpr double kBarWidth = 18.0;
constexpr double kGroupGap = 24.0;
constexpr double kLeft = 56.0;
constexpr double kTop = 40.0;
constexpr double kPlotHeight = 220.0;
constexpr double kPanelHeight = kTop + kPlotHeight + 48.0;
constexpr double kLegendHeight = 28.0;

constexpr const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::size_t scenario_slot(Scenario s) {
  return static_cast<std::size_t>(std::find(std::begin(kAllScenarios), std::end(kAllScenarios), s) -
                                  std::begin(kAllScenarios));
}

std::size_t architecture_slot(Architecture a) {
  return static_cast<std::size_t>(
      std::find(std::begin(kAllArchitectures), std::end(kAllArchitectures), a) -
      std::begin(kAllArchitectures));
}

double y_of(double f1, double panel_top) {
  return panel_top + kTop + kPlotHeight * (1.0 - std::clamp(f1, 0.0, 1.0));
}

}  // namespace

ReportArtifacts render_report(std::span<const EvalReport> reports, bool facet) {
  if (reports.empty()) throw Error(ErrorCategory::Validation, "report: no evaluation reports");

  // target -> (architecture slot, scenario slot) -> report
  std::map<std::string, std::map<std::pair<std::size_t, std::size_t>, const EvalReport*>> panels;
  for (const auto& r : reports) {
    auto& cells = panels[r.plan.target];
    const auto key = std::pair{architecture_slot(r.config.architecture), scenario_slot(r.plan.scenario)};
    if (!cells.emplace(key, &r).second) {
      throw Error(ErrorCategory::Duplicate,
                  "report: two runs for " + std::string(to_string(r.config.architecture)) + "/" +
                      std::string(to_string(r.plan.scenario)) + " on '" + r.plan.target + "'");
    }
  }
  if (panels.size() > 1 && !facet) {
    std::string targets;
    for (const auto& [t, _] : panels) targets += (targets.empty() ? "" : ", ") + t;
    throw Error(ErrorCategory::Validation,
                "report: runs have different targets (" + targets + "); pass --facet to draw one panel each");
  }

  ReportArtifacts out;
  out.csv = report_csv_header() + "\n";
  std::vector<const EvalReport*> ordered;
  for (const auto& [_, cells] : panels) {
    for (const auto& [__, r] : cells) ordered.push_back(r);
  }
  for (const auto* r : ordered) out.csv += report_csv_row(*r) + "\n";

  // Scenarios present anywhere decide bar slots so panels line up.
  std::set<std::size_t> scenario_set;
  std::set<std::size_t> arch_set;
  for (const auto* r : ordered) {
    scenario_set.insert(scenario_slot(r->plan.scenario));
    arch_set.insert(architecture_slot(r->config.architecture));
  }
  const std::vector<std::size_t> scenarios(scenario_set.begin(), scenario_set.end());
  const std::vector<std::size_t> archs(arch_set.begin(), arch_set.end());
  const double group_width = kBarWidth * static_cast<double>(scenarios.size());
  const double width = kLeft + static_cast<double>(archs.size()) * (group_width + kGroupGap) + 16.0;
  const double height = kLegendHeight + kPanelHeight * static_cast<double>(panels.size());

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
         num(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<metadata>";
  for (const auto* r : ordered) svg += escape(r->run_id) + ":" + escape(r->manifest_hash) + ";";
  svg += "</metadata>\n";

  // Legend.
  double lx = kLeft;
  for (std::size_t s : scenarios) {
    svg += "<rect x=\"" + num(lx) + "\" y=\"8\" width=\"10\" height=\"10\" fill=\"" + kPalette[s] + "\"/>";
    svg += "<text x=\"" + num(lx + 14) + "\" y=\"17\">" + std::string(to_string(kAllScenarios[s])) +
           "</text>\n";
    lx += 14.0 + 7.0 * static_cast<double>(to_string(kAllScenarios[s]).size()) + 12.0;
  }

  double panel_top = kLegendHeight;
  for (const auto& [target, cells] : panels) {
    svg += "<g class=\"panel\" data-target=\"" + escape(target) + "\">\n";
    svg += "<text x=\"" + num(kLeft) + "\" y=\"" + num(panel_top + 24) + "\" font-weight=\"bold\">target: " +
           escape(target) + "</text>\n";
    // Axis and ticks at 0.0, 0.2, ..., 1.0.
    const double x_axis_end = width - 16.0;
    for (int tick = 0; tick <= 5; ++tick) {
      const double v = tick / 5.0;
      const double y = y_of(v, panel_top);
      svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x_axis_end) + "\" y2=\"" +
             num(y) + "\" stroke=\"#dddddd\"/>";
      svg += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + num(v) +
             "</text>\n";
    }
    svg += "<text x=\"14\" y=\"" + num(panel_top + kTop + kPlotHeight / 2) +
           "\" transform=\"rotate(-90 14 " + num(panel_top + kTop + kPlotHeight / 2) +
           ")\" text-anchor=\"middle\">macro F1</text>\n";

    for (std::size_t g = 0; g < archs.size(); ++g) {
      const double gx = kLeft + kGroupGap / 2 + static_cast<double>(g) * (group_width + kGroupGap);
      for (std::size_t b = 0; b < scenarios.size(); ++b) {
        auto it = cells.find({archs[g], scenarios[b]});
        if (it == cells.end()) continue;
        const EvalReport& r = *it->second;
        const double x = gx + static_cast<double>(b) * kBarWidth;
        const double top = y_of(r.mean, panel_top);
        const double base = y_of(0.0, panel_top);
        svg += "<rect class=\"bar\" x=\"" + num(x + 1) + "\" y=\"" + num(top) + "\" width=\"" +
               num(kBarWidth - 2) + "\" height=\"" + num(base - top) + "\" fill=\"" + kPalette[scenarios[b]] +
               "\"><title>" + escape(r.run_id) + " " + num(r.mean) + "</title></rect>\n";
        if (r.std > 0.0) {
          const double cx = x + kBarWidth / 2;
          const double hi = y_of(r.mean + r.std, panel_top);
          const double lo = y_of(r.mean - r.std, panel_top);
          svg += "<g class=\"whisker\" stroke=\"#222222\">";
          svg += "<line x1=\"" + num(cx) + "\" y1=\"" + num(hi) + "\" x2=\"" + num(cx) + "\" y2=\"" + num(lo) + "\"/>";
          svg += "<line x1=\"" + num(cx - 4) + "\" y1=\"" + num(hi) + "\" x2=\"" + num(cx + 4) + "\" y2=\"" +
                 num(hi) + "\"/>";
          svg += "<line x1=\"" + num(cx - 4) + "\" y1=\"" + num(lo) + "\" x2=\"" + num(cx + 4) + "\" y2=\"" +
                 num(lo) + "\"/>";
          svg += "</g>\n";
        }
      }
      svg += "<text x=\"" + num(gx + group_width / 2) + "\" y=\"" + num(panel_top + kTop + kPlotHeight + 16) +
             "\" text-anchor=\"middle\">" + std::string(to_string(kAllArchitectures[archs[g]])) + "</text>\n";
    }
    svg += "</g>\n";
    panel_top += kPanelHeight;
  }
  svg += "</svg>\n";
  out.svg = std::move(svg);
  return out;
}

}  // namespace humorfuse
