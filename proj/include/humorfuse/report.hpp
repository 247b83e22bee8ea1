#pragma once

#include <span>
#include <string>

#include "humorfuse/experiment.hpp"

namespace humorfuse {

struct ReportArtifacts {
  std::string csv;
  std::string svg;
};

// Results table plus a grouped bar chart: one group per architecture, one bar
// per scenario, whiskers at mean +/- std (omitted when std is 0). Reports for
// different targets are refused unless facet is set, which draws one panel
// per target. Output is byte-identical for identical input.
ReportArtifacts render_report(std::span<const EvalReport> reports, bool facet = false);

}  // namespace humorfuse
