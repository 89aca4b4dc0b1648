#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "steerlab/metrics.hpp"
#include "steerlab/probe.hpp"
#include "steerlab/steering.hpp"

namespace steerlab {

// Tab-separated table preceded by "# key=value" comment lines.
class TsvTable {
 public:
  explicit TsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void comment(std::string_view key, std::string_view value);
  // Throws DimensionError if the cell count differs from the column count.
  void row(std::vector<std::string> cells);

  std::string str() const;

 private:
  std::vector<std::pair<std::string, std::string>> comments_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

// Fixed six-decimal rendering used in every report.
std::string fmt(double v);

// One row of a condition report.
struct ConditionRow {
  Script target;
  std::string prompt;  // rendered prompt, "-" when absent
  double sigma = 0.0;  // 0 for unsteered conditions
  int sign = 0;        // 0 for unsteered conditions
  EvalReport report;
};

std::string condition_report(std::string_view condition, std::string_view config_hash,
                             const std::vector<ConditionRow>& rows);
std::string sweep_report(std::string_view config_hash, Script target, const SweepResult& sweep, int sign);
std::string probe_report(std::string_view config_hash, const ProbeReport& report);
std::string eval_report(std::string_view config_hash, const EvalReport& report);

struct ChartSeries {
  std::string label;
  std::vector<double> ys;
};

// Standalone SVG line chart with a [0, 1] y axis.
std::string line_chart_svg(std::string_view title, std::string_view x_label, std::string_view y_label,
                           const std::vector<double>& xs, const std::vector<ChartSeries>& series);

std::string sweep_chart(Script target, const SweepResult& sweep);
std::string probe_chart(const ProbeReport& report);

}  // namespace steerlab
