#include "steerlab/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "steerlab/error.hpp"

namespace steerlab {

void TsvTable::comment(std::string_view key, std::string_view value) {
  comments_.emplace_back(std::string(key), std::string(value));
}

void TsvTable::row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size())
    throw DimensionError("report row has " + std::to_string(cells.size()) + " cells, expected " +
                         std::to_string(columns_.size()));
  rows_.push_back(std::move(cells));
}

std::string TsvTable::str() const {
  std::string out;
  for (const auto& [k, v] : comments_) out += "# " + k + "=" + v + "\n";
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "\t" : "") + cells[i];
    out += "\n";
  };
  line(columns_);
  for (const auto& r : rows_) line(r);
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string condition_report(std::string_view condition, std::string_view config_hash,
                             const std::vector<ConditionRow>& rows) {
  TsvTable t({"target_script", "prompt", "sigma", "sign", "n_examples", "mean_accuracy", "max_accuracy",
              "n_fully_target", "n_both_empty"});
  t.comment("config_hash", config_hash);
  t.comment("condition", condition);
  for (const auto& r : rows) {
    t.row({std::string(to_string(r.target)), r.prompt, fmt(r.sigma), std::to_string(r.sign),
           std::to_string(r.report.per_example.size()), fmt(r.report.mean_accuracy), fmt(r.report.max_accuracy),
           std::to_string(r.report.n_fully_target), std::to_string(r.report.n_both_empty)});
  }
  return t.str();
}

std::string sweep_report(std::string_view config_hash, Script target, const SweepResult& sweep, int sign) {
  TsvTable t({"sigma", "mean_accuracy", "max_accuracy", "n_fully_target"});
  t.comment("config_hash", config_hash);
  t.comment("target_script", to_string(target));
  t.comment("objective", to_string(sweep.objective));
  t.comment("sign", std::to_string(sign));
  t.comment("best_sigma", fmt(sweep.best_sigma));
  for (const auto& r : sweep.rows)
    t.row({fmt(r.sigma), fmt(r.mean_accuracy), fmt(r.max_accuracy), std::to_string(r.n_fully_target)});
  return t.str();
}

std::string probe_report(std::string_view config_hash, const ProbeReport& report) {
  TsvTable t({"layer", "n_test", "accuracy"});
  t.comment("config_hash", config_hash);
  t.comment("min_accuracy", fmt(report.min_accuracy()));
  for (const auto& r : report.rows) t.row({std::to_string(r.layer), std::to_string(r.n_test), fmt(r.accuracy)});
  return t.str();
}

std::string eval_report(std::string_view config_hash, const EvalReport& report) {
  TsvTable t({"index", "accuracy"});
  t.comment("config_hash", config_hash);
  t.comment("target", report.target);
  t.comment("fold_case", report.fold_case ? "1" : "0");
  t.comment("mean_accuracy", fmt(report.mean_accuracy));
  t.comment("max_accuracy", fmt(report.max_accuracy));
  t.comment("n_fully_target", std::to_string(report.n_fully_target));
  t.comment("n_both_empty", std::to_string(report.n_both_empty));
  for (std::size_t i = 0; i < report.per_example.size(); ++i)
    t.row({std::to_string(i), fmt(report.per_example[i])});
  return t.str();
}

namespace {

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

}  // namespace

std::string line_chart_svg(std::string_view title, std::string_view x_label, std::string_view y_label,
                           const std::vector<double>& xs, const std::vector<ChartSeries>& series) {
  constexpr double W = 480, H = 320, left = 60, right = 20, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  double xmin = xs.empty() ? 0.0 : *std::min_element(xs.begin(), xs.end());
  double xmax = xs.empty() ? 1.0 : *std::max_element(xs.begin(), xs.end());
  if (xmax <= xmin) xmax = xmin + 1.0;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (1.0 - std::clamp(y, 0.0, 1.0)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
    << W << " " << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(title)
    << "</text>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = i / 4.0;
    o << "<line x1=\"" << left - 4 << "\" y1=\"" << num(py(y)) << "\" x2=\"" << left << "\" y2=\"" << num(py(y))
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << left - 8 << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << num(y)
      << "</text>\n";
  }
  for (double x : xs) {
    o << "<text x=\"" << num(px(x)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << num(x)
      << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << escape_xml(x_label)
    << "</text>\n";
  o << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << top + ph / 2 << ")\">" << escape_xml(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    const auto& ys = series[s].ys;
    const std::size_t n = std::min(xs.size(), ys.size());
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < n; ++i) o << (i ? " " : "") << num(px(xs[i])) << "," << num(py(ys[i]));
    o << "\"/>\n";
    for (std::size_t i = 0; i < n; ++i)
      o << "<circle cx=\"" << num(px(xs[i])) << "\" cy=\"" << num(py(ys[i])) << "\" r=\"3\" fill=\"" << color
        << "\"/>\n";
    o << "<text x=\"" << left + pw - 4 << "\" y=\"" << top + 14 + 16 * s << "\" text-anchor=\"end\" fill=\""
      << color << "\">" << escape_xml(series[s].label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string sweep_chart(Script target, const SweepResult& sweep) {
  std::vector<double> xs, mean, max;
  for (const auto& r : sweep.rows) {
    xs.push_back(r.sigma);
    mean.push_back(r.mean_accuracy);
    max.push_back(r.max_accuracy);
  }
  return line_chart_svg("Accuracy vs sigma (target " + std::string(to_string(target)) + ")", "sigma", "accuracy",
                        xs, {{"mean", mean}, {"max", max}});
}

std::string probe_chart(const ProbeReport& report) {
  std::vector<double> xs, ys;
  for (const auto& r : report.rows) {
    xs.push_back(static_cast<double>(r.layer));
    ys.push_back(r.accuracy);
  }
  return line_chart_svg("Probe accuracy vs layer", "decoder layer", "accuracy", xs, {{"probe", ys}});
}

}  // namespace steerlab
