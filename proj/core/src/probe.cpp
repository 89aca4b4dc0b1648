#include "steerlab/probe.hpp"

#include <algorithm>

#include "steerlab/error.hpp"

namespace steerlab {

ProbeSet fit_probe(std::span<const ActivationRecord> train) {
  ProbeSet probe;
  probe.directions = isolate(train).vectors;

  const std::size_t layers = probe.directions.size();
  const std::size_t dim = probe.directions.front().dim();
  std::size_t n = 0;
  probe.means.assign(layers, Vec(dim));
  for (const ActivationRecord& r : train) {
    if (!r.kept) continue;
    ++n;
    for (std::size_t l = 0; l < layers; ++l) probe.means[l] += r.pooled[l];
  }
  for (Vec& mu : probe.means) mu *= 1.0 / static_cast<double>(n);
  return probe;
}

double probe_score(const ProbeSet& probe, const Vec& x, std::size_t layer) {
  if (layer >= probe.layer_count())
    throw DimensionError("probe has no layer " + std::to_string(layer));
  return sigmoid(dot(probe.directions[layer], x - probe.means[layer]));
}

PromptKind probe_predict(const ProbeSet& probe, const Vec& x, std::size_t layer) {
  return probe_score(probe, x, layer) > probe.threshold ? PromptKind::Src : PromptKind::Trg;
}

double ProbeReport::min_accuracy() const noexcept {
  double m = 1.0;
  for (const auto& row : rows) m = std::min(m, row.accuracy);
  return m;
}

ProbeReport probe_accuracy(const ProbeSet& probe, std::span<const ActivationRecord> test) {
  std::vector<const ActivationRecord*> kept;
  for (const ActivationRecord& r : test)
    if (r.kept) kept.push_back(&r);
  if (kept.empty()) throw Error("probe_accuracy: empty test set");

  ProbeReport report;
  for (std::size_t l = 0; l < probe.layer_count(); ++l) {
    std::size_t correct = 0;
    for (const ActivationRecord* r : kept) {
      if (r->pooled.size() != probe.layer_count())
        throw DimensionError("probe_accuracy: record layer count does not match probe");
      if (probe_predict(probe, r->pooled[l], l) == r->prompt_kind) ++correct;
    }
    report.rows.push_back({l, kept.size(), static_cast<double>(correct) / static_cast<double>(kept.size())});
  }
  return report;
}

}  // namespace steerlab
