#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "steerlab/numerics.hpp"
#include "steerlab/steering.hpp"

namespace steerlab {

// Difference-of-means linear probe: score = sigmoid(r_l . (x - mu_l)); a
// score above the threshold predicts the SRC class.
struct ProbeSet {
  std::vector<Vec> directions;  // r_l from isolate()
  std::vector<Vec> means;       // mu_l over all training records
  double threshold = 0.5;

  std::size_t layer_count() const noexcept { return directions.size(); }
};

// Uses kept records only; SRC and TRG prompt kinds are the two classes.
// Throws EmptySideError or DegenerateDirectionError via isolate().
ProbeSet fit_probe(std::span<const ActivationRecord> train);

// Throws DimensionError on a layer or dim mismatch.
double probe_score(const ProbeSet& probe, const Vec& x, std::size_t layer);
PromptKind probe_predict(const ProbeSet& probe, const Vec& x, std::size_t layer);

struct ProbeLayerRow {
  std::size_t layer = 0;
  std::size_t n_test = 0;
  double accuracy = 0.0;
};

struct ProbeReport {
  std::vector<ProbeLayerRow> rows;

  double min_accuracy() const noexcept;
};

// Fraction of records whose predicted class equals prompt_kind, per layer.
// Uses kept records; throws Error on an empty test set.
ProbeReport probe_accuracy(const ProbeSet& probe, std::span<const ActivationRecord> test);

}  // namespace steerlab
