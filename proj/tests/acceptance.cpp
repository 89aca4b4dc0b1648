// Acceptance checks on the default toy world. Prints one PASS/FAIL line per
// criterion and exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "steerlab/experiment.hpp"
#include "steerlab/metrics.hpp"
#include "steerlab/probe.hpp"
#include "steerlab/steering.hpp"

using namespace steerlab;

namespace {

// Tolerances.
constexpr double kFinalLayerCosine = 0.9;
constexpr double kEveryLayerCosine = 0.7;
constexpr double kDirectionSeconds = 10.0;
constexpr double kSteeredAccuracy = 0.9;
constexpr double kUnsteeredAccuracy = 0.1;
constexpr double kSteeringSeconds = 30.0;
constexpr double kOneShotGap = 0.15;
constexpr double kZeroShotAccuracy = 0.5;
constexpr double kProbeAccuracy = 0.95;
constexpr std::size_t kProbeRecordsPerSide = 50;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Check {
  std::string id;
  bool pass = false;
  std::string detail;
};

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct Setup {
  ExperimentConfig cfg;
  ToyModel model;
  Corpus corpus;
  CollectionPolicy policy;
  TargetScorer scorer;
  std::vector<Example> train, validation, test;
};

Setup make_setup() {
  ExperimentConfig cfg;
  World w = World::build(cfg);
  auto policy = cfg.collection_policy(w.model.vocab());
  auto scorer = TargetScorer::for_script(w.model.vocab(), cfg.target_script);
  auto train = w.corpus.select(Split::Train, 0);
  auto validation = w.corpus.select(Split::Validation, 0);
  auto test = w.corpus.select(Split::Test, 0);
  return {cfg,    std::move(w.model), std::move(w.corpus), policy, scorer, std::move(train), std::move(validation),
          std::move(test)};
}

Check direction_recovery() {
  const auto t0 = Clock::now();
  const Setup s = make_setup();
  const auto v = standard_extract(s.model, s.train, s.policy);
  const double elapsed = seconds_since(t0);
  double worst = 1.0;
  std::string per_layer;
  for (std::size_t l = 0; l < v.layer_count(); ++l) {
    const double c = std::abs(cosine(v.vectors[l], s.model.planted_direction()));
    worst = std::min(worst, c);
    per_layer += (l ? "," : "") + num(c);
  }
  const double final_c = std::abs(cosine(v.vectors.back(), s.model.planted_direction()));
  return {"AC1 direction recovery", final_c >= kFinalLayerCosine && worst >= kEveryLayerCosine && elapsed < kDirectionSeconds,
          "|cos| per layer [" + per_layer + "] (final >= " + num(kFinalLayerCosine, 2) + ", all >= " +
              num(kEveryLayerCosine, 2) + "), " + num(elapsed, 2) + " s < " + num(kDirectionSeconds, 0) + " s"};
}

struct SteeringRun {
  ScriptVectorSet vectors;
  double sigma = 0.0;
  int sign = 1;
};

SteeringRun steering_vectors(const Setup& s) {
  SteeringRun r;
  r.vectors = standard_extract(s.model, s.train, s.policy);
  const double probe_sigma = *std::max_element(s.cfg.sweep.grid.begin(), s.cfg.sweep.grid.end());
  r.sign = infer_sign_convention(s.model, r.vectors, s.validation, s.policy.prompt_src, s.scorer, probe_sigma);
  r.vectors.meta.sign_convention = r.sign;
  r.sigma = sweep_sigma(s.model, r.vectors, s.validation, s.policy.prompt_src, s.cfg.sweep, s.scorer).best_sigma;
  return r;
}

Check steering_efficacy() {
  const auto t0 = Clock::now();
  const Setup s = make_setup();
  const SteeringRun r = steering_vectors(s);
  const double steered =
      run_condition(s.model, s.test, s.policy.prompt_src, s.scorer, &r.vectors, r.sigma, r.sign).report.mean_accuracy;
  const double unsteered = run_condition(s.model, s.test, s.policy.prompt_src, s.scorer).report.mean_accuracy;
  const double elapsed = seconds_since(t0);
  return {"AC2 steering efficacy",
          s.test.size() == 100 && steered >= kSteeredAccuracy && unsteered <= kUnsteeredAccuracy && elapsed < kSteeringSeconds,
          "sigma " + num(r.sigma, 2) + " sign " + std::to_string(r.sign) + ": steered " + num(steered) + " >= " +
              num(kSteeredAccuracy, 2) + ", unsteered " + num(unsteered) + " <= " + num(kUnsteeredAccuracy, 2) +
              " on " + std::to_string(s.test.size()) + " test examples, " + num(elapsed, 2) + " s < " +
              num(kSteeringSeconds, 0) + " s"};
}

Check one_shot_sufficiency() {
  const Setup s = make_setup();
  const SteeringRun r = steering_vectors(s);
  auto one = one_shot_extract(s.model, s.train, s.policy);
  one.meta.sign_convention = r.sign;
  const double ten_acc =
      run_condition(s.model, s.test, s.policy.prompt_src, s.scorer, &r.vectors, r.sigma, r.sign).report.mean_accuracy;
  const double one_acc =
      run_condition(s.model, s.test, s.policy.prompt_src, s.scorer, &one, r.sigma, r.sign).report.mean_accuracy;
  return {"AC3 one-shot sufficiency", std::abs(one_acc - ten_acc) <= kOneShotGap,
          "one-shot " + num(one_acc) + " vs 10-shot " + num(ten_acc) + " at sigma " + num(r.sigma, 2) +
              ", gap <= " + num(kOneShotGap, 2)};
}

Check zero_shot_transfer() {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::PseudoLabel;
  const World w = World::build(cfg);
  const auto t = run_transfer(cfg, w, true);
  const double zero = t.zero_shot.report.mean_accuracy;
  const double pseudo = t.pseudo_label->report.mean_accuracy;
  return {"AC4 zero-shot transfer", zero >= kZeroShotAccuracy && pseudo >= zero,
          "language 0 -> 1: zero-shot " + num(zero) + " >= " + num(kZeroShotAccuracy, 2) + " (sigma " +
              num(t.zero_shot.sigma, 2) + "), pseudo-label " + num(pseudo) + " >= zero-shot (sigma " +
              num(t.pseudo_label->sigma, 2) + ")"};
}

Check probe_separability() {
  ExperimentConfig cfg;
  const World w = World::build(cfg);
  const auto p = run_probe(cfg, w);
  std::string per_layer;
  bool sizes_ok = true;
  for (const auto& row : p.report.rows) {
    per_layer += (row.layer ? "," : "") + num(row.accuracy);
    sizes_ok &= row.n_test == 2 * kProbeRecordsPerSide;
  }
  return {"AC5 probe separability", sizes_ok && p.report.min_accuracy() >= kProbeAccuracy,
          "accuracy per layer [" + per_layer + "] >= " + num(kProbeAccuracy, 2) + " on " +
              std::to_string(kProbeRecordsPerSide) + "+" + std::to_string(kProbeRecordsPerSide) + " held-out records"};
}

std::size_t recursive_oracle(std::u32string_view a, std::u32string_view b, std::vector<std::size_t>& memo,
                             std::size_t i, std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  auto& slot = memo[i * (b.size() + 1) + j];
  if (slot != static_cast<std::size_t>(-1)) return slot;
  return slot = std::min({recursive_oracle(a, b, memo, i + 1, j + 1) + (a[i] == b[j] ? 0 : 1),
                          recursive_oracle(a, b, memo, i + 1, j) + 1, recursive_oracle(a, b, memo, i, j + 1) + 1});
}

Check metric_oracle() {
  std::vector<std::u32string> strings{U""}, frontier{U""};
  for (int len = 1; len <= 6; ++len) {
    std::vector<std::u32string> next;
    for (const auto& s : frontier)
      for (char32_t c : std::u32string_view(U"abc")) next.push_back(s + c);
    strings.insert(strings.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  std::size_t pairs = 0, mismatches = 0;
  for (const auto& a : strings)
    for (const auto& b : strings) {
      std::vector<std::size_t> memo((a.size() + 1) * (b.size() + 1), static_cast<std::size_t>(-1));
      const std::size_t d = recursive_oracle(a, b, memo, 0, 0);
      const double want = a.empty() && b.empty() ? 0.0 : static_cast<double>(d) / std::max(a.size(), b.size());
      mismatches += edit_distance(a, b) != d || normalized_edit_distance(a, b) != want;
      ++pairs;
    }
  const bool kitten = normalized_edit_distance("kitten", "sitting") == 3.0 / 7.0;
  const bool boundary = passes_threshold(0.39, 0.4) && !passes_threshold(0.40, 0.4);
  return {"AC6 metric oracle equivalence", mismatches == 0 && kitten && boundary,
          std::to_string(pairs) + " pairs, " + std::to_string(mismatches) + " mismatches; kitten/sitting 3/7 " +
              (kitten ? "exact" : "wrong") + "; theta 0.4 keeps 0.39 and drops 0.40: " + (boundary ? "yes" : "no")};
}

Check invariance_suite() {
  const Setup s = make_setup();
  const SteeringRun r = steering_vectors(s);

  bool zero_noop = true;
  for (const auto& ex : s.test) {
    const auto plain = s.model.decode(ex.audio, s.policy.prompt_src);
    const auto steered = steer_decode(s.model, ex.audio, s.policy.prompt_src, r.vectors, 0.0, r.sign);
    zero_noop &= plain.tokens == steered.tokens;
    for (std::size_t l = 0; l < plain.taps.size(); ++l) zero_noop &= plain.taps[l].positions == steered.taps[l].positions;
  }

  auto records = collect(s.model, s.train, s.policy).records;
  const auto base = isolate(records);
  RngStream rng(2024);
  bool order = true;
  for (int i = 0; i < 5; ++i) {
    rng.shuffle(records);
    order &= isolate(records).vectors == base.vectors;
  }

  const auto probe_policy = s.cfg.probe_policy(s.model.vocab());
  auto train = collect(s.model, s.train, probe_policy).records;
  auto test = collect(s.model, s.test, probe_policy).records;
  auto decisions = [](const ProbeSet& p, const std::vector<ActivationRecord>& recs) {
    std::vector<PromptKind> out;
    for (const auto& rec : recs)
      for (std::size_t l = 0; l < p.layer_count(); ++l) out.push_back(probe_predict(p, rec.pooled[l], l));
    return out;
  };
  const ProbeSet probe = fit_probe(train);
  const auto before = decisions(probe, test);
  bool scaling = true;
  for (double lambda : {0.01, 3.0, 250.0}) {
    ProbeSet q = probe;
    for (auto& d : q.directions) d *= lambda;
    scaling &= decisions(q, test) == before;
  }
  Vec shift(s.model.hidden_dim());
  for (std::size_t d = 0; d < shift.dim(); ++d) shift[d] = rng.normal() * 5.0;
  for (auto* set : {&train, &test})
    for (auto& rec : *set)
      for (auto& v : rec.pooled) v += shift;
  const bool translation = decisions(fit_probe(train), test) == before;

  const bool repeat = reproduce_artifacts(s.cfg, true) == reproduce_artifacts(s.cfg, true);

  const bool pass = zero_noop && order && scaling && translation && repeat;
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  return {"AC7 identity/invariance suite", pass,
          std::string("sigma=0 bit-exact: ") + yn(zero_noop) + "; isolate order-invariant: " + yn(order) +
              "; probe scale-invariant: " + yn(scaling) + "; probe translation-invariant: " + yn(translation) +
              "; repeated runs byte-identical: " + yn(repeat)};
}

}  // namespace

int main() {
  const std::vector<std::function<Check()>> checks{direction_recovery, steering_efficacy, one_shot_sufficiency,
                                                   zero_shot_transfer, probe_separability, metric_oracle,
                                                   invariance_suite};
  int failures = 0;
  for (const auto& check : checks) {
    Check c;
    try {
      c = check();
    } catch (const std::exception& e) {
      c = {"check", false, std::string("threw: ") + e.what()};
    }
    if (!c.pass) ++failures;
    std::printf("%s %s: %s\n", c.pass ? "PASS" : "FAIL", c.id.c_str(), c.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(checks.size()) - failures, checks.size());
  return failures == 0 ? 0 : 1;
}
