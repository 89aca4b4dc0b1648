#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "steerlab/corpus.hpp"
#include "steerlab/error.hpp"
#include "steerlab/steering.hpp"
#include "steerlab/toymodel.hpp"

using namespace steerlab;

namespace {

struct Fixture {
  ToyModel model = ToyModel::build(ToyModelSpec{});
  Corpus corpus = generate_corpus(CorpusSpec{}, model.vocab(), model.spec().max_seq_len);
  CollectionPolicy policy = CollectionPolicy::for_scripts(model.vocab(), Script::A, Script::B);
  TargetScorer scorer = TargetScorer::for_script(model.vocab(), Script::B);
};

const Fixture& world() {
  static const Fixture f;
  return f;
}

ActivationRecord record(std::uint64_t id, PromptKind kind, std::vector<Vec> pooled, bool kept = true) {
  ActivationRecord r;
  r.example_id = id;
  r.prompt_kind = kind;
  r.pooled = std::move(pooled);
  r.kept = kept;
  return r;
}

std::vector<ActivationRecord> random_records(std::uint64_t seed, std::size_t n, std::size_t layers,
                                             std::size_t dim) {
  RngStream rng(seed);
  std::vector<ActivationRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto kind : {PromptKind::Src, PromptKind::Trg}) {
      std::vector<Vec> pooled;
      for (std::size_t l = 0; l < layers; ++l) {
        Vec v(dim);
        for (std::size_t d = 0; d < dim; ++d) v[d] = rng.normal() + (kind == PromptKind::Src ? 1.0 : -1.0);
        pooled.push_back(std::move(v));
      }
      out.push_back(record(i, kind, std::move(pooled), rng.uniform() < 0.8));
    }
  }
  return out;
}

}  // namespace

TEST(MeanPool, SinglePositionIsIdentity) {
  const std::vector<LayerTap> taps{{0, {Vec{1, 2}}}, {1, {Vec{3, 4}}}};
  const auto pooled = mean_pool(taps);
  ASSERT_EQ(pooled.size(), 2u);
  EXPECT_EQ(pooled[0], (Vec{1, 2}));
  EXPECT_EQ(pooled[1], (Vec{3, 4}));
}

TEST(MeanPool, AveragesPositions) {
  const std::vector<LayerTap> taps{{0, {Vec{1, 0}, Vec{3, 4}, Vec{5, 2}}}};
  EXPECT_EQ(mean_pool(taps)[0], (Vec{3, 2}));
}

TEST(MeanPool, EmptyDecodeThrows) {
  const std::vector<LayerTap> taps{{0, {}}};
  EXPECT_THROW(mean_pool(taps), Error);
  EXPECT_THROW(mean_pool(std::span<const LayerTap>{}), Error);
}

TEST(Threshold, StrictBoundary) {
  EXPECT_TRUE(passes_threshold(0.39, 0.4));
  EXPECT_FALSE(passes_threshold(0.40, 0.4));
  EXPECT_FALSE(passes_threshold(0.41, 0.4));
  EXPECT_TRUE(passes_threshold(0.0, 0.4));
}

TEST(Collect, BoundaryDistanceIsDropped) {
  const auto& w = world();
  const auto& v = w.model.vocab();
  Example ex = w.corpus.select(Split::Train, 0).front();
  ex.audio.resize(5);
  ex.truth_src = v.transcribe(ex.audio, Script::A);
  ex.truth_trg = v.transcribe(ex.audio, Script::B);
  // Two substitutions out of five characters: normalized distance 0.4 exactly.
  Example off = ex;
  off.truth_trg = v.transcribe(ex.audio, Script::B);
  auto cps = decode_utf8(off.truth_trg);
  cps[0] = cps[0] == U'я' ? U'ю' : U'я';
  cps[1] = cps[1] == U'я' ? U'ю' : U'я';
  off.truth_trg = encode_utf8(cps);
  ASSERT_DOUBLE_EQ(normalized_edit_distance(v.transcribe(ex.audio, Script::B), off.truth_trg), 0.4);

  CollectionPolicy p = w.policy;
  p.n_examples = 1;
  p.theta = 0.4;
  const std::vector<Example> only_off{off};
  EXPECT_THROW(collect(w.model, only_off, p), InsufficientExamplesError);
  p.theta = 0.41;
  const auto kept = collect(w.model, only_off, p);
  EXPECT_EQ(kept.accepted, 1u);
  EXPECT_TRUE(kept.records[0].kept && kept.records[1].kept);
}

TEST(Collect, StopsAfterNAcceptedAndPairsRecords) {
  const auto& w = world();
  const auto train = w.corpus.select(Split::Train, 0);
  const auto r = collect(w.model, train, w.policy);
  EXPECT_EQ(r.accepted, 10u);
  ASSERT_EQ(r.records.size() % 2, 0u);
  for (std::size_t i = 0; i < r.records.size(); i += 2) {
    EXPECT_EQ(r.records[i].prompt_kind, PromptKind::Src);
    EXPECT_EQ(r.records[i + 1].prompt_kind, PromptKind::Trg);
    EXPECT_EQ(r.records[i].example_id, r.records[i + 1].example_id);
    EXPECT_EQ(r.records[i].kept, r.records[i + 1].kept);
    EXPECT_EQ(r.records[i].pooled.size(), w.model.layer_count());
  }
}

TEST(Collect, InsufficientExamplesWhenPromptsAgree) {
  const auto& w = world();
  CollectionPolicy p = w.policy;
  p.prompt_trg = p.prompt_src;
  const auto train = w.corpus.select(Split::Train, 0);
  try {
    collect(w.model, train, p);
    FAIL() << "expected InsufficientExamplesError";
  } catch (const InsufficientExamplesError& e) {
    EXPECT_EQ(e.found(), 0u);
    EXPECT_EQ(e.required(), 10u);
  }
}

TEST(Collect, PolicyValidation) {
  const auto& w = world();
  CollectionPolicy p = w.policy;
  p.theta = 0.0;
  EXPECT_THROW(collect(w.model, w.corpus.select(Split::Train, 0), p), SpecError);
  p = w.policy;
  p.n_examples = 0;
  EXPECT_THROW(collect(w.model, w.corpus.select(Split::Train, 0), p), SpecError);
}

TEST(Isolate, DifferenceOfMeans) {
  const std::vector<ActivationRecord> recs{record(0, PromptKind::Src, {Vec{1, 0}}),
                                           record(0, PromptKind::Trg, {Vec{0, 1}})};
  const auto v = isolate(recs);
  ASSERT_EQ(v.layer_count(), 1u);
  EXPECT_EQ(v.vectors[0], (Vec{1, -1}));
  EXPECT_EQ(v.meta.n_src, 1u);
  EXPECT_EQ(v.meta.n_trg, 1u);
}

TEST(Isolate, IgnoresRecordsNotKept) {
  const std::vector<ActivationRecord> recs{record(0, PromptKind::Src, {Vec{1, 0}}),
                                           record(0, PromptKind::Trg, {Vec{0, 1}}),
                                           record(1, PromptKind::Src, {Vec{100, 100}}, false),
                                           record(1, PromptKind::Trg, {Vec{-100, 7}}, false)};
  EXPECT_EQ(isolate(recs).vectors[0], (Vec{1, -1}));
}

TEST(Isolate, DegenerateDirection) {
  const std::vector<ActivationRecord> recs{record(0, PromptKind::Src, {Vec{1, 0}, Vec{2, 2}}),
                                           record(0, PromptKind::Trg, {Vec{0, 1}, Vec{2, 2}})};
  try {
    isolate(recs);
    FAIL() << "expected DegenerateDirectionError";
  } catch (const DegenerateDirectionError& e) {
    EXPECT_EQ(e.layer(), 1u);
  }
}

TEST(Isolate, EmptySidesNamed) {
  const std::vector<ActivationRecord> only_src{record(0, PromptKind::Src, {Vec{1}})};
  const std::vector<ActivationRecord> only_trg{record(0, PromptKind::Trg, {Vec{1}})};
  try {
    isolate(only_src);
    FAIL();
  } catch (const EmptySideError& e) {
    EXPECT_EQ(e.side(), "TRG");
    EXPECT_NE(std::string(e.what()).find("TRG"), std::string::npos);
  }
  try {
    isolate(only_trg);
    FAIL();
  } catch (const EmptySideError& e) {
    EXPECT_EQ(e.side(), "SRC");
  }
}

TEST(Isolate, InconsistentShapes) {
  const std::vector<ActivationRecord> recs{record(0, PromptKind::Src, {Vec{1, 0}}),
                                           record(0, PromptKind::Trg, {Vec{0, 1, 2}})};
  EXPECT_THROW(isolate(recs), DimensionError);
}

TEST(Isolate, RecordOrderInvariant) {
  auto recs = random_records(3, 25, 4, 8);
  const auto base = isolate(recs);
  RngStream rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    rng.shuffle(recs);
    const auto shuffled = isolate(recs);
    EXPECT_EQ(shuffled.vectors, base.vectors);
  }
}

TEST(Isolate, ScalesLinearly) {
  auto recs = random_records(4, 10, 3, 5);
  const auto base = isolate(recs);
  for (auto& r : recs)
    for (auto& v : r.pooled) v *= 2.0;
  const auto scaled = isolate(recs);
  for (std::size_t l = 0; l < base.layer_count(); ++l)
    for (std::size_t d = 0; d < base.dim(); ++d) EXPECT_NEAR(scaled.vectors[l][d], 2.0 * base.vectors[l][d], 1e-12);
}

TEST(Isolate, TranslationInvariant) {
  auto recs = random_records(5, 10, 2, 4);
  const auto base = isolate(recs);
  const Vec shift{3.0, -1.0, 0.5, 10.0};
  for (auto& r : recs)
    for (auto& v : r.pooled) v += shift;
  const auto moved = isolate(recs);
  for (std::size_t l = 0; l < base.layer_count(); ++l)
    for (std::size_t d = 0; d < base.dim(); ++d) EXPECT_NEAR(moved.vectors[l][d], base.vectors[l][d], 1e-12);
}

TEST(Steering, RecoversPlantedDirection) {
  const auto& w = world();
  const auto v = standard_extract(w.model, w.corpus.select(Split::Train, 0), w.policy);
  ASSERT_EQ(v.layer_count(), w.model.layer_count());
  for (std::size_t l = 0; l < v.layer_count(); ++l)
    EXPECT_GE(std::abs(cosine(v.vectors[l], w.model.planted_direction())), 0.9) << "layer " << l;
  EXPECT_EQ(v.meta.n_src, 10u);
  EXPECT_EQ(v.meta.extraction_mode, ExtractionMode::Standard);
  EXPECT_EQ(v.meta.source_prompt_kind, "PROMPT_A");
}

TEST(Steering, ZeroSigmaIsBitExactNoOp) {
  const auto& w = world();
  const auto v = standard_extract(w.model, w.corpus.select(Split::Train, 0), w.policy);
  for (const auto& ex : w.corpus.select(Split::Test, 0)) {
    const auto plain = w.model.decode(ex.audio, w.policy.prompt_src);
    for (int sign : {1, -1}) {
      const auto steered = steer_decode(w.model, ex.audio, w.policy.prompt_src, v, 0.0, sign);
      ASSERT_EQ(steered.tokens, plain.tokens);
      for (std::size_t l = 0; l < plain.taps.size(); ++l) ASSERT_EQ(steered.taps[l].positions, plain.taps[l].positions);
    }
  }
}

TEST(Steering, SignConventionAndFlip) {
  const auto& w = world();
  auto v = standard_extract(w.model, w.corpus.select(Split::Train, 0), w.policy);
  const auto val = w.corpus.select(Split::Validation, 0);
  const int sign = infer_sign_convention(w.model, v, val, w.policy.prompt_src, w.scorer, 0.5);
  EXPECT_EQ(sign, -1);
  const auto good = run_condition(w.model, val, w.policy.prompt_src, w.scorer, &v, 0.5, sign);
  const auto flipped = run_condition(w.model, val, w.policy.prompt_src, w.scorer, &v, 0.5, -sign);
  const auto unsteered = run_condition(w.model, val, w.policy.prompt_src, w.scorer);
  EXPECT_GT(good.report.mean_accuracy, 0.9);
  EXPECT_LE(flipped.report.mean_accuracy, unsteered.report.mean_accuracy);
}

TEST(Steering, DimensionMismatchRejected) {
  const auto& w = world();
  ScriptVectorSet v;
  v.vectors.assign(w.model.layer_count(), Vec(w.model.hidden_dim() + 1, 1.0));
  const auto ex = w.corpus.select(Split::Test, 0).front();
  EXPECT_THROW(steer_decode(w.model, ex.audio, {}, v, 0.1, 1), DimensionError);
  v.vectors.assign(w.model.layer_count() + 1, Vec(w.model.hidden_dim(), 1.0));
  EXPECT_THROW(steer_decode(w.model, ex.audio, {}, v, 0.1, 1), DimensionError);
}

TEST(Sweep, EchoesGridAndBreaksTiesLow) {
  const auto& w = world();
  ScriptVectorSet zero;
  zero.vectors.assign(w.model.layer_count(), Vec(w.model.hidden_dim()));
  const auto val = w.corpus.select(Split::Validation, 0);
  const auto r = sweep_sigma(w.model, zero, val, w.policy.prompt_src, SweepPolicy{}, w.scorer);
  ASSERT_EQ(r.rows.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(r.rows[i].sigma, SweepPolicy{}.grid[i]);
  EXPECT_DOUBLE_EQ(r.best_sigma, 0.1);
  for (const auto& row : r.rows) EXPECT_DOUBLE_EQ(row.mean_accuracy, r.rows[0].mean_accuracy);
}

TEST(Sweep, PicksArgmax) {
  const auto& w = world();
  auto v = standard_extract(w.model, w.corpus.select(Split::Train, 0), w.policy);
  v.meta.sign_convention = -1;
  const auto val = w.corpus.select(Split::Validation, 0);
  const auto r = sweep_sigma(w.model, v, val, w.policy.prompt_src, SweepPolicy{}, w.scorer);
  double best = -1.0;
  for (const auto& row : r.rows) best = std::max(best, row.mean_accuracy);
  const auto it = std::find_if(r.rows.begin(), r.rows.end(), [&](const SweepRow& row) { return row.mean_accuracy == best; });
  EXPECT_DOUBLE_EQ(r.best_sigma, it->sigma);
}

TEST(Sweep, PolicyValidation) {
  SweepPolicy p;
  p.grid.clear();
  EXPECT_THROW(p.validate(), SpecError);
  p.grid = {0.1, -0.2};
  EXPECT_THROW(p.validate(), SpecError);
  EXPECT_EQ(parse_objective("max"), SweepObjective::MaxAccuracy);
  EXPECT_THROW(parse_objective("median"), SpecError);
}

TEST(OneShot, CloseToTenShot) {
  const auto& w = world();
  const auto train = w.corpus.select(Split::Train, 0);
  const auto ten = standard_extract(w.model, train, w.policy);
  const auto one = one_shot_extract(w.model, train, w.policy);
  EXPECT_EQ(one.meta.n_src, 1u);
  EXPECT_EQ(one.meta.extraction_mode, ExtractionMode::OneShot);
  EXPECT_GT(cosine(one.vectors.back(), ten.vectors.back()), 0.9);
}

TEST(PseudoLabel, ZeroSigmaCannotProduceTargets) {
  const auto& w = world();
  const auto base = standard_extract(w.model, w.corpus.select(Split::Train, 0), w.policy);
  EXPECT_THROW(pseudo_label_extract(w.model, base, 0.0, -1, w.corpus.select(Split::Train, 1), w.policy),
               InsufficientExamplesError);
}

TEST(PseudoLabel, AlignsWithSupervisedVectors) {
  const auto& w = world();
  const auto base = standard_extract(w.model, w.corpus.select(Split::Train, 0), w.policy);
  const auto train1 = w.corpus.select(Split::Train, 1);
  const auto pseudo = pseudo_label_extract(w.model, base, 0.3, -1, train1, w.policy);
  const auto supervised = standard_extract(w.model, train1, w.policy);
  EXPECT_EQ(pseudo.meta.extraction_mode, ExtractionMode::PseudoLabel);
  EXPECT_EQ(pseudo.meta.language_id, 1u);
  EXPECT_GT(cosine(pseudo.vectors.back(), supervised.vectors.back()), 0.9);
}

TEST(ActivationDump, RoundTripIsExact) {
  const auto& w = world();
  const auto r = collect(w.model, w.corpus.select(Split::Train, 0), w.policy);
  const auto text = serialize_activation_dump(r.records);
  const auto back = parse_activation_dump(text);
  EXPECT_EQ(back, r.records);
  EXPECT_EQ(serialize_activation_dump(back), text);
}

TEST(ActivationDump, MalformedLineNamed) {
  try {
    parse_activation_dump("{\"example_id\":0}\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  EXPECT_TRUE(parse_activation_dump("").empty());
}

TEST(VectorFile, RoundTripIsExact) {
  const auto& w = world();
  auto v = standard_extract(w.model, w.corpus.select(Split::Train, 0), w.policy);
  v.meta.sign_convention = -1;
  v.meta.config_hash = "0123456789abcdef";
  const auto bytes = serialize_vectors(v);
  const auto back = deserialize_vectors(bytes);
  EXPECT_EQ(back, v);
  EXPECT_EQ(serialize_vectors(back), bytes);

  const auto dir = std::filesystem::temp_directory_path() / "steerlab_vec_test";
  std::filesystem::remove_all(dir);
  save_vectors(v, dir / "v.stv");
  EXPECT_EQ(load_vectors(dir / "v.stv"), v);
  std::filesystem::remove_all(dir);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(deserialize_vectors(truncated), ParseError);
}
