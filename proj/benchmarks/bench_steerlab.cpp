#include <benchmark/benchmark.h>

#include "steerlab/corpus.hpp"
#include "steerlab/metrics.hpp"
#include "steerlab/probe.hpp"
#include "steerlab/steering.hpp"
#include "steerlab/toymodel.hpp"

using namespace steerlab;

namespace {

struct World {
  ToyModel model = ToyModel::build(ToyModelSpec{});
  Corpus corpus = generate_corpus(CorpusSpec{}, model.vocab(), model.spec().max_seq_len);
  CollectionPolicy policy = CollectionPolicy::for_scripts(model.vocab(), Script::A, Script::B);
};

const World& world() {
  static const World w;
  return w;
}

std::u32string random_text(RngStream& rng, std::size_t n) {
  std::u32string s(n, U'a');
  for (auto& c : s) c = static_cast<char32_t>(U'а' + rng.below(32));
  return s;
}

}  // namespace

static void BM_EditDistance(benchmark::State& state) {
  RngStream rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_text(rng, n), b = random_text(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(edit_distance(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EditDistance)->RangeMultiplier(4)->Range(8, 512)->Complexity(benchmark::oNSquared);

static void BM_EvaluateUtf8(benchmark::State& state) {
  std::vector<std::string> hyp(100, "Привет, мир! hello"), ref(100, "привет мир");
  const auto cyr = ScriptInventory::cyrillic();
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(hyp, ref, cyr, {true}));
}
BENCHMARK(BM_EvaluateUtf8);

static void BM_BuildModel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(ToyModel::build(ToyModelSpec{}));
}
BENCHMARK(BM_BuildModel)->Unit(benchmark::kMillisecond);

static void BM_Decode(benchmark::State& state) {
  const auto& w = world();
  const auto ex = w.corpus.select(Split::Test, 0).front();
  for (auto _ : state) benchmark::DoNotOptimize(w.model.decode(ex.audio, w.policy.prompt_src));
}
BENCHMARK(BM_Decode)->Unit(benchmark::kMicrosecond);

static void BM_SteeredDecode(benchmark::State& state) {
  const auto& w = world();
  const auto vectors = standard_extract(w.model, w.corpus.select(Split::Train, 0), w.policy);
  const auto ex = w.corpus.select(Split::Test, 0).front();
  for (auto _ : state) benchmark::DoNotOptimize(steer_decode(w.model, ex.audio, w.policy.prompt_src, vectors, 0.2, -1));
}
BENCHMARK(BM_SteeredDecode)->Unit(benchmark::kMicrosecond);

static void BM_Collect(benchmark::State& state) {
  const auto& w = world();
  CollectionPolicy p = w.policy;
  p.n_examples = static_cast<std::size_t>(state.range(0));
  const auto train = w.corpus.select(Split::Train, 0);
  for (auto _ : state) benchmark::DoNotOptimize(collect(w.model, train, p));
}
BENCHMARK(BM_Collect)->Arg(1)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

static void BM_IsolateAndProbe(benchmark::State& state) {
  const auto& w = world();
  CollectionPolicy p = w.policy;
  p.n_examples = 50;
  const auto records = collect(w.model, w.corpus.select(Split::Train, 0), p).records;
  for (auto _ : state) {
    const auto probe = fit_probe(records);
    benchmark::DoNotOptimize(probe_accuracy(probe, records));
  }
}
BENCHMARK(BM_IsolateAndProbe)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
