#include <gtest/gtest.h>

#include "steerlab/corpus.hpp"
#include "steerlab/error.hpp"
#include "steerlab/toymodel.hpp"

using namespace steerlab;

namespace {

ToyModelSpec noiseless() {
  ToyModelSpec s;
  s.noise_scale = 0.0;
  return s;
}

std::vector<TokenId> phonemes(const Vocab& v, std::initializer_list<std::size_t> ids) {
  std::vector<TokenId> out;
  for (auto i : ids) out.push_back(v.phoneme(i));
  return out;
}

SteeringInjection along_u(const ToyModel& m, double strength, int sign) {
  return {std::vector<Vec>(m.layer_count(), m.planted_direction()), strength, sign};
}

}  // namespace

TEST(ToyModelSpec, Validation) {
  EXPECT_NO_THROW(ToyModelSpec{}.validate());
  ToyModelSpec s;
  s.hidden_dim = s.phoneme_count + 3;
  EXPECT_THROW(s.validate(), SpecError);
  s = {};
  s.decoder_layers = 1;
  EXPECT_THROW(s.validate(), SpecError);
  s = {};
  s.noise_scale = -0.1;
  EXPECT_THROW(s.validate(), SpecError);
  s = {};
  s.phoneme_count = 53;
  s.hidden_dim = 64;
  EXPECT_THROW(s.validate(), SpecError);
  EXPECT_THROW(ToyModel::build(s), SpecError);
}

TEST(Vocab, LayoutAndNames) {
  const Vocab v(20);
  EXPECT_EQ(v.size(), 65u);
  EXPECT_EQ(v.name(v.phoneme(3)), "p3");
  EXPECT_EQ(v.name(v.character(Script::A, 3)), "a3");
  EXPECT_EQ(v.name(v.character(Script::B, 3)), "b3");
  EXPECT_EQ(v.find("PROMPT_B"), v.prompt(Script::B));
  EXPECT_EQ(v.find("BOS"), v.bos());
  EXPECT_THROW(v.find("p20"), UnknownTokenError);
  EXPECT_THROW(v.find("nope"), UnknownTokenError);
  EXPECT_EQ(v.script_of(v.character(Script::B, 0)), Script::B);
  EXPECT_FALSE(v.script_of(v.eos()).has_value());
  EXPECT_EQ(v.transcribe(phonemes(v, {0, 1, 2}), Script::A), "abc");
  EXPECT_EQ(v.transcribe(phonemes(v, {0, 1, 2}), Script::B), "абв");
  EXPECT_FALSE(v.inventory(Script::A).overlaps(v.inventory(Script::B)));
}

TEST(ToyModel, BuildIsDeterministic) {
  const auto a = ToyModel::build(ToyModelSpec{});
  const auto b = ToyModel::build(ToyModelSpec{});
  EXPECT_EQ(a.weights(), b.weights());
  ToyModelSpec other;
  other.seed = 1;
  EXPECT_FALSE(ToyModel::build(other).weights() == a.weights());
  EXPECT_NEAR(norm(a.planted_direction()), 1.0, 1e-12);
}

TEST(ToyModel, NoiselessDecodeFollowsPrompt) {
  const auto m = ToyModel::build(noiseless());
  const auto& v = m.vocab();
  const auto audio = phonemes(v, {4, 0, 11, 7, 19, 2});
  const TokenId pa = v.prompt(Script::A), pb = v.prompt(Script::B);
  EXPECT_EQ(m.decode(audio, std::span(&pa, 1)).transcript, v.transcribe(audio, Script::A));
  EXPECT_EQ(m.decode(audio, std::span(&pb, 1)).transcript, v.transcribe(audio, Script::B));
  EXPECT_EQ(m.decode(audio, {}).transcript, v.transcribe(audio, Script::A));
  const auto r = m.decode(audio, std::span(&pb, 1));
  EXPECT_TRUE(r.hit_eos);
  EXPECT_EQ(r.tokens.size(), audio.size());
}

TEST(ToyModel, DefaultModelTranscribesCorpus) {
  const auto m = ToyModel::build(ToyModelSpec{});
  const auto& v = m.vocab();
  const auto corpus = generate_corpus(CorpusSpec{}, v, m.spec().max_seq_len);
  const TokenId pa = v.prompt(Script::A), pb = v.prompt(Script::B);
  for (const auto& ex : corpus.select(Split::Test, 0)) {
    EXPECT_EQ(m.decode(ex.audio, std::span(&pa, 1)).transcript, ex.truth_src);
    EXPECT_EQ(m.decode(ex.audio, std::span(&pb, 1)).transcript, ex.truth_trg);
  }
}

TEST(ToyModel, TapsCoverGeneratedPositions) {
  const auto m = ToyModel::build(ToyModelSpec{});
  const auto audio = phonemes(m.vocab(), {1, 2, 3, 4, 5});
  const auto r = m.decode(audio, {});
  ASSERT_EQ(r.taps.size(), m.layer_count());
  for (std::size_t l = 0; l < r.taps.size(); ++l) {
    EXPECT_EQ(r.taps[l].layer, l);
    EXPECT_EQ(r.taps[l].positions.size(), r.tokens.size());
    for (const auto& h : r.taps[l].positions) EXPECT_EQ(h.dim(), m.hidden_dim());
  }
}

TEST(ToyModel, InjectionAlongPlantedDirectionSwitchesScript) {
  const auto m = ToyModel::build(noiseless());
  const auto& v = m.vocab();
  const auto audio = phonemes(v, {3, 1, 4, 1, 5, 9});
  const TokenId pa = v.prompt(Script::A), pb = v.prompt(Script::B);
  const auto to_b = along_u(m, 2.0, +1);
  const auto to_a = along_u(m, 2.0, -1);
  EXPECT_EQ(m.decode(audio, std::span(&pa, 1), &to_b).transcript, v.transcribe(audio, Script::B));
  EXPECT_EQ(m.decode(audio, std::span(&pb, 1), &to_a).transcript, v.transcribe(audio, Script::A));
}

TEST(ToyModel, ZeroStrengthInjectionIsBitExact) {
  const auto m = ToyModel::build(ToyModelSpec{});
  const auto audio = phonemes(m.vocab(), {7, 8, 9, 10});
  const TokenId pa = m.vocab().prompt(Script::A);
  const auto inj = along_u(m, 0.0, +1);
  const auto plain = m.decode(audio, std::span(&pa, 1));
  const auto zero = m.decode(audio, std::span(&pa, 1), &inj);
  EXPECT_EQ(plain.tokens, zero.tokens);
  for (std::size_t l = 0; l < plain.taps.size(); ++l) EXPECT_EQ(plain.taps[l].positions, zero.taps[l].positions);
}

TEST(ToyModel, DecodeErrors) {
  const auto m = ToyModel::build(ToyModelSpec{});
  const auto& v = m.vocab();
  const std::vector<TokenId> bad_audio{v.character(Script::A, 0)};
  EXPECT_THROW(m.decode(bad_audio, {}), UnknownTokenError);
  const std::vector<TokenId> bad_prompt{static_cast<TokenId>(v.size())};
  EXPECT_THROW(m.decode(phonemes(v, {1}), bad_prompt), UnknownTokenError);
  const std::vector<TokenId> long_audio(m.spec().max_seq_len + 1, v.phoneme(0));
  EXPECT_THROW(m.decode(long_audio, {}), SpecError);

  SteeringInjection wrong_layers{std::vector<Vec>(m.layer_count() - 1, Vec(m.hidden_dim())), 1.0, 1};
  EXPECT_THROW(m.decode(phonemes(v, {1}), {}, &wrong_layers), DimensionError);
  SteeringInjection wrong_dim{std::vector<Vec>(m.layer_count(), Vec(m.hidden_dim() + 1)), 1.0, 1};
  EXPECT_THROW(m.decode(phonemes(v, {1}), {}, &wrong_dim), DimensionError);
  auto negative = along_u(m, -0.1, 1);
  EXPECT_THROW(m.decode(phonemes(v, {1}), {}, &negative), SpecError);
  auto bad_sign = along_u(m, 0.1, 2);
  EXPECT_THROW(m.decode(phonemes(v, {1}), {}, &bad_sign), SpecError);
}

TEST(ToyModel, EmptyAudioDecodesToEos) {
  const auto m = ToyModel::build(ToyModelSpec{});
  const auto r = m.decode({}, {});
  EXPECT_TRUE(r.tokens.empty());
  EXPECT_TRUE(r.hit_eos);
}

TEST(ToyModel, SerializeRoundTripIsBitExact) {
  ToyModelSpec s;
  s.seed = 17;
  const auto m = ToyModel::build(s);
  const auto bytes = m.serialize();
  const auto back = ToyModel::deserialize(bytes);
  EXPECT_EQ(back.spec(), m.spec());
  EXPECT_EQ(back.weights(), m.weights());
  EXPECT_EQ(back.serialize(), bytes);
}

TEST(ToyModel, DeserializeRejectsCorruption) {
  const auto bytes = ToyModel::build(ToyModelSpec{}).serialize();
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(ToyModel::deserialize(bad_magic), ParseError);
  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  EXPECT_THROW(ToyModel::deserialize(truncated), ParseError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(ToyModel::deserialize(trailing), ParseError);
}

TEST(ToyModel, PlantedDirectionFlipsScriptAcrossSplit) {
  const auto m = ToyModel::build(ToyModelSpec{});
  const auto& v = m.vocab();
  const auto corpus = generate_corpus(CorpusSpec{}, v, m.spec().max_seq_len);
  const auto test = corpus.select(Split::Test, 0);
  const TokenId pa = v.prompt(Script::A), pb = v.prompt(Script::B);
  const auto to_b = along_u(m, 1.0, +1);
  const auto to_a = along_u(m, 1.0, -1);
  std::size_t flipped_to_b = 0, flipped_to_a = 0;
  for (const auto& ex : test) {
    flipped_to_b += m.decode(ex.audio, std::span(&pa, 1), &to_b).transcript == ex.truth_trg;
    flipped_to_a += m.decode(ex.audio, std::span(&pb, 1), &to_a).transcript == ex.truth_src;
  }
  EXPECT_GE(flipped_to_b, test.size() * 95 / 100);
  EXPECT_GE(flipped_to_a, test.size() * 95 / 100);
}
