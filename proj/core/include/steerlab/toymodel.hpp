#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "steerlab/metrics.hpp"
#include "steerlab/numerics.hpp"

namespace steerlab {

// The two output scripts of the toy world. A plays the frequent script,
// B the less frequent one.
enum class Script { A, B };

Script other(Script s) noexcept;
std::string_view to_string(Script s) noexcept;
// Accepts "A"/"B" (case-insensitive); throws SpecError otherwise.
Script parse_script(std::string_view name);

using TokenId = std::uint32_t;

struct ToyModelSpec {
  std::size_t hidden_dim = 32;
  std::size_t decoder_layers = 4;
  std::size_t encoder_layers = 1;
  std::size_t phoneme_count = 20;
  std::size_t max_seq_len = 24;
  double script_bias = 2.0;   // c: magnitude of the prompt's script component
  double readout_gain = 4.0;  // beta: unembedding gain on the script direction
  double noise_scale = 0.05;  // epsilon
  std::uint64_t seed = 0;

  // Throws SpecError naming the violated field.
  void validate() const;

  friend bool operator==(const ToyModelSpec&, const ToyModelSpec&) = default;
};

// Token layout: phonemes [0, K), script-A characters [K, 2K), script-B
// characters [2K, 3K), then BOS, EOS, PROMPT_A, PROMPT_B, PAD.
class Vocab {
 public:
  explicit Vocab(std::size_t phoneme_count);

  std::size_t phoneme_count() const noexcept { return k_; }
  std::size_t size() const noexcept { return 3 * k_ + 5; }

  TokenId phoneme(std::size_t i) const;
  TokenId character(Script s, std::size_t i) const;
  TokenId bos() const noexcept { return static_cast<TokenId>(3 * k_); }
  TokenId eos() const noexcept { return static_cast<TokenId>(3 * k_ + 1); }
  TokenId prompt(Script s) const noexcept {
    return static_cast<TokenId>(3 * k_ + (s == Script::A ? 2 : 3));
  }
  TokenId pad() const noexcept { return static_cast<TokenId>(3 * k_ + 4); }

  bool contains(TokenId id) const noexcept { return id < size(); }
  bool is_phoneme(TokenId id) const noexcept { return id < k_; }
  // Script of a character token, nullopt for everything else.
  std::optional<Script> script_of(TokenId id) const noexcept;
  // Phoneme index behind a phoneme or character token.
  std::size_t index_of(TokenId id) const;

  // Surface text of a character token; empty for non-characters.
  const std::string& surface(TokenId id) const;
  // Symbolic name: p3, a3, b3, BOS, EOS, PROMPT_A, PROMPT_B, PAD.
  std::string name(TokenId id) const;
  // Inverse of name(); throws UnknownTokenError.
  TokenId find(std::string_view name) const;

  // Character-wise image of a phoneme sequence in script s.
  std::string transcribe(std::span<const TokenId> phonemes, Script s) const;
  // Concatenated surfaces of the character tokens in `tokens`.
  std::string render(std::span<const TokenId> tokens) const;

  // Inventory holding exactly the surfaces of script s (named toy-A / toy-B).
  ScriptInventory inventory(Script s) const;

 private:
  std::size_t k_;
  std::vector<std::string> surfaces_;
};

// Per-layer additive offsets applied as h <- h + sign * strength * offsets[l].
struct SteeringInjection {
  std::vector<Vec> offsets;
  double strength = 0.0;
  int sign = 1;
};

// Post-injection outputs of one decoder layer at every generated-token
// position (prompt and BOS positions are not recorded).
struct LayerTap {
  std::size_t layer = 0;
  std::vector<Vec> positions;
};

struct DecodeResult {
  std::vector<TokenId> tokens;  // generated tokens, EOS excluded
  std::string transcript;
  std::vector<LayerTap> taps;   // one per decoder layer
  bool hit_eos = false;
};

struct AttentionWeights {
  Mat wq, wk, wv, wo;
  Vec bq, bk;

  friend bool operator==(const AttentionWeights&, const AttentionWeights&) = default;
};

struct MlpWeights {
  Mat w1;  // ff x D
  Mat w2;  // D x ff

  friend bool operator==(const MlpWeights&, const MlpWeights&) = default;
};

struct EncoderLayerWeights {
  AttentionWeights self_attn;
  MlpWeights mlp;

  friend bool operator==(const EncoderLayerWeights&, const EncoderLayerWeights&) = default;
};

struct DecoderLayerWeights {
  AttentionWeights self_attn;
  AttentionWeights cross_attn;
  MlpWeights mlp;

  friend bool operator==(const DecoderLayerWeights&, const DecoderLayerWeights&) = default;
};

struct ToyModelWeights {
  Mat encoder_embedding;  // (K + 1) x D; row K is the end-of-audio marker
  Mat token_embedding;    // V x D
  Mat positional;         // (2 * max_seq_len + 2) x D, row = position + max_seq_len
  std::vector<EncoderLayerWeights> encoder;
  std::vector<DecoderLayerWeights> decoder;
  Mat unembedding;        // V x D
  Vec planted_direction;  // unit script direction u

  friend bool operator==(const ToyModelWeights&, const ToyModelWeights&) = default;
};

// Encoder-decoder transformer with hand-constructed weights. The decoder
// residual stream carries the output script along the planted direction u:
// PROMPT_A embeds -c*u, PROMPT_B +c*u, decoder layer 0 broadcasts that
// component to every position, and the unembedding reads it with gain beta.
class ToyModel {
 public:
  // Throws SpecError if the spec is invalid.
  static ToyModel build(const ToyModelSpec& spec);

  const ToyModelSpec& spec() const noexcept { return spec_; }
  const Vocab& vocab() const noexcept { return vocab_; }
  const ToyModelWeights& weights() const noexcept { return weights_; }

  std::size_t layer_count() const noexcept { return spec_.decoder_layers; }
  std::size_t hidden_dim() const noexcept { return spec_.hidden_dim; }

  // Ground-truth script direction. Test oracle only.
  const Vec& planted_direction() const noexcept { return weights_.planted_direction; }

  // Greedy decode until EOS or max_seq_len generated tokens. `audio` holds
  // phoneme token ids; `prompt` is prepended before BOS. The injection, when
  // present, is added to the output of every decoder layer at BOS and every
  // generated position.
  // Throws UnknownTokenError, DimensionError (injection shape) or SpecError
  // (audio or prompt longer than max_seq_len, negative strength).
  DecodeResult decode(std::span<const TokenId> audio, std::span<const TokenId> prompt,
                      const SteeringInjection* injection = nullptr) const;

  std::vector<std::uint8_t> serialize() const;
  // Throws ParseError on malformed input.
  static ToyModel deserialize(std::span<const std::uint8_t> bytes);

  void save(const std::filesystem::path& path) const;
  static ToyModel load(const std::filesystem::path& path);

 private:
  ToyModel(ToyModelSpec spec, ToyModelWeights weights);

  ToyModelSpec spec_;
  Vocab vocab_;
  ToyModelWeights weights_;
};

}  // namespace steerlab
