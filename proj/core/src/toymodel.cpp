#include "steerlab/toymodel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "steerlab/error.hpp"
#include "steerlab/io.hpp"

namespace steerlab {

Script other(Script s) noexcept { return s == Script::A ? Script::B : Script::A; }

std::string_view to_string(Script s) noexcept { return s == Script::A ? "A" : "B"; }

Script parse_script(std::string_view name) {
  if (name == "A" || name == "a") return Script::A;
  if (name == "B" || name == "b") return Script::B;
  throw SpecError("unknown script '" + std::string(name) + "' (expected A or B)");
}

void ToyModelSpec::validate() const {
  if (phoneme_count == 0) throw SpecError("phoneme_count must be positive");
  if (phoneme_count > 52) throw SpecError("phoneme_count must be at most 52");
  if (hidden_dim < phoneme_count + 4)
    throw SpecError("hidden_dim must be at least phoneme_count + 4");
  if (decoder_layers < 2) throw SpecError("decoder_layers must be at least 2");
  if (max_seq_len < 4) throw SpecError("max_seq_len must be at least 4");
  if (!(script_bias > 0) || !std::isfinite(script_bias))
    throw SpecError("script_bias must be positive");
  if (!(readout_gain > 0) || !std::isfinite(readout_gain))
    throw SpecError("readout_gain must be positive");
  if (!(noise_scale >= 0) || !std::isfinite(noise_scale))
    throw SpecError("noise_scale must be non-negative");
}

// ---------------------------------------------------------------------------
// Vocab

namespace {

constexpr std::string_view kLatinLetters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";

std::string cyrillic_letter(std::size_t i) {
  // а..я then А..Я
  const char32_t cp = i < 32 ? static_cast<char32_t>(0x0430 + i) : static_cast<char32_t>(0x0410 + i - 32);
  return encode_utf8(std::u32string(1, cp));
}

}  // namespace

Vocab::Vocab(std::size_t phoneme_count) : k_(phoneme_count), surfaces_(3 * phoneme_count + 5) {
  if (k_ == 0 || k_ > kLatinLetters.size()) throw SpecError("phoneme_count must be in [1, 52]");
  for (std::size_t i = 0; i < k_; ++i) {
    surfaces_[k_ + i] = std::string(1, kLatinLetters[i]);
    surfaces_[2 * k_ + i] = cyrillic_letter(i);
  }
}

TokenId Vocab::phoneme(std::size_t i) const {
  if (i >= k_) throw UnknownTokenError("phoneme index " + std::to_string(i) + " out of range");
  return static_cast<TokenId>(i);
}

TokenId Vocab::character(Script s, std::size_t i) const {
  if (i >= k_) throw UnknownTokenError("character index " + std::to_string(i) + " out of range");
  return static_cast<TokenId>((s == Script::A ? k_ : 2 * k_) + i);
}

std::optional<Script> Vocab::script_of(TokenId id) const noexcept {
  if (id >= k_ && id < 2 * k_) return Script::A;
  if (id >= 2 * k_ && id < 3 * k_) return Script::B;
  return std::nullopt;
}

std::size_t Vocab::index_of(TokenId id) const {
  if (id < 3 * k_) return id % k_;
  throw UnknownTokenError("token " + std::to_string(id) + " has no phoneme index");
}

const std::string& Vocab::surface(TokenId id) const {
  if (!contains(id)) throw UnknownTokenError("token id " + std::to_string(id) + " out of range");
  return surfaces_[id];
}

std::string Vocab::name(TokenId id) const {
  if (!contains(id)) throw UnknownTokenError("token id " + std::to_string(id) + " out of range");
  if (id < k_) return "p" + std::to_string(id);
  if (id < 2 * k_) return "a" + std::to_string(id - k_);
  if (id < 3 * k_) return "b" + std::to_string(id - 2 * k_);
  static const char* specials[] = {"BOS", "EOS", "PROMPT_A", "PROMPT_B", "PAD"};
  return specials[id - 3 * k_];
}

TokenId Vocab::find(std::string_view name) const {
  for (TokenId id = 0; id < size(); ++id)
    if (this->name(id) == name) return id;
  throw UnknownTokenError("unknown token '" + std::string(name) + "'");
}

std::string Vocab::transcribe(std::span<const TokenId> phonemes, Script s) const {
  std::string out;
  for (TokenId p : phonemes) {
    if (!is_phoneme(p)) throw UnknownTokenError("token " + std::to_string(p) + " is not a phoneme");
    out += surfaces_[character(s, p)];
  }
  return out;
}

std::string Vocab::render(std::span<const TokenId> tokens) const {
  std::string out;
  for (TokenId t : tokens) out += surface(t);
  return out;
}

ScriptInventory Vocab::inventory(Script s) const {
  std::string members;
  for (std::size_t i = 0; i < k_; ++i) members += surfaces_[character(s, i)];
  return ScriptInventory::from_chars(s == Script::A ? "toy-A" : "toy-B", members);
}

// ---------------------------------------------------------------------------
// Construction

namespace {

// Gains of the hand-built circuit, all derived from ToyModelSpec.
struct Circuit {
  double prompt_bias;       // c
  double char_bias;         // script component carried by character tokens
  double prior_bias;        // no-prompt preference for script A, carried by BOS
  double bos_marker;        // BOS marker strength relative to a prompt token
  double marker_gain;       // layer-0 attention logit per unit of marker
  double position_gain;     // cross-attention logit scale on positional codes
  double copy_gain;         // phoneme one-hot gain written by cross-attention
  double readout_gain;      // beta
  double eos_gain;
};

Circuit circuit_for(const ToyModelSpec& spec) {
  const double c = spec.script_bias;
  return Circuit{
      .prompt_bias = c,
      .char_bias = c / 8.0,
      .prior_bias = c / 2.0,
      .bos_marker = 0.5,
      .marker_gain = 30.0,
      .position_gain = 60.0,
      .copy_gain = 4.0,
      .readout_gain = spec.readout_gain,
      .eos_gain = 12.5 * spec.readout_gain * c,
  };
}

// Fixed roles of the residual coordinates, before rotation by the basis.
struct Roles {
  std::size_t k;
  std::size_t dim;
  static constexpr std::size_t script = 0;
  static constexpr std::size_t marker = 1;
  static constexpr std::size_t end = 2;
  std::size_t phoneme(std::size_t i) const { return 3 + i; }
  std::size_t positional_begin() const { return 3 + k; }
  std::size_t positional_count() const { return dim - 3 - k; }
};

// Sinusoidal code over `count` coordinates with geometrically spaced
// periods from 4 up to 4 * (max_len + 1); unit norm.
std::vector<double> positional_code(long t, std::size_t count, std::size_t max_len) {
  std::vector<double> code(count, 0.0);
  const std::size_t pairs = count / 2;
  if (pairs == 0) {
    code[0] = std::cos(std::numbers::pi * static_cast<double>(t) / (4.0 * static_cast<double>(max_len + 1)));
    return code;
  }
  const double longest = 4.0 * static_cast<double>(max_len + 1);
  const double ratio = pairs > 1 ? std::pow(longest / 4.0, 1.0 / static_cast<double>(pairs - 1)) : 1.0;
  const double scale = 1.0 / std::sqrt(static_cast<double>(pairs));
  double period = pairs > 1 ? 4.0 : longest;
  for (std::size_t p = 0; p < pairs; ++p) {
    const double w = 2.0 * std::numbers::pi / period;
    code[2 * p] = scale * std::cos(w * static_cast<double>(t));
    code[2 * p + 1] = scale * std::sin(w * static_cast<double>(t));
    period *= ratio;
  }
  return code;
}

class Builder {
 public:
  explicit Builder(const ToyModelSpec& spec)
      : spec_(spec), roles_{spec.phoneme_count, spec.hidden_dim}, rng_(spec.seed) {
    make_basis();
  }

  ToyModelWeights build() {
    const std::size_t d = spec_.hidden_dim;
    const std::size_t k = spec_.phoneme_count;
    const std::size_t m = spec_.max_seq_len;
    const Circuit cc = circuit_for(spec_);
    const Vocab vocab(k);

    ToyModelWeights w;

    w.encoder_embedding = Mat(k + 1, d);
    for (std::size_t i = 0; i < k; ++i) {
      set_row(w.encoder_embedding, i, dir(roles_.phoneme(i)) - dir(Roles::end));
    }
    set_row(w.encoder_embedding, k, dir(Roles::end));
    add_noise(w.encoder_embedding);

    w.token_embedding = Mat(vocab.size(), d);
    const Vec u = dir(Roles::script);
    const Vec mk = dir(Roles::marker);
    for (std::size_t i = 0; i < k; ++i) {
      set_row(w.token_embedding, vocab.character(Script::A, i), -cc.char_bias * u);
      set_row(w.token_embedding, vocab.character(Script::B, i), cc.char_bias * u);
    }
    set_row(w.token_embedding, vocab.bos(), -cc.prior_bias * u + cc.bos_marker * mk);
    set_row(w.token_embedding, vocab.prompt(Script::A), -cc.prompt_bias * u + mk);
    set_row(w.token_embedding, vocab.prompt(Script::B), cc.prompt_bias * u + mk);
    add_noise(w.token_embedding);

    w.positional = Mat(2 * m + 2, d);
    for (std::size_t row = 0; row < w.positional.rows(); ++row) {
      const long t = static_cast<long>(row) - static_cast<long>(m);
      const auto code = positional_code(t, roles_.positional_count(), m);
      Vec v(d);
      for (std::size_t j = 0; j < code.size(); ++j) v.axpy(code[j], dir(roles_.positional_begin() + j));
      set_row(w.positional, row, v);
    }
    add_noise(w.positional);

    for (std::size_t l = 0; l < spec_.encoder_layers; ++l) {
      w.encoder.push_back({noise_attention(), mlp()});
    }

    for (std::size_t l = 0; l < spec_.decoder_layers; ++l) {
      DecoderLayerWeights layer;
      if (l == 0) {
        layer.self_attn = broadcast_attention(cc);
        layer.cross_attn = alignment_attention(cc);
      } else {
        layer.self_attn = noise_attention();
        layer.cross_attn = noise_attention();
      }
      layer.mlp = mlp();
      w.decoder.push_back(std::move(layer));
    }

    w.unembedding = Mat(vocab.size(), d);
    for (std::size_t i = 0; i < k; ++i) {
      const Vec ph = dir(roles_.phoneme(i));
      set_row(w.unembedding, vocab.character(Script::A, i), ph - cc.readout_gain * u);
      set_row(w.unembedding, vocab.character(Script::B, i), ph + cc.readout_gain * u);
    }
    set_row(w.unembedding, vocab.eos(), cc.eos_gain * dir(Roles::end));
    add_noise(w.unembedding);

    w.planted_direction = u;
    return w;
  }

 private:
  void make_basis() {
    const std::size_t d = spec_.hidden_dim;
    basis_.clear();
    while (basis_.size() < d) {
      Vec v(d);
      for (std::size_t i = 0; i < d; ++i) v[i] = rng_.normal();
      // Modified Gram-Schmidt, twice for numerical orthogonality.
      for (int pass = 0; pass < 2; ++pass)
        for (const Vec& b : basis_) v.axpy(-dot(v, b), b);
      const double n = norm(v);
      if (n < 1e-8) continue;
      basis_.push_back(v * (1.0 / n));
    }
  }

  const Vec& dir(std::size_t role) const { return basis_[role]; }

  static void set_row(Mat& m, std::size_t r, const Vec& v) {
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = v[c];
  }

  // Rank-one update m += gain * a b^T.
  static void add_outer(Mat& m, double gain, const Vec& a, const Vec& b) {
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) += gain * a[r] * b[c];
  }

  Vec unit(std::size_t i) const {
    Vec e(spec_.hidden_dim);
    e[i] = 1.0;
    return e;
  }

  // Entries N(0, 1) * epsilon / sqrt(fan_in), so a unit input picks up noise
  // of norm about epsilon.
  void add_noise(Mat& m) {
    const double scale = spec_.noise_scale / std::sqrt(static_cast<double>(m.cols()));
    for (double& x : m.values()) x += scale * rng_.normal();
  }

  void add_noise(Vec& v) {
    const double scale = spec_.noise_scale / std::sqrt(static_cast<double>(v.dim()));
    for (double& x : v.values()) x += scale * rng_.normal();
  }

  AttentionWeights empty_attention() const {
    const std::size_t d = spec_.hidden_dim;
    return {Mat(d, d), Mat(d, d), Mat(d, d), Mat(d, d), Vec(d), Vec(d)};
  }

  void add_noise(AttentionWeights& a) {
    add_noise(a.wq);
    add_noise(a.wk);
    add_noise(a.wv);
    add_noise(a.wo);
    add_noise(a.bq);
    add_noise(a.bk);
  }

  AttentionWeights noise_attention() {
    AttentionWeights a = empty_attention();
    add_noise(a);
    return a;
  }

  // Every query attends to the marked position (prompt, else BOS) and copies
  // its script component forward.
  AttentionWeights broadcast_attention(const Circuit& cc) {
    AttentionWeights a = empty_attention();
    a.bq[0] = cc.marker_gain;
    add_outer(a.wk, 1.0, unit(0), dir(Roles::marker));
    add_outer(a.wv, 1.0, unit(0), dir(Roles::script));
    add_outer(a.wo, 1.0, dir(Roles::script), unit(0));
    add_noise(a);
    return a;
  }

  // Decoder position t attends to encoder position t through the positional
  // codes and copies the phoneme one-hot and the end-of-audio feature.
  AttentionWeights alignment_attention(const Circuit& cc) {
    AttentionWeights a = empty_attention();
    for (std::size_t j = 0; j < roles_.positional_count(); ++j) {
      const std::size_t role = roles_.positional_begin() + j;
      add_outer(a.wq, cc.position_gain, unit(role), dir(role));
      add_outer(a.wk, 1.0, unit(role), dir(role));
    }
    for (std::size_t i = 0; i < spec_.phoneme_count; ++i) {
      const std::size_t role = roles_.phoneme(i);
      add_outer(a.wv, cc.copy_gain, unit(role), dir(role));
      add_outer(a.wo, 1.0, dir(role), unit(role));
    }
    add_outer(a.wv, 1.0, unit(Roles::end), dir(Roles::end));
    add_outer(a.wo, 1.0, dir(Roles::end), unit(Roles::end));
    add_noise(a);
    return a;
  }

  MlpWeights mlp() {
    const std::size_t d = spec_.hidden_dim;
    const std::size_t ff = 2 * d;
    MlpWeights m{Mat(ff, d), Mat(d, ff)};
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& x : m.w1.values()) x = in_scale * rng_.normal();
    add_noise(m.w2);
    return m;
  }

  const ToyModelSpec& spec_;
  Roles roles_;
  RngStream rng_;
  std::vector<Vec> basis_;
};

// ---------------------------------------------------------------------------
// Forward pass

struct KeyValues {
  std::vector<Vec> keys;
  std::vector<Vec> values;
};

Vec project_key(const AttentionWeights& w, const Vec& x) {
  Vec k = matvec(w.wk, x);
  k += w.bk;
  return k;
}

Vec attend(const AttentionWeights& w, const Vec& x, const KeyValues& kv) {
  Vec q = matvec(w.wq, x);
  q += w.bq;
  Vec scores(kv.keys.size());
  for (std::size_t s = 0; s < kv.keys.size(); ++s) scores[s] = dot(q, kv.keys[s]);
  const Vec weights = softmax(scores);
  Vec ctx(x.dim());
  for (std::size_t s = 0; s < kv.values.size(); ++s) ctx.axpy(weights[s], kv.values[s]);
  return matvec(w.wo, ctx);
}

Vec mlp_forward(const MlpWeights& w, const Vec& x) {
  Vec h = matvec(w.w1, layer_norm(x));
  for (double& v : h.values()) v = std::max(v, 0.0);
  return matvec(w.w2, h);
}

}  // namespace

ToyModel::ToyModel(ToyModelSpec spec, ToyModelWeights weights)
    : spec_(spec), vocab_(spec.phoneme_count), weights_(std::move(weights)) {}

ToyModel ToyModel::build(const ToyModelSpec& spec) {
  spec.validate();
  Builder builder(spec);
  return ToyModel(spec, builder.build());
}

DecodeResult ToyModel::decode(std::span<const TokenId> audio, std::span<const TokenId> prompt,
                              const SteeringInjection* injection) const {
  const std::size_t d = spec_.hidden_dim;
  const std::size_t layers = spec_.decoder_layers;
  const std::size_t max_len = spec_.max_seq_len;

  if (audio.size() > max_len)
    throw SpecError("audio length " + std::to_string(audio.size()) + " exceeds max_seq_len");
  if (prompt.size() > max_len)
    throw SpecError("prompt length " + std::to_string(prompt.size()) + " exceeds max_seq_len");
  for (TokenId p : audio)
    if (!vocab_.is_phoneme(p)) throw UnknownTokenError("audio token " + std::to_string(p) + " is not a phoneme");
  for (TokenId t : prompt)
    if (!vocab_.contains(t)) throw UnknownTokenError("prompt token " + std::to_string(t) + " not in vocab");

  bool steer = false;
  if (injection != nullptr) {
    if (injection->offsets.size() != layers)
      throw DimensionError("injection has " + std::to_string(injection->offsets.size()) +
                           " offsets, model has " + std::to_string(layers) + " decoder layers");
    for (const Vec& r : injection->offsets)
      if (r.dim() != d)
        throw DimensionError("injection offset dim " + std::to_string(r.dim()) + " != " + std::to_string(d));
    if (!(injection->strength >= 0) || !std::isfinite(injection->strength))
      throw SpecError("steering strength must be finite and non-negative");
    if (injection->sign != 1 && injection->sign != -1) throw SpecError("steering sign must be +1 or -1");
    steer = injection->strength > 0;
  }

  auto positional = [&](long t) {
    Vec p(d);
    const auto row = weights_.positional.row(static_cast<std::size_t>(t + static_cast<long>(max_len)));
    for (std::size_t i = 0; i < d; ++i) p[i] = row[i];
    return p;
  };
  auto row_vec = [&](const Mat& m, std::size_t r) {
    const auto row = m.row(r);
    return Vec(std::vector<double>(row.begin(), row.end()));
  };

  // Encoder over the audio plus the end-of-audio marker.
  std::vector<Vec> enc;
  enc.reserve(audio.size() + 1);
  for (std::size_t s = 0; s <= audio.size(); ++s) {
    const std::size_t row = s < audio.size() ? audio[s] : spec_.phoneme_count;
    enc.push_back(row_vec(weights_.encoder_embedding, row) + positional(static_cast<long>(s)));
  }
  for (const auto& layer : weights_.encoder) {
    KeyValues kv;
    for (const Vec& x : enc) {
      kv.keys.push_back(project_key(layer.self_attn, x));
      kv.values.push_back(matvec(layer.self_attn.wv, x));
    }
    std::vector<Vec> next;
    next.reserve(enc.size());
    for (const Vec& x : enc) {
      Vec y = x + attend(layer.self_attn, x, kv);
      y += mlp_forward(layer.mlp, y);
      next.push_back(std::move(y));
    }
    enc = std::move(next);
  }

  std::vector<KeyValues> cross(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& ca = weights_.decoder[l].cross_attn;
    for (const Vec& e : enc) {
      cross[l].keys.push_back(project_key(ca, e));
      cross[l].values.push_back(matvec(ca.wv, e));
    }
  }

  std::vector<KeyValues> self(layers);
  std::vector<Vec> layer_out(layers);

  // Runs one position through the decoder; returns the final residual.
  auto step = [&](TokenId token, long t, bool inject) {
    Vec x = row_vec(weights_.token_embedding, token) + positional(t);
    for (std::size_t l = 0; l < layers; ++l) {
      const auto& lw = weights_.decoder[l];
      self[l].keys.push_back(project_key(lw.self_attn, x));
      self[l].values.push_back(matvec(lw.self_attn.wv, x));
      x += attend(lw.self_attn, x, self[l]);
      x += attend(lw.cross_attn, x, cross[l]);
      x += mlp_forward(lw.mlp, x);
      if (inject) x.axpy(injection->sign * injection->strength, injection->offsets[l]);
      layer_out[l] = x;
    }
    return x;
  };

  auto greedy = [&](const Vec& x) {
    const Vec logits = matvec(weights_.unembedding, x);
    TokenId best = vocab_.eos();
    double best_logit = logits[best];
    const TokenId first = vocab_.character(Script::A, 0);
    const TokenId last = vocab_.character(Script::B, spec_.phoneme_count - 1);
    for (TokenId id = first; id <= last; ++id) {
      if (logits[id] > best_logit) {
        best = id;
        best_logit = logits[id];
      }
    }
    return best;
  };

  DecodeResult result;
  result.taps.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) result.taps[l].layer = l;

  const long prompt_len = static_cast<long>(prompt.size());
  for (long i = 0; i < prompt_len; ++i) step(prompt[static_cast<std::size_t>(i)], i - prompt_len, false);

  Vec x = step(vocab_.bos(), 0, steer);
  while (result.tokens.size() < max_len) {
    const TokenId next = greedy(x);
    if (next == vocab_.eos()) {
      result.hit_eos = true;
      break;
    }
    result.tokens.push_back(next);
    x = step(next, static_cast<long>(result.tokens.size()), steer);
    for (std::size_t l = 0; l < layers; ++l) result.taps[l].positions.push_back(layer_out[l]);
  }
  result.transcript = vocab_.render(result.tokens);
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr std::string_view kModelMagic = "STLB";
constexpr std::uint32_t kModelVersion = 1;

void put_mat(ByteWriter& w, const Mat& m) {
  w.put_u64(m.rows());
  w.put_u64(m.cols());
  for (double x : m.values()) w.put_f64(x);
}

void put_vec(ByteWriter& w, const Vec& v) {
  w.put_u64(v.dim());
  for (double x : v.values()) w.put_f64(x);
}

void put_attention(ByteWriter& w, const AttentionWeights& a) {
  put_mat(w, a.wq);
  put_mat(w, a.wk);
  put_mat(w, a.wv);
  put_mat(w, a.wo);
  put_vec(w, a.bq);
  put_vec(w, a.bk);
}

Mat get_mat(ByteReader& r, std::size_t rows, std::size_t cols, const char* what) {
  const std::uint64_t fr = r.get_u64();
  const std::uint64_t fc = r.get_u64();
  if (fr != rows || fc != cols)
    throw ParseError(0, std::string("model file: ") + what + " has shape " + std::to_string(fr) + "x" +
                            std::to_string(fc) + ", expected " + std::to_string(rows) + "x" +
                            std::to_string(cols));
  std::vector<double> data(rows * cols);
  for (double& x : data) {
    x = r.get_f64();
    if (!std::isfinite(x)) throw ParseError(0, std::string("model file: non-finite entry in ") + what);
  }
  return Mat(rows, cols, std::move(data));
}

Vec get_vec(ByteReader& r, std::size_t n, const char* what) {
  const std::uint64_t fn = r.get_u64();
  if (fn != n)
    throw ParseError(0, std::string("model file: ") + what + " has length " + std::to_string(fn) +
                            ", expected " + std::to_string(n));
  Vec v(n);
  for (double& x : v.values()) {
    x = r.get_f64();
    if (!std::isfinite(x)) throw ParseError(0, std::string("model file: non-finite entry in ") + what);
  }
  return v;
}

AttentionWeights get_attention(ByteReader& r, std::size_t d) {
  AttentionWeights a;
  a.wq = get_mat(r, d, d, "attention wq");
  a.wk = get_mat(r, d, d, "attention wk");
  a.wv = get_mat(r, d, d, "attention wv");
  a.wo = get_mat(r, d, d, "attention wo");
  a.bq = get_vec(r, d, "attention bq");
  a.bk = get_vec(r, d, "attention bk");
  return a;
}

}  // namespace

std::vector<std::uint8_t> ToyModel::serialize() const {
  ByteWriter w;
  w.put_bytes(kModelMagic);
  w.put_u32(kModelVersion);
  w.put_u64(spec_.hidden_dim);
  w.put_u64(spec_.decoder_layers);
  w.put_u64(spec_.encoder_layers);
  w.put_u64(spec_.phoneme_count);
  w.put_u64(spec_.max_seq_len);
  w.put_f64(spec_.script_bias);
  w.put_f64(spec_.readout_gain);
  w.put_f64(spec_.noise_scale);
  w.put_u64(spec_.seed);

  put_mat(w, weights_.encoder_embedding);
  put_mat(w, weights_.token_embedding);
  put_mat(w, weights_.positional);
  for (const auto& layer : weights_.encoder) {
    put_attention(w, layer.self_attn);
    put_mat(w, layer.mlp.w1);
    put_mat(w, layer.mlp.w2);
  }
  for (const auto& layer : weights_.decoder) {
    put_attention(w, layer.self_attn);
    put_attention(w, layer.cross_attn);
    put_mat(w, layer.mlp.w1);
    put_mat(w, layer.mlp.w2);
  }
  put_mat(w, weights_.unembedding);
  for (double x : weights_.planted_direction.values()) w.put_f64(x);
  return w.take();
}

ToyModel ToyModel::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.get_bytes(kModelMagic.size()) != kModelMagic) throw ParseError(0, "model file: bad magic");
  const std::uint32_t version = r.get_u32();
  if (version != kModelVersion)
    throw ParseError(0, "model file: unsupported version " + std::to_string(version));

  ToyModelSpec spec;
  spec.hidden_dim = r.get_u64();
  spec.decoder_layers = r.get_u64();
  spec.encoder_layers = r.get_u64();
  spec.phoneme_count = r.get_u64();
  spec.max_seq_len = r.get_u64();
  spec.script_bias = r.get_f64();
  spec.readout_gain = r.get_f64();
  spec.noise_scale = r.get_f64();
  spec.seed = r.get_u64();
  try {
    spec.validate();
  } catch (const SpecError& e) {
    throw ParseError(0, std::string("model file: ") + e.what());
  }

  const std::size_t d = spec.hidden_dim;
  const std::size_t k = spec.phoneme_count;
  const std::size_t v = 3 * k + 5;
  const std::size_t ff = 2 * d;

  ToyModelWeights w;
  w.encoder_embedding = get_mat(r, k + 1, d, "encoder embedding");
  w.token_embedding = get_mat(r, v, d, "token embedding");
  w.positional = get_mat(r, 2 * spec.max_seq_len + 2, d, "positional table");
  for (std::size_t l = 0; l < spec.encoder_layers; ++l) {
    EncoderLayerWeights layer;
    layer.self_attn = get_attention(r, d);
    layer.mlp.w1 = get_mat(r, ff, d, "mlp w1");
    layer.mlp.w2 = get_mat(r, d, ff, "mlp w2");
    w.encoder.push_back(std::move(layer));
  }
  for (std::size_t l = 0; l < spec.decoder_layers; ++l) {
    DecoderLayerWeights layer;
    layer.self_attn = get_attention(r, d);
    layer.cross_attn = get_attention(r, d);
    layer.mlp.w1 = get_mat(r, ff, d, "mlp w1");
    layer.mlp.w2 = get_mat(r, d, ff, "mlp w2");
    w.decoder.push_back(std::move(layer));
  }
  w.unembedding = get_mat(r, v, d, "unembedding");
  w.planted_direction = Vec(d);
  for (double& x : w.planted_direction.values()) x = r.get_f64();
  if (r.remaining() != 0) throw ParseError(0, "model file: trailing bytes");
  return ToyModel(spec, std::move(w));
}

void ToyModel::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  write_file_atomic(path, std::span<const std::uint8_t>(bytes));
}

ToyModel ToyModel::load(const std::filesystem::path& path) {
  const auto bytes = read_binary_file(path);
  return deserialize(bytes);
}

}  // namespace steerlab
