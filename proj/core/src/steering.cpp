#include "steerlab/steering.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <tuple>

#include "steerlab/error.hpp"
#include "steerlab/io.hpp"

namespace steerlab {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(PromptKind k) noexcept { return k == PromptKind::Src ? "SRC" : "TRG"; }

PromptKind parse_prompt_kind(std::string_view name) {
  if (name == "SRC") return PromptKind::Src;
  if (name == "TRG") return PromptKind::Trg;
  throw SpecError("unknown prompt kind '" + std::string(name) + "'");
}

std::string_view to_string(ExtractionMode m) noexcept {
  switch (m) {
    case ExtractionMode::Standard:
      return "standard";
    case ExtractionMode::OneShot:
      return "one_shot";
    case ExtractionMode::PseudoLabel:
      return "pseudo_label";
  }
  return "standard";
}

ExtractionMode parse_extraction_mode(std::string_view name) {
  if (name == "standard") return ExtractionMode::Standard;
  if (name == "one_shot") return ExtractionMode::OneShot;
  if (name == "pseudo_label") return ExtractionMode::PseudoLabel;
  throw SpecError("unknown extraction mode '" + std::string(name) + "'");
}

std::string_view to_string(SweepObjective o) noexcept {
  return o == SweepObjective::MeanAccuracy ? "mean" : "max";
}

SweepObjective parse_objective(std::string_view name) {
  if (name == "mean" || name == "mean_accuracy") return SweepObjective::MeanAccuracy;
  if (name == "max" || name == "max_accuracy") return SweepObjective::MaxAccuracy;
  throw SpecError("unknown sweep objective '" + std::string(name) + "' (expected mean or max)");
}

CollectionPolicy CollectionPolicy::for_scripts(const Vocab& vocab, Script src, Script trg, double theta,
                                               std::size_t n_examples) {
  CollectionPolicy p;
  p.theta = theta;
  p.n_examples = n_examples;
  p.prompt_src = {vocab.prompt(src)};
  p.prompt_trg = {vocab.prompt(trg)};
  p.src_script = src;
  p.trg_script = trg;
  return p;
}

void CollectionPolicy::validate() const {
  if (!(theta > 0.0 && theta <= 1.0)) throw SpecError("theta must be in (0, 1]");
  if (n_examples == 0) throw SpecError("n_examples must be at least 1");
}

void SweepPolicy::validate() const {
  if (grid.empty()) throw SpecError("sigma grid must be nonempty");
  for (double s : grid)
    if (!(s > 0.0) || !std::isfinite(s)) throw SpecError("sigma grid values must be positive");
}

EvalReport TargetScorer::score(std::span<const std::string> transcripts,
                               std::span<const Example> examples) const {
  std::vector<std::string> refs;
  refs.reserve(examples.size());
  for (const Example& e : examples) refs.push_back(e.truth(script));
  return evaluate(transcripts, refs, inventory, options);
}

std::vector<Vec> mean_pool(std::span<const LayerTap> taps) {
  std::vector<Vec> pooled;
  pooled.reserve(taps.size());
  for (const LayerTap& tap : taps) {
    if (tap.positions.empty()) throw Error("mean_pool: empty decode (no generated tokens)");
    pooled.push_back(mean(tap.positions));
  }
  if (pooled.empty()) throw Error("mean_pool: no layers");
  return pooled;
}

std::string render_prompt(const Vocab& vocab, std::span<const TokenId> prompt) {
  std::string out;
  for (TokenId t : prompt) {
    if (!out.empty()) out += ' ';
    out += vocab.name(t);
  }
  return out.empty() ? "-" : out;
}

bool passes_threshold(double normalized_distance, double theta) noexcept { return normalized_distance < theta; }

namespace {

struct Scored {
  DecodeResult decode;
  std::string reference;
};

using Condition = std::function<Scored(const Example&)>;

ActivationRecord make_record(const Example& e, PromptKind kind, const Scored& s) {
  ActivationRecord r;
  r.example_id = e.example_id;
  r.prompt_kind = kind;
  r.transcript = s.decode.transcript;
  r.edit_distance_normalized = normalized_edit_distance(s.decode.transcript, s.reference);
  if (!s.decode.tokens.empty()) r.pooled = mean_pool(s.decode.taps);
  return r;
}

CollectionResult collect_with(std::span<const Example> examples, const CollectionPolicy& policy,
                              const Condition& src, const Condition& trg, std::size_t layers,
                              std::size_t dim) {
  CollectionResult out;
  for (const Example& e : examples) {
    if (out.accepted == policy.n_examples) break;
    ActivationRecord rs = make_record(e, PromptKind::Src, src(e));
    ActivationRecord rt = make_record(e, PromptKind::Trg, trg(e));
    // Empty decodes cannot be pooled; record zeros and never accept them.
    for (ActivationRecord* r : {&rs, &rt})
      if (r->pooled.empty()) r->pooled.assign(layers, Vec(dim));
    const bool ok = !rs.transcript.empty() && !rt.transcript.empty() &&
                    passes_threshold(rs.edit_distance_normalized, policy.theta) &&
                    passes_threshold(rt.edit_distance_normalized, policy.theta);
    rs.kept = rt.kept = ok;
    if (ok) ++out.accepted;
    out.records.push_back(std::move(rs));
    out.records.push_back(std::move(rt));
  }
  if (out.accepted < policy.n_examples) throw InsufficientExamplesError(out.accepted, policy.n_examples);
  return out;
}

void require_compatible(const ToyModel& model, const ScriptVectorSet& vectors) {
  if (vectors.layer_count() != model.layer_count())
    throw DimensionError("vector set has " + std::to_string(vectors.layer_count()) +
                         " layers, model has " + std::to_string(model.layer_count()));
  for (const Vec& v : vectors.vectors)
    if (v.dim() != model.hidden_dim())
      throw DimensionError("vector dim " + std::to_string(v.dim()) + " != model hidden dim " +
                           std::to_string(model.hidden_dim()));
}

}  // namespace

CollectionResult collect(const ToyModel& model, std::span<const Example> examples,
                         const CollectionPolicy& policy) {
  policy.validate();
  const Condition src = [&](const Example& e) {
    return Scored{model.decode(e.audio, policy.prompt_src), e.truth(policy.src_script)};
  };
  const Condition trg = [&](const Example& e) {
    return Scored{model.decode(e.audio, policy.prompt_trg), e.truth(policy.trg_script)};
  };
  return collect_with(examples, policy, src, trg, model.layer_count(), model.hidden_dim());
}

ScriptVectorSet isolate(std::span<const ActivationRecord> records, VectorMeta meta) {
  std::vector<const ActivationRecord*> src;
  std::vector<const ActivationRecord*> trg;
  for (const ActivationRecord& r : records) {
    if (!r.kept) continue;
    (r.prompt_kind == PromptKind::Src ? src : trg).push_back(&r);
  }
  if (src.empty()) throw EmptySideError("SRC");
  if (trg.empty()) throw EmptySideError("TRG");

  const std::size_t layers = src.front()->pooled.size();
  const std::size_t dim = layers == 0 ? 0 : src.front()->pooled.front().dim();
  if (layers == 0 || dim == 0) throw DimensionError("isolate: records carry no activations");
  for (const auto* side : {&src, &trg}) {
    for (const ActivationRecord* r : *side) {
      if (r->pooled.size() != layers) throw DimensionError("isolate: inconsistent layer count across records");
      for (const Vec& v : r->pooled)
        if (v.dim() != dim) throw DimensionError("isolate: inconsistent hidden dim across records");
    }
  }

  // Canonical summation order makes the result independent of record order.
  auto canonical = [](const ActivationRecord* a, const ActivationRecord* b) {
    if (a->example_id != b->example_id) return a->example_id < b->example_id;
    for (std::size_t l = 0; l < a->pooled.size(); ++l)
      if (a->pooled[l].data() != b->pooled[l].data()) return a->pooled[l].data() < b->pooled[l].data();
    return false;
  };
  std::sort(src.begin(), src.end(), canonical);
  std::sort(trg.begin(), trg.end(), canonical);

  auto layer_mean = [&](const std::vector<const ActivationRecord*>& side, std::size_t l) {
    Vec acc(dim);
    for (const ActivationRecord* r : side) acc += r->pooled[l];
    acc *= 1.0 / static_cast<double>(side.size());
    return acc;
  };

  ScriptVectorSet out;
  out.meta = std::move(meta);
  out.meta.n_src = src.size();
  out.meta.n_trg = trg.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Vec r = layer_mean(src, l) - layer_mean(trg, l);
    if (!(norm(r) >= 1e-12)) throw DegenerateDirectionError(l);
    out.vectors.push_back(std::move(r));
  }
  return out;
}

SteeringInjection make_injection(const ScriptVectorSet& vectors, double sigma, int sign) {
  return SteeringInjection{vectors.vectors, sigma, sign};
}

DecodeResult steer_decode(const ToyModel& model, std::span<const TokenId> audio,
                          std::span<const TokenId> prompt, const ScriptVectorSet& vectors, double sigma,
                          int sign) {
  require_compatible(model, vectors);
  const SteeringInjection injection = make_injection(vectors, sigma, sign);
  return model.decode(audio, prompt, &injection);
}

ConditionResult run_condition(const ToyModel& model, std::span<const Example> examples,
                              std::span<const TokenId> prompt, const TargetScorer& scorer,
                              const ScriptVectorSet* vectors, double sigma, int sign) {
  if (vectors != nullptr) require_compatible(model, *vectors);
  ConditionResult out;
  out.transcripts.reserve(examples.size());
  std::optional<SteeringInjection> injection;
  if (vectors != nullptr) injection = make_injection(*vectors, sigma, sign);
  for (const Example& e : examples) {
    out.transcripts.push_back(model.decode(e.audio, prompt, injection ? &*injection : nullptr).transcript);
  }
  out.report = scorer.score(out.transcripts, examples);
  return out;
}

int infer_sign_convention(const ToyModel& model, const ScriptVectorSet& vectors,
                          std::span<const Example> examples, std::span<const TokenId> prompt,
                          const TargetScorer& scorer, double sigma) {
  const double plus = run_condition(model, examples, prompt, scorer, &vectors, sigma, +1).report.mean_accuracy;
  const double minus = run_condition(model, examples, prompt, scorer, &vectors, sigma, -1).report.mean_accuracy;
  return minus > plus ? -1 : +1;
}

SweepResult sweep_sigma(const ToyModel& model, const ScriptVectorSet& vectors,
                        std::span<const Example> examples, std::span<const TokenId> prompt,
                        const SweepPolicy& policy, const TargetScorer& scorer) {
  policy.validate();
  if (examples.empty()) throw SpecError("sweep_sigma: empty split");
  SweepResult out;
  out.objective = policy.objective;
  std::optional<std::pair<double, double>> best;  // (objective value, sigma)
  for (double sigma : policy.grid) {
    const EvalReport rep =
        run_condition(model, examples, prompt, scorer, &vectors, sigma, vectors.meta.sign_convention).report;
    out.rows.push_back({sigma, rep.mean_accuracy, rep.max_accuracy, rep.n_fully_target});
    const double value =
        policy.objective == SweepObjective::MeanAccuracy ? rep.mean_accuracy : rep.max_accuracy;
    if (!best || value > best->first || (value == best->first && sigma < best->second)) {
      best = {value, sigma};
    }
  }
  out.best_sigma = best->second;
  return out;
}

ScriptVectorSet standard_extract(const ToyModel& model, std::span<const Example> examples,
                                 const CollectionPolicy& policy, VectorMeta meta) {
  const CollectionResult c = collect(model, examples, policy);
  meta.source_prompt_kind = render_prompt(model.vocab(), policy.prompt_src);
  meta.target_prompt_kind = render_prompt(model.vocab(), policy.prompt_trg);
  meta.theta = policy.theta;
  meta.extraction_mode = ExtractionMode::Standard;
  return isolate(c.records, std::move(meta));
}

ScriptVectorSet one_shot_extract(const ToyModel& model, std::span<const Example> examples,
                                 const CollectionPolicy& policy, VectorMeta meta) {
  CollectionPolicy one = policy;
  one.n_examples = 1;
  ScriptVectorSet out = standard_extract(model, examples, one, std::move(meta));
  out.meta.extraction_mode = ExtractionMode::OneShot;
  return out;
}

CollectionResult collect_pseudo_label(const ToyModel& model, const ScriptVectorSet& base, double sigma,
                                      int sign, std::span<const Example> examples,
                                      const CollectionPolicy& policy) {
  policy.validate();
  require_compatible(model, base);
  if (examples.empty()) throw SpecError("pseudo_label_extract: empty split");
  const ScriptInventory target = model.vocab().inventory(policy.trg_script);
  const SteeringInjection injection = make_injection(base, sigma, sign);
  const Condition src = [&](const Example& e) {
    return Scored{model.decode(e.audio, policy.prompt_src), e.truth(policy.src_script)};
  };
  const Condition trg = [&](const Example& e) {
    DecodeResult d = model.decode(e.audio, policy.prompt_src, &injection);
    std::string pseudo = strip_to_script(d.transcript, target);
    return Scored{std::move(d), std::move(pseudo)};
  };
  return collect_with(examples, policy, src, trg, model.layer_count(), model.hidden_dim());
}

ScriptVectorSet pseudo_label_extract(const ToyModel& model, const ScriptVectorSet& base, double sigma,
                                     int sign, std::span<const Example> examples,
                                     const CollectionPolicy& policy, VectorMeta meta) {
  const CollectionResult c = collect_pseudo_label(model, base, sigma, sign, examples, policy);
  meta.source_prompt_kind = render_prompt(model.vocab(), policy.prompt_src);
  meta.target_prompt_kind = render_prompt(model.vocab(), policy.prompt_src) + " +steer";
  meta.theta = policy.theta;
  meta.extraction_mode = ExtractionMode::PseudoLabel;
  if (!examples.empty()) meta.language_id = examples.front().language_id;
  return isolate(c.records, std::move(meta));
}

// ---------------------------------------------------------------------------
// File formats

std::string serialize_activation_dump(std::span<const ActivationRecord> records) {
  std::string out;
  for (const ActivationRecord& r : records) {
    ordered_json j;
    j["example_id"] = r.example_id;
    j["prompt_kind"] = to_string(r.prompt_kind);
    j["L"] = r.pooled.size();
    j["D"] = r.pooled.empty() ? 0 : r.pooled.front().dim();
    ordered_json pooled = ordered_json::array();
    for (const Vec& v : r.pooled) pooled.push_back(v.data());
    j["pooled"] = std::move(pooled);
    j["transcript"] = r.transcript;
    j["edit_distance_normalized"] = r.edit_distance_normalized;
    j["kept"] = r.kept;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<ActivationRecord> parse_activation_dump(std::string_view text) {
  std::vector<ActivationRecord> records;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    try {
      const ordered_json j = ordered_json::parse(line);
      ActivationRecord r;
      r.example_id = j.at("example_id").get<std::uint64_t>();
      r.prompt_kind = parse_prompt_kind(j.at("prompt_kind").get<std::string>());
      const auto layers = j.at("L").get<std::size_t>();
      const auto dim = j.at("D").get<std::size_t>();
      for (const auto& v : j.at("pooled")) r.pooled.emplace_back(v.get<std::vector<double>>());
      if (r.pooled.size() != layers) throw ParseError(line_no, "pooled has " + std::to_string(r.pooled.size()) + " layers, L says " + std::to_string(layers));
      for (const Vec& v : r.pooled) {
        if (v.dim() != dim) throw ParseError(line_no, "pooled vector dim does not match D");
        if (!v.all_finite()) throw ParseError(line_no, "non-finite activation");
      }
      r.transcript = j.at("transcript").get<std::string>();
      r.edit_distance_normalized = j.at("edit_distance_normalized").get<double>();
      r.kept = j.at("kept").get<bool>();
      records.push_back(std::move(r));
    } catch (const ParseError&) {
      throw;
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(line_no, std::string("activation record: ") + ex.what());
    } catch (const Error& ex) {
      throw ParseError(line_no, std::string("activation record: ") + ex.what());
    }
  }
  return records;
}

void save_activation_dump(std::span<const ActivationRecord> records, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_activation_dump(records));
}

std::vector<ActivationRecord> load_activation_dump(const std::filesystem::path& path) {
  return parse_activation_dump(read_text_file(path));
}

namespace {

constexpr std::string_view kVectorMagic = "STVC";
constexpr std::uint32_t kVectorVersion = 1;

std::string meta_json(const VectorMeta& m) {
  ordered_json j;
  j["source_prompt_kind"] = m.source_prompt_kind;
  j["target_prompt_kind"] = m.target_prompt_kind;
  j["theta"] = m.theta;
  j["n_src"] = m.n_src;
  j["n_trg"] = m.n_trg;
  j["language_id"] = m.language_id;
  j["extraction_mode"] = to_string(m.extraction_mode);
  j["sign_convention"] = m.sign_convention;
  j["config_hash"] = m.config_hash;
  return j.dump();
}

VectorMeta parse_meta(std::string_view text) {
  const ordered_json j = ordered_json::parse(text);
  VectorMeta m;
  m.source_prompt_kind = j.at("source_prompt_kind").get<std::string>();
  m.target_prompt_kind = j.at("target_prompt_kind").get<std::string>();
  m.theta = j.at("theta").get<double>();
  m.n_src = j.at("n_src").get<std::size_t>();
  m.n_trg = j.at("n_trg").get<std::size_t>();
  m.language_id = j.at("language_id").get<std::size_t>();
  m.extraction_mode = parse_extraction_mode(j.at("extraction_mode").get<std::string>());
  m.sign_convention = j.at("sign_convention").get<int>();
  m.config_hash = j.at("config_hash").get<std::string>();
  if (m.sign_convention != 1 && m.sign_convention != -1) throw SpecError("sign_convention must be +1 or -1");
  return m;
}

}  // namespace

std::vector<std::uint8_t> serialize_vectors(const ScriptVectorSet& vectors) {
  ByteWriter w;
  w.put_bytes(kVectorMagic);
  w.put_u32(kVectorVersion);
  w.put_u64(vectors.layer_count());
  w.put_u64(vectors.dim());
  const std::string meta = meta_json(vectors.meta);
  w.put_u64(meta.size());
  w.put_bytes(meta);
  for (const Vec& v : vectors.vectors)
    for (double x : v.values()) w.put_f64(x);
  return w.take();
}

ScriptVectorSet deserialize_vectors(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.get_bytes(kVectorMagic.size()) != kVectorMagic) throw ParseError(0, "vector file: bad magic");
  const std::uint32_t version = r.get_u32();
  if (version != kVectorVersion) throw ParseError(0, "vector file: unsupported version " + std::to_string(version));
  const std::uint64_t layers = r.get_u64();
  const std::uint64_t dim = r.get_u64();
  const std::uint64_t meta_len = r.get_u64();
  if (meta_len > r.remaining()) throw ParseError(0, "vector file: truncated metadata");
  ScriptVectorSet out;
  try {
    out.meta = parse_meta(r.get_bytes(meta_len));
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(0, std::string("vector file metadata: ") + ex.what());
  } catch (const SpecError& ex) {
    throw ParseError(0, std::string("vector file metadata: ") + ex.what());
  }
  if (layers == 0 || dim == 0) throw ParseError(0, "vector file: empty vector set");
  if (r.remaining() != layers * dim * 8) throw ParseError(0, "vector file: payload size does not match L x D");
  for (std::uint64_t l = 0; l < layers; ++l) {
    Vec v(dim);
    for (double& x : v.values()) x = r.get_f64();
    if (!v.all_finite()) throw ParseError(0, "vector file: non-finite entry");
    out.vectors.push_back(std::move(v));
  }
  return out;
}

void save_vectors(const ScriptVectorSet& vectors, const std::filesystem::path& path) {
  const auto bytes = serialize_vectors(vectors);
  write_file_atomic(path, std::span<const std::uint8_t>(bytes));
}

ScriptVectorSet load_vectors(const std::filesystem::path& path) {
  return deserialize_vectors(read_binary_file(path));
}

}  // namespace steerlab
