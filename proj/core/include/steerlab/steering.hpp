#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "steerlab/corpus.hpp"
#include "steerlab/metrics.hpp"
#include "steerlab/numerics.hpp"
#include "steerlab/toymodel.hpp"

namespace steerlab {

enum class PromptKind { Src, Trg };

std::string_view to_string(PromptKind k) noexcept;
// "SRC" or "TRG"; throws SpecError otherwise.
PromptKind parse_prompt_kind(std::string_view name);

// One decode of one example, mean-pooled per decoder layer.
struct ActivationRecord {
  std::uint64_t example_id = 0;
  PromptKind prompt_kind = PromptKind::Src;
  std::vector<Vec> pooled;  // one vector per decoder layer
  std::string transcript;
  double edit_distance_normalized = 0.0;
  // The example passed the threshold under both prompt conditions.
  bool kept = false;

  friend bool operator==(const ActivationRecord&, const ActivationRecord&) = default;
};

enum class ExtractionMode { Standard, OneShot, PseudoLabel };

std::string_view to_string(ExtractionMode m) noexcept;
ExtractionMode parse_extraction_mode(std::string_view name);

struct VectorMeta {
  std::string source_prompt_kind;  // rendered source prompt, e.g. "PROMPT_A"
  std::string target_prompt_kind;
  double theta = 0.0;
  std::size_t n_src = 0;
  std::size_t n_trg = 0;
  std::size_t language_id = 0;
  ExtractionMode extraction_mode = ExtractionMode::Standard;
  // Sign that moves SRC-prompted decodes toward the target script when the
  // vectors are added: +1 adds r = v_SRC - v_TRG as is, -1 subtracts it.
  int sign_convention = 1;
  std::string config_hash;

  friend bool operator==(const VectorMeta&, const VectorMeta&) = default;
};

// One steering vector r_l = v_SRC_l - v_TRG_l per decoder layer.
struct ScriptVectorSet {
  std::vector<Vec> vectors;
  VectorMeta meta;

  std::size_t layer_count() const noexcept { return vectors.size(); }
  std::size_t dim() const noexcept { return vectors.empty() ? 0 : vectors.front().dim(); }

  friend bool operator==(const ScriptVectorSet&, const ScriptVectorSet&) = default;
};

struct CollectionPolicy {
  double theta = 0.4;
  std::size_t n_examples = 10;
  std::vector<TokenId> prompt_src;
  std::vector<TokenId> prompt_trg;
  // Scripts whose ground truth the SRC and TRG decodes are compared against.
  Script src_script = Script::A;
  Script trg_script = Script::B;

  // PROMPT_<src> / PROMPT_<trg> single-token prompts.
  static CollectionPolicy for_scripts(const Vocab& vocab, Script src, Script trg,
                                      double theta = 0.4, std::size_t n_examples = 10);

  // Throws SpecError.
  void validate() const;
};

enum class SweepObjective { MeanAccuracy, MaxAccuracy };

std::string_view to_string(SweepObjective o) noexcept;
// "mean" or "max".
SweepObjective parse_objective(std::string_view name);

struct SweepPolicy {
  std::vector<double> grid = {0.1, 0.2, 0.3, 0.4, 0.5};
  SweepObjective objective = SweepObjective::MeanAccuracy;

  void validate() const;
};

// Scores transcripts against the ground truth of `script`, stripped to
// `inventory`.
struct TargetScorer {
  Script script;
  ScriptInventory inventory;
  EvalOptions options;

  static TargetScorer for_script(const Vocab& vocab, Script s) { return {s, vocab.inventory(s), {}}; }

  EvalReport score(std::span<const std::string> transcripts, std::span<const Example> examples) const;
};

// Token names joined by spaces; "-" for an empty prompt.
std::string render_prompt(const Vocab& vocab, std::span<const TokenId> prompt);

// The strict acceptance filter: normalized distance < theta.
bool passes_threshold(double normalized_distance, double theta) noexcept;

// Per-layer mean over the generated-token positions. Throws Error when the
// decode produced no tokens.
std::vector<Vec> mean_pool(std::span<const LayerTap> taps);

struct CollectionResult {
  std::vector<ActivationRecord> records;  // SRC, TRG pairs in corpus order
  std::size_t accepted = 0;
};

// Walks `examples` in order, decoding each under prompt_src and prompt_trg
// and scoring both against ground truth. An example is accepted when both
// normalized edit distances are < theta; collection stops after n_examples
// accepted examples. Throws InsufficientExamplesError when the split runs out.
CollectionResult collect(const ToyModel& model, std::span<const Example> examples,
                         const CollectionPolicy& policy);

// v_SRC and v_TRG are means over kept records of each kind; r = v_SRC - v_TRG.
// Throws EmptySideError, DimensionError (inconsistent shapes) or
// DegenerateDirectionError (any |r_l| < 1e-12). Fills n_src / n_trg / theta
// into a copy of `meta`.
ScriptVectorSet isolate(std::span<const ActivationRecord> records, VectorMeta meta = {});

SteeringInjection make_injection(const ScriptVectorSet& vectors, double sigma, int sign);

// Throws DimensionError if the vectors do not match the model.
DecodeResult steer_decode(const ToyModel& model, std::span<const TokenId> audio,
                          std::span<const TokenId> prompt, const ScriptVectorSet& vectors,
                          double sigma, int sign);

// Decodes every example under `prompt` (optionally steered) and scores the
// transcripts.
struct ConditionResult {
  std::vector<std::string> transcripts;
  EvalReport report;
};

ConditionResult run_condition(const ToyModel& model, std::span<const Example> examples,
                              std::span<const TokenId> prompt, const TargetScorer& scorer,
                              const ScriptVectorSet* vectors = nullptr, double sigma = 0.0,
                              int sign = 1);

// Picks the sign whose steered decodes under `prompt` score higher against
// the target; ties resolve to +1.
int infer_sign_convention(const ToyModel& model, const ScriptVectorSet& vectors,
                          std::span<const Example> examples, std::span<const TokenId> prompt,
                          const TargetScorer& scorer, double sigma);

struct SweepRow {
  double sigma = 0.0;
  double mean_accuracy = 0.0;
  double max_accuracy = 0.0;
  std::size_t n_fully_target = 0;
};

struct SweepResult {
  double best_sigma = 0.0;
  SweepObjective objective = SweepObjective::MeanAccuracy;
  std::vector<SweepRow> rows;  // grid order
};

// Grid search over sigma; argmax of the objective with ties broken toward
// the smaller sigma. The sign is vectors.meta.sign_convention.
SweepResult sweep_sigma(const ToyModel& model, const ScriptVectorSet& vectors,
                        std::span<const Example> examples, std::span<const TokenId> prompt,
                        const SweepPolicy& policy, const TargetScorer& scorer);

// isolate(collect(n = 1)) with extraction_mode = one_shot.
ScriptVectorSet one_shot_extract(const ToyModel& model, std::span<const Example> examples,
                                 const CollectionPolicy& policy, VectorMeta meta = {});

// Standard extraction: isolate(collect(policy)).
ScriptVectorSet standard_extract(const ToyModel& model, std::span<const Example> examples,
                                 const CollectionPolicy& policy, VectorMeta meta = {});

// Re-extracts vectors for a new language. The SRC side is the unsteered
// prompt_src decode scored against ground truth; the TRG side is the
// prompt_src decode steered by `base` at (sigma, sign), tapped after
// injection, and scored against its own output stripped to the target
// script (the pseudo reference).
ScriptVectorSet pseudo_label_extract(const ToyModel& model, const ScriptVectorSet& base, double sigma,
                                     int sign, std::span<const Example> examples,
                                     const CollectionPolicy& policy, VectorMeta meta = {});

// Collection with the pseudo-label TRG condition; exposed for inspection.
CollectionResult collect_pseudo_label(const ToyModel& model, const ScriptVectorSet& base, double sigma,
                                      int sign, std::span<const Example> examples,
                                      const CollectionPolicy& policy);

// ---------------------------------------------------------------------------
// File formats

// Newline-delimited JSON activation dump.
std::string serialize_activation_dump(std::span<const ActivationRecord> records);
// Throws ParseError naming the line.
std::vector<ActivationRecord> parse_activation_dump(std::string_view text);
void save_activation_dump(std::span<const ActivationRecord> records, const std::filesystem::path& path);
std::vector<ActivationRecord> load_activation_dump(const std::filesystem::path& path);

// Binary vector file: "STVC", u32 version, u64 L, u64 D, u64 meta length,
// meta as JSON, then L*D little-endian doubles.
std::vector<std::uint8_t> serialize_vectors(const ScriptVectorSet& vectors);
ScriptVectorSet deserialize_vectors(std::span<const std::uint8_t> bytes);
void save_vectors(const ScriptVectorSet& vectors, const std::filesystem::path& path);
ScriptVectorSet load_vectors(const std::filesystem::path& path);

}  // namespace steerlab
