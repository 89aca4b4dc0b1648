#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "steerlab/corpus.hpp"
#include "steerlab/steering.hpp"
#include "steerlab/toymodel.hpp"

namespace steerlab {

enum class ExperimentKind { ScriptConfusion, ZeroShotTransfer, PseudoLabel, OneShot, Probe };

std::string_view to_string(ExperimentKind k) noexcept;
ExperimentKind parse_experiment_kind(std::string_view name);

// Which prompt steered decodes run under.
enum class SteerPrompt { Source, None };

// Declarative description of a run. Sections and keys of the config file:
//
//   [experiment] kind, seed, output_dir, steer_prompt (src | none)
//   [model]      hidden_dim, decoder_layers, encoder_layers, phoneme_count,
//                max_seq_len, script_bias, readout_gain, noise_scale
//   [corpus]     language_count, train_count, validation_count, test_count,
//                min_length, max_length, inventory_fraction
//   [collection] theta, n_examples, source_script, target_script, language,
//                prompt_src, prompt_trg (space-separated token names)
//   [sweep]      grid (comma-separated), objective (mean | max)
//   [transfer]   target_language, objective
//   [probe]      theta, n_examples
//
// Every key is optional; omitted keys take the defaults below.
struct ExperimentConfig {
  ExperimentConfig() { apply_seed(0); }

  ExperimentKind kind = ExperimentKind::ScriptConfusion;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  SteerPrompt steer_prompt = SteerPrompt::Source;

  ToyModelSpec model;
  CorpusSpec corpus;

  double theta = 0.4;
  std::size_t n_examples = 10;
  Script source_script = Script::A;
  Script target_script = Script::B;
  std::size_t language = 0;
  std::vector<std::string> prompt_src;  // empty: PROMPT_<source_script>
  std::vector<std::string> prompt_trg;  // empty: PROMPT_<target_script>

  SweepPolicy sweep;

  std::size_t transfer_target_language = 1;
  SweepObjective transfer_objective = SweepObjective::MaxAccuracy;

  double probe_theta = 0.1;
  std::size_t probe_n_examples = 50;

  // Propagates `seed` into the model and corpus specs.
  void apply_seed(std::uint64_t s);

  // Throws ConfigError naming the offending key.
  void validate() const;

  // Fully resolved INI text in fixed key order; parse_config() reads it back
  // to an equal config.
  std::string canonical_text(bool with_output_dir = true) const;
  // FNV-1a of canonical_text(false); stamped on every artifact.
  std::string hash() const;

  CollectionPolicy collection_policy(const Vocab& vocab) const;
  CollectionPolicy probe_policy(const Vocab& vocab) const;
};

// Throws ConfigError on unknown sections/keys or unparsable values.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace steerlab
