#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "steerlab/config.hpp"
#include "steerlab/corpus.hpp"
#include "steerlab/probe.hpp"
#include "steerlab/report.hpp"
#include "steerlab/steering.hpp"
#include "steerlab/toymodel.hpp"

namespace steerlab {

// Shared world built from a config.
struct World {
  ToyModel model;
  Corpus corpus;

  static World build(const ExperimentConfig& cfg);
};

// One steering direction (source script -> target script) of the
// script-confusion experiment.
struct DirectionOutcome {
  Script source = Script::A;
  Script target = Script::B;
  ScriptVectorSet vectors;
  ScriptVectorSet one_shot_vectors;
  SweepResult sweep;
  ConditionRow no_prompt;
  ConditionRow prompt;
  ConditionRow steer;
  ConditionRow one_shot;
};

// Runs the configured direction first, then its reverse.
std::vector<DirectionOutcome> run_script_confusion(const ExperimentConfig& cfg, const World& world);

struct TransferOutcome {
  ScriptVectorSet base;
  SweepResult zero_shot_sweep;
  ConditionRow no_prompt;
  ConditionRow prompt;
  ConditionRow zero_shot;
  std::optional<ScriptVectorSet> pseudo;
  std::optional<SweepResult> pseudo_sweep;
  std::optional<ConditionRow> pseudo_label;
};

TransferOutcome run_transfer(const ExperimentConfig& cfg, const World& world, bool with_pseudo_label);

struct OneShotOutcome {
  ScriptVectorSet ten_shot_vectors;
  ScriptVectorSet one_shot_vectors;
  SweepResult sweep;  // on the n-shot vectors
  ConditionRow ten_shot;
  ConditionRow one_shot;
  std::vector<double> cosines;  // per layer, one-shot vs n-shot
};

OneShotOutcome run_one_shot(const ExperimentConfig& cfg, const World& world);

struct ProbeOutcome {
  ProbeReport report;
  std::size_t n_train = 0;
};

ProbeOutcome run_probe(const ExperimentConfig& cfg, const World& world);

// Every artifact a reproduce run writes, keyed by file name relative to the
// output directory, including manifest.json.
using ArtifactMap = std::map<std::string, std::string>;

ArtifactMap reproduce_artifacts(const ExperimentConfig& cfg, bool charts);

// manifest.json listing each artifact's FNV-1a hash under the config hash.
std::string manifest_json(const ExperimentConfig& cfg, const ArtifactMap& artifacts);

// Writes every artifact atomically under `dir`.
void write_artifacts(const std::filesystem::path& dir, const ArtifactMap& artifacts);

}  // namespace steerlab
