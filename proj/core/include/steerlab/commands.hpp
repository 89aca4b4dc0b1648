#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "steerlab/config.hpp"

namespace steerlab {

// Flags shared by the subcommands. Unset optionals fall back to the config
// file, then to built-in defaults.
struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<double> sigma;
  std::optional<double> theta;
  std::optional<std::size_t> n_shots;
  std::optional<std::string> objective;
  bool charts = false;

  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> dump;
  std::optional<std::filesystem::path> vectors;
  std::optional<std::filesystem::path> hyp;
  std::optional<std::filesystem::path> ref;
  std::optional<std::string> target;
  std::optional<std::string> split;
  std::optional<std::size_t> language;
  std::optional<int> sign;
  bool fold_case = false;
};

// Config file (if any) with command-line overrides applied.
ExperimentConfig resolve_config(const CommandOptions& opts);

// Each command returns 0 on success. On failure it prints
// "error: <command>: <stage>: <message>" to `err` and returns 1.
int cmd_gen(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_build(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_collect(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_isolate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_steer(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_probe(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_reproduce(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace steerlab
