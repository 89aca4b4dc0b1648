#include <CLI11.hpp>
#include <functional>
#include <iostream>
#include <map>

#include "steerlab/commands.hpp"

namespace {

using Command = std::function<int(const steerlab::CommandOptions&, std::ostream&, std::ostream&)>;

void add_common(CLI::App* sub, steerlab::CommandOptions& o) {
  sub->add_option("--config", o.config, "Experiment config file (INI)");
  sub->add_option("--seed", o.seed, "Override experiment seed");
  sub->add_option("--out", o.out, "Output directory");
  sub->add_option("--sigma", o.sigma, "Steering strength")->check(CLI::NonNegativeNumber);
  sub->add_option("--theta", o.theta, "Edit-distance filter threshold");
  sub->add_option("--n-shots", o.n_shots, "Accepted examples per extraction");
  sub->add_option("--objective", o.objective, "Sweep objective")->check(CLI::IsMember({"mean", "max"}));
  sub->add_flag("--charts", o.charts, "Also write SVG charts");
  sub->add_option("--model", o.model, "Model file (.stlb); built from config if absent")
      ->check(CLI::ExistingFile);
  sub->add_option("--corpus", o.corpus, "Corpus file (.jsonl); generated from config if absent")
      ->check(CLI::ExistingFile);
  sub->add_option("--split", o.split, "Corpus split")->check(CLI::IsMember({"train", "validation", "test"}));
  sub->add_option("--language", o.language, "Language id");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Script-vector steering on a constructed encoder-decoder model"};
  app.require_subcommand(1);

  steerlab::CommandOptions opts;
  std::map<CLI::App*, Command> dispatch;
  auto add = [&](const char* name, const char* help, Command fn) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, opts);
    dispatch[sub] = std::move(fn);
    return sub;
  };

  add("gen", "Generate the synthetic corpus", steerlab::cmd_gen);
  add("build", "Build and save the toy model", steerlab::cmd_build);
  add("collect", "Collect pooled activations under SRC and TRG prompts", steerlab::cmd_collect);
  auto* isolate = add("isolate", "Compute per-layer script vectors from an activation dump", steerlab::cmd_isolate);
  isolate->add_option("--dump", opts.dump, "Activation dump (.jsonl)")->required()->check(CLI::ExistingFile);
  isolate->add_option("--sign", opts.sign, "Sign convention; inferred on validation if absent")
      ->check(CLI::IsMember({-1, 1}));
  auto* steer = add("steer", "Decode with script vectors added", steerlab::cmd_steer);
  steer->add_option("--vectors", opts.vectors, "Vector file (.stv)")->required()->check(CLI::ExistingFile);
  steer->add_option("--sign", opts.sign, "Override the stored sign convention")->check(CLI::IsMember({-1, 1}));
  auto* sweep = add("sweep", "Grid-search the steering strength", steerlab::cmd_sweep);
  sweep->add_option("--vectors", opts.vectors, "Vector file (.stv)")->required()->check(CLI::ExistingFile);
  add("probe", "Fit and score the difference-of-means probe", steerlab::cmd_probe);
  auto* eval = add("eval", "Score hypotheses against references in a target script", steerlab::cmd_eval);
  eval->add_option("--hyp", opts.hyp, "Hypotheses, one per line")->required()->check(CLI::ExistingFile);
  eval->add_option("--ref", opts.ref, "References, one per line")->required()->check(CLI::ExistingFile);
  eval->add_option("--target", opts.target, "Target script: Latin, Cyrillic, Greek, toy-A, toy-B");
  eval->add_flag("--fold-case", opts.fold_case, "Case-fold before scoring");
  add("reproduce", "Run the experiment described by the config", steerlab::cmd_reproduce);

  CLI11_PARSE(app, argc, argv);

  for (const auto& [sub, fn] : dispatch)
    if (sub->parsed()) return fn(opts, std::cout, std::cerr);
  return 2;
}
