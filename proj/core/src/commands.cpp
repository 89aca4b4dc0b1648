#include "steerlab/commands.hpp"

#include <json.hpp>
#include <ostream>

#include "steerlab/error.hpp"
#include "steerlab/experiment.hpp"
#include "steerlab/io.hpp"
#include "steerlab/metrics.hpp"
#include "steerlab/report.hpp"

namespace steerlab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

ExperimentConfig resolve_config(const CommandOptions& opts) {
  ExperimentConfig cfg = opts.config ? load_config(*opts.config) : ExperimentConfig{};
  if (opts.seed) cfg.apply_seed(*opts.seed);
  if (opts.out) cfg.output_dir = *opts.out;
  if (opts.theta) cfg.theta = *opts.theta;
  if (opts.n_shots) cfg.n_examples = *opts.n_shots;
  if (opts.objective) {
    try {
      cfg.sweep.objective = parse_objective(*opts.objective);
      cfg.transfer_objective = cfg.sweep.objective;
    } catch (const Error& e) {
      throw ConfigError(std::string("--objective: ") + e.what());
    }
  }
  if (opts.language) cfg.language = *opts.language;
  cfg.validate();
  return cfg;
}

namespace {

// Tracks the current stage for error messages.
class Run {
 public:
  Run(std::string command, std::ostream& err) : command_(std::move(command)), err_(err) {}

  void stage(std::string name) { stage_ = std::move(name); }

  template <typename F>
  int guard(F&& body) {
    try {
      body();
      return 0;
    } catch (const std::exception& e) {
      err_ << "error: " << command_ << ": " << stage_ << ": " << e.what() << "\n";
      return 1;
    }
  }

 private:
  std::string command_;
  std::string stage_ = "config";
  std::ostream& err_;
};

// Records an artifact's hash in <out>/manifest.json, keeping other entries.
void register_artifact(const ExperimentConfig& cfg, const std::string& name, std::string_view body) {
  const fs::path path = cfg.output_dir / "manifest.json";
  json j = json::object();
  if (fs::exists(path)) {
    try {
      j = json::parse(read_text_file(path));
    } catch (const json::exception&) {
      j = json::object();
    }
  }
  if (!j.contains("artifacts") || !j["artifacts"].is_object()) j["artifacts"] = json::object();
  json entry;
  entry["config_hash"] = cfg.hash();
  entry["fnv1a64"] = hash_hex(fnv1a64(body));
  j["artifacts"][name] = std::move(entry);
  write_file_atomic(path, j.dump(2) + "\n");
}

void emit(const ExperimentConfig& cfg, std::ostream& out, const std::string& name, std::string_view body) {
  write_file_atomic(cfg.output_dir / name, body);
  register_artifact(cfg, name, body);
  out << (cfg.output_dir / name).generic_string() << "\n";
}

void emit(const ExperimentConfig& cfg, std::ostream& out, const std::string& name,
          const std::vector<std::uint8_t>& bytes) {
  emit(cfg, out, name, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

ToyModel obtain_model(const ExperimentConfig& cfg, const CommandOptions& opts) {
  return opts.model ? ToyModel::load(*opts.model) : ToyModel::build(cfg.model);
}

Corpus obtain_corpus(const ExperimentConfig& cfg, const CommandOptions& opts, const ToyModel& model) {
  return opts.corpus ? load_corpus(*opts.corpus)
                     : generate_corpus(cfg.corpus, model.vocab(), model.spec().max_seq_len);
}

std::vector<Example> select_split(const Corpus& corpus, const CommandOptions& opts, Split fallback,
                                  std::size_t language) {
  const Split split = opts.split ? parse_split(*opts.split) : fallback;
  auto examples = corpus.select(split, language);
  if (examples.empty())
    throw SpecError("no examples for split " + std::string(to_string(split)) + ", language " +
                    std::to_string(language));
  return examples;
}

void check_vectors(const ScriptVectorSet& v, const ToyModel& model) {
  if (v.layer_count() != model.layer_count() || v.dim() != model.hidden_dim())
    throw DimensionError("vectors are " + std::to_string(v.layer_count()) + "x" + std::to_string(v.dim()) +
                         " but the model is " + std::to_string(model.layer_count()) + "x" +
                         std::to_string(model.hidden_dim()));
}

std::vector<TokenId> steer_prompt(const ExperimentConfig& cfg, const CollectionPolicy& policy) {
  return cfg.steer_prompt == SteerPrompt::Source ? policy.prompt_src : std::vector<TokenId>{};
}

}  // namespace

int cmd_gen(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Run run("gen", err);
  return run.guard([&] {
    const auto cfg = resolve_config(opts);
    run.stage("generate");
    const Vocab vocab(cfg.model.phoneme_count);
    const Corpus corpus = generate_corpus(cfg.corpus, vocab, cfg.model.max_seq_len);
    run.stage("write");
    emit(cfg, out, "corpus.jsonl", serialize_corpus(corpus));
  });
}

int cmd_build(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Run run("build", err);
  return run.guard([&] {
    const auto cfg = resolve_config(opts);
    run.stage("build");
    const ToyModel model = ToyModel::build(cfg.model);
    run.stage("write");
    emit(cfg, out, "model.stlb", model.serialize());
  });
}

int cmd_collect(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Run run("collect", err);
  return run.guard([&] {
    const auto cfg = resolve_config(opts);
    run.stage("load model");
    const ToyModel model = obtain_model(cfg, opts);
    run.stage("load corpus");
    const Corpus corpus = obtain_corpus(cfg, opts, model);
    const auto examples = select_split(corpus, opts, Split::Train, cfg.language);
    run.stage("collect");
    const auto result = collect(model, examples, cfg.collection_policy(model.vocab()));
    run.stage("write");
    emit(cfg, out, "activations.jsonl", serialize_activation_dump(result.records));
  });
}

int cmd_isolate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Run run("isolate", err);
  return run.guard([&] {
    const auto cfg = resolve_config(opts);
    if (!opts.dump) throw ConfigError("--dump is required");
    run.stage("load dump");
    const auto records = load_activation_dump(*opts.dump);
    run.stage("isolate");
    const Vocab vocab(cfg.model.phoneme_count);
    const auto policy = cfg.collection_policy(vocab);
    VectorMeta meta;
    meta.source_prompt_kind = render_prompt(vocab, policy.prompt_src);
    meta.target_prompt_kind = render_prompt(vocab, policy.prompt_trg);
    meta.theta = cfg.theta;
    meta.language_id = cfg.language;
    meta.config_hash = cfg.hash();
    ScriptVectorSet vectors = isolate(records, meta);
    if (opts.sign) {
      if (*opts.sign != 1 && *opts.sign != -1) throw ConfigError("--sign must be 1 or -1");
      vectors.meta.sign_convention = *opts.sign;
    } else {
      run.stage("infer sign");
      const ToyModel model = obtain_model(cfg, opts);
      check_vectors(vectors, model);
      const Corpus corpus = obtain_corpus(cfg, opts, model);
      const auto validation = corpus.select(Split::Validation, cfg.language);
      vectors.meta.sign_convention =
          infer_sign_convention(model, vectors, validation, steer_prompt(cfg, policy),
                                TargetScorer::for_script(model.vocab(), cfg.target_script),
                                *std::max_element(cfg.sweep.grid.begin(), cfg.sweep.grid.end()));
    }
    run.stage("write");
    emit(cfg, out, "vectors.stv", serialize_vectors(vectors));
  });
}

int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Run run("sweep", err);
  return run.guard([&] {
    const auto cfg = resolve_config(opts);
    if (!opts.vectors) throw ConfigError("--vectors is required");
    run.stage("load vectors");
    const auto vectors = load_vectors(*opts.vectors);
    run.stage("load model");
    const ToyModel model = obtain_model(cfg, opts);
    check_vectors(vectors, model);
    run.stage("load corpus");
    const Corpus corpus = obtain_corpus(cfg, opts, model);
    const auto examples = select_split(corpus, opts, Split::Validation, cfg.language);
    run.stage("sweep");
    const auto policy = cfg.collection_policy(model.vocab());
    const auto result = sweep_sigma(model, vectors, examples, steer_prompt(cfg, policy), cfg.sweep,
                                    TargetScorer::for_script(model.vocab(), cfg.target_script));
    run.stage("write");
    emit(cfg, out, "sweep.tsv", sweep_report(cfg.hash(), cfg.target_script, result, vectors.meta.sign_convention));
    if (opts.charts) emit(cfg, out, "sweep.svg", sweep_chart(cfg.target_script, result));
  });
}

int cmd_steer(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Run run("steer", err);
  return run.guard([&] {
    const auto cfg = resolve_config(opts);
    if (!opts.vectors) throw ConfigError("--vectors is required");
    run.stage("load vectors");
    const auto vectors = load_vectors(*opts.vectors);
    run.stage("load model");
    const ToyModel model = obtain_model(cfg, opts);
    check_vectors(vectors, model);
    run.stage("load corpus");
    const Corpus corpus = obtain_corpus(cfg, opts, model);
    const auto examples = select_split(corpus, opts, Split::Test, cfg.language);
    const auto policy = cfg.collection_policy(model.vocab());
    const auto prompt = steer_prompt(cfg, policy);
    const auto scorer = TargetScorer::for_script(model.vocab(), cfg.target_script);
    double sigma = 0.0;
    if (opts.sigma) {
      sigma = *opts.sigma;
    } else {
      run.stage("sweep");
      sigma = sweep_sigma(model, vectors, corpus.select(Split::Validation, cfg.language), prompt, cfg.sweep, scorer)
                  .best_sigma;
    }
    const int sign = opts.sign.value_or(vectors.meta.sign_convention);
    run.stage("steer");
    const auto result = run_condition(model, examples, prompt, scorer, &vectors, sigma, sign);
    run.stage("write");
    emit(cfg, out, "steer.tsv",
         condition_report("steer", cfg.hash(),
                          {{cfg.target_script, render_prompt(model.vocab(), prompt), sigma, sign, result.report}}));
    std::string hyp;
    for (const auto& t : result.transcripts) hyp += t + "\n";
    emit(cfg, out, "steer_transcripts.txt", hyp);
  });
}

int cmd_probe(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Run run("probe", err);
  return run.guard([&] {
    const auto cfg = resolve_config(opts);
    run.stage("load model");
    const ToyModel model = obtain_model(cfg, opts);
    run.stage("load corpus");
    const Corpus corpus = obtain_corpus(cfg, opts, model);
    run.stage("collect");
    const auto policy = cfg.probe_policy(model.vocab());
    const auto train = collect(model, corpus.select(Split::Train, cfg.language), policy);
    const auto test = collect(model, corpus.select(Split::Test, cfg.language), policy);
    run.stage("probe");
    const auto report = probe_accuracy(fit_probe(train.records), test.records);
    run.stage("write");
    emit(cfg, out, "probe.tsv", probe_report(cfg.hash(), report));
    if (opts.charts) emit(cfg, out, "probe.svg", probe_chart(report));
  });
}

int cmd_eval(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Run run("eval", err);
  return run.guard([&] {
    const auto cfg = resolve_config(opts);
    if (!opts.hyp || !opts.ref) throw ConfigError("--hyp and --ref are required");
    run.stage("load inputs");
    const auto hyp_text = read_text_file(*opts.hyp);
    const auto ref_text = read_text_file(*opts.ref);
    std::vector<std::string> hyps, refs;
    for (auto l : split_lines(hyp_text)) hyps.emplace_back(l);
    for (auto l : split_lines(ref_text)) refs.emplace_back(l);
    run.stage("evaluate");
    const std::string target_name = opts.target.value_or("toy-" + std::string(to_string(cfg.target_script)));
    ScriptInventory inventory = ScriptInventory::latin();
    if (target_name == "toy-A" || target_name == "toy-B") {
      inventory = Vocab(cfg.model.phoneme_count).inventory(parse_script(target_name.substr(4)));
    } else {
      inventory = ScriptInventory::builtin(target_name);
    }
    const EvalReport report = evaluate(hyps, refs, inventory, EvalOptions{opts.fold_case});
    run.stage("write");
    emit(cfg, out, "eval.tsv", eval_report(cfg.hash(), report));
    out << "mean_accuracy=" << fmt(report.mean_accuracy) << " max_accuracy=" << fmt(report.max_accuracy)
        << " n=" << report.per_example.size() << "\n";
  });
}

int cmd_reproduce(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Run run("reproduce", err);
  return run.guard([&] {
    const auto cfg = resolve_config(opts);
    run.stage(std::string(to_string(cfg.kind)));
    const ArtifactMap artifacts = reproduce_artifacts(cfg, opts.charts);
    run.stage("write");
    write_artifacts(cfg.output_dir, artifacts);
    for (const auto& [name, body] : artifacts) out << (cfg.output_dir / name).generic_string() << "\n";
  });
}

}  // namespace steerlab
