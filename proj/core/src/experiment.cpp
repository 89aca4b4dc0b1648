#include "steerlab/experiment.hpp"

#include <json.hpp>

#include "steerlab/error.hpp"
#include "steerlab/io.hpp"

namespace steerlab {

using json = nlohmann::ordered_json;

World World::build(const ExperimentConfig& cfg) {
  ToyModel model = ToyModel::build(cfg.model);
  Corpus corpus = generate_corpus(cfg.corpus, model.vocab(), cfg.model.max_seq_len);
  return {std::move(model), std::move(corpus)};
}

namespace {

struct Direction {
  CollectionPolicy policy;
  std::vector<TokenId> steer_prompt;
  TargetScorer scorer;
};

Direction make_direction(const ExperimentConfig& cfg, const Vocab& vocab, bool reverse) {
  ExperimentConfig c = cfg;
  if (reverse) {
    std::swap(c.source_script, c.target_script);
    std::swap(c.prompt_src, c.prompt_trg);
  }
  Direction d{c.collection_policy(vocab), {}, TargetScorer::for_script(vocab, c.target_script)};
  if (cfg.steer_prompt == SteerPrompt::Source) d.steer_prompt = d.policy.prompt_src;
  return d;
}

VectorMeta base_meta(const ExperimentConfig& cfg, const Vocab& vocab, const CollectionPolicy& policy,
                     std::size_t language) {
  VectorMeta m;
  m.source_prompt_kind = render_prompt(vocab, policy.prompt_src);
  m.target_prompt_kind = render_prompt(vocab, policy.prompt_trg);
  m.language_id = language;
  m.config_hash = cfg.hash();
  return m;
}

double sign_probe_sigma(const SweepPolicy& sweep) {
  double s = 0.0;
  for (double g : sweep.grid) s = std::max(s, g);
  return s;
}

ConditionRow row(const Vocab& vocab, Script target, std::span<const TokenId> prompt, double sigma, int sign,
                 EvalReport report) {
  return {target, render_prompt(vocab, prompt), sigma, sign, std::move(report)};
}

// Extracts vectors on the training split and fixes their sign on validation.
ScriptVectorSet extract_signed(const ExperimentConfig& cfg, const World& world, const Direction& d,
                               std::size_t language, const SweepPolicy& sweep, bool one_shot) {
  const auto& vocab = world.model.vocab();
  const auto train = world.corpus.select(Split::Train, language);
  const auto validation = world.corpus.select(Split::Validation, language);
  auto meta = base_meta(cfg, vocab, d.policy, language);
  ScriptVectorSet v = one_shot ? one_shot_extract(world.model, train, d.policy, meta)
                               : standard_extract(world.model, train, d.policy, meta);
  v.meta.sign_convention =
      infer_sign_convention(world.model, v, validation, d.steer_prompt, d.scorer, sign_probe_sigma(sweep));
  return v;
}

}  // namespace

std::vector<DirectionOutcome> run_script_confusion(const ExperimentConfig& cfg, const World& world) {
  const auto& vocab = world.model.vocab();
  const auto validation = world.corpus.select(Split::Validation, cfg.language);
  const auto test = world.corpus.select(Split::Test, cfg.language);

  std::vector<DirectionOutcome> out;
  for (bool reverse : {false, true}) {
    const Direction d = make_direction(cfg, vocab, reverse);
    DirectionOutcome o;
    o.source = d.policy.src_script;
    o.target = d.policy.trg_script;
    o.vectors = extract_signed(cfg, world, d, cfg.language, cfg.sweep, false);
    const int sign = o.vectors.meta.sign_convention;
    o.sweep = sweep_sigma(world.model, o.vectors, validation, d.steer_prompt, cfg.sweep, d.scorer);
    const double sigma = o.sweep.best_sigma;

    o.no_prompt = row(vocab, o.target, {}, 0.0, 0,
                      run_condition(world.model, test, {}, d.scorer).report);
    o.prompt = row(vocab, o.target, d.policy.prompt_trg, 0.0, 0,
                   run_condition(world.model, test, d.policy.prompt_trg, d.scorer).report);
    o.steer = row(vocab, o.target, d.steer_prompt, sigma, sign,
                  run_condition(world.model, test, d.steer_prompt, d.scorer, &o.vectors, sigma, sign).report);

    const auto train = world.corpus.select(Split::Train, cfg.language);
    o.one_shot_vectors = one_shot_extract(world.model, train, d.policy, o.vectors.meta);
    o.one_shot_vectors.meta.sign_convention = sign;
    o.one_shot =
        row(vocab, o.target, d.steer_prompt, sigma, sign,
            run_condition(world.model, test, d.steer_prompt, d.scorer, &o.one_shot_vectors, sigma, sign).report);
    out.push_back(std::move(o));
  }
  return out;
}

TransferOutcome run_transfer(const ExperimentConfig& cfg, const World& world, bool with_pseudo_label) {
  const auto& vocab = world.model.vocab();
  const Direction d = make_direction(cfg, vocab, false);
  const std::size_t target_lang = cfg.transfer_target_language;
  const auto validation = world.corpus.select(Split::Validation, target_lang);
  const auto test = world.corpus.select(Split::Test, target_lang);
  SweepPolicy sweep = cfg.sweep;
  sweep.objective = cfg.transfer_objective;

  TransferOutcome o;
  o.base = extract_signed(cfg, world, d, cfg.language, cfg.sweep, false);
  const int sign = o.base.meta.sign_convention;
  const Script target = d.policy.trg_script;

  o.no_prompt = row(vocab, target, {}, 0.0, 0, run_condition(world.model, test, {}, d.scorer).report);
  o.prompt = row(vocab, target, d.policy.prompt_trg, 0.0, 0,
                 run_condition(world.model, test, d.policy.prompt_trg, d.scorer).report);
  o.zero_shot_sweep = sweep_sigma(world.model, o.base, validation, d.steer_prompt, sweep, d.scorer);
  const double sigma = o.zero_shot_sweep.best_sigma;
  o.zero_shot = row(vocab, target, d.steer_prompt, sigma, sign,
                    run_condition(world.model, test, d.steer_prompt, d.scorer, &o.base, sigma, sign).report);

  if (with_pseudo_label) {
    const auto train = world.corpus.select(Split::Train, target_lang);
    auto meta = base_meta(cfg, vocab, d.policy, target_lang);
    ScriptVectorSet pseudo = pseudo_label_extract(world.model, o.base, sigma, sign, train, d.policy, meta);
    pseudo.meta.sign_convention = sign;
    SweepResult ps = sweep_sigma(world.model, pseudo, validation, d.steer_prompt, sweep, d.scorer);
    o.pseudo_label =
        row(vocab, target, d.steer_prompt, ps.best_sigma, sign,
            run_condition(world.model, test, d.steer_prompt, d.scorer, &pseudo, ps.best_sigma, sign).report);
    o.pseudo = std::move(pseudo);
    o.pseudo_sweep = std::move(ps);
  }
  return o;
}

OneShotOutcome run_one_shot(const ExperimentConfig& cfg, const World& world) {
  const auto& vocab = world.model.vocab();
  const Direction d = make_direction(cfg, vocab, false);
  const auto validation = world.corpus.select(Split::Validation, cfg.language);
  const auto test = world.corpus.select(Split::Test, cfg.language);
  const auto train = world.corpus.select(Split::Train, cfg.language);

  OneShotOutcome o;
  o.ten_shot_vectors = extract_signed(cfg, world, d, cfg.language, cfg.sweep, false);
  const int sign = o.ten_shot_vectors.meta.sign_convention;
  o.sweep = sweep_sigma(world.model, o.ten_shot_vectors, validation, d.steer_prompt, cfg.sweep, d.scorer);
  const double sigma = o.sweep.best_sigma;
  o.one_shot_vectors = one_shot_extract(world.model, train, d.policy, o.ten_shot_vectors.meta);
  o.one_shot_vectors.meta.sign_convention = sign;

  const Script target = d.policy.trg_script;
  o.ten_shot = row(
      vocab, target, d.steer_prompt, sigma, sign,
      run_condition(world.model, test, d.steer_prompt, d.scorer, &o.ten_shot_vectors, sigma, sign).report);
  o.one_shot = row(
      vocab, target, d.steer_prompt, sigma, sign,
      run_condition(world.model, test, d.steer_prompt, d.scorer, &o.one_shot_vectors, sigma, sign).report);
  for (std::size_t l = 0; l < o.ten_shot_vectors.layer_count(); ++l)
    o.cosines.push_back(cosine(o.one_shot_vectors.vectors[l], o.ten_shot_vectors.vectors[l]));
  return o;
}

ProbeOutcome run_probe(const ExperimentConfig& cfg, const World& world) {
  const auto policy = cfg.probe_policy(world.model.vocab());
  const auto train = collect(world.model, world.corpus.select(Split::Train, cfg.language), policy);
  const auto test = collect(world.model, world.corpus.select(Split::Test, cfg.language), policy);
  const ProbeSet probe = fit_probe(train.records);
  return {probe_accuracy(probe, test.records), train.accepted};
}

namespace {

std::string vectors_blob(const ScriptVectorSet& v) {
  const auto bytes = serialize_vectors(v);
  return std::string(bytes.begin(), bytes.end());
}

std::string lower(Script s) { return s == Script::A ? "a" : "b"; }

}  // namespace

ArtifactMap reproduce_artifacts(const ExperimentConfig& cfg, bool charts) {
  const World world = World::build(cfg);
  const std::string hash = cfg.hash();
  ArtifactMap a;
  a["config.ini"] = cfg.canonical_text(false);

  switch (cfg.kind) {
    case ExperimentKind::ScriptConfusion: {
      const auto dirs = run_script_confusion(cfg, world);
      std::vector<ConditionRow> np, pr, st, os;
      for (const auto& d : dirs) {
        np.push_back(d.no_prompt);
        pr.push_back(d.prompt);
        st.push_back(d.steer);
        os.push_back(d.one_shot);
        a["sweep_" + lower(d.target) + ".tsv"] = sweep_report(hash, d.target, d.sweep, d.vectors.meta.sign_convention);
        a["vectors_" + lower(d.target) + ".stv"] = vectors_blob(d.vectors);
        if (charts) a["sweep_" + lower(d.target) + ".svg"] = sweep_chart(d.target, d.sweep);
      }
      a["no_prompt.tsv"] = condition_report("no_prompt", hash, np);
      a["prompt.tsv"] = condition_report("prompt", hash, pr);
      a["steer.tsv"] = condition_report("steer", hash, st);
      a["one_shot.tsv"] = condition_report("one_shot", hash, os);
      break;
    }
    case ExperimentKind::ZeroShotTransfer:
    case ExperimentKind::PseudoLabel: {
      const bool pseudo = cfg.kind == ExperimentKind::PseudoLabel;
      const auto t = run_transfer(cfg, world, pseudo);
      const Script target = t.zero_shot.target;
      a["no_prompt.tsv"] = condition_report("no_prompt", hash, {t.no_prompt});
      a["prompt.tsv"] = condition_report("prompt", hash, {t.prompt});
      a["zero_shot.tsv"] = condition_report("zero_shot", hash, {t.zero_shot});
      a["sweep_zero_shot.tsv"] = sweep_report(hash, target, t.zero_shot_sweep, t.base.meta.sign_convention);
      a["vectors_base.stv"] = vectors_blob(t.base);
      if (charts) a["sweep_zero_shot.svg"] = sweep_chart(target, t.zero_shot_sweep);
      if (pseudo) {
        a["pseudo_label.tsv"] = condition_report("pseudo_label", hash, {*t.pseudo_label});
        a["sweep_pseudo_label.tsv"] = sweep_report(hash, target, *t.pseudo_sweep, t.pseudo->meta.sign_convention);
        a["vectors_pseudo_label.stv"] = vectors_blob(*t.pseudo);
        if (charts) a["sweep_pseudo_label.svg"] = sweep_chart(target, *t.pseudo_sweep);
      }
      break;
    }
    case ExperimentKind::OneShot: {
      const auto o = run_one_shot(cfg, world);
      a["steer.tsv"] = condition_report("steer", hash, {o.ten_shot});
      a["one_shot.tsv"] = condition_report("one_shot", hash, {o.one_shot});
      a["sweep.tsv"] = sweep_report(hash, o.ten_shot.target, o.sweep, o.ten_shot.sign);
      TsvTable sim({"layer", "cosine"});
      sim.comment("config_hash", hash);
      for (std::size_t l = 0; l < o.cosines.size(); ++l) sim.row({std::to_string(l), fmt(o.cosines[l])});
      a["one_shot_similarity.tsv"] = sim.str();
      a["vectors.stv"] = vectors_blob(o.ten_shot_vectors);
      a["vectors_one_shot.stv"] = vectors_blob(o.one_shot_vectors);
      if (charts) a["sweep.svg"] = sweep_chart(o.ten_shot.target, o.sweep);
      break;
    }
    case ExperimentKind::Probe: {
      const auto p = run_probe(cfg, world);
      a["probe.tsv"] = probe_report(hash, p.report);
      if (charts) a["probe.svg"] = probe_chart(p.report);
      break;
    }
  }
  a["manifest.json"] = manifest_json(cfg, a);
  return a;
}

std::string manifest_json(const ExperimentConfig& cfg, const ArtifactMap& artifacts) {
  json j;
  j["config_hash"] = cfg.hash();
  j["kind"] = std::string(to_string(cfg.kind));
  j["seed"] = cfg.seed;
  json files = json::object();
  for (const auto& [name, body] : artifacts)
    if (name != "manifest.json") files[name] = hash_hex(fnv1a64(body));
  j["artifacts"] = std::move(files);
  return j.dump(2) + "\n";
}

void write_artifacts(const std::filesystem::path& dir, const ArtifactMap& artifacts) {
  for (const auto& [name, body] : artifacts) write_file_atomic(dir / name, body);
}

}  // namespace steerlab
