#include "steerlab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include "steerlab/error.hpp"
#include "steerlab/io.hpp"

namespace steerlab {

namespace pt = boost::property_tree;

std::string_view to_string(ExperimentKind k) noexcept {
  switch (k) {
    case ExperimentKind::ScriptConfusion:
      return "script_confusion";
    case ExperimentKind::ZeroShotTransfer:
      return "zero_shot_transfer";
    case ExperimentKind::PseudoLabel:
      return "pseudo_label";
    case ExperimentKind::OneShot:
      return "one_shot";
    case ExperimentKind::Probe:
      return "probe";
  }
  return "script_confusion";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::ScriptConfusion, ExperimentKind::ZeroShotTransfer, ExperimentKind::PseudoLabel,
                 ExperimentKind::OneShot, ExperimentKind::Probe})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown experiment kind '" + std::string(name) + "'");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_on(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(sep, start);
    const auto piece = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!piece.empty()) out.push_back(piece);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto s = trim(text);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("config key '" + key + "': cannot parse '" + s + "'");
  return value;
}

// Known keys per section.
const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"experiment", {"kind", "seed", "output_dir", "steer_prompt"}},
      {"model",
       {"hidden_dim", "decoder_layers", "encoder_layers", "phoneme_count", "max_seq_len", "script_bias",
        "readout_gain", "noise_scale"}},
      {"corpus",
       {"language_count", "train_count", "validation_count", "test_count", "min_length", "max_length",
        "inventory_fraction"}},
      {"collection",
       {"theta", "n_examples", "source_script", "target_script", "language", "prompt_src", "prompt_trg"}},
      {"sweep", {"grid", "objective"}},
      {"transfer", {"target_language", "objective"}},
      {"probe", {"theta", "n_examples"}},
  };
  return s;
}

}  // namespace

void ExperimentConfig::apply_seed(std::uint64_t s) {
  seed = s;
  model.seed = s;
  corpus.seed = derive_seed(s, 1);
}

void ExperimentConfig::validate() const {
  auto wrap = [](const char* key, auto&& fn) {
    try {
      fn();
    } catch (const SpecError& e) {
      throw ConfigError(std::string("config section [") + key + "]: " + e.what());
    }
  };
  wrap("model", [&] { model.validate(); });
  wrap("corpus", [&] { corpus.validate(model.phoneme_count, model.max_seq_len); });
  wrap("sweep", [&] { sweep.validate(); });
  if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("config key 'collection.theta' must be in (0, 1]");
  if (n_examples == 0) throw ConfigError("config key 'collection.n_examples' must be at least 1");
  if (source_script == target_script)
    throw ConfigError("config keys 'collection.source_script' and 'collection.target_script' must differ");
  if (language >= corpus.language_count)
    throw ConfigError("config key 'collection.language' exceeds corpus.language_count");
  if (!(probe_theta > 0.0 && probe_theta <= 1.0)) throw ConfigError("config key 'probe.theta' must be in (0, 1]");
  if (probe_n_examples == 0) throw ConfigError("config key 'probe.n_examples' must be at least 1");
  if (output_dir.empty()) throw ConfigError("config key 'experiment.output_dir' must be nonempty");
  if (kind == ExperimentKind::ZeroShotTransfer || kind == ExperimentKind::PseudoLabel) {
    if (corpus.language_count < 2)
      throw ConfigError("config key 'corpus.language_count' must be at least 2 for " + std::string(to_string(kind)));
    if (transfer_target_language >= corpus.language_count || transfer_target_language == language)
      throw ConfigError("config key 'transfer.target_language' must name a second language");
  }
  const Vocab vocab(model.phoneme_count);
  for (const auto* list : {&prompt_src, &prompt_trg})
    for (const auto& name : *list) {
      try {
        vocab.find(name);
      } catch (const UnknownTokenError&) {
        throw ConfigError("config key 'collection.prompt_*': unknown token '" + name + "'");
      }
    }
}

std::string ExperimentConfig::canonical_text(bool with_output_dir) const {
  std::ostringstream o;
  auto flatten_to_ini = [](const std::string& flat) {
    std::string out, section;
    for (auto line : split_lines(flat)) {
      const auto dot = line.find('.');
      const auto eq = line.find('=');
      const std::string sec(line.substr(0, dot));
      if (sec != section) {
        out += (section.empty() ? "[" : "\n[") + sec + "]\n";
        section = sec;
      }
      out += std::string(line.substr(dot + 1, eq - dot - 1)) + " = " + std::string(line.substr(eq + 1)) + "\n";
    }
    return out;
  };
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
    return s;
  };
  o << "experiment.kind=" << to_string(kind) << "\n"
    << "experiment.seed=" << seed << "\n";
  if (with_output_dir) o << "experiment.output_dir=" << output_dir.generic_string() << "\n";
  o << "experiment.steer_prompt=" << (steer_prompt == SteerPrompt::Source ? "src" : "none") << "\n"
    << "model.hidden_dim=" << model.hidden_dim << "\n"
    << "model.decoder_layers=" << model.decoder_layers << "\n"
    << "model.encoder_layers=" << model.encoder_layers << "\n"
    << "model.phoneme_count=" << model.phoneme_count << "\n"
    << "model.max_seq_len=" << model.max_seq_len << "\n"
    << "model.script_bias=" << format_double(model.script_bias) << "\n"
    << "model.readout_gain=" << format_double(model.readout_gain) << "\n"
    << "model.noise_scale=" << format_double(model.noise_scale) << "\n"
    << "corpus.language_count=" << corpus.language_count << "\n"
    << "corpus.train_count=" << corpus.train_count << "\n"
    << "corpus.validation_count=" << corpus.validation_count << "\n"
    << "corpus.test_count=" << corpus.test_count << "\n"
    << "corpus.min_length=" << corpus.min_length << "\n"
    << "corpus.max_length=" << corpus.max_length << "\n"
    << "corpus.inventory_fraction=" << format_double(corpus.inventory_fraction) << "\n"
    << "collection.theta=" << format_double(theta) << "\n"
    << "collection.n_examples=" << n_examples << "\n"
    << "collection.source_script=" << to_string(source_script) << "\n"
    << "collection.target_script=" << to_string(target_script) << "\n"
    << "collection.language=" << language << "\n"
    << "collection.prompt_src=" << join(prompt_src) << "\n"
    << "collection.prompt_trg=" << join(prompt_trg) << "\n";
  o << "sweep.grid=";
  for (std::size_t i = 0; i < sweep.grid.size(); ++i) o << (i ? "," : "") << format_double(sweep.grid[i]);
  o << "\n"
    << "sweep.objective=" << to_string(sweep.objective) << "\n"
    << "transfer.target_language=" << transfer_target_language << "\n"
    << "transfer.objective=" << to_string(transfer_objective) << "\n"
    << "probe.theta=" << format_double(probe_theta) << "\n"
    << "probe.n_examples=" << probe_n_examples << "\n";
  return flatten_to_ini(o.str());
}

std::string ExperimentConfig::hash() const { return hash_hex(fnv1a64(canonical_text(false))); }

namespace {

std::vector<TokenId> resolve_prompt(const Vocab& vocab, const std::vector<std::string>& names, Script fallback) {
  if (names.empty()) return {vocab.prompt(fallback)};
  std::vector<TokenId> out;
  for (const auto& n : names) out.push_back(vocab.find(n));
  return out;
}

}  // namespace

CollectionPolicy ExperimentConfig::collection_policy(const Vocab& vocab) const {
  CollectionPolicy p = CollectionPolicy::for_scripts(vocab, source_script, target_script, theta, n_examples);
  p.prompt_src = resolve_prompt(vocab, prompt_src, source_script);
  p.prompt_trg = resolve_prompt(vocab, prompt_trg, target_script);
  return p;
}

CollectionPolicy ExperimentConfig::probe_policy(const Vocab& vocab) const {
  CollectionPolicy p = collection_policy(vocab);
  p.theta = probe_theta;
  p.n_examples = probe_n_examples;
  return p;
}

ExperimentConfig parse_config(std::string_view text) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config parse error at line " + std::to_string(e.line()) + ": " + e.message());
  }

  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) {
      if (!body.data().empty()) throw ConfigError("config key '" + section + "' must live inside a section");
      throw ConfigError("unknown config section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("unknown config key '" + section + "." + key + "'");
    }
  }

  ExperimentConfig cfg;
  auto get = [&](const char* path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return trim(*v);
    return std::nullopt;
  };
  auto num = [&]<typename T>(const char* path, T& dst) {
    if (auto v = get(path)) dst = parse_number<T>(path, *v);
  };
  auto with = [&](const char* path, auto&& fn) {
    if (auto v = get(path)) {
      try {
        fn(*v);
      } catch (const SpecError& e) {
        throw ConfigError(std::string("config key '") + path + "': " + e.what());
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("config key '") + path + "': " + e.what());
      }
    }
  };

  std::uint64_t seed = 0;
  num("experiment.seed", seed);
  cfg.apply_seed(seed);
  with("experiment.kind", [&](const std::string& v) { cfg.kind = parse_experiment_kind(v); });
  with("experiment.output_dir", [&](const std::string& v) { cfg.output_dir = v; });
  with("experiment.steer_prompt", [&](const std::string& v) {
    if (v == "src") cfg.steer_prompt = SteerPrompt::Source;
    else if (v == "none") cfg.steer_prompt = SteerPrompt::None;
    else throw ConfigError("expected src or none");
  });

  num("model.hidden_dim", cfg.model.hidden_dim);
  num("model.decoder_layers", cfg.model.decoder_layers);
  num("model.encoder_layers", cfg.model.encoder_layers);
  num("model.phoneme_count", cfg.model.phoneme_count);
  num("model.max_seq_len", cfg.model.max_seq_len);
  num("model.script_bias", cfg.model.script_bias);
  num("model.readout_gain", cfg.model.readout_gain);
  num("model.noise_scale", cfg.model.noise_scale);

  num("corpus.language_count", cfg.corpus.language_count);
  num("corpus.train_count", cfg.corpus.train_count);
  num("corpus.validation_count", cfg.corpus.validation_count);
  num("corpus.test_count", cfg.corpus.test_count);
  num("corpus.min_length", cfg.corpus.min_length);
  num("corpus.max_length", cfg.corpus.max_length);
  num("corpus.inventory_fraction", cfg.corpus.inventory_fraction);

  num("collection.theta", cfg.theta);
  num("collection.n_examples", cfg.n_examples);
  num("collection.language", cfg.language);
  with("collection.source_script", [&](const std::string& v) { cfg.source_script = parse_script(v); });
  with("collection.target_script", [&](const std::string& v) { cfg.target_script = parse_script(v); });
  with("collection.prompt_src", [&](const std::string& v) { cfg.prompt_src = split_on(v, ' '); });
  with("collection.prompt_trg", [&](const std::string& v) { cfg.prompt_trg = split_on(v, ' '); });

  with("sweep.grid", [&](const std::string& v) {
    cfg.sweep.grid.clear();
    for (const auto& piece : split_on(v, ',')) cfg.sweep.grid.push_back(parse_number<double>("sweep.grid", piece));
  });
  with("sweep.objective", [&](const std::string& v) { cfg.sweep.objective = parse_objective(v); });

  num("transfer.target_language", cfg.transfer_target_language);
  with("transfer.objective", [&](const std::string& v) { cfg.transfer_objective = parse_objective(v); });

  num("probe.theta", cfg.probe_theta);
  num("probe.n_examples", cfg.probe_n_examples);

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path)); }

}  // namespace steerlab
