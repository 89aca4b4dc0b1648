#include "steerlab/corpus.hpp"

#include <cmath>
#include <json.hpp>
#include <numeric>

#include "steerlab/error.hpp"
#include "steerlab/io.hpp"

namespace steerlab {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Validation:
      return "validation";
    case Split::Test:
      return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "validation") return Split::Validation;
  if (name == "test") return Split::Test;
  throw SpecError("unknown split '" + std::string(name) + "'");
}

void CorpusSpec::validate(std::size_t phoneme_count, std::size_t max_seq_len) const {
  if (language_count == 0) throw SpecError("language_count must be positive");
  if (train_count == 0 || validation_count == 0 || test_count == 0)
    throw SpecError("split counts must be positive");
  if (min_length < 2) throw SpecError("min_length must be at least 2");
  if (max_length < min_length) throw SpecError("max_length must be >= min_length");
  if (max_length + 2 > max_seq_len) throw SpecError("max_length must be at most max_seq_len - 2");
  if (!(inventory_fraction > 0.0 && inventory_fraction <= 1.0))
    throw SpecError("inventory_fraction must be in (0, 1]");
  if (phoneme_count == 0) throw SpecError("phoneme_count must be positive");
}

std::vector<Example> Corpus::select(Split split, std::size_t language_id) const {
  std::vector<Example> out;
  for (const Example& e : examples_)
    if (e.split == split && e.language_id == language_id) out.push_back(e);
  return out;
}

Corpus generate_corpus(const CorpusSpec& spec, const Vocab& vocab, std::size_t max_seq_len) {
  const std::size_t k = vocab.phoneme_count();
  spec.validate(k, max_seq_len);
  RngStream rng(spec.seed);

  std::vector<LanguageProfile> languages;
  const auto inventory_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(spec.inventory_fraction * static_cast<double>(k))));
  for (std::size_t l = 0; l < spec.language_count; ++l) {
    LanguageProfile lang;
    lang.language_id = l;
    lang.permutation.resize(k);
    std::iota(lang.permutation.begin(), lang.permutation.end(), std::size_t{0});
    rng.shuffle(lang.permutation);
    for (std::size_t i = 0; i < inventory_size; ++i)
      lang.inventory.push_back(vocab.phoneme(lang.permutation[i]));
    languages.push_back(std::move(lang));
  }

  std::vector<Example> examples;
  std::uint64_t next_id = 0;
  const std::pair<Split, std::size_t> splits[] = {{Split::Train, spec.train_count},
                                                  {Split::Validation, spec.validation_count},
                                                  {Split::Test, spec.test_count}};
  for (const auto& [split, count] : splits) {
    for (const LanguageProfile& lang : languages) {
      for (std::size_t i = 0; i < count; ++i) {
        Example e;
        e.example_id = next_id++;
        e.language_id = lang.language_id;
        e.split = split;
        const std::size_t len = spec.min_length + rng.below(spec.max_length - spec.min_length + 1);
        for (std::size_t j = 0; j < len; ++j) e.audio.push_back(lang.inventory[rng.below(lang.inventory.size())]);
        e.truth_src = vocab.transcribe(e.audio, Script::A);
        e.truth_trg = vocab.transcribe(e.audio, Script::B);
        examples.push_back(std::move(e));
      }
    }
  }
  return Corpus(std::move(examples), std::move(languages));
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const Example& e : corpus.examples()) {
    ordered_json j;
    j["example_id"] = e.example_id;
    j["language_id"] = e.language_id;
    j["split"] = to_string(e.split);
    j["audio"] = e.audio;
    j["truth_src"] = e.truth_src;
    j["truth_trg"] = e.truth_trg;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Corpus parse_corpus(std::string_view text) {
  std::vector<Example> examples;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    try {
      const ordered_json j = ordered_json::parse(line);
      Example e;
      e.example_id = j.at("example_id").get<std::uint64_t>();
      e.language_id = j.at("language_id").get<std::size_t>();
      e.split = parse_split(j.at("split").get<std::string>());
      e.audio = j.at("audio").get<std::vector<TokenId>>();
      e.truth_src = j.at("truth_src").get<std::string>();
      e.truth_trg = j.at("truth_trg").get<std::string>();
      decode_utf8(e.truth_src);
      decode_utf8(e.truth_trg);
      examples.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(line_no, std::string("corpus record: ") + ex.what());
    } catch (const Error& ex) {
      throw ParseError(line_no, std::string("corpus record: ") + ex.what());
    }
  }
  return Corpus(std::move(examples));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_corpus(corpus));
}

Corpus load_corpus(const std::filesystem::path& path) { return parse_corpus(read_text_file(path)); }

}  // namespace steerlab
