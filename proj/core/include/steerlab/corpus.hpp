#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "steerlab/toymodel.hpp"

namespace steerlab {

enum class Split { Train, Validation, Test };

std::string_view to_string(Split s) noexcept;
// "train", "validation" or "test"; throws SpecError otherwise.
Split parse_split(std::string_view name);

struct Example {
  std::uint64_t example_id = 0;
  std::size_t language_id = 0;
  Split split = Split::Train;
  std::vector<TokenId> audio;  // phoneme token ids
  std::string truth_src;       // script A
  std::string truth_trg;       // script B

  const std::string& truth(Script s) const noexcept { return s == Script::A ? truth_src : truth_trg; }

  friend bool operator==(const Example&, const Example&) = default;
};

struct CorpusSpec {
  std::size_t language_count = 2;
  std::size_t train_count = 200;       // per language
  std::size_t validation_count = 50;   // per language
  std::size_t test_count = 100;        // per language
  std::size_t min_length = 4;
  std::size_t max_length = 12;
  // Share of the phoneme alphabet each language draws from.
  double inventory_fraction = 0.75;
  std::uint64_t seed = 0;

  // Throws SpecError. max_seq_len bounds max_length + 2.
  void validate(std::size_t phoneme_count, std::size_t max_seq_len) const;

  friend bool operator==(const CorpusSpec&, const CorpusSpec&) = default;
};

// A synthetic language: a seeded permutation of the shared phoneme alphabet
// whose leading entries form the language's phoneme inventory. Both scripts
// are shared across languages.
struct LanguageProfile {
  std::size_t language_id = 0;
  std::vector<std::size_t> permutation;
  std::vector<TokenId> inventory;
};

class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Example> examples, std::vector<LanguageProfile> languages = {})
      : examples_(std::move(examples)), languages_(std::move(languages)) {}

  const std::vector<Example>& examples() const noexcept { return examples_; }
  // Language profiles are known only for generated corpora.
  const std::vector<LanguageProfile>& languages() const noexcept { return languages_; }
  std::size_t size() const noexcept { return examples_.size(); }
  bool empty() const noexcept { return examples_.empty(); }

  // Examples of one split and language, in corpus order.
  std::vector<Example> select(Split split, std::size_t language_id) const;

  friend bool operator==(const Corpus& a, const Corpus& b) { return a.examples_ == b.examples_; }

 private:
  std::vector<Example> examples_;
  std::vector<LanguageProfile> languages_;
};

// Deterministic given spec.seed. Example ids are assigned in generation order
// (split-major, then language, then index), so splits never share an id.
Corpus generate_corpus(const CorpusSpec& spec, const Vocab& vocab, std::size_t max_seq_len);

// Newline-delimited JSON, one example per line.
std::string serialize_corpus(const Corpus& corpus);
// Throws ParseError naming the offending line.
Corpus parse_corpus(std::string_view text);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

}  // namespace steerlab
