#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace steerlab {

// UTF-8 <-> code points. Invalid UTF-8 throws ParseError.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);

// Unit-cost Levenshtein distance over Unicode scalar values.
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);
std::size_t edit_distance(std::string_view a, std::string_view b);

// d_edit(z, ref) / max(|z|, |ref|). Both empty is defined as 0.
double normalized_edit_distance(std::u32string_view z, std::u32string_view ref);
double normalized_edit_distance(std::string_view z, std::string_view ref);

// 1 - normalized_edit_distance.
double accuracy(std::u32string_view z, std::u32string_view ref);
double accuracy(std::string_view z, std::string_view ref);

// A named set of code points, stored as sorted inclusive ranges.
class ScriptInventory {
 public:
  using Range = std::pair<char32_t, char32_t>;

  // Throws SpecError on an empty name, empty set or inverted range.
  ScriptInventory(std::string name, std::vector<Range> ranges);
  static ScriptInventory from_chars(std::string name, std::string_view utf8_members);

  // Basic Latin + Latin-1 letters + Latin Extended-A/B.
  static ScriptInventory latin();
  // U+0400..U+052F.
  static ScriptInventory cyrillic();
  // Greek and Coptic block minus punctuation code points, plus Greek Extended.
  static ScriptInventory greek();
  // Looks up "Latin", "Cyrillic" or "Greek" (case-insensitive); throws SpecError otherwise.
  static ScriptInventory builtin(std::string_view name);

  const std::string& name() const noexcept { return name_; }
  const std::vector<Range>& ranges() const noexcept { return ranges_; }
  bool contains(char32_t c) const noexcept;
  bool overlaps(const ScriptInventory& other) const noexcept;

 private:
  std::string name_;
  std::vector<Range> ranges_;
};

inline constexpr std::string_view kOtherScript = "OTHER";

// Throws SpecError if any two inventories share a code point.
void require_disjoint(std::span<const ScriptInventory> inventories);

// Name of the first inventory containing c, or kOtherScript.
std::string_view classify_char(char32_t c, std::span<const ScriptInventory> inventories);

// Keeps exactly the characters of `target`, in order.
std::u32string strip_to_script(std::u32string_view text, const ScriptInventory& target);
std::string strip_to_script(std::string_view text, const ScriptInventory& target);

// Simple case fold for Latin, Latin-1, Cyrillic and Greek capitals.
std::u32string fold_case(std::u32string_view text);

struct EvalOptions {
  bool fold_case = false;
};

struct EvalReport {
  std::string target;
  bool fold_case = false;
  std::vector<double> per_example;
  double mean_accuracy = 0.0;
  double max_accuracy = 0.0;
  // Hypotheses with at least one target character and no letters outside it.
  std::size_t n_fully_target = 0;
  // Pairs where both raw strings were empty (scored 1.0).
  std::size_t n_both_empty = 0;
};

// Strips hypothesis and reference to `target`, then scores each pair with
// accuracy(). A nonempty raw reference whose stripped pair is empty scores 0.
// Throws DimensionError on a length mismatch.
EvalReport evaluate(std::span<const std::string> hypotheses,
                    std::span<const std::string> references,
                    const ScriptInventory& target, EvalOptions options = {});

// Score of a single pair under the evaluate() rules.
double score_pair(std::string_view hypothesis, std::string_view reference,
                  const ScriptInventory& target, EvalOptions options = {});

}  // namespace steerlab
