#include <gtest/gtest.h>

#include <algorithm>

#include "steerlab/error.hpp"
#include "steerlab/metrics.hpp"

using namespace steerlab;

namespace {

// Textbook recursive Levenshtein definition over suffixes a[i..] and b[j..],
// memoized on (i, j).
class RecursiveOracle {
 public:
  RecursiveOracle(std::u32string_view a, std::u32string_view b)
      : a_(a), b_(b), memo_((a.size() + 1) * (b.size() + 1), kUnset) {}

  std::size_t operator()() { return go(0, 0); }

 private:
  static constexpr std::size_t kUnset = static_cast<std::size_t>(-1);

  std::size_t go(std::size_t i, std::size_t j) {
    if (i == a_.size()) return b_.size() - j;
    if (j == b_.size()) return a_.size() - i;
    auto& slot = memo_[i * (b_.size() + 1) + j];
    if (slot != kUnset) return slot;
    const std::size_t sub = go(i + 1, j + 1) + (a_[i] == b_[j] ? 0 : 1);
    const std::size_t del = go(i + 1, j) + 1;
    const std::size_t ins = go(i, j + 1) + 1;
    return slot = std::min({sub, del, ins});
  }

  std::u32string_view a_, b_;
  std::vector<std::size_t> memo_;
};

std::size_t recursive_distance(std::u32string_view a, std::u32string_view b) { return RecursiveOracle(a, b)(); }

std::vector<std::u32string> all_strings(std::u32string_view alphabet, std::size_t max_len) {
  std::vector<std::u32string> out{U""};
  std::vector<std::u32string> frontier{U""};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::u32string> next;
    for (const auto& s : frontier)
      for (char32_t c : alphabet) next.push_back(s + c);
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

}  // namespace

TEST(EditDistance, MatchesRecursiveOracleExhaustively) {
  const auto strings = all_strings(U"abc", 6);
  ASSERT_EQ(strings.size(), 1093u);
  for (const auto& a : strings)
    for (const auto& b : strings)
      ASSERT_EQ(edit_distance(a, b), recursive_distance(a, b)) << encode_utf8(a) << " / " << encode_utf8(b);
}

TEST(EditDistance, NormalizedMatchesDefinitionExhaustively) {
  const auto strings = all_strings(U"abc", 4);
  for (const auto& a : strings)
    for (const auto& b : strings) {
      const double want =
          a.empty() && b.empty() ? 0.0
                                 : static_cast<double>(recursive_distance(a, b)) / std::max(a.size(), b.size());
      ASSERT_EQ(normalized_edit_distance(a, b), want);
      ASSERT_EQ(accuracy(a, b), 1.0 - want);
    }
}

TEST(EditDistance, KittenSitting) {
  EXPECT_EQ(edit_distance("kitten", "sitting"), 3u);
  EXPECT_DOUBLE_EQ(normalized_edit_distance("kitten", "sitting"), 3.0 / 7.0);
  EXPECT_DOUBLE_EQ(accuracy("kitten", "sitting"), 4.0 / 7.0);
}

TEST(EditDistance, EmptyCases) {
  EXPECT_EQ(edit_distance("", ""), 0u);
  EXPECT_EQ(edit_distance("abc", ""), 3u);
  EXPECT_DOUBLE_EQ(normalized_edit_distance("", ""), 0.0);
  EXPECT_DOUBLE_EQ(normalized_edit_distance("", "ab"), 1.0);
  EXPECT_DOUBLE_EQ(accuracy("", ""), 1.0);
}

TEST(EditDistance, MetricAxioms) {
  const auto strings = all_strings(U"ab", 4);
  for (const auto& a : strings)
    for (const auto& b : strings) {
      const auto dab = edit_distance(a, b);
      EXPECT_EQ(dab, edit_distance(b, a));
      EXPECT_EQ(dab == 0, a == b);
      EXPECT_LE(dab, std::max(a.size(), b.size()));
      const double n = normalized_edit_distance(a, b);
      EXPECT_GE(n, 0.0);
      EXPECT_LE(n, 1.0);
      for (const auto& c : strings) EXPECT_LE(dab, edit_distance(a, c) + edit_distance(c, b));
    }
}

TEST(EditDistance, CountsCodePointsNotBytes) {
  EXPECT_EQ(edit_distance("привет", "привёт"), 1u);
  EXPECT_EQ(edit_distance("мир", "mir"), 3u);
  EXPECT_DOUBLE_EQ(normalized_edit_distance("да", "до"), 0.5);
}

TEST(Utf8, RoundTripAndInvalidInput) {
  const std::string s = "aб γ€";
  const auto cps = decode_utf8(s);
  EXPECT_EQ(cps.size(), 5u);
  EXPECT_EQ(encode_utf8(cps), s);
  EXPECT_THROW(decode_utf8("\xff\xfe"), ParseError);
  EXPECT_THROW(decode_utf8("\xd0"), ParseError);
}

TEST(ScriptInventory, BuiltinsAreDisjoint) {
  const std::vector<ScriptInventory> inv{ScriptInventory::latin(), ScriptInventory::cyrillic(), ScriptInventory::greek()};
  EXPECT_NO_THROW(require_disjoint(inv));
  EXPECT_EQ(classify_char(U'q', inv), "Latin");
  EXPECT_EQ(classify_char(U'ж', inv), "Cyrillic");
  EXPECT_EQ(classify_char(U'λ', inv), "Greek");
  EXPECT_EQ(classify_char(U'7', inv), kOtherScript);
  EXPECT_EQ(classify_char(U' ', inv), kOtherScript);
  EXPECT_EQ(classify_char(U'?', inv), kOtherScript);
  EXPECT_EQ(ScriptInventory::builtin("cyrillic").name(), "Cyrillic");
  EXPECT_THROW(ScriptInventory::builtin("klingon"), SpecError);
}

TEST(ScriptInventory, OverlapDetected) {
  const std::vector<ScriptInventory> inv{ScriptInventory::from_chars("x", "abc"),
                                         ScriptInventory::from_chars("y", "cde")};
  EXPECT_TRUE(inv[0].overlaps(inv[1]));
  EXPECT_THROW(require_disjoint(inv), SpecError);
  EXPECT_THROW(ScriptInventory("bad", {{U'z', U'a'}}), SpecError);
  EXPECT_THROW(ScriptInventory("", {{U'a', U'z'}}), SpecError);
}

TEST(StripToScript, KeepsOnlyTargetInOrder) {
  const auto lat = ScriptInventory::latin();
  EXPECT_EQ(strip_to_script("Zdravo, свет 42!", lat), "Zdravo");
  EXPECT_EQ(strip_to_script("Здраво, svет", ScriptInventory::cyrillic()), "Здравоет");
}

TEST(StripToScript, IdempotentAndDistributesOverConcatenation) {
  const auto cyr = ScriptInventory::cyrillic();
  const std::vector<std::string> samples{"", "abc", "дом dom", "Ёж, 12 ёж", "λόγος и logos", "..."};
  for (const auto& a : samples) {
    const auto once = strip_to_script(a, cyr);
    EXPECT_EQ(strip_to_script(once, cyr), once);
    for (const auto& b : samples) EXPECT_EQ(strip_to_script(a + b, cyr), once + strip_to_script(b, cyr));
  }
}

TEST(FoldCase, FoldsSupportedScripts) {
  EXPECT_EQ(encode_utf8(fold_case(decode_utf8("ABC Привет ΛΟΓΟΣ ÀÉ"))), "abc привет λογοσ àé");
}

TEST(Evaluate, ScoringRules) {
  const auto cyr = ScriptInventory::cyrillic();
  const std::vector<std::string> hyp{"дом", "dom", "", "дим!", "xyz"};
  const std::vector<std::string> ref{"дом", "дом", "", "дом", "123"};
  const auto r = evaluate(hyp, ref, cyr);
  ASSERT_EQ(r.per_example.size(), 5u);
  EXPECT_DOUBLE_EQ(r.per_example[0], 1.0);
  EXPECT_DOUBLE_EQ(r.per_example[1], 0.0);
  EXPECT_DOUBLE_EQ(r.per_example[2], 1.0);
  EXPECT_DOUBLE_EQ(r.per_example[3], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.per_example[4], 0.0);
  EXPECT_EQ(r.n_both_empty, 1u);
  EXPECT_EQ(r.n_fully_target, 2u);
  EXPECT_DOUBLE_EQ(r.max_accuracy, 1.0);
  EXPECT_NEAR(r.mean_accuracy, (1.0 + 0 + 1 + 2.0 / 3.0 + 0) / 5.0, 1e-15);
  EXPECT_THROW(evaluate(hyp, std::vector<std::string>{"a"}, cyr), DimensionError);
}

TEST(Evaluate, FoldCaseOption) {
  const auto lat = ScriptInventory::latin();
  EXPECT_DOUBLE_EQ(score_pair("Dom", "dom", lat), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(score_pair("Dom", "dom", lat, {true}), 1.0);
}

TEST(Evaluate, EmptyHypothesisAgainstNonemptyReference) {
  EXPECT_DOUBLE_EQ(score_pair("", "abc", ScriptInventory::latin()), 0.0);
  EXPECT_DOUBLE_EQ(score_pair("abc", "", ScriptInventory::latin()), 0.0);
}
