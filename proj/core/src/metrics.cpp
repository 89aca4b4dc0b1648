#include "steerlab/metrics.hpp"

#include <algorithm>
#include <boost/locale/encoding_utf.hpp>
#include <cctype>
#include <numeric>

#include "steerlab/error.hpp"

namespace steerlab {

std::u32string decode_utf8(std::string_view text) {
  try {
    return boost::locale::conv::utf_to_utf<char32_t>(text.data(), text.data() + text.size(),
                                                     boost::locale::conv::stop);
  } catch (const boost::locale::conv::conversion_error&) {
    throw ParseError(0, "invalid UTF-8 input");
  }
}

std::string encode_utf8(std::u32string_view text) {
  return boost::locale::conv::utf_to_utf<char>(text.data(), text.data() + text.size(),
                                               boost::locale::conv::stop);
}

std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  return edit_distance(decode_utf8(a), decode_utf8(b));
}

double normalized_edit_distance(std::u32string_view z, std::u32string_view ref) {
  const std::size_t longest = std::max(z.size(), ref.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(edit_distance(z, ref)) / static_cast<double>(longest);
}

double normalized_edit_distance(std::string_view z, std::string_view ref) {
  return normalized_edit_distance(decode_utf8(z), decode_utf8(ref));
}

double accuracy(std::u32string_view z, std::u32string_view ref) {
  return 1.0 - normalized_edit_distance(z, ref);
}

double accuracy(std::string_view z, std::string_view ref) {
  return accuracy(decode_utf8(z), decode_utf8(ref));
}

ScriptInventory::ScriptInventory(std::string name, std::vector<Range> ranges)
    : name_(std::move(name)), ranges_(std::move(ranges)) {
  if (name_.empty()) throw SpecError("script inventory needs a name");
  if (ranges_.empty()) throw SpecError("script inventory '" + name_ + "' is empty");
  for (const auto& [lo, hi] : ranges_) {
    if (lo > hi) throw SpecError("script inventory '" + name_ + "' has an inverted range");
  }
  std::sort(ranges_.begin(), ranges_.end());
  // Merge overlapping or adjacent ranges.
  std::vector<Range> merged;
  for (const auto& r : ranges_) {
    if (!merged.empty() && r.first <= merged.back().second + 1) {
      merged.back().second = std::max(merged.back().second, r.second);
    } else {
      merged.push_back(r);
    }
  }
  ranges_ = std::move(merged);
}

ScriptInventory ScriptInventory::from_chars(std::string name, std::string_view utf8_members) {
  std::vector<Range> ranges;
  for (char32_t c : decode_utf8(utf8_members)) ranges.emplace_back(c, c);
  return ScriptInventory(std::move(name), std::move(ranges));
}

ScriptInventory ScriptInventory::latin() {
  return ScriptInventory("Latin", {{U'A', U'Z'}, {U'a', U'z'}, {0x00C0, 0x00D6}, {0x00D8, 0x00F6},
                                   {0x00F8, 0x024F}});
}

ScriptInventory ScriptInventory::cyrillic() {
  return ScriptInventory("Cyrillic", {{0x0400, 0x052F}});
}

ScriptInventory ScriptInventory::greek() {
  return ScriptInventory("Greek", {{0x0370, 0x0373}, {0x0376, 0x0377}, {0x037B, 0x037D},
                                   {0x037F, 0x037F}, {0x0386, 0x0386}, {0x0388, 0x03FF},
                                   {0x1F00, 0x1FFF}});
}

ScriptInventory ScriptInventory::builtin(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "latin") return latin();
  if (lower == "cyrillic") return cyrillic();
  if (lower == "greek") return greek();
  throw SpecError("unknown built-in script inventory '" + std::string(name) + "'");
}

bool ScriptInventory::contains(char32_t c) const noexcept {
  auto it = std::upper_bound(ranges_.begin(), ranges_.end(), c,
                             [](char32_t v, const Range& r) { return v < r.first; });
  if (it == ranges_.begin()) return false;
  --it;
  return c <= it->second;
}

bool ScriptInventory::overlaps(const ScriptInventory& other) const noexcept {
  for (const auto& a : ranges_)
    for (const auto& b : other.ranges_)
      if (a.first <= b.second && b.first <= a.second) return true;
  return false;
}

void require_disjoint(std::span<const ScriptInventory> inventories) {
  for (std::size_t i = 0; i < inventories.size(); ++i)
    for (std::size_t j = i + 1; j < inventories.size(); ++j)
      if (inventories[i].overlaps(inventories[j]))
        throw SpecError("script inventories '" + inventories[i].name() + "' and '" +
                        inventories[j].name() + "' overlap");
}

std::string_view classify_char(char32_t c, std::span<const ScriptInventory> inventories) {
  for (const auto& inv : inventories)
    if (inv.contains(c)) return inv.name();
  return kOtherScript;
}

std::u32string strip_to_script(std::u32string_view text, const ScriptInventory& target) {
  std::u32string out;
  out.reserve(text.size());
  for (char32_t c : text)
    if (target.contains(c)) out.push_back(c);
  return out;
}

std::string strip_to_script(std::string_view text, const ScriptInventory& target) {
  return encode_utf8(strip_to_script(decode_utf8(text), target));
}

std::u32string fold_case(std::u32string_view text) {
  std::u32string out(text);
  for (char32_t& c : out) {
    if ((c >= U'A' && c <= U'Z') || (c >= 0x00C0 && c <= 0x00DE && c != 0x00D7) ||
        (c >= 0x0391 && c <= 0x03AB && c != 0x03A2) || (c >= 0x0410 && c <= 0x042F)) {
      c += 0x20;
    } else if (c >= 0x0400 && c <= 0x040F) {
      c += 0x50;
    }
  }
  return out;
}

namespace {

// Separators, punctuation and digits that do not count against "fully in
// target script".
bool is_neutral(char32_t c) {
  if (c < 0x80) return !std::isalpha(static_cast<unsigned char>(c));
  return (c >= 0x00A0 && c <= 0x00BF) || c == 0x00D7 || c == 0x00F7 ||
         (c >= 0x2000 && c <= 0x206F) || (c >= 0x3000 && c <= 0x303F) || c == 0x037E ||
         c == 0x0387;
}

struct PairScore {
  double accuracy;
  bool fully_target;
  bool both_empty;
};

PairScore score(std::string_view hyp, std::string_view ref, const ScriptInventory& target,
                EvalOptions options) {
  std::u32string h = decode_utf8(hyp);
  std::u32string r = decode_utf8(ref);
  if (h.empty() && r.empty()) return {1.0, false, true};
  if (options.fold_case) {
    h = fold_case(h);
    r = fold_case(r);
  }
  const std::u32string hs = strip_to_script(h, target);
  const std::u32string rs = strip_to_script(r, target);
  bool fully = !hs.empty();
  for (char32_t c : h) {
    if (!target.contains(c) && !is_neutral(c)) {
      fully = false;
      break;
    }
  }
  if (hs.empty() && rs.empty()) return {0.0, fully, false};
  return {accuracy(hs, rs), fully, false};
}

}  // namespace

double score_pair(std::string_view hypothesis, std::string_view reference,
                  const ScriptInventory& target, EvalOptions options) {
  return score(hypothesis, reference, target, options).accuracy;
}

EvalReport evaluate(std::span<const std::string> hypotheses,
                    std::span<const std::string> references, const ScriptInventory& target,
                    EvalOptions options) {
  if (hypotheses.size() != references.size()) {
    throw DimensionError("evaluate: " + std::to_string(hypotheses.size()) + " hypotheses vs " +
                         std::to_string(references.size()) + " references");
  }
  EvalReport report;
  report.target = target.name();
  report.fold_case = options.fold_case;
  report.per_example.reserve(hypotheses.size());
  double total = 0.0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const PairScore s = score(hypotheses[i], references[i], target, options);
    report.per_example.push_back(s.accuracy);
    total += s.accuracy;
    report.max_accuracy = std::max(report.max_accuracy, s.accuracy);
    if (s.fully_target) ++report.n_fully_target;
    if (s.both_empty) ++report.n_both_empty;
  }
  if (!hypotheses.empty()) report.mean_accuracy = total / static_cast<double>(hypotheses.size());
  return report;
}

}  // namespace steerlab
