/*
 * Copyright 2026 The sosbias Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Hate-speech classifier fairness: text preprocessing, train / validation /
// test splitting, and FPR / TPR / AUC gaps between marginalized and
// non-marginalized subgroups.
//
// Rates and AUCs are computed exactly as rationals; doubles are derived
// from them only for display.

#ifndef SOSBIAS_FAIRNESS_HPP_
#define SOSBIAS_FAIRNESS_HPP_

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

#include "sosbias/error.hpp"
#include "sosbias/text.hpp"

namespace sosbias {

using Rational = boost::rational<std::int64_t>;

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

inline std::string to_string(const Rational& r) {
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

inline Rational abs_diff(const Rational& a, const Rational& b) {
  const Rational d = a - b;
  return d < 0 ? -d : d;
}

// ---- preprocessing ----

struct PreprocessConfig {
  bool strip_urls = true;
  bool strip_mentions = true;
  bool strip_non_ascii = true;
  bool strip_retweet = true;
  bool lowercase = true;
  bool expand_contractions = true;
  bool pad_punctuation = true;
};

inline constexpr std::string_view kContractionTableVersion = "contractions-v1";

inline const std::map<std::string, std::string>& contraction_table() {
  static const std::map<std::string, std::string> table = {
      {"ain't", "am not"},       {"aren't", "are not"},     {"can't", "cannot"},
      {"couldn't", "could not"}, {"didn't", "did not"},     {"doesn't", "does not"},
      {"don't", "do not"},       {"hadn't", "had not"},     {"hasn't", "has not"},
      {"haven't", "have not"},   {"he'd", "he would"},      {"he'll", "he will"},
      {"he's", "he is"},         {"here's", "here is"},     {"how's", "how is"},
      {"i'd", "i would"},        {"i'll", "i will"},        {"i'm", "i am"},
      {"i've", "i have"},        {"isn't", "is not"},       {"it'd", "it would"},
      {"it'll", "it will"},      {"it's", "it is"},         {"let's", "let us"},
      {"ma'am", "madam"},        {"mightn't", "might not"}, {"mustn't", "must not"},
      {"shan't", "shall not"},   {"she'd", "she would"},    {"she'll", "she will"},
      {"she's", "she is"},       {"shouldn't", "should not"}, {"that's", "that is"},
      {"there's", "there is"},   {"they'd", "they would"},  {"they'll", "they will"},
      {"they're", "they are"},   {"they've", "they have"},  {"wasn't", "was not"},
      {"we'd", "we would"},      {"we'll", "we will"},      {"we're", "we are"},
      {"we've", "we have"},      {"weren't", "were not"},   {"what's", "what is"},
      {"where's", "where is"},   {"who's", "who is"},       {"won't", "will not"},
      {"wouldn't", "would not"}, {"y'all", "you all"},      {"you'd", "you would"},
      {"you'll", "you will"},    {"you're", "you are"},     {"you've", "you have"},
  };
  return table;
}

namespace preprocess_detail {

inline bool is_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

// Removed spans are replaced by a space, so removal never joins two
// neighbouring fragments into a new URL, mention or word.
inline std::string strip_urls(std::string s) {
  const std::string lower = text::to_lower(s);
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::string_view rest(lower.data() + i, lower.size() - i);
    if (text::starts_with(rest, "http://") || text::starts_with(rest, "https://") ||
        text::starts_with(rest, "www.")) {
      while (i < s.size() && !text::is_space(s[i])) ++i;
      out += ' ';
      continue;
    }
    out += s[i++];
  }
  return out;
}

inline std::string strip_mentions(const std::string& s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '@' && i + 1 < s.size() && (is_alnum(s[i + 1]) || s[i + 1] == '_')) {
      ++i;
      while (i < s.size() && (is_alnum(s[i]) || s[i] == '_')) ++i;
      out += ' ';
      continue;
    }
    out += s[i++];
  }
  return out;
}

inline std::string strip_non_ascii(std::string s) {
  for (char& c : s) {
    if (static_cast<unsigned char>(c) >= 0x80) c = ' ';
  }
  return s;
}

// Standalone, case-sensitive "RT".
inline std::string strip_retweet(std::string s) {
  for (std::size_t pos = s.find("RT"); pos != std::string::npos; pos = s.find("RT", pos + 1)) {
    const bool left = pos == 0 || !is_alnum(s[pos - 1]);
    const bool right = pos + 2 >= s.size() || !is_alnum(s[pos + 2]);
    if (left && right) s.replace(pos, 2, "  ");
  }
  return s;
}

inline std::string expand_contractions(const std::string& s) {
  const auto& table = contraction_table();
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_alnum(s[i]) || s[i] == '\'') {
      std::size_t j = i;
      while (j < s.size() && (is_alnum(s[j]) || s[j] == '\'')) ++j;
      const std::string word = s.substr(i, j - i);
      auto it = table.find(text::to_lower(word));
      out += it == table.end() ? word : it->second;
      i = j;
      continue;
    }
    out += s[i++];
  }
  return out;
}

inline std::string pad_punctuation(const std::string& s) {
  std::string out;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::ispunct(u)) {
      out += ' ';
      out += c;
      out += ' ';
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace preprocess_detail

// Applies the enabled steps in fixed order, then collapses whitespace.
inline std::string preprocess(std::string_view input, const PreprocessConfig& config = {}) {
  namespace d = preprocess_detail;
  std::string s(input);
  if (config.strip_urls) s = d::strip_urls(std::move(s));
  if (config.strip_mentions) s = d::strip_mentions(s);
  if (config.strip_non_ascii) s = d::strip_non_ascii(std::move(s));
  if (config.strip_retweet) s = d::strip_retweet(std::move(s));
  if (config.lowercase) s = text::to_lower(s);
  if (config.expand_contractions) s = d::expand_contractions(s);
  if (config.pad_punctuation) s = d::pad_punctuation(s);
  return text::collapse_ws(s);
}

// ---- splitting ----

struct SplitSpec {
  double train = 0.40;
  double validation = 0.30;
  double test = 0.30;
  std::uint64_t seed = 0;

  void validate() const {
    for (double f : {train, validation, test}) {
      if (!(f >= 0.0 && f <= 1.0)) throw InvariantError("split fractions must lie in [0, 1]");
    }
    if (std::abs(train + validation + test - 1.0) > 1e-9) {
      throw InvariantError("split fractions must sum to 1");
    }
  }
};

// Largest-remainder apportionment of n records; remainder ties go to the
// earlier split (train, then validation).
inline std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  const std::array<double, 3> f = {spec.train, spec.validation, spec.test};
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double quota = f[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(std::floor(quota + 1e-9));
    rem[i] = quota - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b] + 1e-12; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[order[k % 3]];
  return sizes;
}

// Uniform integer in [0, bound) from mt19937_64 by rejection; unlike
// std::uniform_int_distribution the output is identical on every platform.
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

template <typename T>
struct Splits {
  std::vector<T> train;
  std::vector<T> validation;
  std::vector<T> test;
};

// Seeded Fisher-Yates shuffle, then contiguous slices of the apportioned
// sizes.
template <typename T>
Splits<T> split(const std::vector<T>& records, const SplitSpec& spec) {
  if (records.empty()) throw InvariantError("cannot split an empty record set");
  const auto sizes = split_sizes(records.size(), spec);
  std::vector<std::size_t> idx(records.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = idx.size() - 1; i > 0; --i) {
    std::swap(idx[i], idx[bounded_draw(rng, i + 1)]);
  }
  Splits<T> out;
  std::size_t k = 0;
  for (; k < sizes[0]; ++k) out.train.push_back(records[idx[k]]);
  for (; k < sizes[0] + sizes[1]; ++k) out.validation.push_back(records[idx[k]]);
  for (; k < idx.size(); ++k) out.test.push_back(records[idx[k]]);
  return out;
}

// ---- predictions ----

struct Subgroup {
  std::string attribute;
  std::string name;

  auto operator<=>(const Subgroup&) const = default;
};

struct PredictionRecord {
  std::string id;
  bool true_label = false;  // offensive = positive
  double score = 0.0;       // in [0, 1]
  std::vector<Subgroup> subgroups;

  bool predicted_label(double threshold) const { return score >= threshold; }
  bool in(const Subgroup& g) const {
    return std::find(subgroups.begin(), subgroups.end(), g) != subgroups.end();
  }
};

// Prediction file: header "id<TAB>true_label<TAB>score<TAB>subgroups", then
// one record per line; subgroups are "attribute:group" tokens separated by
// ';' (empty or "-" for none).
inline std::vector<PredictionRecord> parse_predictions(std::string_view content,
                                                       const std::string& source = "predictions") {
  std::vector<PredictionRecord> out;
  bool header = false;
  std::set<std::string> ids;
  for (const auto& line : text::lines(content)) {
    if (text::is_blank_or_comment(line.content)) continue;
    const std::string where = source + ":" + std::to_string(line.number);
    auto f = text::split(line.content, '\t');
    if (!header) {
      if (f.size() != 4 || f[0] != "id" || f[1] != "true_label" || f[2] != "score" ||
          f[3] != "subgroups") {
        throw ParseError(where, "expected header 'id<TAB>true_label<TAB>score<TAB>subgroups'");
      }
      header = true;
      continue;
    }
    if (f.size() != 4) throw ParseError(where, "expected 4 fields, got " + std::to_string(f.size()));
    PredictionRecord r;
    r.id = text::trim(f[0]);
    if (r.id.empty() || !ids.insert(r.id).second) throw ParseError(where, "empty or duplicate id");
    const std::string label = text::trim(f[1]);
    if (label != "0" && label != "1") throw ParseError(where, "true_label must be 0 or 1");
    r.true_label = label == "1";
    r.score = text::parse_double(f[2], where);
    if (!(r.score >= 0.0 && r.score <= 1.0)) throw ParseError(where, "score must lie in [0, 1]");
    const std::string tags = text::trim(f[3]);
    if (!tags.empty() && tags != "-") {
      for (const auto& tok : text::split(tags, ';')) {
        const auto parts = text::split(text::trim(tok), ':');
        if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
          throw ParseError(where, "subgroup tag '" + tok + "' is not attribute:group");
        }
        r.subgroups.push_back({text::to_lower(parts[0]), text::to_lower(parts[1])});
      }
    }
    out.push_back(std::move(r));
  }
  if (!header) throw ParseError(source, "missing header line");
  return out;
}

inline std::vector<PredictionRecord> load_predictions(const std::string& path) {
  return parse_predictions(text::read_file(path), path);
}

struct Confusion {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct Rates {
  Confusion counts;

  bool has_fpr() const { return counts.fp + counts.tn > 0; }
  bool has_tpr() const { return counts.tp + counts.fn > 0; }

  Rational fpr() const {
    if (!has_fpr()) throw UndefinedStatisticError("FPR undefined: subgroup has no negative examples");
    return Rational(counts.fp, counts.fp + counts.tn);
  }
  Rational tpr() const {
    if (!has_tpr()) throw UndefinedStatisticError("TPR undefined: subgroup has no positive examples");
    return Rational(counts.tp, counts.tp + counts.fn);
  }
};

inline Rates rates(const std::vector<PredictionRecord>& records, double threshold = 0.5) {
  Rates r;
  for (const auto& rec : records) {
    const bool pred = rec.predicted_label(threshold);
    if (rec.true_label) (pred ? r.counts.tp : r.counts.fn)++;
    else (pred ? r.counts.fp : r.counts.tn)++;
  }
  return r;
}

// ROC AUC as the rank statistic P(score_pos > score_neg) + P(tie) / 2,
// computed exactly by sorting.
inline Rational auc(const std::vector<PredictionRecord>& records) {
  std::vector<std::pair<double, bool>> s;
  s.reserve(records.size());
  std::int64_t pos = 0, neg = 0;
  for (const auto& r : records) {
    s.emplace_back(r.score, r.true_label);
    (r.true_label ? pos : neg)++;
  }
  if (pos == 0 || neg == 0) {
    throw UndefinedStatisticError("AUC undefined: subgroup needs positive and negative examples");
  }
  std::sort(s.begin(), s.end());
  std::int64_t wins = 0, ties = 0, neg_below = 0;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    std::int64_t p = 0, n = 0;
    for (; j < s.size() && s[j].first == s[i].first; ++j) (s[j].second ? p : n)++;
    wins += p * neg_below;
    ties += p * n;
    neg_below += n;
    i = j;
  }
  return Rational(2 * wins + ties, 2 * pos * neg);
}

// ---- gap report ----

struct Pairing {
  std::string attribute;
  std::vector<std::string> marginalized;      // pooled into one group g
  std::vector<std::string> non_marginalized;  // pooled into one group g-hat
};

inline std::vector<Pairing> default_pairings() {
  return {
      {"gender", {"female"}, {"male"}},
      {"race", {"black", "asian"}, {"white"}},
      {"religion", {"jewish", "muslim"}, {"christian"}},
  };
}

// Pairing table: header "attribute<TAB>marginalized<TAB>non_marginalized",
// group lists comma separated.
inline std::vector<Pairing> parse_pairings(std::string_view content,
                                           const std::string& source = "pairings") {
  std::vector<Pairing> out;
  bool header = false;
  auto names = [](const std::string& s) {
    std::vector<std::string> v;
    for (const auto& x : text::split(s, ',')) {
      std::string t = text::to_lower(text::trim(x));
      if (!t.empty()) v.push_back(std::move(t));
    }
    return v;
  };
  for (const auto& line : text::lines(content)) {
    if (text::is_blank_or_comment(line.content)) continue;
    const std::string where = source + ":" + std::to_string(line.number);
    auto f = text::split(line.content, '\t');
    if (!header) {
      if (f.size() != 3 || f[0] != "attribute") {
        throw ParseError(where, "expected header 'attribute<TAB>marginalized<TAB>non_marginalized'");
      }
      header = true;
      continue;
    }
    if (f.size() != 3) throw ParseError(where, "expected 3 fields");
    Pairing p{text::to_lower(text::trim(f[0])), names(f[1]), names(f[2])};
    if (p.attribute.empty() || p.marginalized.empty() || p.non_marginalized.empty()) {
      throw ParseError(where, "attribute and both group lists must be non-empty");
    }
    out.push_back(std::move(p));
  }
  if (out.empty()) throw ParseError(source, "no pairings");
  return out;
}

struct GapRow {
  std::string attribute;
  std::string marginalized;      // group names joined by '+'
  std::string non_marginalized;
  std::size_t n_marginalized = 0;
  std::size_t n_non_marginalized = 0;
  Rational fpr_gap, tpr_gap, auc_gap;
};

struct GapReport {
  double threshold = 0.5;
  std::string model;
  std::vector<GapRow> rows;
  std::vector<std::string> diagnostics;
  std::map<std::string, std::string> provenance;
};

struct GapOptions {
  double threshold = 0.5;
  bool per_identity = false;  // also report each marginalized identity alone
};

namespace fairness_detail {

inline std::vector<PredictionRecord> members(const std::vector<PredictionRecord>& records,
                                             const std::string& attribute,
                                             const std::vector<std::string>& groups) {
  std::vector<PredictionRecord> out;
  for (const auto& r : records) {
    for (const auto& g : groups) {
      if (r.in({attribute, g})) {
        out.push_back(r);
        break;
      }
    }
  }
  return out;
}

inline std::string label(const std::vector<std::string>& groups) {
  return text::join(groups, "+");
}

}  // namespace fairness_detail

inline std::optional<GapRow> gap_row(const std::vector<PredictionRecord>& records,
                                     const std::string& attribute,
                                     const std::vector<std::string>& marginalized,
                                     const std::vector<std::string>& non_marginalized,
                                     double threshold, std::vector<std::string>& diagnostics) {
  namespace d = fairness_detail;
  const auto g = d::members(records, attribute, marginalized);
  const auto gh = d::members(records, attribute, non_marginalized);
  const std::string what = attribute + " (" + d::label(marginalized) + " vs " +
                           d::label(non_marginalized) + ")";
  if (g.empty() || gh.empty()) {
    diagnostics.push_back(what + ": missing subgroup, pairing excluded");
    return std::nullopt;
  }
  try {
    const Rates rg = rates(g, threshold), rh = rates(gh, threshold);
    GapRow row{attribute, d::label(marginalized), d::label(non_marginalized), g.size(), gh.size(),
               abs_diff(rg.fpr(), rh.fpr()), abs_diff(rg.tpr(), rh.tpr()),
               abs_diff(auc(g), auc(gh))};
    return row;
  } catch (const UndefinedStatisticError& e) {
    diagnostics.push_back(what + ": " + e.what() + "; pairing excluded");
    return std::nullopt;
  }
}

inline GapReport gap_report(const std::vector<PredictionRecord>& records,
                            const std::vector<Pairing>& pairings, const GapOptions& options = {}) {
  GapReport report;
  report.threshold = options.threshold;
  for (const auto& p : pairings) {
    if (auto row = gap_row(records, p.attribute, p.marginalized, p.non_marginalized,
                           options.threshold, report.diagnostics)) {
      report.rows.push_back(std::move(*row));
    }
    if (options.per_identity && p.marginalized.size() > 1) {
      for (const auto& single : p.marginalized) {
        if (auto row = gap_row(records, p.attribute, {single}, p.non_marginalized,
                               options.threshold, report.diagnostics)) {
          report.rows.push_back(std::move(*row));
        }
      }
    }
  }
  return report;
}

// Gap report file, one row per (attribute, model) as in a fairness table:
//
//   # sosbias-gap-report v1
//   # threshold: <t>
//   # model: <name>
//   # provenance: <key><TAB><value>        (zero or more)
//   # diagnostic: <text>                   (zero or more)
//   attribute model marginalized non_marginalized fpr_gap tpr_gap auc_gap n_marginalized n_non_marginalized fpr_gap_exact tpr_gap_exact auc_gap_exact
inline constexpr std::string_view kGapMagic = "# sosbias-gap-report v1";
inline constexpr std::string_view kGapColumns =
    "attribute\tmodel\tmarginalized\tnon_marginalized\tfpr_gap\ttpr_gap\tauc_gap\t"
    "n_marginalized\tn_non_marginalized\tfpr_gap_exact\ttpr_gap_exact\tauc_gap_exact";

inline std::string serialize_gap_report(const GapReport& r) {
  std::string out(kGapMagic);
  out += "\n# threshold: " + text::format_double(r.threshold) + "\n";
  out += "# model: " + r.model + "\n";
  for (const auto& [k, v] : r.provenance) out += "# provenance: " + k + '\t' + v + '\n';
  for (const auto& d : r.diagnostics) out += "# diagnostic: " + d + "\n";
  out += kGapColumns;
  out += '\n';
  for (const auto& row : r.rows) {
    out += row.attribute + '\t' + r.model + '\t' + row.marginalized + '\t' +
           row.non_marginalized + '\t' + text::format_double(to_double(row.fpr_gap)) + '\t' +
           text::format_double(to_double(row.tpr_gap)) + '\t' +
           text::format_double(to_double(row.auc_gap)) + '\t' +
           std::to_string(row.n_marginalized) + '\t' + std::to_string(row.n_non_marginalized) +
           '\t' + to_string(row.fpr_gap) + '\t' + to_string(row.tpr_gap) + '\t' +
           to_string(row.auc_gap) + '\n';
  }
  return out;
}

inline Rational parse_rational(std::string_view s, const std::string& where) {
  const auto parts = text::split(s, '/');
  if (parts.size() != 2) throw ParseError(where, "expected num/den");
  const auto den = text::parse_int(parts[1], where);
  if (den <= 0) throw ParseError(where, "denominator must be positive");
  return Rational(text::parse_int(parts[0], where), den);
}

inline GapReport parse_gap_report(std::string_view content, const std::string& source = "gaps") {
  const auto all = text::lines(content);
  if (all.empty() || all[0].content != kGapMagic) {
    throw ParseError(source + ":1", "missing '" + std::string(kGapMagic) + "' header");
  }
  GapReport r;
  bool columns = false;
  for (std::size_t i = 1; i < all.size(); ++i) {
    const std::string& l = all[i].content;
    const std::string where = source + ":" + std::to_string(all[i].number);
    if (l.empty()) continue;
    if (!columns) {
      if (text::starts_with(l, "# threshold: ")) {
        r.threshold = text::parse_double(l.substr(13), where);
      } else if (text::starts_with(l, "# model: ")) {
        r.model = l.substr(9);
      } else if (text::starts_with(l, "# provenance: ")) {
        const auto kv = text::split(std::string_view(l).substr(14), '\t');
        if (kv.size() != 2) throw ParseError(where, "bad provenance line");
        r.provenance[kv[0]] = kv[1];
      } else if (text::starts_with(l, "# diagnostic: ")) {
        r.diagnostics.push_back(l.substr(14));
      } else if (l == kGapColumns) {
        columns = true;
      } else {
        throw ParseError(where, "unexpected header line");
      }
      continue;
    }
    const auto f = text::split(l, '\t');
    if (f.size() != 12) throw ParseError(where, "expected 12 fields");
    if (f[1] != r.model) throw ParseError(where, "row model differs from the '# model:' header");
    r.rows.push_back({f[0], f[2], f[3],
                      static_cast<std::size_t>(text::parse_int(f[7], where)),
                      static_cast<std::size_t>(text::parse_int(f[8], where)),
                      parse_rational(f[9], where), parse_rational(f[10], where),
                      parse_rational(f[11], where)});
  }
  if (!columns) throw ParseError(source, "missing column header");
  return r;
}

}  // namespace sosbias

#endif  // SOSBIAS_FAIRNESS_HPP_
