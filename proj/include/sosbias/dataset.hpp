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

// Profane / non-profane sentence-pair dataset built from templates over the
// lexicon cross-product.
//
// Dataset file format (UTF-8, tab separated):
//
//   # sosbias-dataset v1
//   # lexicon_version: <version>
//   # template: <id><TAB><pattern>          (one line per template)
//   # records: <count>
//   template_id attribute group identity profane_word non_profane_word sentence_s sentence_s_prime
//   <one record per line, same 8 columns>

#ifndef SOSBIAS_DATASET_HPP_
#define SOSBIAS_DATASET_HPP_

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sosbias/error.hpp"
#include "sosbias/lexicon.hpp"
#include "sosbias/text.hpp"

namespace sosbias {

inline constexpr std::string_view kWordSlot = "{word}";
inline constexpr std::string_view kIdentitySlot = "{identity}";

struct Template {
  std::string id;
  std::string pattern;  // holds {word} and {identity} exactly once each

  bool operator==(const Template&) const = default;
};

inline std::size_t count_occurrences(std::string_view s, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = s.find(needle); pos != std::string_view::npos;
       pos = s.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

inline void validate_template(const Template& t) {
  if (t.id.empty() || t.id.find_first_of("\t\n ") != std::string::npos) {
    throw InvariantError("template id '" + t.id + "' must be a non-empty word");
  }
  if (count_occurrences(t.pattern, kWordSlot) != 1 ||
      count_occurrences(t.pattern, kIdentitySlot) != 1) {
    throw InvariantError("malformed template '" + t.id +
                         "': pattern must contain {word} and {identity} exactly once");
  }
  if (count_occurrences(t.pattern, "{") != 2 || count_occurrences(t.pattern, "}") != 2) {
    throw InvariantError("malformed template '" + t.id + "': unknown placeholder in '" +
                         t.pattern + "'");
  }
  if (t.pattern.find_first_of("\t\n") != std::string::npos) {
    throw InvariantError("malformed template '" + t.id + "': pattern contains a tab or newline");
  }
}

inline std::string fill(const Template& t, std::string_view word,
                        std::string_view identity) {
  std::string out = t.pattern;
  out.replace(out.find(kWordSlot), kWordSlot.size(), word);
  out.replace(out.find(kIdentitySlot), kIdentitySlot.size(), identity);
  return out;
}

inline std::vector<Template> default_templates() {
  return {{"you_are_a", "you are a {word} {identity}"}};
}

// Template file: "id<TAB>pattern" per line, '#' comments.
inline std::vector<Template> parse_templates(std::string_view content,
                                             const std::string& source = "templates") {
  std::vector<Template> out;
  for (const auto& line : text::lines(content)) {
    if (text::is_blank_or_comment(line.content)) continue;
    const std::string where = source + ":" + std::to_string(line.number);
    auto fields = text::split(line.content, '\t');
    if (fields.size() != 2) throw ParseError(where, "expected 'id<TAB>pattern'");
    Template t{text::trim(fields[0]), text::trim(fields[1])};
    try {
      validate_template(t);
    } catch (const InvariantError& e) {
      throw ParseError(where, e.what());
    }
    for (const auto& prev : out) {
      if (prev.id == t.id) throw ParseError(where, "duplicate template id '" + t.id + "'");
    }
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<Template> load_templates(const std::string& path) {
  return parse_templates(text::read_file(path), path);
}

struct SentencePair {
  std::string profane_sentence;     // S
  std::string nonprofane_sentence;  // S'
  IdentityTerm identity;
  WordPair word_pair;
  std::string template_id;

  bool operator==(const SentencePair&) const = default;
};

struct PairDataset {
  std::vector<SentencePair> pairs;
  std::string lexicon_version;
  std::vector<Template> templates;
  std::map<std::string, std::string> provenance;

  bool operator==(const PairDataset&) const = default;
};

// Cross-product in (template, identity, word pair) nesting order.
inline PairDataset generate(const Lexicon& lexicon,
                            const std::vector<Template>& templates) {
  if (templates.empty()) throw InvariantError("no templates given");
  for (const auto& t : templates) validate_template(t);
  PairDataset ds;
  ds.lexicon_version = lexicon.version;
  ds.templates = templates;
  ds.pairs.reserve(templates.size() * lexicon.identity_terms.size() *
                   lexicon.word_pairs.size());
  for (const auto& t : templates) {
    for (const auto& term : lexicon.identity_terms) {
      for (const auto& wp : lexicon.word_pairs) {
        ds.pairs.push_back({fill(t, wp.profane, term.surface),
                            fill(t, wp.non_profane, term.surface), term, wp, t.id});
      }
    }
  }
  return ds;
}

// Throws InvariantError if any pair's sentences are not exactly the template
// fills of its recorded words, or if the cardinality does not match
// |identities| x |word pairs| x |templates|.
inline void validate_dataset(const PairDataset& ds, const std::string& source = "dataset") {
  std::set<std::pair<std::string, SensitiveAttribute>> identities;
  std::set<std::pair<std::string, std::string>> word_pairs;
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    const auto& p = ds.pairs[i];
    const Template* tmpl = nullptr;
    for (const auto& t : ds.templates) {
      if (t.id == p.template_id) tmpl = &t;
    }
    const std::string where = source + ": record #" + std::to_string(i + 1);
    if (!tmpl) throw InvariantError(where + ": unknown template id '" + p.template_id + "'");
    if (p.profane_sentence != fill(*tmpl, p.word_pair.profane, p.identity.surface) ||
        p.nonprofane_sentence != fill(*tmpl, p.word_pair.non_profane, p.identity.surface)) {
      throw InvariantError(where +
                           ": sentences differ outside the word slot (shared tokens violated)");
    }
    identities.emplace(p.identity.surface, p.identity.attribute);
    word_pairs.emplace(p.word_pair.profane, p.word_pair.non_profane);
  }
  const std::size_t expected = identities.size() * word_pairs.size() * ds.templates.size();
  if (ds.pairs.size() != expected) {
    throw InvariantError(source + ": " + std::to_string(ds.pairs.size()) +
                         " pairs, expected identities x word pairs x templates = " +
                         std::to_string(expected));
  }
}

inline constexpr std::string_view kDatasetMagic = "# sosbias-dataset v1";
inline constexpr std::string_view kDatasetColumns =
    "template_id\tattribute\tgroup\tidentity\tprofane_word\tnon_profane_word\t"
    "sentence_s\tsentence_s_prime";

inline std::string serialize_dataset(const PairDataset& ds) {
  std::string out(kDatasetMagic);
  out += "\n# lexicon_version: " + ds.lexicon_version + "\n";
  for (const auto& t : ds.templates) out += "# template: " + t.id + '\t' + t.pattern + '\n';
  for (const auto& [k, v] : ds.provenance) out += "# provenance: " + k + '\t' + v + '\n';
  out += "# records: " + std::to_string(ds.pairs.size()) + "\n";
  out += kDatasetColumns;
  out += '\n';
  for (const auto& p : ds.pairs) {
    out += p.template_id;
    out += '\t';
    out += to_string(p.identity.attribute);
    out += '\t';
    out += to_string(p.identity.group);
    out += '\t' + p.identity.surface + '\t' + p.word_pair.profane + '\t' +
           p.word_pair.non_profane + '\t' + p.profane_sentence + '\t' +
           p.nonprofane_sentence + '\n';
  }
  return out;
}

inline void save_dataset(const PairDataset& ds, const std::string& path) {
  text::write_file(path, serialize_dataset(ds));
}

inline PairDataset parse_dataset(std::string_view content,
                                 const std::string& source = "dataset") {
  const auto all = text::lines(content);
  auto schema = [&](std::size_t line, const std::string& what) {
    return ParseError(source + ":" + std::to_string(line), "schema mismatch: " + what);
  };
  if (all.empty() || all[0].content != kDatasetMagic) {
    throw schema(1, "missing '" + std::string(kDatasetMagic) + "' header");
  }
  PairDataset ds;
  long long declared = -1;
  std::size_t i = 1;
  for (; i < all.size() && text::starts_with(all[i].content, "# "); ++i) {
    const std::string& l = all[i].content;
    const std::string where = source + ":" + std::to_string(all[i].number);
    if (text::starts_with(l, "# lexicon_version: ")) {
      ds.lexicon_version = l.substr(19);
    } else if (text::starts_with(l, "# template: ")) {
      auto f = text::split(std::string_view(l).substr(12), '\t');
      if (f.size() != 2) throw schema(all[i].number, "bad template header");
      Template t{f[0], f[1]};
      try {
        validate_template(t);
      } catch (const InvariantError& e) {
        throw ParseError(where, e.what());
      }
      ds.templates.push_back(std::move(t));
    } else if (text::starts_with(l, "# provenance: ")) {
      auto f = text::split(std::string_view(l).substr(14), '\t');
      if (f.size() != 2) throw schema(all[i].number, "bad provenance header");
      ds.provenance[f[0]] = f[1];
    } else if (text::starts_with(l, "# records: ")) {
      declared = text::parse_int(std::string_view(l).substr(11), where);
    } else {
      throw schema(all[i].number, "unknown header line '" + l + "'");
    }
  }
  if (ds.lexicon_version.empty() || ds.templates.empty() || declared < 0) {
    throw schema(i + 1, "header must declare lexicon_version, template(s) and records");
  }
  if (i >= all.size() || all[i].content != kDatasetColumns) {
    throw schema(i + 1, "missing column header line");
  }
  for (++i; i < all.size(); ++i) {
    const auto& line = all[i];
    if (line.content.empty()) continue;
    const std::string where = source + ":" + std::to_string(line.number);
    auto f = text::split(line.content, '\t');
    if (f.size() != 8) {
      throw schema(line.number, "expected 8 fields, got " + std::to_string(f.size()));
    }
    auto attr = parse_attribute(f[1]);
    if (!attr) throw ParseError(where, "unknown attribute '" + f[1] + "'");
    auto group = parse_group(f[2]);
    if (!group) throw ParseError(where, "unknown group label '" + f[2] + "'");
    ds.pairs.push_back({f[6], f[7], IdentityTerm{f[3], *attr, *group}, WordPair{f[4], f[5]},
                        f[0]});
  }
  if (static_cast<long long>(ds.pairs.size()) != declared) {
    throw schema(all.empty() ? 0 : all.back().number,
                 "header declares " + std::to_string(declared) + " records, found " +
                     std::to_string(ds.pairs.size()));
  }
  validate_dataset(ds, source);
  return ds;
}

inline PairDataset load_dataset(const std::string& path) {
  return parse_dataset(text::read_file(path), path);
}

}  // namespace sosbias

#endif  // SOSBIAS_DATASET_HPP_
