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

// Word lists: identity terms grouped by sensitive attribute and
// marginalized / non-marginalized group, plus profane / non-profane word
// pairs.
//
// Lexicon file format (UTF-8, tab separated, '#' starts a comment line):
//
//   version<TAB><version id>
//   [identity_terms]
//   <surface><TAB><attribute><TAB><group>
//   ...
//   [word_pairs]
//   <profane><TAB><non_profane>
//   ...
//
// attribute is one of gender, race, sexual_orientation, religion,
// disability, social_class; group is marginalized or non_marginalized.
// Term order in the file is preserved everywhere downstream.

#ifndef SOSBIAS_LEXICON_HPP_
#define SOSBIAS_LEXICON_HPP_

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sosbias/error.hpp"
#include "sosbias/text.hpp"

namespace sosbias {

enum class SensitiveAttribute {
  kGender,
  kRace,
  kSexualOrientation,
  kReligion,
  kDisability,
  kSocialClass,
};

inline constexpr std::array<SensitiveAttribute, 6> kAllAttributes = {
    SensitiveAttribute::kGender,      SensitiveAttribute::kRace,
    SensitiveAttribute::kSexualOrientation, SensitiveAttribute::kReligion,
    SensitiveAttribute::kDisability,  SensitiveAttribute::kSocialClass,
};

inline std::string_view to_string(SensitiveAttribute a) {
  switch (a) {
    case SensitiveAttribute::kGender: return "gender";
    case SensitiveAttribute::kRace: return "race";
    case SensitiveAttribute::kSexualOrientation: return "sexual_orientation";
    case SensitiveAttribute::kReligion: return "religion";
    case SensitiveAttribute::kDisability: return "disability";
    case SensitiveAttribute::kSocialClass: return "social_class";
  }
  return "?";
}

inline std::optional<SensitiveAttribute> parse_attribute(std::string_view s) {
  for (auto a : kAllAttributes) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

enum class Group { kMarginalized, kNonMarginalized };

inline constexpr std::array<Group, 2> kAllGroups = {Group::kMarginalized,
                                                    Group::kNonMarginalized};

inline std::string_view to_string(Group g) {
  return g == Group::kMarginalized ? "marginalized" : "non_marginalized";
}

inline std::optional<Group> parse_group(std::string_view s) {
  if (s == "marginalized") return Group::kMarginalized;
  if (s == "non_marginalized") return Group::kNonMarginalized;
  return std::nullopt;
}

struct IdentityTerm {
  std::string surface;  // lowercase word or multiword phrase
  SensitiveAttribute attribute = SensitiveAttribute::kGender;
  Group group = Group::kMarginalized;

  bool operator==(const IdentityTerm&) const = default;
};

struct WordPair {
  std::string profane;
  std::string non_profane;

  bool operator==(const WordPair&) const = default;
};

struct Lexicon {
  std::vector<IdentityTerm> identity_terms;
  std::vector<WordPair> word_pairs;
  std::string version;

  bool operator==(const Lexicon&) const = default;
};

namespace lexicon_detail {

inline bool is_normalized_surface(std::string_view s) {
  if (s.empty() || text::is_space(s.front()) || text::is_space(s.back())) {
    return false;
  }
  if (text::to_lower(s) != s) return false;
  // Multiword phrases use single spaces.
  if (s.find("  ") != std::string_view::npos) return false;
  for (char c : s) {
    if (c == '\t' || c == '\n' || c == '\r') return false;
  }
  return true;
}

inline bool is_word(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (text::is_space(c)) return false;
  }
  return true;
}

}  // namespace lexicon_detail

// Checks every lexicon invariant; throws InvariantError naming the
// offending record. `source` prefixes messages (usually a file path).
inline void validate(const Lexicon& lex, const std::string& source = "lexicon") {
  if (lex.version.empty()) {
    throw InvariantError(source + ": missing version");
  }
  std::set<std::pair<std::string, SensitiveAttribute>> seen_terms;
  for (std::size_t i = 0; i < lex.identity_terms.size(); ++i) {
    const auto& t = lex.identity_terms[i];
    const std::string where = source + ": identity term #" +
                              std::to_string(i + 1) + " '" + t.surface + "'";
    if (!lexicon_detail::is_normalized_surface(t.surface)) {
      throw InvariantError(where + ": surface must be non-empty, lowercase and trimmed");
    }
    if (!seen_terms.emplace(t.surface, t.attribute).second) {
      throw InvariantError(where + ": duplicate term for attribute " +
                           std::string(to_string(t.attribute)));
    }
    if (t.attribute == SensitiveAttribute::kDisability &&
        t.group != Group::kMarginalized) {
      throw InvariantError(where + ": disability terms must be marginalized");
    }
  }
  std::set<std::pair<std::string, std::string>> seen_pairs;
  for (std::size_t i = 0; i < lex.word_pairs.size(); ++i) {
    const auto& p = lex.word_pairs[i];
    const std::string where = source + ": word pair #" + std::to_string(i + 1);
    if (!lexicon_detail::is_word(p.profane) ||
        !lexicon_detail::is_word(p.non_profane)) {
      throw InvariantError(where + ": both words must be non-empty single words");
    }
    if (p.profane == p.non_profane) {
      throw InvariantError(where + ": profane and non-profane words are identical ('" +
                           p.profane + "')");
    }
    if (!seen_pairs.emplace(p.profane, p.non_profane).second) {
      throw InvariantError(where + ": duplicate pair (" + p.profane + ", " +
                           p.non_profane + ")");
    }
  }
}

inline Lexicon parse_lexicon(std::string_view content,
                             const std::string& source = "lexicon") {
  enum class Section { kNone, kTerms, kPairs };
  Lexicon lex;
  Section section = Section::kNone;
  for (const auto& line : text::lines(content)) {
    if (text::is_blank_or_comment(line.content)) continue;
    const std::string where = source + ":" + std::to_string(line.number);
    const std::string trimmed = text::trim(line.content);
    if (trimmed == "[identity_terms]") {
      section = Section::kTerms;
      continue;
    }
    if (trimmed == "[word_pairs]") {
      section = Section::kPairs;
      continue;
    }
    auto fields = text::split(line.content, '\t');
    for (auto& f : fields) f = text::trim(f);
    switch (section) {
      case Section::kNone: {
        if (fields.size() != 2 || fields[0] != "version") {
          throw ParseError(where, "expected 'version<TAB><id>' before any section");
        }
        if (!lex.version.empty()) throw ParseError(where, "duplicate version line");
        lex.version = fields[1];
        break;
      }
      case Section::kTerms: {
        if (fields.size() != 3) {
          throw ParseError(where, "identity term needs 3 tab-separated fields, got " +
                                      std::to_string(fields.size()));
        }
        if (fields[1].empty()) throw ParseError(where, "empty attribute");
        auto attr = parse_attribute(fields[1]);
        if (!attr) throw ParseError(where, "unknown attribute '" + fields[1] + "'");
        auto group = parse_group(fields[2]);
        if (!group) throw ParseError(where, "unknown group label '" + fields[2] + "'");
        for (const auto& t : lex.identity_terms) {
          if (t.surface == fields[0] && t.attribute == *attr) {
            throw ParseError(where, "duplicate term ('" + fields[0] + "', " +
                                        fields[1] + ")");
          }
        }
        lex.identity_terms.push_back({fields[0], *attr, *group});
        break;
      }
      case Section::kPairs: {
        if (fields.size() != 2) {
          throw ParseError(where, "word pair needs 2 tab-separated fields, got " +
                                      std::to_string(fields.size()));
        }
        lex.word_pairs.push_back({fields[0], fields[1]});
        break;
      }
    }
  }
  if (lex.version.empty()) throw ParseError(source, "missing version line");
  validate(lex, source);
  return lex;
}

inline Lexicon load_lexicon(const std::string& path) {
  return parse_lexicon(text::read_file(path), path);
}

inline std::string serialize_lexicon(const Lexicon& lex) {
  std::string out = "version\t" + lex.version + "\n[identity_terms]\n";
  for (const auto& t : lex.identity_terms) {
    out += t.surface;
    out += '\t';
    out += to_string(t.attribute);
    out += '\t';
    out += to_string(t.group);
    out += '\n';
  }
  out += "[word_pairs]\n";
  for (const auto& p : lex.word_pairs) {
    out += p.profane + '\t' + p.non_profane + '\n';
  }
  return out;
}

inline void save_lexicon(const Lexicon& lex, const std::string& path) {
  text::write_file(path, serialize_lexicon(lex));
}

// Terms of one attribute in file order, optionally restricted to a group.
inline std::vector<IdentityTerm> terms_for(const Lexicon& lex,
                                           SensitiveAttribute attribute,
                                           std::optional<Group> group = std::nullopt) {
  std::vector<IdentityTerm> out;
  for (const auto& t : lex.identity_terms) {
    if (t.attribute != attribute) continue;
    if (group && t.group != *group) continue;
    out.push_back(t);
  }
  return out;
}

}  // namespace sosbias

#endif  // SOSBIAS_LEXICON_HPP_
