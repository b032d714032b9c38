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

// Named numeric series, correlation matrices and the bundled online-hate
// statistics.
//
// Series table file (tab separated):
//
//   # sosbias-series v1
//   series<TAB>provenance<TAB><label 1><TAB>...<TAB><label n>
//   <name><TAB>computed|ingested|bundled<TAB><v1><TAB>...<TAB><vn>
//
// Every series in a table shares the label row, so values line up by label
// (for example one value per sensitive attribute).

#ifndef SOSBIAS_ANALYSIS_HPP_
#define SOSBIAS_ANALYSIS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sosbias/error.hpp"
#include "sosbias/scoring.hpp"
#include "sosbias/stats.hpp"
#include "sosbias/text.hpp"

namespace sosbias {

struct Series {
  std::string name;
  std::string provenance;  // computed | ingested | bundled
  std::vector<double> values;

  bool operator==(const Series&) const = default;
};

struct SeriesTable {
  std::vector<std::string> labels;
  std::vector<Series> series;

  const Series& get(std::string_view name) const {
    for (const auto& s : series) {
      if (s.name == name) return s;
    }
    throw Error("no series named '" + std::string(name) + "'");
  }

  void add(Series s) {
    if (s.values.size() != labels.size()) {
      throw InvariantError("series '" + s.name + "' has " + std::to_string(s.values.size()) +
                           " values for " + std::to_string(labels.size()) + " labels");
    }
    for (const auto& x : series) {
      if (x.name == s.name) throw InvariantError("duplicate series '" + s.name + "'");
    }
    series.push_back(std::move(s));
  }

  bool operator==(const SeriesTable&) const = default;
};

inline bool is_known_provenance(std::string_view p) {
  return p == "computed" || p == "ingested" || p == "bundled";
}

inline constexpr std::string_view kSeriesMagic = "# sosbias-series v1";

inline SeriesTable parse_series_table(std::string_view content, const std::string& source = "series") {
  SeriesTable t;
  bool header = false;
  for (const auto& line : text::lines(content)) {
    if (text::is_blank_or_comment(line.content)) continue;
    const std::string where = source + ":" + std::to_string(line.number);
    auto f = text::split(line.content, '\t');
    if (!header) {
      if (f.size() < 3 || f[0] != "series" || f[1] != "provenance") {
        throw ParseError(where, "expected header 'series<TAB>provenance<TAB>labels...'");
      }
      t.labels.assign(f.begin() + 2, f.end());
      header = true;
      continue;
    }
    if (f.size() != t.labels.size() + 2) {
      throw ParseError(where, "expected " + std::to_string(t.labels.size() + 2) + " fields");
    }
    if (!is_known_provenance(f[1])) {
      throw ParseError(where, "provenance must be computed, ingested or bundled");
    }
    Series s{f[0], f[1], {}};
    for (std::size_t i = 2; i < f.size(); ++i) s.values.push_back(text::parse_double(f[i], where));
    try {
      t.add(std::move(s));
    } catch (const InvariantError& e) {
      throw ParseError(where, e.what());
    }
  }
  if (!header) throw ParseError(source, "missing header line");
  return t;
}

inline SeriesTable load_series_table(const std::string& path) {
  return parse_series_table(text::read_file(path), path);
}

inline std::string serialize_series_table(const SeriesTable& t) {
  std::string out(kSeriesMagic);
  out += "\nseries\tprovenance";
  for (const auto& l : t.labels) out += '\t' + l;
  out += '\n';
  for (const auto& s : t.series) {
    out += s.name + '\t' + s.provenance;
    for (double v : s.values) out += '\t' + text::format_double(v);
    out += '\n';
  }
  return out;
}

// Label map file: header "from<TAB>to", one mapping per line.
inline std::map<std::string, std::string> parse_label_map(std::string_view content,
                                                          const std::string& source = "label map") {
  std::map<std::string, std::string> out;
  bool header = false;
  for (const auto& line : text::lines(content)) {
    if (text::is_blank_or_comment(line.content)) continue;
    const std::string where = source + ":" + std::to_string(line.number);
    auto f = text::split(line.content, '\t');
    if (f.size() != 2) throw ParseError(where, "expected 2 fields");
    if (!header) {
      if (f[0] != "from" || f[1] != "to") throw ParseError(where, "expected header 'from<TAB>to'");
      header = true;
      continue;
    }
    if (!out.emplace(f[0], f[1]).second) throw ParseError(where, "duplicate label '" + f[0] + "'");
  }
  return out;
}

inline SeriesTable relabel(SeriesTable t, const std::map<std::string, std::string>& map) {
  for (auto& l : t.labels) {
    auto it = map.find(l);
    if (it != map.end()) l = it->second;
  }
  return t;
}

// Restricts `t` to `labels`, in that order. Every label must exist.
inline SeriesTable select_labels(const SeriesTable& t, const std::vector<std::string>& labels) {
  SeriesTable out;
  out.labels = labels;
  std::vector<std::size_t> idx;
  for (const auto& l : labels) {
    auto it = std::find(t.labels.begin(), t.labels.end(), l);
    if (it == t.labels.end()) throw Error("label '" + l + "' not present in series table");
    idx.push_back(static_cast<std::size_t>(it - t.labels.begin()));
  }
  for (const auto& s : t.series) {
    Series x{s.name, s.provenance, {}};
    for (auto i : idx) x.values.push_back(s.values[i]);
    out.series.push_back(std::move(x));
  }
  return out;
}

// Labels of `b` (in b's order) that also occur in `a`.
inline std::vector<std::string> shared_labels(const SeriesTable& a, const SeriesTable& b) {
  std::vector<std::string> out;
  for (const auto& l : b.labels) {
    if (std::find(a.labels.begin(), a.labels.end(), l) != a.labels.end()) out.push_back(l);
  }
  return out;
}

// ---- bundled online-hate statistics ----

struct OnlineHateRow {
  std::string country;
  int sample_size = 0;
  double ethnicity = 0.0;
  double lgbtq = 0.0;
  double women = 0.0;
};

// Share of surveyed members of each marginalized group who experienced
// online hate, per country.
inline std::vector<OnlineHateRow> bundled_online_hate() {
  return {
      {"Finland", 555, 0.67, 0.63, 0.25},
      {"US", 1033, 0.60, 0.61, 0.44},
      {"Germany", 978, 0.48, 0.50, 0.20},
      {"UK", 999, 0.57, 0.55, 0.44},
  };
}

inline void validate_online_hate(const std::vector<OnlineHateRow>& rows) {
  if (rows.size() != 4) throw InvariantError("online-hate table must have exactly 4 countries");
  for (const auto& r : rows) {
    for (double v : {r.ethnicity, r.lgbtq, r.women}) {
      if (!(v >= 0.0 && v <= 1.0)) throw InvariantError("online-hate share outside [0, 1] for " + r.country);
    }
    if (r.sample_size <= 0) throw InvariantError("non-positive sample size for " + r.country);
  }
}

// File: header "country<TAB>sample_size<TAB>ethnicity<TAB>lgbtq<TAB>women".
inline std::vector<OnlineHateRow> parse_online_hate(std::string_view content,
                                                    const std::string& source = "online hate") {
  std::vector<OnlineHateRow> rows;
  bool header = false;
  for (const auto& line : text::lines(content)) {
    if (text::is_blank_or_comment(line.content)) continue;
    const std::string where = source + ":" + std::to_string(line.number);
    auto f = text::split(line.content, '\t');
    if (f.size() != 5) throw ParseError(where, "expected 5 fields");
    if (!header) {
      if (f[0] != "country" || f[1] != "sample_size" || f[2] != "ethnicity" || f[3] != "lgbtq" ||
          f[4] != "women") {
        throw ParseError(where, "expected header 'country sample_size ethnicity lgbtq women'");
      }
      header = true;
      continue;
    }
    rows.push_back({f[0], static_cast<int>(text::parse_int(f[1], where)),
                    text::parse_double(f[2], where), text::parse_double(f[3], where),
                    text::parse_double(f[4], where)});
  }
  try {
    validate_online_hate(rows);
  } catch (const InvariantError& e) {
    throw ParseError(source, e.what());
  }
  return rows;
}

// One series per country over the labels ethnicity, lgbtq, women.
inline SeriesTable online_hate_table(const std::vector<OnlineHateRow>& rows) {
  SeriesTable t;
  t.labels = {"ethnicity", "lgbtq", "women"};
  for (const auto& r : rows) t.add({r.country, "bundled", {r.ethnicity, r.lgbtq, r.women}});
  return t;
}

// Group alignment between the survey columns and sensitive attributes.
inline std::map<std::string, std::string> default_online_hate_mapping() {
  return {{"ethnicity", "race"}, {"lgbtq", "sexual_orientation"}, {"women", "gender"}};
}

// SOS fractions of one group per attribute, as a computed series labelled
// by attribute.
inline Series sos_series(const SosResult& r, const std::string& name,
                         const std::vector<std::string>& attributes,
                         std::optional<Group> group = Group::kMarginalized) {
  Series s{name, "computed", {}};
  for (const auto& a : attributes) {
    const auto& cells = group ? r.per_group : r.per_attribute;
    const std::string key = group ? a + ":" + std::string(to_string(*group)) : a;
    auto it = cells.find(key);
    if (it == cells.end() || it->second.n() == 0) {
      throw Error("SOS result '" + name + "' has no pairs for " + key);
    }
    s.values.push_back(it->second.fraction());
  }
  return s;
}

// ---- correlation matrix ----

struct CorrelationMatrix {
  std::vector<std::string> row_names;
  std::vector<std::string> col_names;
  std::vector<std::vector<double>> rho;
  std::size_t n = 0;  // points per correlation
};

inline CorrelationMatrix correlation_matrix(const std::vector<Series>& rows,
                                            const std::vector<Series>& cols) {
  CorrelationMatrix m;
  m.rho.assign(rows.size(), std::vector<double>(cols.size(), 0.0));
  for (const auto& r : rows) m.row_names.push_back(r.name);
  for (const auto& c : cols) m.col_names.push_back(c.name);
  if (!rows.empty()) m.n = rows.front().values.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      try {
        m.rho[i][j] = pearson(rows[i].values, cols[j].values);
      } catch (const Error& e) {
        throw Error("correlation cell (" + rows[i].name + ", " + cols[j].name + "): " + e.what());
      }
    }
  }
  return m;
}

inline std::vector<Series> pick_series(const SeriesTable& t, const std::vector<std::string>& names) {
  if (names.empty()) return t.series;
  std::vector<Series> out;
  for (const auto& n : names) out.push_back(t.get(n));
  return out;
}

// Correlates series of `row_table` against series of `col_table`, aligning
// values on the labels the two tables share (in col_table's order).
inline CorrelationMatrix correlate_tables(const SeriesTable& row_table, const SeriesTable& col_table,
                                          const std::vector<std::string>& row_names = {},
                                          const std::vector<std::string>& col_names = {}) {
  const auto labels = shared_labels(row_table, col_table);
  if (labels.size() < 2) {
    throw Error("tables share " + std::to_string(labels.size()) + " labels; need at least 2");
  }
  return correlation_matrix(pick_series(select_labels(row_table, labels), row_names),
                            pick_series(select_labels(col_table, labels), col_names));
}

inline constexpr std::string_view kMatrixMagic = "# sosbias-matrix v1";

inline std::string serialize_matrix(const CorrelationMatrix& m,
                                    const std::map<std::string, std::string>& provenance = {}) {
  std::string out(kMatrixMagic);
  out += "\n# n: " + std::to_string(m.n) + "\n";
  for (const auto& [k, v] : provenance) out += "# " + k + ": " + v + "\n";
  out += "rho";
  for (const auto& c : m.col_names) out += '\t' + c;
  out += '\n';
  for (std::size_t i = 0; i < m.row_names.size(); ++i) {
    out += m.row_names[i];
    for (double v : m.rho[i]) out += '\t' + text::format_double(v);
    out += '\n';
  }
  return out;
}

inline CorrelationMatrix parse_matrix(std::string_view content, const std::string& source = "matrix") {
  const auto all = text::lines(content);
  if (all.empty() || all[0].content != kMatrixMagic) {
    throw ParseError(source + ":1", "missing '" + std::string(kMatrixMagic) + "' header");
  }
  CorrelationMatrix m;
  bool header = false;
  for (std::size_t i = 1; i < all.size(); ++i) {
    const std::string& l = all[i].content;
    const std::string where = source + ":" + std::to_string(all[i].number);
    if (text::starts_with(l, "# n: ")) {
      m.n = static_cast<std::size_t>(text::parse_int(std::string_view(l).substr(5), where));
      continue;
    }
    if (text::is_blank_or_comment(l)) continue;
    auto f = text::split(l, '\t');
    if (!header) {
      if (f.size() < 2 || f[0] != "rho") throw ParseError(where, "expected header 'rho<TAB>columns...'");
      m.col_names.assign(f.begin() + 1, f.end());
      header = true;
      continue;
    }
    if (f.size() != m.col_names.size() + 1) {
      throw ParseError(where, "expected " + std::to_string(m.col_names.size() + 1) + " fields");
    }
    m.row_names.push_back(f[0]);
    std::vector<double> row;
    for (std::size_t j = 1; j < f.size(); ++j) row.push_back(text::parse_double(f[j], where));
    m.rho.push_back(std::move(row));
  }
  if (!header) throw ParseError(source, "missing column header");
  return m;
}

// Binary PPM heatmap, blue (-1) through white (0) to red (+1).
inline std::string render_heatmap_ppm(const CorrelationMatrix& m, int cell = 24) {
  const int rows = static_cast<int>(m.row_names.size());
  const int cols = static_cast<int>(m.col_names.size());
  const int w = std::max(1, cols * cell), h = std::max(1, rows * cell);
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::string pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, '\xff');
  for (int y = 0; y < rows * cell; ++y) {
    for (int x = 0; x < cols * cell; ++x) {
      const double v = std::clamp(m.rho[static_cast<std::size_t>(y / cell)][static_cast<std::size_t>(x / cell)], -1.0, 1.0);
      const auto fade = static_cast<unsigned char>(std::lround(255.0 * (1.0 - std::abs(v))));
      unsigned char r = 255, g = fade, b = 255;
      if (v >= 0) b = fade;
      else r = fade;
      const std::size_t p = (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)) * 3;
      pixels[p] = static_cast<char>(r);
      pixels[p + 1] = static_cast<char>(g);
      pixels[p + 2] = static_cast<char>(b);
    }
  }
  return out + pixels;
}

}  // namespace sosbias

#endif  // SOSBIAS_ANALYSIS_HPP_
