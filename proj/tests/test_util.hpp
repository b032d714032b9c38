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

// Fixture generators and brute-force oracles shared by the unit tests and
// the acceptance binary. The oracles deliberately avoid library helpers.

#ifndef SOSBIAS_TESTS_TEST_UTIL_HPP_
#define SOSBIAS_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

#include "sosbias/dataset.hpp"
#include "sosbias/fairness.hpp"
#include "sosbias/lexicon.hpp"
#include "sosbias/toy_backends.hpp"

#ifndef SOSBIAS_FIXTURE_DIR
#define SOSBIAS_FIXTURE_DIR "tests/fixtures"
#endif

namespace sosbias::testing {

inline std::string fixture(const std::string& name) {
  return std::string(SOSBIAS_FIXTURE_DIR) + "/" + name;
}

inline std::string data_file(const std::string& name) {
  return std::string(SOSBIAS_DATA_DIR) + "/" + name;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("sosbias_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::uint64_t draw(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
  return lo + rng() % (hi - lo + 1);
}

inline double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// ---- random toy SOS fixtures ----

struct ToyFixture {
  PairDataset dataset;
  TableBackend backend{"toy-random", -2.0};
  std::map<std::pair<std::string, std::size_t>, double> table;  // oracle's copy
  double default_log_prob = -2.0;
};

// A random lexicon of at most 50 pairs, one template, and a table backend.
// With ties allowed, entries are sparse and take few distinct values; without,
// every position gets a continuous value.
inline ToyFixture random_toy_fixture(std::mt19937_64& rng, bool allow_ties = true) {
  static const std::vector<std::string> kIdentities = {
      "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliet"};
  static const std::vector<std::pair<std::string, std::string>> kWords = {
      {"bad", "good"}, {"dim", "bright"}, {"rude", "polite"}, {"cruel", "gentle"},
      {"mean", "nice"}};
  Lexicon lex;
  lex.version = "toy-random";
  std::vector<std::string> ids = kIdentities;
  std::shuffle(ids.begin(), ids.end(), rng);
  const std::size_t n_pairs = draw(rng, 1, kWords.size());
  const std::size_t n_ids = draw(rng, 1, std::min<std::size_t>(ids.size(), 50 / n_pairs));
  for (std::size_t i = 0; i < n_ids; ++i) {
    const auto attr = kAllAttributes[draw(rng, 0, kAllAttributes.size() - 1)];
    const Group g = attr == SensitiveAttribute::kDisability || rng() % 2 == 0
                        ? Group::kMarginalized
                        : Group::kNonMarginalized;
    lex.identity_terms.push_back({ids[i], attr, g});
  }
  for (std::size_t i = 0; i < n_pairs; ++i) lex.word_pairs.push_back({kWords[i].first, kWords[i].second});
  const std::vector<Template> templates = {{"t", "the {identity} is so {word} today"}};

  ToyFixture f;
  f.dataset = generate(lex, templates);
  for (const auto& p : f.dataset.pairs) {
    for (const std::string* s : {&p.profane_sentence, &p.nonprofane_sentence}) {
      const Tokens t = word_tokenize(*s);
      for (std::size_t pos = 0; pos < t.size(); ++pos) {
        if (allow_ties && rng() % 3 != 0) continue;
        const double lp = allow_ties ? -static_cast<double>(draw(rng, 1, 3))
                                     : -(0.5 + unit(rng) * 4.0);
        f.table[{*s, pos}] = lp;
        f.backend.set(std::string_view(*s), pos, lp);
      }
    }
  }
  return f;
}

struct OracleTally {
  std::size_t greater = 0, ties = 0, less = 0;
};

struct OracleSos {
  OracleTally overall;
  std::map<std::string, OracleTally> per_attribute;
  std::map<std::string, OracleTally> per_group;
};

inline std::vector<std::string> words_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

// Independent SOS computation: sentences of a pair differ in exactly one
// word, so the shared tokens are the positions with equal words.
inline OracleSos oracle_sos(const ToyFixture& f, bool swap = false) {
  OracleSos r;
  auto lookup = [&](const std::string& s, std::size_t pos) {
    auto it = f.table.find({s, pos});
    return it == f.table.end() ? f.default_log_prob : it->second;
  };
  for (const auto& p : f.dataset.pairs) {
    const std::string& s = swap ? p.nonprofane_sentence : p.profane_sentence;
    const std::string& sp = swap ? p.profane_sentence : p.nonprofane_sentence;
    const auto a = words_of(s), b = words_of(sp);
    double score_a = 0.0, score_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] != b[i]) continue;
      score_a += lookup(s, i);
      score_b += lookup(sp, i);
    }
    const std::string attr(to_string(p.identity.attribute));
    const std::string group = attr + ":" + std::string(to_string(p.identity.group));
    for (OracleTally* t : {&r.overall, &r.per_attribute[attr], &r.per_group[group]}) {
      if (score_a > score_b) ++t->greater;
      else if (score_a == score_b) ++t->ties;
      else ++t->less;
    }
  }
  return r;
}

inline PairDataset swapped(PairDataset ds) {
  for (auto& p : ds.pairs) std::swap(p.profane_sentence, p.nonprofane_sentence);
  return ds;
}

// ---- eigen-decomposition oracle ----

struct EigenPair {
  double value;
  std::vector<double> vector;
};

// Cyclic Jacobi rotations on a symmetric matrix; eigenpairs sorted by
// descending eigenvalue.
inline std::vector<EigenPair> jacobi_eigen(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-60) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<EigenPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v[k][i];
    out.push_back({a[i][i], col});
  }
  std::sort(out.begin(), out.end(), [](const EigenPair& x, const EigenPair& y) { return x.value > y.value; });
  return out;
}

// Covariance (divided by n) of the row differences first - second.
inline std::vector<std::vector<double>> difference_covariance(const std::vector<std::vector<double>>& first,
                                                              const std::vector<std::vector<double>>& second) {
  const std::size_t n = first.size(), d = first[0].size();
  std::vector<std::vector<double>> diff(n, std::vector<double>(d));
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      diff[i][j] = first[i][j] - second[i][j];
      mean[j] += diff[i][j] / static_cast<double>(n);
    }
  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c)
        cov[r][c] += (diff[i][r] - mean[r]) * (diff[i][c] - mean[c]) / static_cast<double>(n);
  return cov;
}

// ---- AUC oracle ----

inline boost::rational<std::int64_t> brute_force_auc(const std::vector<PredictionRecord>& records) {
  std::int64_t twice_wins = 0, pairs = 0;
  for (const auto& p : records) {
    if (!p.true_label) continue;
    for (const auto& n : records) {
      if (n.true_label) continue;
      ++pairs;
      if (p.score > n.score) twice_wins += 2;
      else if (p.score == n.score) twice_wins += 1;
    }
  }
  return boost::rational<std::int64_t>(twice_wins, 2 * pairs);
}

// Random subgroup of 2..max_n records with both labels present; scores are
// drawn from a coarse grid so ties are common.
inline std::vector<PredictionRecord> random_subgroup(std::mt19937_64& rng, std::size_t max_n = 100) {
  const std::size_t n = draw(rng, 2, max_n);
  std::vector<PredictionRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    PredictionRecord r;
    r.id = "r" + std::to_string(i);
    r.true_label = i == 0 ? true : i == 1 ? false : rng() % 2 == 0;
    r.score = static_cast<double>(draw(rng, 0, 20)) / 20.0;
    r.subgroups = {{"gender", "female"}};
    out.push_back(r);
  }
  return out;
}

}  // namespace sosbias::testing

#endif  // SOSBIAS_TESTS_TEST_UTIL_HPP_
