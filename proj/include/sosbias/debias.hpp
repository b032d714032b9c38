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

// Profanity subspace estimation and removal.
//
//   1. contextualize: find corpus sentences containing a listed word and
//      build the counterfactual with the word swapped for its pair partner.
//   2. embed: sentence representations for both sides.
//   3. estimate_subspace: PCA over the mean-centered difference vectors;
//      the top K principal directions form the bias subspace.
//   4. remove: x - sum_k <x, v_k> v_k.
//
// DebiasedBackend applies the removal to final-layer hidden states before
// the output head, so every scoring routine runs unchanged on top of it.

#ifndef SOSBIAS_DEBIAS_HPP_
#define SOSBIAS_DEBIAS_HPP_

#include <cmath>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sosbias/backend.hpp"
#include "sosbias/error.hpp"
#include "sosbias/lexicon.hpp"
#include "sosbias/text.hpp"

namespace sosbias {

// A corpus sentence and its counterfactual with one word occurrence swapped.
struct CounterfactualText {
  std::string source;       // original sentence
  std::string target_word;  // word found in `source`
  std::string variant;      // `source` with that occurrence replaced by its partner
  std::size_t sentence_index = 0;

  bool operator==(const CounterfactualText&) const = default;
};

struct ContextualizedExample {
  CounterfactualText text;
  Eigen::VectorXd representation;          // of text.source
  Eigen::VectorXd variant_representation;  // of text.variant
};

inline std::vector<std::string> load_corpus(const std::string& path) {
  std::vector<std::string> out;
  for (const auto& l : text::lines(text::read_file(path))) {
    std::string t = text::trim(l.content);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

namespace debias_detail {

inline bool is_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         static_cast<unsigned char>(c) >= 0x80;
}

// Start offsets of whole-word, case-insensitive occurrences of `word`.
inline std::vector<std::size_t> find_word(std::string_view sentence, std::string_view word) {
  std::vector<std::size_t> out;
  const std::string hay = text::to_lower(sentence);
  const std::string needle = text::to_lower(word);
  if (needle.empty()) return out;
  for (std::size_t pos = hay.find(needle); pos != std::string::npos;
       pos = hay.find(needle, pos + 1)) {
    const bool left = pos == 0 || !is_word_char(hay[pos - 1]);
    const std::size_t end = pos + needle.size();
    const bool right = end == hay.size() || !is_word_char(hay[end]);
    if (left && right) out.push_back(pos);
  }
  return out;
}

}  // namespace debias_detail

// Emits one counterfactual per occurrence of a listed word, in corpus order,
// then word order (pair order, profane before non-profane), then position.
// At most `max_per_word` occurrences are taken for each word.
inline std::vector<CounterfactualText> contextualize(const std::vector<WordPair>& word_pairs,
                                                     const std::vector<std::string>& corpus,
                                                     std::size_t max_per_word = 1000) {
  if (corpus.empty()) throw Error("contextualize: corpus is empty");
  struct Entry {
    std::string word, partner;
  };
  std::vector<Entry> words;
  for (const auto& p : word_pairs) {
    words.push_back({p.profane, p.non_profane});
    words.push_back({p.non_profane, p.profane});
  }
  std::vector<std::size_t> taken(words.size(), 0);
  std::vector<CounterfactualText> out;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    for (std::size_t w = 0; w < words.size(); ++w) {
      for (std::size_t pos : debias_detail::find_word(corpus[s], words[w].word)) {
        if (taken[w] >= max_per_word) break;
        ++taken[w];
        std::string variant = corpus[s];
        variant.replace(pos, words[w].word.size(), words[w].partner);
        out.push_back({corpus[s], words[w].word, std::move(variant), s});
      }
    }
  }
  if (out.empty()) throw Error("contextualize: no listed word occurs in the corpus");
  return out;
}

inline std::vector<Eigen::VectorXd> embed(std::span<const std::string> texts,
                                          const SentenceEncoder& encoder) {
  std::vector<Eigen::VectorXd> out = encoder.encode_batch(texts);
  if (out.size() != texts.size()) {
    throw BackendError("encoder returned " + std::to_string(out.size()) + " vectors for " +
                       std::to_string(texts.size()) + " texts");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].size() == 0 || out[i].size() != out[0].size() || !out[i].allFinite()) {
      throw BackendError("encoder returned an invalid representation for text #" +
                         std::to_string(i + 1));
    }
  }
  return out;
}

// Embeds both sides of every counterfactual.
inline std::vector<ContextualizedExample> embed(const std::vector<CounterfactualText>& texts,
                                                const SentenceEncoder& encoder) {
  std::vector<std::string> flat;
  flat.reserve(2 * texts.size());
  for (const auto& t : texts) {
    flat.push_back(t.source);
    flat.push_back(t.variant);
  }
  const auto reps = embed(std::span<const std::string>(flat), encoder);
  std::vector<ContextualizedExample> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out.push_back({texts[i], reps[2 * i], reps[2 * i + 1]});
  }
  return out;
}

struct BiasSubspace {
  Eigen::MatrixXd basis;  // K x d, orthonormal rows
  Eigen::VectorXd mean;   // mean difference vector, d
  std::vector<double> eigenvalues;  // all d covariance eigenvalues, descending
  double explained_variance_ratio = 0.0;
  std::string pooling = "mean";
  std::string projection_site = "final_hidden_all_positions";
  std::map<std::string, std::string> provenance;

  Eigen::Index k() const { return basis.rows(); }
  Eigen::Index dim() const { return mean.size(); }

  // Zero-dimensional subspace: removal is the identity.
  static BiasSubspace empty(Eigen::Index dim) {
    BiasSubspace s;
    s.basis.resize(0, dim);
    s.mean = Eigen::VectorXd::Zero(dim);
    return s;
  }
};

inline void check_orthonormal(const Eigen::MatrixXd& basis, double tol = 1e-8) {
  const Eigen::MatrixXd gram = basis * basis.transpose();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(basis.rows(), basis.rows());
  if (basis.rows() > 0 && (gram - eye).cwiseAbs().maxCoeff() > tol) {
    throw InvariantError("bias subspace basis is not orthonormal");
  }
}

// Flips each vector so its first coordinate with |c| > 1e-12 is positive.
inline void canonicalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12) {
      if (v(i) < 0) v = -v;
      return;
    }
  }
}

// Rows of `first` and `second` are paired representations.
inline BiasSubspace estimate_subspace(const Eigen::MatrixXd& first,
                                      const Eigen::MatrixXd& second, int k) {
  if (first.rows() != second.rows() || first.cols() != second.cols()) {
    throw InvariantError("paired representation matrices differ in shape");
  }
  const Eigen::Index d = first.cols();
  if (d < 1) throw InvariantError("representations have dimension 0");
  if (k < 1 || k > d) {
    throw InvariantError("K must satisfy 1 <= K <= d (K=" + std::to_string(k) +
                         ", d=" + std::to_string(d) + ")");
  }
  if (first.rows() < 2) throw RankDeficientError(k, 0);
  if (!first.allFinite() || !second.allFinite()) {
    throw InvariantError("representations contain non-finite values");
  }
  const Eigen::MatrixXd diff = first - second;
  const Eigen::VectorXd mean = diff.colwise().mean().transpose();
  const Eigen::MatrixXd centered = diff.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(first.rows());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("eigen-decomposition failed");
  const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
  const double top = evals(d - 1);
  const double tol = std::max(top, 0.0) * 1e-10;
  int rank = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (top > 0 && evals(i) > tol) ++rank;
  }
  if (rank < k) throw RankDeficientError(k, rank);

  BiasSubspace s;
  s.mean = mean;
  s.basis.resize(k, d);
  double total = 0.0, kept = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double ev = std::max(0.0, evals(d - 1 - i));
    s.eigenvalues.push_back(ev);
    total += ev;
    if (i < k) kept += ev;
  }
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - i);
    v.normalize();
    canonicalize_sign(v);
    s.basis.row(i) = v.transpose();
  }
  s.explained_variance_ratio = total > 0 ? kept / total : 0.0;
  return s;
}

inline BiasSubspace estimate_subspace(const std::vector<ContextualizedExample>& examples, int k) {
  if (examples.empty()) throw RankDeficientError(k, 0);
  const Eigen::Index d = examples.front().representation.size();
  Eigen::MatrixXd a(static_cast<Eigen::Index>(examples.size()), d);
  Eigen::MatrixXd b(a.rows(), d);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].representation.size() != d || examples[i].variant_representation.size() != d) {
      throw InvariantError("representations differ in dimension");
    }
    a.row(static_cast<Eigen::Index>(i)) = examples[i].representation.transpose();
    b.row(static_cast<Eigen::Index>(i)) = examples[i].variant_representation.transpose();
  }
  return estimate_subspace(a, b, k);
}

inline Eigen::VectorXd remove(const Eigen::VectorXd& x, const BiasSubspace& subspace) {
  if (x.size() != subspace.basis.cols()) {
    throw InvariantError("dimension mismatch: vector has " + std::to_string(x.size()) +
                         ", subspace has " + std::to_string(subspace.basis.cols()));
  }
  if (subspace.k() == 0) return x;
  return x - subspace.basis.transpose() * (subspace.basis * x);
}

// Wraps a backend so that hidden states are projected off the subspace
// before the output head.
class DebiasedBackend : public HiddenStateBackend {
 public:
  DebiasedBackend(const HiddenStateBackend& inner, BiasSubspace subspace)
      : inner_(inner), subspace_(std::move(subspace)) {
    if (subspace_.basis.cols() != inner_.hidden_size()) {
      throw InvariantError("subspace dimension " + std::to_string(subspace_.basis.cols()) +
                           " does not match hidden size " +
                           std::to_string(inner_.hidden_size()));
    }
  }

  std::string model_id() const override {
    return inner_.model_id() + "+debias-k" + std::to_string(subspace_.k());
  }
  Tokens tokenize(std::string_view text) const override { return inner_.tokenize(text); }
  bool supports_concurrent_queries() const override {
    return inner_.supports_concurrent_queries();
  }
  Eigen::Index hidden_size() const override { return inner_.hidden_size(); }

  Eigen::MatrixXd hidden_states(std::span<const std::string> tokens,
                                std::optional<std::size_t> masked) const override {
    Eigen::MatrixXd h = inner_.hidden_states(tokens, masked);
    if (subspace_.k() == 0) return h;
    return h - (h * subspace_.basis.transpose()) * subspace_.basis;
  }
  Eigen::VectorXd masked_hidden(std::span<const std::string> tokens,
                                std::size_t masked) const override {
    return remove(inner_.masked_hidden(tokens, masked), subspace_);
  }
  double head_log_prob(const Eigen::VectorXd& hidden, const std::string& target) const override {
    return inner_.head_log_prob(hidden, target);
  }

  const BiasSubspace& subspace() const { return subspace_; }

 private:
  const HiddenStateBackend& inner_;
  BiasSubspace subspace_;
};

inline std::unique_ptr<DebiasedBackend> debiased_backend(const ScorerBackend& backend,
                                                         BiasSubspace subspace) {
  const auto* hidden = dynamic_cast<const HiddenStateBackend*>(&backend);
  if (!hidden) {
    throw BackendError("backend " + backend.model_id() + " does not expose hidden states");
  }
  return std::make_unique<DebiasedBackend>(*hidden, std::move(subspace));
}

// ---- subspace file ----
//
//   # sosbias-subspace v1
//   dim<TAB>d
//   k<TAB>K
//   pooling<TAB>mean|first
//   projection_site<TAB><site>
//   explained_variance_ratio<TAB>x
//   eigenvalues<TAB>e1<TAB>...<TAB>ed
//   provenance<TAB><key><TAB><value>      (zero or more)
//   mean<TAB>m1<TAB>...<TAB>md
//   basis<TAB>v1<TAB>...<TAB>vd            (K rows)

inline constexpr std::string_view kSubspaceMagic = "# sosbias-subspace v1";

inline std::string serialize_subspace(const BiasSubspace& s) {
  auto row = [](std::string_view name, auto&& values, Eigen::Index n) {
    std::string out(name);
    for (Eigen::Index i = 0; i < n; ++i) out += '\t' + text::format_double(values(i));
    return out + '\n';
  };
  std::string out(kSubspaceMagic);
  out += "\ndim\t" + std::to_string(s.dim()) + "\nk\t" + std::to_string(s.k()) +
         "\npooling\t" + s.pooling + "\nprojection_site\t" + s.projection_site +
         "\nexplained_variance_ratio\t" + text::format_double(s.explained_variance_ratio) + "\n";
  out += "eigenvalues";
  for (double e : s.eigenvalues) out += '\t' + text::format_double(e);
  out += '\n';
  for (const auto& [k, v] : s.provenance) out += "provenance\t" + k + '\t' + v + '\n';
  out += row("mean", s.mean, s.dim());
  for (Eigen::Index r = 0; r < s.k(); ++r) {
    out += row("basis", s.basis.row(r), s.dim());
  }
  return out;
}

inline BiasSubspace parse_subspace(std::string_view content, const std::string& source = "subspace") {
  const auto all = text::lines(content);
  if (all.empty() || all[0].content != kSubspaceMagic) {
    throw ParseError(source + ":1", "missing '" + std::string(kSubspaceMagic) + "' header");
  }
  BiasSubspace s;
  long long dim = -1, k = -1;
  std::vector<Eigen::VectorXd> rows;
  bool have_mean = false;
  auto vec = [&](const std::vector<std::string>& f, std::size_t from, const std::string& where) {
    if (dim < 0) throw ParseError(where, "dim must precede vectors");
    if (static_cast<long long>(f.size() - from) != dim) {
      throw ParseError(where, "expected " + std::to_string(dim) + " values");
    }
    Eigen::VectorXd v(dim);
    for (long long i = 0; i < dim; ++i) {
      v(i) = text::parse_double(f[from + static_cast<std::size_t>(i)], where);
    }
    return v;
  };
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (text::is_blank_or_comment(all[i].content)) continue;
    const std::string where = source + ":" + std::to_string(all[i].number);
    auto f = text::split(all[i].content, '\t');
    const std::string& key = f[0];
    if (key == "dim" && f.size() == 2) {
      dim = text::parse_int(f[1], where);
      if (dim < 1) throw ParseError(where, "dim must be >= 1");
    } else if (key == "k" && f.size() == 2) {
      k = text::parse_int(f[1], where);
    } else if (key == "pooling" && f.size() == 2) {
      if (!parse_pooling(f[1])) throw ParseError(where, "unknown pooling '" + f[1] + "'");
      s.pooling = f[1];
    } else if (key == "projection_site" && f.size() == 2) {
      s.projection_site = f[1];
    } else if (key == "explained_variance_ratio" && f.size() == 2) {
      s.explained_variance_ratio = text::parse_double(f[1], where);
    } else if (key == "eigenvalues") {
      s.eigenvalues.clear();
      for (std::size_t j = 1; j < f.size(); ++j) s.eigenvalues.push_back(text::parse_double(f[j], where));
    } else if (key == "provenance" && f.size() == 3) {
      s.provenance[f[1]] = f[2];
    } else if (key == "mean") {
      s.mean = vec(f, 1, where);
      have_mean = true;
    } else if (key == "basis") {
      rows.push_back(vec(f, 1, where));
    } else {
      throw ParseError(where, "unrecognized subspace row '" + key + "'");
    }
  }
  if (dim < 1 || k < 0 || !have_mean) throw ParseError(source, "subspace needs dim, k and mean");
  if (static_cast<long long>(rows.size()) != k) {
    throw ParseError(source, "k=" + std::to_string(k) + " but " + std::to_string(rows.size()) +
                                 " basis rows");
  }
  if (k > dim) throw ParseError(source, "k exceeds dim");
  s.basis.resize(k, dim);
  for (long long r = 0; r < k; ++r) s.basis.row(r) = rows[static_cast<std::size_t>(r)].transpose();
  check_orthonormal(s.basis);
  return s;
}

inline BiasSubspace load_subspace(const std::string& path) {
  return parse_subspace(text::read_file(path), path);
}

}  // namespace sosbias

#endif  // SOSBIAS_DEBIAS_HPP_
