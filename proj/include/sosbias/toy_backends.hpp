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

// Small deterministic backends used by tests, fixtures and desk-scale runs.
// All of them tokenize by lowercasing and splitting on whitespace.

#ifndef SOSBIAS_TOY_BACKENDS_HPP_
#define SOSBIAS_TOY_BACKENDS_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sosbias/backend.hpp"
#include "sosbias/error.hpp"
#include "sosbias/text.hpp"

namespace sosbias {

inline Tokens word_tokenize(std::string_view text) {
  return text::split_ws(text::to_lower(text));
}

// Every query returns ln(1/V).
class UniformBackend : public ScorerBackend {
 public:
  explicit UniformBackend(std::uint64_t vocab_size) : vocab_size_(vocab_size) {
    if (vocab_size == 0) throw BackendError("uniform backend needs a vocabulary size >= 1");
  }

  std::string model_id() const override {
    return "uniform-" + std::to_string(vocab_size_);
  }
  Tokens tokenize(std::string_view text) const override { return word_tokenize(text); }
  double masked_log_prob(std::span<const std::string>, std::size_t) const override {
    return std::log(1.0 / static_cast<double>(vocab_size_));
  }
  bool supports_concurrent_queries() const override { return true; }

 private:
  std::uint64_t vocab_size_;
};

// Key of a table-backend entry: FNV-1a over the full token sequence joined
// by U+001F. Together with the masked position this identifies a query.
inline std::uint64_t context_hash(std::span<const std::string> tokens) {
  std::uint64_t h = text::fnv1a64("");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) h = text::fnv1a64("\x1f", h);
    h = text::fnv1a64(tokens[i], h);
  }
  return h;
}

// Table-driven backend: (context hash, position) -> log-prob, with a default
// for queries not in the table.
//
// File format (tab separated, '#' comments):
//
//   # sosbias-table v1
//   model_id<TAB><id>
//   default_log_prob<TAB><value>
//   key<TAB><16 hex digits><TAB><position><TAB><log_prob>
//   sentence<TAB><text><TAB><position><TAB><log_prob>
//
// "sentence" rows are a readable alternative to "key" rows; the text is
// tokenized with the backend tokenizer and hashed on load.
class TableBackend : public ScorerBackend {
 public:
  TableBackend(std::string model_id, double default_log_prob)
      : model_id_(std::move(model_id)), default_log_prob_(default_log_prob) {
    check_value(default_log_prob_, "default_log_prob");
  }

  void set(std::span<const std::string> tokens, std::size_t position, double log_prob) {
    set_key(context_hash(tokens), position, log_prob);
  }
  void set(std::string_view sentence, std::size_t position, double log_prob) {
    const Tokens t = tokenize(sentence);
    set(t, position, log_prob);
  }
  void set_key(std::uint64_t key, std::size_t position, double log_prob) {
    check_value(log_prob, "table entry");
    table_[{key, position}] = log_prob;
  }

  std::string model_id() const override { return model_id_; }
  Tokens tokenize(std::string_view text) const override { return word_tokenize(text); }
  double masked_log_prob(std::span<const std::string> tokens,
                         std::size_t masked) const override {
    if (masked >= tokens.size()) {
      throw BackendError("masked position " + std::to_string(masked) + " out of range");
    }
    auto it = table_.find({context_hash(tokens), masked});
    return it == table_.end() ? default_log_prob_ : it->second;
  }
  bool supports_concurrent_queries() const override { return true; }

  double default_log_prob() const { return default_log_prob_; }
  const std::map<std::pair<std::uint64_t, std::size_t>, double>& entries() const {
    return table_;
  }

  std::string serialize() const {
    std::string out = "# sosbias-table v1\nmodel_id\t" + model_id_ +
                      "\ndefault_log_prob\t" + text::format_double(default_log_prob_) + "\n";
    for (const auto& [k, v] : table_) {
      out += "key\t" + text::hex64(k.first) + '\t' + std::to_string(k.second) + '\t' +
             text::format_double(v) + '\n';
    }
    return out;
  }

  static TableBackend parse(std::string_view content, const std::string& source = "table") {
    std::optional<std::string> id;
    std::optional<double> def;
    std::vector<std::pair<text::Line, std::vector<std::string>>> rows;
    for (const auto& line : text::lines(content)) {
      if (text::is_blank_or_comment(line.content)) continue;
      const std::string where = source + ":" + std::to_string(line.number);
      auto f = text::split(line.content, '\t');
      if (f[0] == "model_id" && f.size() == 2) {
        id = f[1];
      } else if (f[0] == "default_log_prob" && f.size() == 2) {
        def = text::parse_double(f[1], where);
      } else if ((f[0] == "key" || f[0] == "sentence") && f.size() == 4) {
        rows.emplace_back(line, std::move(f));
      } else {
        throw ParseError(where, "unrecognized table row");
      }
    }
    if (!id || !def) throw ParseError(source, "table needs model_id and default_log_prob");
    TableBackend b(*id, *def);
    for (const auto& [line, f] : rows) {
      const std::string where = source + ":" + std::to_string(line.number);
      const auto pos = text::parse_int(f[2], where);
      if (pos < 0) throw ParseError(where, "negative position");
      const double lp = text::parse_double(f[3], where);
      try {
        if (f[0] == "key") {
          if (f[1].size() != 16) throw ParseError(where, "key must be 16 hex digits");
          std::uint64_t key = 0;
          for (char c : f[1]) {
            int d = (c >= '0' && c <= '9') ? c - '0' : (c >= 'a' && c <= 'f') ? c - 'a' + 10 : -1;
            if (d < 0) throw ParseError(where, "key must be lowercase hex");
            key = (key << 4) | static_cast<std::uint64_t>(d);
          }
          b.set_key(key, static_cast<std::size_t>(pos), lp);
        } else {
          b.set(std::string_view(f[1]), static_cast<std::size_t>(pos), lp);
        }
      } catch (const BackendError& e) {
        throw ParseError(where, e.what());
      }
    }
    return b;
  }

  static TableBackend load(const std::string& path) {
    return parse(text::read_file(path), path);
  }

 private:
  static void check_value(double v, const char* what) {
    if (!std::isfinite(v) || v > 0.0) {
      throw BackendError(std::string(what) + " must be a finite log-probability <= 0");
    }
  }

  std::string model_id_;
  double default_log_prob_;
  std::map<std::pair<std::uint64_t, std::size_t>, double> table_;
};

// A tiny "transformer-shaped" model with inspectable hidden states:
//
//   h_i = E(t_i) + mean_j E(t_j)        (masked token replaced by [MASK])
//   log p(target | h) = log_softmax(W h)[index(target)]
//
// Embeddings and head come either from explicit tables (hand-checked tests)
// or from a seed, in which case tokens hash into `vocab_size` buckets and
// any text is accepted.
class ToyLinearBackend : public HiddenStateBackend {
 public:
  static constexpr std::string_view kMaskToken = "[MASK]";

  struct Explicit {
    std::vector<std::string> vocabulary;             // defines head row order
    std::map<std::string, Eigen::VectorXd> embedding;  // must include [MASK]
    Eigen::MatrixXd head;                            // |vocab| x d
  };

  ToyLinearBackend(Eigen::Index dim, Eigen::Index vocab_size, std::uint64_t seed)
      : dim_(dim), vocab_size_(vocab_size), seed_(seed) {
    if (dim < 1 || vocab_size < 2) throw BackendError("toy-linear needs dim >= 1 and vocab >= 2");
    head_.resize(vocab_size, dim);
    for (Eigen::Index r = 0; r < vocab_size; ++r) {
      for (Eigen::Index c = 0; c < dim; ++c) {
        head_(r, c) = unit(mix(seed ^ 0x6a09e667f3bcc909ULL,
                               static_cast<std::uint64_t>(r * dim + c)));
      }
    }
  }

  explicit ToyLinearBackend(Explicit params)
      : explicit_(std::move(params)), seed_(0) {
    head_ = explicit_->head;
    dim_ = head_.cols();
    vocab_size_ = head_.rows();
    if (static_cast<Eigen::Index>(explicit_->vocabulary.size()) != vocab_size_) {
      throw BackendError("toy-linear head rows must match the vocabulary size");
    }
    if (!explicit_->embedding.count(std::string(kMaskToken))) {
      throw BackendError("toy-linear explicit embeddings must include [MASK]");
    }
    for (const auto& [tok, e] : explicit_->embedding) {
      if (e.size() != dim_) throw BackendError("embedding of '" + tok + "' has wrong dimension");
    }
  }

  std::string model_id() const override {
    if (explicit_) return "toy-linear-explicit";
    return "toy-linear-d" + std::to_string(dim_) + "-v" + std::to_string(vocab_size_) +
           "-s" + std::to_string(seed_);
  }
  Tokens tokenize(std::string_view text) const override { return word_tokenize(text); }
  bool supports_concurrent_queries() const override { return true; }
  Eigen::Index hidden_size() const override { return dim_; }

  Eigen::VectorXd embedding(std::string_view token) const {
    if (explicit_) {
      auto it = explicit_->embedding.find(std::string(token));
      if (it == explicit_->embedding.end()) {
        throw BackendError("token '" + std::string(token) + "' has no embedding");
      }
      return it->second;
    }
    Eigen::VectorXd e(dim_);
    const std::uint64_t h = text::fnv1a64(token) ^ seed_;
    for (Eigen::Index c = 0; c < dim_; ++c) e(c) = unit(mix(h, static_cast<std::uint64_t>(c)));
    return e;
  }

  Eigen::MatrixXd hidden_states(std::span<const std::string> tokens,
                                std::optional<std::size_t> masked) const override {
    if (tokens.empty()) throw BackendError("empty token sequence");
    if (masked && *masked >= tokens.size()) {
      throw BackendError("masked position " + std::to_string(*masked) + " out of range");
    }
    const auto n = static_cast<Eigen::Index>(tokens.size());
    Eigen::MatrixXd e(n, dim_);
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool is_masked = masked && static_cast<Eigen::Index>(*masked) == i;
      e.row(i) = embedding(is_masked ? kMaskToken : std::string_view(tokens[static_cast<std::size_t>(i)])).transpose();
    }
    const Eigen::RowVectorXd context = e.colwise().mean();
    return e.rowwise() + context;
  }

  double head_log_prob(const Eigen::VectorXd& hidden, const std::string& target) const override {
    if (hidden.size() != dim_) throw BackendError("hidden vector has wrong dimension");
    const Eigen::VectorXd logits = head_ * hidden;
    const double max = logits.maxCoeff();
    const double lse = max + std::log((logits.array() - max).exp().sum());
    return std::min(0.0, logits(index_of(target)) - lse);
  }

  const Eigen::MatrixXd& head() const { return head_; }

 private:
  Eigen::Index index_of(const std::string& token) const {
    if (explicit_) {
      const auto& v = explicit_->vocabulary;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == token) return static_cast<Eigen::Index>(i);
      }
      throw BackendError("token '" + token + "' is not in the toy vocabulary");
    }
    return static_cast<Eigen::Index>(text::fnv1a64(token) % static_cast<std::uint64_t>(vocab_size_));
  }

  // splitmix64 finalizer over (a, b).
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // Uniform in [-1, 1).
  static double unit(std::uint64_t z) {
    return static_cast<double>(z >> 11) * (2.0 / 9007199254740992.0) - 1.0;
  }

  std::optional<Explicit> explicit_;
  Eigen::Index dim_ = 0;
  Eigen::Index vocab_size_ = 0;
  std::uint64_t seed_;
  Eigen::MatrixXd head_;
};

}  // namespace sosbias

#endif  // SOSBIAS_TOY_BACKENDS_HPP_
