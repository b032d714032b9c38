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

// Masked-language-model backend interfaces.
//
// A ScorerBackend answers one kind of query: given a token sequence and one
// position, the natural-log probability the model assigns to the original
// token at that position when it is masked and every other token is visible.
// Implementations must be deterministic and return finite values <= 0.
//
// HiddenStateBackend additionally exposes final-layer hidden states and the
// output head separately, which is what the debiasing wrapper needs.

#ifndef SOSBIAS_BACKEND_HPP_
#define SOSBIAS_BACKEND_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sosbias/error.hpp"

namespace sosbias {

using Tokens = std::vector<std::string>;

class ScorerBackend {
 public:
  virtual ~ScorerBackend() = default;

  virtual std::string model_id() const = 0;
  virtual Tokens tokenize(std::string_view text) const = 0;
  virtual double masked_log_prob(std::span<const std::string> tokens,
                                 std::size_t masked) const = 0;

  // True when masked_log_prob may be called from several threads at once.
  virtual bool supports_concurrent_queries() const { return false; }
};

class SentenceEncoder {
 public:
  virtual ~SentenceEncoder() = default;

  virtual std::string encoder_id() const = 0;
  virtual Eigen::VectorXd encode(std::string_view text) const = 0;

  virtual std::vector<Eigen::VectorXd> encode_batch(
      std::span<const std::string> texts) const {
    std::vector<Eigen::VectorXd> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(encode(t));
    return out;
  }
};

class HiddenStateBackend : public ScorerBackend {
 public:
  virtual Eigen::Index hidden_size() const = 0;

  // Final-layer hidden states, one row per token. When `masked` is set that
  // position is replaced by the mask token before the forward pass.
  virtual Eigen::MatrixXd hidden_states(std::span<const std::string> tokens,
                                        std::optional<std::size_t> masked) const = 0;

  // Log-probability of `target` produced by the output head from one hidden
  // vector.
  virtual double head_log_prob(const Eigen::VectorXd& hidden,
                               const std::string& target) const = 0;

  // Hidden state at the masked position only.
  virtual Eigen::VectorXd masked_hidden(std::span<const std::string> tokens,
                                        std::size_t masked) const {
    return hidden_states(tokens, masked).row(static_cast<Eigen::Index>(masked)).transpose();
  }

  double masked_log_prob(std::span<const std::string> tokens,
                         std::size_t masked) const override {
    return head_log_prob(masked_hidden(tokens, masked), tokens[masked]);
  }
};

enum class Pooling { kMean, kFirstToken };

inline std::string_view to_string(Pooling p) {
  return p == Pooling::kMean ? "mean" : "first";
}

inline std::optional<Pooling> parse_pooling(std::string_view s) {
  if (s == "mean") return Pooling::kMean;
  if (s == "first") return Pooling::kFirstToken;
  return std::nullopt;
}

// Sentence representation from pooled final hidden states of the unmasked
// sentence.
class PooledEncoder : public SentenceEncoder {
 public:
  PooledEncoder(const HiddenStateBackend& backend, Pooling pooling)
      : backend_(backend), pooling_(pooling) {}

  std::string encoder_id() const override {
    return backend_.model_id() + "/" + std::string(to_string(pooling_));
  }

  Eigen::VectorXd encode(std::string_view text) const override {
    const Tokens tokens = backend_.tokenize(text);
    if (tokens.empty()) throw BackendError("cannot encode empty text");
    const Eigen::MatrixXd h = backend_.hidden_states(tokens, std::nullopt);
    if (pooling_ == Pooling::kFirstToken) return h.row(0).transpose();
    return h.colwise().mean().transpose();
  }

 private:
  const HiddenStateBackend& backend_;
  Pooling pooling_;
};

}  // namespace sosbias

#endif  // SOSBIAS_BACKEND_HPP_
