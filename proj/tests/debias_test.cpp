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


#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sosbias/debias.hpp"
#include "sosbias/scoring.hpp"
#include "sosbias/toy_backends.hpp"
#include "test_util.hpp"

namespace sosbias {
namespace {

using testing::fixture;

const std::vector<WordPair> kPairs = {{"stupid", "kind"}, {"ugly", "beautiful"}};

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = 2.0 * testing::unit(rng) - 1.0;
  return m;
}

TEST(ContextualizeTest, OrderFollowsCorpusThenWordThenPosition) {
  const auto corpus = load_corpus(fixture("corpus_small.txt"));
  const auto cf = contextualize(kPairs, corpus);
  ASSERT_EQ(cf.size(), 9u);
  EXPECT_EQ(cf[0].variant, "that was a kind idea");
  EXPECT_EQ(cf[1].variant, "she is stupid to everyone");
  EXPECT_EQ(cf[2].variant, "what an beautiful building");
  EXPECT_EQ(cf[4].target_word, "stupid");
  EXPECT_EQ(cf[4].variant, "the kind dog chased the kind cat");
  EXPECT_EQ(cf[5].target_word, "kind");
  EXPECT_EQ(cf[5].variant, "the stupid dog chased the stupid cat");
  EXPECT_EQ(cf[7].variant, "the most beautiful and stupid gesture");
  EXPECT_EQ(cf[8].variant, "the most ugly and kind gesture");
  EXPECT_EQ(cf[8].sentence_index, 6u);
}

TEST(ContextualizeTest, CapPerWord) {
  const auto cf = contextualize(kPairs, load_corpus(fixture("corpus_small.txt")), 1);
  ASSERT_EQ(cf.size(), 4u);
  EXPECT_EQ(cf[3].target_word, "beautiful");
  EXPECT_EQ(cf[3].sentence_index, 3u);
}

TEST(ContextualizeTest, WholeWordsOnly) {
  const auto cf = contextualize(kPairs, {"kindness is not Kind, it is KIND"});
  ASSERT_EQ(cf.size(), 2u);
  EXPECT_EQ(cf[0].variant, "kindness is not stupid, it is KIND");
  EXPECT_EQ(cf[1].variant, "kindness is not Kind, it is stupid");
}

TEST(ContextualizeTest, EmptyInputsRaise) {
  EXPECT_THROW(contextualize(kPairs, {}), Error);
  EXPECT_THROW(contextualize(kPairs, {"nothing to see"}), Error);
}

TEST(SubspaceTest, RecoversKnownDirection) {
  std::mt19937_64 rng(3);
  const Eigen::Index d = 6;
  Eigen::VectorXd u = random_matrix(rng, d, 1).col(0).normalized();
  Eigen::MatrixXd b = random_matrix(rng, 40, d);
  Eigen::MatrixXd a = b;
  for (Eigen::Index i = 0; i < a.rows(); ++i) a.row(i) += (1.0 + i % 5) * u.transpose();
  const BiasSubspace s = estimate_subspace(a, b, 1);
  canonicalize_sign(u);
  EXPECT_LT((s.basis.row(0).transpose() - u).norm(), 1e-10);
  EXPECT_NEAR(s.explained_variance_ratio, 1.0, 1e-10);
  EXPECT_NEAR(s.mean.dot(u), 3.0, 1e-10);
  EXPECT_THROW(estimate_subspace(a, b, 2), RankDeficientError);
}

TEST(SubspaceTest, RankDeficiencyReportsAchievedRank) {
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(5, 3);
  try {
    estimate_subspace(zero, zero, 1);
    FAIL() << "expected RankDeficientError";
  } catch (const RankDeficientError& e) {
    EXPECT_EQ(e.requested(), 1);
    EXPECT_EQ(e.achieved(), 0);
  }
  EXPECT_THROW(estimate_subspace(Eigen::MatrixXd::Ones(1, 3), Eigen::MatrixXd::Zero(1, 3), 1),
               RankDeficientError);
}

TEST(SubspaceTest, InvalidKOrShapeRaises) {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(4, 3);
  EXPECT_THROW(estimate_subspace(m, 2 * m, 4), InvariantError);
  EXPECT_THROW(estimate_subspace(m, 2 * m, 0), InvariantError);
  EXPECT_THROW(estimate_subspace(m, Eigen::MatrixXd::Zero(3, 3), 1), InvariantError);
}

TEST(SubspaceTest, MatchesJacobiOracle) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index d = static_cast<Eigen::Index>(testing::draw(rng, 2, 8));
    const Eigen::MatrixXd a = random_matrix(rng, 30, d), b = random_matrix(rng, 30, d);
    std::vector<std::vector<double>> ra(30, std::vector<double>(d)), rb = ra;
    for (int i = 0; i < 30; ++i)
      for (Eigen::Index j = 0; j < d; ++j) ra[i][j] = a(i, j), rb[i][j] = b(i, j);
    const auto oracle = testing::jacobi_eigen(testing::difference_covariance(ra, rb));
    const int k = static_cast<int>(testing::draw(rng, 1, d));
    const BiasSubspace s = estimate_subspace(a, b, k);
    for (Eigen::Index i = 0; i < d; ++i) {
      EXPECT_NEAR(s.eigenvalues[i], oracle[i].value, 1e-10);
    }
    for (int r = 0; r < k; ++r) {
      Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(oracle[r].vector.data(), d);
      EXPECT_NEAR(std::abs(v.dot(s.basis.row(r).transpose())), 1.0, 1e-8);
    }
  }
}

TEST(SubspaceTest, SignIsCanonical) {
  std::mt19937_64 rng(21);
  const Eigen::MatrixXd a = random_matrix(rng, 20, 5), b = random_matrix(rng, 20, 5);
  const BiasSubspace s = estimate_subspace(a, b, 3);
  const BiasSubspace flipped = estimate_subspace(b, a, 3);
  EXPECT_LT((s.basis - flipped.basis).norm(), 1e-10);
  for (Eigen::Index r = 0; r < 3; ++r) {
    for (Eigen::Index c = 0; c < 5; ++c) {
      if (std::abs(s.basis(r, c)) > 1e-12) {
        EXPECT_GT(s.basis(r, c), 0.0);
        break;
      }
    }
  }
}

TEST(RemoveTest, ProjectionProperties) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd a = random_matrix(rng, 25, 7), b = random_matrix(rng, 25, 7);
  const BiasSubspace s = estimate_subspace(a, b, 2);
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd x = random_matrix(rng, 7, 1).col(0);
    const Eigen::VectorXd y = remove(x, s);
    EXPECT_LT((s.basis * y).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((remove(y, s) - y).norm(), 1e-12);
    EXPECT_LE(y.norm(), x.norm() + 1e-12);
  }
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(7, -1, 1);
  EXPECT_EQ(remove(x, BiasSubspace::empty(7)), x);
  EXPECT_THROW(remove(Eigen::VectorXd::Zero(3), s), InvariantError);
}

TEST(SubspaceFileTest, RoundTrip) {
  std::mt19937_64 rng(8);
  BiasSubspace s = estimate_subspace(random_matrix(rng, 10, 4), random_matrix(rng, 10, 4), 2);
  s.provenance = {{"backend", "toy"}, {"seed", "1"}};
  const std::string text = serialize_subspace(s);
  const BiasSubspace back = parse_subspace(text);
  EXPECT_EQ(serialize_subspace(back), text);
  EXPECT_EQ(back.basis, s.basis);
  EXPECT_EQ(back.provenance, s.provenance);
}

TEST(SubspaceFileTest, EmptySubspaceRoundTrip) {
  const BiasSubspace back = parse_subspace(serialize_subspace(BiasSubspace::empty(3)));
  EXPECT_EQ(back.k(), 0);
  EXPECT_EQ(back.dim(), 3);
}

TEST(SubspaceFileTest, Errors) {
  EXPECT_THROW(parse_subspace("dim\t3\n"), ParseError);
  std::mt19937_64 rng(8);
  const BiasSubspace s = estimate_subspace(random_matrix(rng, 10, 4), random_matrix(rng, 10, 4), 1);
  std::string text = serialize_subspace(s);
  text.replace(text.find("\nk\t1"), 4, "\nk\t2");
  EXPECT_THROW(parse_subspace(text), ParseError);
}

TEST(DebiasedBackendTest, HiddenStatesAreProjected) {
  const ToyLinearBackend inner(6, 32, 2);
  std::mt19937_64 rng(1);
  const BiasSubspace s = estimate_subspace(random_matrix(rng, 12, 6), random_matrix(rng, 12, 6), 2);
  const DebiasedBackend db(inner, s);
  const Tokens t = db.tokenize("you are a stupid woman");
  const Eigen::MatrixXd h = db.hidden_states(t, 2);
  EXPECT_LT((h * s.basis.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((db.masked_hidden(t, 2) - h.row(2).transpose()).norm(), 1e-12);
  EXPECT_EQ(db.model_id(), inner.model_id() + "+debias-k2");
  const double lp = db.masked_log_prob(t, 1);
  EXPECT_DOUBLE_EQ(lp, inner.head_log_prob(remove(inner.masked_hidden(t, 1), s), "are"));
}

TEST(DebiasedBackendTest, EmptySubspaceIsIdentity) {
  const ToyLinearBackend inner(5, 40, 7);
  const DebiasedBackend db(inner, BiasSubspace::empty(5));
  const Tokens t = inner.tokenize("the stupid dog");
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(db.masked_log_prob(t, i), inner.masked_log_prob(t, i));
  }
}

TEST(DebiasedBackendTest, RequiresHiddenStates) {
  const UniformBackend u(5);
  EXPECT_THROW(debiased_backend(u, BiasSubspace::empty(3)), BackendError);
  const ToyLinearBackend inner(4, 10, 1);
  EXPECT_THROW(debiased_backend(inner, BiasSubspace::empty(3)), InvariantError);
}

TEST(EmbedTest, PooledEncoderPairsExamples) {
  const ToyLinearBackend backend(4, 16, 3);
  const PooledEncoder enc(backend, Pooling::kMean);
  const auto cf = contextualize(kPairs, load_corpus(fixture("corpus_small.txt")));
  const auto ex = embed(cf, enc);
  ASSERT_EQ(ex.size(), cf.size());
  EXPECT_LT((ex[0].representation - enc.encode(cf[0].source)).norm(), 1e-15);
  EXPECT_LT((ex[0].variant_representation - enc.encode(cf[0].variant)).norm(), 1e-15);
  const BiasSubspace s = estimate_subspace(ex, 1);
  EXPECT_EQ(s.dim(), 4);
}

TEST(JacobiOracleTest, DiagonalAndKnownMatrix) {
  const auto e = testing::jacobi_eigen({{2, 1}, {1, 2}});
  EXPECT_NEAR(e[0].value, 3.0, 1e-14);
  EXPECT_NEAR(e[1].value, 1.0, 1e-14);
  EXPECT_NEAR(std::abs(e[0].vector[0]), std::sqrt(0.5), 1e-14);
}

}  // namespace
}  // namespace sosbias
