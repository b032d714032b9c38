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

#include <random>
#include <set>
#include <string>
#include <vector>

#include "sosbias/fairness.hpp"
#include "test_util.hpp"

namespace sosbias {
namespace {

using testing::fixture;

PredictionRecord rec(bool label, double score, std::vector<Subgroup> groups = {{"gender", "female"}}) {
  static int next = 0;
  return {"x" + std::to_string(next++), label, score, std::move(groups)};
}

TEST(PreprocessTest, Examples) {
  EXPECT_EQ(preprocess("RT @user check https://x.co NOW!"), "check now !");
  EXPECT_EQ(preprocess("don't"), "do not");
  EXPECT_EQ(preprocess(""), "");
  EXPECT_EQ(preprocess("I'm sure it's fine"), "i am sure it is fine");
  EXPECT_EQ(preprocess("caf\xc3\xa9 time"), "caf time");
}

TEST(PreprocessTest, StepsCanBeDisabled) {
  PreprocessConfig c;
  c.lowercase = false;
  c.expand_contractions = false;
  c.pad_punctuation = false;
  EXPECT_EQ(preprocess("Don't STOP", c), "Don't STOP");
}

TEST(PreprocessTest, Idempotent) {
  for (const char* s : {"RT @user check https://x.co NOW!", "don't, won't... ok?!",
                        "@a@b www.example.com/x?y=1 Hello", "  spaced   out\ttext  "}) {
    const std::string once = preprocess(s);
    EXPECT_EQ(preprocess(once), once) << s;
  }
}

TEST(SplitTest, Sizes) {
  EXPECT_EQ(split_sizes(10, {}), (std::array<std::size_t, 3>{4, 3, 3}));
  EXPECT_EQ(split_sizes(7, {}), (std::array<std::size_t, 3>{3, 2, 2}));
  EXPECT_EQ(split_sizes(1, {}), (std::array<std::size_t, 3>{1, 0, 0}));
  for (std::size_t n = 1; n < 200; ++n) {
    const auto s = split_sizes(n, {});
    EXPECT_EQ(s[0] + s[1] + s[2], n);
  }
  SplitSpec bad;
  bad.train = 0.5;
  EXPECT_THROW(split_sizes(10, bad), InvariantError);
}

TEST(SplitTest, DeterministicDisjointExhaustive) {
  std::vector<int> items(57);
  for (int i = 0; i < 57; ++i) items[i] = i;
  SplitSpec spec;
  spec.seed = 42;
  const auto a = split(items, spec), b = split(items, spec);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.validation, b.validation);
  EXPECT_EQ(a.test, b.test);
  std::multiset<int> all(a.train.begin(), a.train.end());
  all.insert(a.validation.begin(), a.validation.end());
  all.insert(a.test.begin(), a.test.end());
  EXPECT_EQ(all, std::multiset<int>(items.begin(), items.end()));
  spec.seed = 43;
  EXPECT_NE(split(items, spec).train, a.train);
  EXPECT_THROW(split(std::vector<int>{}, spec), InvariantError);
}

TEST(SplitTest, BoundedDrawInRange) {
  std::mt19937_64 rng(1);
  for (std::uint64_t bound : {1ull, 2ull, 3ull, 1000ull}) {
    for (int i = 0; i < 100; ++i) EXPECT_LT(bounded_draw(rng, bound), bound);
  }
}

TEST(RatesTest, Example) {
  std::vector<PredictionRecord> r;
  for (int i = 0; i < 2; ++i) r.push_back(rec(false, 0.9));
  for (int i = 0; i < 8; ++i) r.push_back(rec(false, 0.1));
  for (int i = 0; i < 3; ++i) r.push_back(rec(true, 0.5));
  r.push_back(rec(true, 0.49));
  const Rates x = rates(r, 0.5);
  EXPECT_EQ(x.fpr(), Rational(1, 5));
  EXPECT_EQ(x.tpr(), Rational(3, 4));
}

TEST(RatesTest, UndefinedRatesRaise) {
  const Rates only_pos = rates({rec(true, 0.7)});
  EXPECT_THROW(only_pos.fpr(), UndefinedStatisticError);
  EXPECT_EQ(only_pos.tpr(), Rational(1));
  const Rates only_neg = rates({rec(false, 0.7)});
  EXPECT_THROW(only_neg.tpr(), UndefinedStatisticError);
  EXPECT_THROW(auc({rec(true, 0.1), rec(true, 0.2)}), UndefinedStatisticError);
}

TEST(AucTest, Examples) {
  EXPECT_EQ(auc({rec(true, 0.9), rec(true, 0.8), rec(false, 0.2), rec(false, 0.1)}), Rational(1));
  EXPECT_EQ(auc({rec(true, 0.5), rec(false, 0.5)}), Rational(1, 2));
  EXPECT_EQ(auc({rec(true, 0.9), rec(true, 0.3), rec(false, 0.5), rec(false, 0.1)}),
            Rational(3, 4));
}

TEST(AucTest, MatchesBruteForce) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = testing::random_subgroup(rng, 60);
    EXPECT_EQ(auc(g), testing::brute_force_auc(g));
  }
}

TEST(AucTest, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = testing::random_subgroup(rng, 40);
    const Rational before = auc(g);
    for (auto& r : g) r.score = r.score * r.score * 0.5 + 0.1;
    EXPECT_EQ(auc(g), before);
  }
}

TEST(GapTest, FixtureGaps) {
  const auto records = load_predictions(fixture("predictions_fixture.tsv"));
  const GapReport r = gap_report(records, default_pairings());
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[0].attribute, "gender");
  EXPECT_EQ(r.rows[0].n_marginalized, 14u);
  EXPECT_EQ(r.rows[0].n_non_marginalized, 14u);
  EXPECT_EQ(r.rows[0].fpr_gap, Rational(1, 10));
  EXPECT_EQ(r.rows[0].tpr_gap, Rational(0));
  EXPECT_EQ(r.rows[0].auc_gap, Rational(1, 80));
  EXPECT_EQ(r.rows[1].marginalized, "black+asian");
  EXPECT_EQ(r.rows[1].fpr_gap, Rational(1, 6));
  EXPECT_EQ(r.rows[1].tpr_gap, Rational(1, 6));
  EXPECT_EQ(r.rows[1].auc_gap, Rational(1, 12));
  EXPECT_EQ(r.rows[2].auc_gap, Rational(1, 12));
  EXPECT_TRUE(r.diagnostics.empty());
}

TEST(GapTest, SymmetricInGroups) {
  const auto records = load_predictions(fixture("predictions_fixture.tsv"));
  std::vector<std::string> diag;
  const auto a = gap_row(records, "race", {"black", "asian"}, {"white"}, 0.5, diag);
  const auto b = gap_row(records, "race", {"white"}, {"black", "asian"}, 0.5, diag);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->fpr_gap, b->fpr_gap);
  EXPECT_EQ(a->tpr_gap, b->tpr_gap);
  EXPECT_EQ(a->auc_gap, b->auc_gap);
}

TEST(GapTest, MissingSubgroupIsDiagnosed) {
  const auto records = load_predictions(fixture("predictions_fixture.tsv"));
  const GapReport r = gap_report(records, {{"sexual_orientation", {"gay"}, {"straight"}}});
  EXPECT_TRUE(r.rows.empty());
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_NE(r.diagnostics[0].find("missing subgroup"), std::string::npos);
}

TEST(GapTest, UndefinedRateIsDiagnosed) {
  const std::vector<PredictionRecord> records = {
      rec(true, 0.9, {{"gender", "female"}}), rec(true, 0.8, {{"gender", "male"}}),
      rec(false, 0.1, {{"gender", "male"}})};
  const GapReport r = gap_report(records, default_pairings());
  EXPECT_TRUE(r.rows.empty());
  ASSERT_GE(r.diagnostics.size(), 1u);
  EXPECT_NE(r.diagnostics[0].find("FPR undefined"), std::string::npos);
}

TEST(GapTest, PerIdentityRows) {
  const auto records = load_predictions(fixture("predictions_fixture.tsv"));
  GapOptions o;
  o.per_identity = true;
  const GapReport r = gap_report(records, default_pairings(), o);
  EXPECT_EQ(r.rows.size(), 7u);
  EXPECT_EQ(r.rows[2].marginalized, "black");
  EXPECT_EQ(r.rows[3].marginalized, "asian");
}

TEST(GapTest, ReportRoundTrip) {
  const auto records = load_predictions(fixture("predictions_fixture.tsv"));
  GapReport r = gap_report(records, default_pairings());
  r.model = "m1";
  r.provenance = {{"tool", "sosbias"}};
  r.diagnostics.push_back("note");
  const std::string text = serialize_gap_report(r);
  const GapReport back = parse_gap_report(text);
  EXPECT_EQ(serialize_gap_report(back), text);
  EXPECT_EQ(back.model, "m1");
  EXPECT_EQ(back.rows[0].auc_gap, Rational(1, 80));
}

TEST(GapTest, ReportRejectsForeignModelRow) {
  GapReport r = gap_report(load_predictions(fixture("predictions_fixture.tsv")), default_pairings());
  r.model = "m1";
  std::string text = serialize_gap_report(r);
  const auto pos = text.find("\tm1\t");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 4, "\tm2\t");
  EXPECT_THROW(parse_gap_report(text), ParseError);
}

TEST(PredictionsTest, ParseErrors) {
  EXPECT_THROW(parse_predictions("r1\t1\t0.5\tgender:female\n"), ParseError);
  const std::string header = "id\ttrue_label\tscore\tsubgroups\n";
  EXPECT_THROW(parse_predictions(header + "r1\t2\t0.5\tgender:female\n"), ParseError);
  EXPECT_THROW(parse_predictions(header + "r1\t1\t1.5\tgender:female\n"), ParseError);
  EXPECT_THROW(parse_predictions(header + "r1\t1\tx\tgender:female\n"), ParseError);
}

TEST(PairingsTest, ParsesTable) {
  const auto p = parse_pairings(text::read_file(testing::data_file("pairing_table.tsv")));
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[1].marginalized, (std::vector<std::string>{"black", "asian"}));
  EXPECT_EQ(p[2].non_marginalized, (std::vector<std::string>{"christian"}));
  EXPECT_THROW(parse_pairings("attr\tm\tn\n"), ParseError);
  EXPECT_THROW(parse_pairings("attribute\tm\tn\nrace\t\twhite\n"), ParseError);
}

}  // namespace
}  // namespace sosbias
