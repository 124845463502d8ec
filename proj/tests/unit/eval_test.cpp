/*
 * Copyright 2026 The refrank Authors.
 *
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

#include <algorithm>
#include <random>

#include "refrank/eval.hpp"
#include "test_util.hpp"

namespace refrank {
namespace {

using testing::CodeOf;

using Ranking = std::vector<std::string>;

TEST(MetricsTest, HandComputedExample) {
  const Ranking r{"a", "x", "b", "y", "c"};
  const GoldSet gold{"a", "b", "c", "d"};
  EXPECT_DOUBLE_EQ(PrecisionAtK(r, gold, 1), 1.0);
  EXPECT_DOUBLE_EQ(PrecisionAtK(r, gold, 3), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(PrecisionAtK(r, gold, 10), 0.3);
  EXPECT_DOUBLE_EQ(RecallAtK(r, gold, 5), 0.75);
  // Hits at ranks 1, 3, 5: (1 + 2/3 + 3/5) / min(5, 4).
  EXPECT_DOUBLE_EQ(AveragePrecisionAtK(r, gold, 5), (1.0 + 2.0 / 3.0 + 3.0 / 5.0) / 4.0);
  // Hits at ranks 1, 3 within k = 3: (1 + 2/3) / 3.
  EXPECT_DOUBLE_EQ(AveragePrecisionAtK(r, gold, 3), (1.0 + 2.0 / 3.0) / 3.0);
  EXPECT_DOUBLE_EQ(RPrecision(r, gold), 0.5);
}

TEST(MetricsTest, PerfectAndEmptyRankings) {
  const GoldSet gold{"a", "b"};
  EXPECT_DOUBLE_EQ(AveragePrecisionAtK(Ranking{"a", "b"}, gold, 10), 1.0);
  EXPECT_DOUBLE_EQ(AveragePrecisionAtK(Ranking{"b", "a", "z"}, gold, 1), 1.0);
  EXPECT_DOUBLE_EQ(RecallAtK(Ranking{}, gold, 5), 0.0);
  EXPECT_DOUBLE_EQ(RPrecision(Ranking{"a", "b"}, gold), 1.0);
}

TEST(MetricsTest, DuplicateIdsCountOnce) {
  const GoldSet gold{"a", "b"};
  EXPECT_DOUBLE_EQ(PrecisionAtK(Ranking{"a", "a", "a"}, gold, 3), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(RecallAtK(Ranking{"a", "a"}, gold, 2), 0.5);
}

TEST(MetricsTest, Errors) {
  EXPECT_EQ(CodeOf([] { PrecisionAtK(Ranking{"a"}, GoldSet{"a"}, 0); }), ErrorCode::kUsage);
  EXPECT_EQ(CodeOf([] { RecallAtK(Ranking{"a"}, GoldSet{}, 3); }), ErrorCode::kEmptyGold);
  EXPECT_EQ(CodeOf([] { MapAtK({}, {}, 3); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(CodeOf([] { MapAtK({Ranking{"a"}}, {}, 3); }), ErrorCode::kShapeMismatch);
}

// Textbook definitions evaluated by nested loops.
struct Oracle {
  static double Precision(const Ranking& r, const GoldSet& g, std::size_t k) {
    double hits = 0;
    for (std::size_t i = 0; i < k && i < r.size(); ++i) hits += g.count(r[i]) ? 1 : 0;
    return hits / static_cast<double>(k);
  }
  static double Recall(const Ranking& r, const GoldSet& g, std::size_t k) {
    double hits = 0;
    for (std::size_t i = 0; i < k && i < r.size(); ++i) hits += g.count(r[i]) ? 1 : 0;
    return hits / static_cast<double>(g.size());
  }
  static double Ap(const Ranking& r, const GoldSet& g, std::size_t k) {
    double sum = 0;
    for (std::size_t i = 0; i < k && i < r.size(); ++i) {
      if (g.count(r[i])) sum += Precision(r, g, i + 1);
    }
    return sum / static_cast<double>(std::min(k, g.size()));
  }
};

TEST(MetricsTest, MatchesBruteForceOracle) {
  std::mt19937_64 rng(1);
  std::vector<Ranking> rankings;
  std::vector<GoldSet> golds;
  for (int trial = 0; trial < 200; ++trial) {
    Ranking pool;
    for (int i = 0; i < 60; ++i) pool.push_back("p" + std::to_string(i));
    std::shuffle(pool.begin(), pool.end(), rng);
    const Ranking r(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(rng() % 40));
    std::shuffle(pool.begin(), pool.end(), rng);
    const GoldSet g(pool.begin(), pool.begin() + 1 + static_cast<std::ptrdiff_t>(rng() % 15));
    for (std::size_t k : {1u, 5u, 10u, 20u}) {
      EXPECT_NEAR(PrecisionAtK(r, g, k), Oracle::Precision(r, g, k), 1e-12);
      EXPECT_NEAR(RecallAtK(r, g, k), Oracle::Recall(r, g, k), 1e-12);
      EXPECT_NEAR(AveragePrecisionAtK(r, g, k), Oracle::Ap(r, g, k), 1e-12);
    }
    EXPECT_NEAR(RPrecision(r, g), Oracle::Precision(r, g, g.size()), 1e-12);
    rankings.push_back(r);
    golds.push_back(g);
  }
  double mean = 0;
  for (std::size_t q = 0; q < rankings.size(); ++q) mean += Oracle::Ap(rankings[q], golds[q], 10);
  EXPECT_NEAR(MapAtK(rankings, golds, 10), mean / rankings.size(), 1e-12);
}

TEST(FrequencyBaselineTest, CountsAndTies) {
  const CitationSet cites{{"t1", {"a", "b", "c"}}, {"t2", {"a", "c"}}, {"t3", {"a"}}};
  EXPECT_EQ(FrequencyBaseline(cites, {"t1", "t2", "t3"}, 2), (Ranking{"a", "c"}));
  EXPECT_EQ(FrequencyBaseline(cites, {"t1", "t2", "t3"}, 10), (Ranking{"a", "c", "b"}));
  const CitationSet tied{{"t1", {"z", "m"}}, {"t2", {"b"}}};
  EXPECT_EQ(FrequencyBaseline(tied, {"t1", "t2"}, 3), (Ranking{"b", "m", "z"}));
  EXPECT_EQ(CodeOf([&] { FrequencyBaseline(cites, {"nobody"}, 3); }), ErrorCode::kEmptyInput);
}

TEST(FrequencyBaselineTest, RunRespectsTemporalFilter) {
  Corpus c({testing::MakeTalk("t", 2019, "x")},
           {testing::MakePaper("old", 2010), testing::MakePaper("new", 2021)},
           {{"t", {"old", "new"}}}, {{"t", Split::kTrain}});
  const std::vector<PaperCount> ranking{{"new", 5}, {"old", 2}};
  const auto run = FrequencyBaselineRun(c, ranking, {c.FindTalk("t")}, 10);
  ASSERT_EQ(run.size(), 1u);
  ASSERT_EQ(run[0].entries.size(), 1u);
  EXPECT_EQ(run[0].entries[0].paper_id, "old");
  EXPECT_EQ(run[0].entries[0].score, 2.0);
}

RankedList List(std::string talk, Ranking ids) {
  RankedList l;
  l.talk_id = std::move(talk);
  for (auto& id : ids) l.entries.push_back({id, 0.0});
  l.k = l.entries.size();
  return l;
}

TEST(EvaluateRunTest, MacroAverageMatchesHandComputation) {
  const RelevanceJudgments j{{"t1", {"a", "b"}}, {"t2", {"c"}}};
  const std::vector<RankedList> run{List("t1", {"a", "x"}), List("t2", {"x", "c"})};
  const auto report = EvaluateRun(run, j, {1, 2});
  EXPECT_EQ(report.query_count, 2u);
  // t1: P@1 1, R@2 .5, AP@2 1/2; R-prec 1/2. t2: P@1 0, R@2 1, AP@2 1/2; R-prec 0.
  EXPECT_DOUBLE_EQ(report.macro.at("P@1"), 0.5);
  EXPECT_DOUBLE_EQ(report.macro.at("R@2"), 0.75);
  EXPECT_DOUBLE_EQ(report.macro.at("MAP@2"), 0.5);
  EXPECT_DOUBLE_EQ(report.macro.at("Prec."), 0.25);
  EXPECT_EQ(report.columns, (std::vector<std::string>{"Prec.", "P@1", "P@2", "R@1", "R@2",
                                                      "MAP@1", "MAP@2"}));
}

TEST(EvaluateRunTest, ErrorsAndJson) {
  const RelevanceJudgments j{{"t1", {"a"}}};
  EXPECT_EQ(CodeOf([&] { EvaluateRun({}, j, {10}); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(CodeOf([&] { EvaluateRun({List("t9", {"a"})}, j, {10}); }),
            ErrorCode::kMissingJudgment);
  const auto report = EvaluateRun({List("t1", {"x", "a"})}, j, {1, 3});
  const auto json = ReportToJson(report);
  EXPECT_EQ(json["metrics"]["R@3"], 100.0);
  EXPECT_EQ(json["metrics"]["MAP@3"], 50.0);
  EXPECT_EQ(json["fractions"]["Prec."], 0.0);
  std::vector<std::string> keys;
  for (const auto& [k, v] : json["metrics"].items()) keys.push_back(k);
  EXPECT_EQ(keys, MetricColumns({1, 3}));
  EXPECT_DOUBLE_EQ(RoundPercent(0.123456), 12.35);
}

TEST(JudgmentsTest, YearFilterDropsFutureGold) {
  Corpus c({testing::MakeTalk("t", 2019, "x"), testing::MakeTalk("u", 2000, "y")},
           {testing::MakePaper("old", 2010), testing::MakePaper("new", 2021)},
           {{"t", {"old", "new"}}, {"u", {"new"}}},
           {{"t", Split::kTest}, {"u", Split::kTest}});
  const std::vector<const TalkRecord*> talks{c.FindTalk("t"), c.FindTalk("u")};
  EXPECT_EQ(BuildJudgments(c, talks).at("t").size(), 2u);
  const auto filtered = BuildJudgments(c, talks, true);
  EXPECT_EQ(filtered.at("t"), (GoldSet{"old"}));
  EXPECT_FALSE(filtered.count("u"));
}

}  // namespace
}  // namespace refrank
