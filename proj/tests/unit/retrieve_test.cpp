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
#include <numeric>
#include <random>
#include <sstream>

#include "refrank/retrieve.hpp"
#include "test_util.hpp"

namespace refrank {
namespace {

using testing::CodeOf;
using testing::RandomMatrix;
using testing::RandomVector;

std::vector<std::string> PaperIds(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("p" + std::to_string(i));
  return ids;
}

std::vector<std::string> Ids(const RankedList& list) {
  std::vector<std::string> out;
  for (const auto& e : list.entries) out.push_back(e.paper_id);
  return out;
}

TEST(IndexTest, ConstructionErrors) {
  EXPECT_EQ(CodeOf([] { BuildIndex({}, Matrix(0, 3), {}); }), ErrorCode::kEmptyIndex);
  EXPECT_EQ(CodeOf([] { BuildIndex({"a", "b"}, Matrix::Zero(3, 2), {1, 2}); }),
            ErrorCode::kDimMismatch);
  EXPECT_EQ(CodeOf([] { BuildIndex({"a", "a"}, Matrix::Zero(2, 2), {1, 2}); }),
            ErrorCode::kDuplicateId);
}

TEST(SearchTest, SmallExampleWithTiesAndYears) {
  Matrix keys(4, 2);
  keys << 1, 0,   // b
      0, 1,       // a
      1, 0,       // c, ties with b
      2, 0;       // d, newest
  const auto index = BuildIndex({"b", "a", "c", "d"}, keys, {2018, 2019, 2020, 2022});
  const Vector q = (Vector(2) << 1, 0.5).finished();
  EXPECT_EQ(Ids(Search(index, q, 4, 2022)), (std::vector<std::string>{"d", "b", "c", "a"}));
  EXPECT_EQ(Ids(Search(index, q, 4, 2020)), (std::vector<std::string>{"b", "c", "a"}));
  EXPECT_EQ(Ids(Search(index, q, 4, 2020, TemporalMode::kStrict)),
            (std::vector<std::string>{"b", "a"}));
  EXPECT_EQ(Ids(Search(index, q, 2, 2000, TemporalMode::kNone)),
            (std::vector<std::string>{"d", "b"}));
  EXPECT_EQ(CodeOf([&] { Search(index, q, 3, 2017); }), ErrorCode::kEmptyEligibleSet);
  EXPECT_EQ(CodeOf([&] { Search(index, q, 0, 2022); }), ErrorCode::kUsage);
  EXPECT_EQ(CodeOf([&] { Search(index, Vector::Zero(3), 1, 2022); }), ErrorCode::kDimMismatch);
}

TEST(SearchTest, KLargerThanEligibleReturnsAll) {
  std::mt19937_64 rng(1);
  const auto index = BuildIndex(PaperIds(5), RandomMatrix(rng, 5, 3), {1, 1, 1, 1, 1});
  const auto list = Search(index, RandomVector(rng, 3), 50, 1);
  EXPECT_EQ(list.entries.size(), 5u);
  EXPECT_EQ(list.k, 50u);
}

// Brute force: score everything, stable sort by (score desc, id asc).
TEST(SearchTest, MatchesFullSortOracle) {
  std::mt19937_64 rng(2);
  const std::size_t n = 1000;
  const Matrix keys = RandomMatrix(rng, n, 64);
  std::vector<int> years(n);
  for (auto& y : years) y = 2000 + static_cast<int>(rng() % 20);
  const auto ids = PaperIds(n);
  const auto index = BuildIndex(ids, keys, years);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector q = RandomVector(rng, 64);
    const int cutoff = 2005 + trial % 15;
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i) {
      if (years[i] <= cutoff) order.push_back(i);
    }
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (int d = 0; d < 64; ++d) s += q[d] * keys(static_cast<Eigen::Index>(i), d);
      scores[i] = s;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return ids[a] < ids[b];
    });
    for (std::size_t k : {1u, 10u, 100u}) {
      const auto list = Search(index, q, k, cutoff);
      ASSERT_EQ(list.entries.size(), std::min(k, order.size()));
      for (std::size_t r = 0; r < list.entries.size(); ++r) {
        EXPECT_EQ(list.entries[r].paper_id, ids[order[r]]);
        EXPECT_NEAR(list.entries[r].score, scores[order[r]], 1e-12);
        EXPECT_LE(years[order[r]], cutoff);
      }
    }
  }
}

TEST(SearchTest, SmallerKIsPrefixOfLarger) {
  std::mt19937_64 rng(3);
  const auto index = BuildIndex(PaperIds(200), RandomMatrix(rng, 200, 8),
                                std::vector<int>(200, 2020));
  const Vector q = RandomVector(rng, 8);
  const auto full = Ids(Search(index, q, 100, 2020));
  for (std::size_t k : {1u, 5u, 37u}) {
    const auto part = Ids(Search(index, q, k, 2020));
    EXPECT_TRUE(std::equal(part.begin(), part.end(), full.begin()));
  }
}

TEST(SearchTest, EqualScoresOrderedById) {
  const auto index = BuildIndex({"p10", "p2", "p1"}, Matrix::Ones(3, 2), {1, 1, 1});
  EXPECT_EQ(Ids(Search(index, Vector::Ones(2), 3, 1)),
            (std::vector<std::string>{"p1", "p10", "p2"}));
}

TEST(BatchSearchTest, MatchesPerQueryLoopForAnyWorkerCount) {
  std::mt19937_64 rng(4);
  std::vector<int> years(300);
  for (auto& y : years) y = 2010 + static_cast<int>(rng() % 10);
  const auto index = BuildIndex(PaperIds(300), RandomMatrix(rng, 300, 16), years);
  std::vector<SearchQuery> queries;
  for (int i = 0; i < 25; ++i) {
    queries.push_back({"t" + std::to_string(i), RandomVector(rng, 16), 2012 + i % 8});
  }
  std::vector<RankedList> loop;
  for (const auto& q : queries) loop.push_back(Search(index, q.vector, 20, q.cutoff_year,
                                                      TemporalMode::kInclusive, q.talk_id));
  for (std::size_t workers : {1u, 2u, 7u}) {
    EXPECT_EQ(BatchSearch(index, queries, 20, TemporalMode::kInclusive, workers), loop);
  }
  queries[3].cutoff_year = 1900;
  EXPECT_EQ(CodeOf([&] { BatchSearch(index, queries, 5, TemporalMode::kInclusive, 3); }),
            ErrorCode::kEmptyEligibleSet);
}

TEST(ResultsIoTest, RoundTripIsExact) {
  std::mt19937_64 rng(5);
  const auto index = BuildIndex(PaperIds(50), RandomMatrix(rng, 50, 4),
                                std::vector<int>(50, 2020));
  std::vector<RankedList> lists;
  for (int i = 0; i < 5; ++i) {
    lists.push_back(Search(index, RandomVector(rng, 4), 10, 2020, TemporalMode::kInclusive,
                           "t" + std::to_string(i)));
  }
  std::stringstream buf;
  WriteResults(lists, buf);
  EXPECT_EQ(ReadResults(buf, "results.jsonl"), lists);
}

TEST(ResultsIoTest, MalformedRejected) {
  std::istringstream missing(R"({"talk_id":"t"})" "\n");
  EXPECT_EQ(CodeOf([&] { ReadResults(missing, "r"); }), ErrorCode::kMalformedRecord);
  std::istringstream bad_score(R"({"talk_id":"t","ranking":[{"paper_id":"p","score":"x"}]})" "\n");
  EXPECT_EQ(CodeOf([&] { ReadResults(bad_score, "r"); }), ErrorCode::kMalformedRecord);
}

TEST(TemporalTest, ModesParseAndFilter) {
  for (auto m : {TemporalMode::kInclusive, TemporalMode::kStrict, TemporalMode::kNone}) {
    EXPECT_EQ(ParseTemporalMode(TemporalModeName(m)), m);
  }
  EXPECT_TRUE(Eligible(2020, 2020, TemporalMode::kInclusive));
  EXPECT_FALSE(Eligible(2020, 2020, TemporalMode::kStrict));
  EXPECT_TRUE(Eligible(2030, 2020, TemporalMode::kNone));
  EXPECT_EQ(CodeOf([] { ParseTemporalMode("future"); }), ErrorCode::kUsage);
}

}  // namespace
}  // namespace refrank
