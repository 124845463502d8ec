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

#ifndef REFRANK_EVAL_HPP_
#define REFRANK_EVAL_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "refrank/corpus.hpp"
#include "refrank/error.hpp"
#include "refrank/retrieve.hpp"

namespace refrank {

using GoldSet = std::set<std::string>;
using RelevanceJudgments = std::map<std::string, GoldSet>;

namespace detail {

inline void CheckCutoff(std::size_t k, const GoldSet& gold) {
  if (k == 0) throw Error(ErrorCode::kUsage, "cutoff k must be >= 1");
  if (gold.empty()) throw Error(ErrorCode::kEmptyGold, "empty gold set");
}

// Gold papers among the first k results, each counted once.
inline std::size_t HitsAtK(std::span<const std::string> ranking,
                           const GoldSet& gold, std::size_t k) {
  std::unordered_set<std::string_view> seen;
  std::size_t hits = 0;
  const std::size_t n = std::min(k, ranking.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (gold.count(ranking[i]) && seen.insert(ranking[i]).second) ++hits;
  }
  return hits;
}

}  // namespace detail

inline std::vector<std::string> RankingIds(const RankedList& list) {
  std::vector<std::string> ids;
  ids.reserve(list.entries.size());
  for (const auto& e : list.entries) ids.push_back(e.paper_id);
  return ids;
}

// |top-k ∩ gold| / k; the denominator stays k for short rankings.
inline double PrecisionAtK(std::span<const std::string> ranking,
                           const GoldSet& gold, std::size_t k) {
  detail::CheckCutoff(k, gold);
  return static_cast<double>(detail::HitsAtK(ranking, gold, k)) /
         static_cast<double>(k);
}

inline double RecallAtK(std::span<const std::string> ranking,
                        const GoldSet& gold, std::size_t k) {
  detail::CheckCutoff(k, gold);
  return static_cast<double>(detail::HitsAtK(ranking, gold, k)) /
         static_cast<double>(gold.size());
}

// AP@k = (1 / min(k, |gold|)) * sum_{i<=k} P@i * rel(i).
inline double AveragePrecisionAtK(std::span<const std::string> ranking,
                                  const GoldSet& gold, std::size_t k) {
  detail::CheckCutoff(k, gold);
  std::unordered_set<std::string_view> seen;
  double sum = 0.0;
  std::size_t hits = 0;
  const std::size_t n = std::min(k, ranking.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (gold.count(ranking[i]) && seen.insert(ranking[i]).second) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(std::min(k, gold.size()));
}

inline double MapAtK(const std::vector<std::vector<std::string>>& rankings,
                     const std::vector<GoldSet>& golds, std::size_t k) {
  if (rankings.size() != golds.size()) {
    throw Error(ErrorCode::kShapeMismatch, "rankings and gold sets differ in count");
  }
  if (rankings.empty()) throw Error(ErrorCode::kEmptyInput, "no queries");
  double sum = 0.0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    sum += AveragePrecisionAtK(rankings[q], golds[q], k);
  }
  return sum / static_cast<double>(rankings.size());
}

// Precision at a cutoff equal to the number of gold papers. This is how the
// uncut "Prec." column is computed.
inline double RPrecision(std::span<const std::string> ranking, const GoldSet& gold) {
  if (gold.empty()) throw Error(ErrorCode::kEmptyGold, "empty gold set");
  return PrecisionAtK(ranking, gold, gold.size());
}

struct PaperCount {
  std::string paper_id;
  std::size_t count = 0;
};

// Papers cited by `talk_ids`, most cited first, ties by ascending id.
inline std::vector<PaperCount> FrequencyRanking(
    const CitationSet& citations, const std::vector<std::string>& talk_ids) {
  std::map<std::string, std::size_t> counts;
  for (const auto& talk : talk_ids) {
    auto it = citations.find(talk);
    if (it == citations.end()) continue;
    for (const auto& pid : it->second) ++counts[pid];
  }
  if (counts.empty()) throw Error(ErrorCode::kEmptyInput, "no training citations");
  std::vector<PaperCount> ranked;
  ranked.reserve(counts.size());
  for (auto& [id, n] : counts) ranked.push_back({id, n});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const PaperCount& a, const PaperCount& b) {
                     return a.count > b.count;
                   });
  return ranked;
}

inline std::vector<std::string> FrequencyBaseline(
    const CitationSet& citations, const std::vector<std::string>& talk_ids,
    std::size_t k) {
  const auto ranked = FrequencyRanking(citations, talk_ids);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
    ids.push_back(ranked[i].paper_id);
  }
  return ids;
}

// Serves the global frequency ranking to each talk after its temporal
// filter; scores are citation counts.
inline std::vector<RankedList> FrequencyBaselineRun(
    const Corpus& corpus, const std::vector<PaperCount>& ranking,
    const std::vector<const TalkRecord*>& talks, std::size_t k,
    TemporalMode mode = TemporalMode::kInclusive) {
  std::vector<RankedList> run;
  for (const TalkRecord* talk : talks) {
    RankedList list;
    list.talk_id = talk->id;
    list.k = k;
    for (const auto& pc : ranking) {
      if (list.entries.size() >= k) break;
      if (!Eligible(corpus.Paper(pc.paper_id).year, talk->year, mode)) continue;
      list.entries.push_back({pc.paper_id, static_cast<double>(pc.count)});
    }
    run.push_back(std::move(list));
  }
  return run;
}

// Gold sets for `talks`. With `filter_by_year` the gold set keeps only
// papers the temporal filter admits; talks left without gold are dropped.
inline RelevanceJudgments BuildJudgments(
    const Corpus& corpus, const std::vector<const TalkRecord*>& talks,
    bool filter_by_year = false, TemporalMode mode = TemporalMode::kInclusive) {
  RelevanceJudgments judgments;
  for (const TalkRecord* talk : talks) {
    GoldSet gold;
    for (const auto& pid : corpus.CitedBy(talk->id)) {
      if (!filter_by_year || Eligible(corpus.Paper(pid).year, talk->year, mode)) {
        gold.insert(pid);
      }
    }
    if (!gold.empty()) judgments.emplace(talk->id, std::move(gold));
  }
  return judgments;
}

inline RelevanceJudgments JudgmentsFromCitations(const CitationSet& citations) {
  return RelevanceJudgments(citations.begin(), citations.end());
}

// Columns: "Prec." (R-precision), then P@k, R@k and MAP@k per cutoff.
struct MetricsReport {
  std::size_t query_count = 0;
  std::vector<std::size_t> ks;
  std::vector<std::string> columns;
  std::map<std::string, double> macro;
  std::vector<std::pair<std::string, std::map<std::string, double>>> per_query;
};

inline std::vector<std::string> MetricColumns(const std::vector<std::size_t>& ks) {
  std::vector<std::string> cols{"Prec."};
  for (auto k : ks) cols.push_back("P@" + std::to_string(k));
  for (auto k : ks) cols.push_back("R@" + std::to_string(k));
  for (auto k : ks) cols.push_back("MAP@" + std::to_string(k));
  return cols;
}

inline std::map<std::string, double> QueryMetrics(
    std::span<const std::string> ranking, const GoldSet& gold,
    const std::vector<std::size_t>& ks) {
  std::map<std::string, double> m;
  m["Prec."] = RPrecision(ranking, gold);
  for (auto k : ks) {
    const std::string suffix = std::to_string(k);
    m["P@" + suffix] = PrecisionAtK(ranking, gold, k);
    m["R@" + suffix] = RecallAtK(ranking, gold, k);
    m["MAP@" + suffix] = AveragePrecisionAtK(ranking, gold, k);
  }
  return m;
}

inline MetricsReport EvaluateRun(const std::vector<RankedList>& results,
                                 const RelevanceJudgments& judgments,
                                 const std::vector<std::size_t>& ks) {
  if (results.empty()) throw Error(ErrorCode::kEmptyInput, "empty run");
  MetricsReport report;
  report.ks = ks;
  report.columns = MetricColumns(ks);
  for (const auto& col : report.columns) report.macro[col] = 0.0;
  for (const auto& list : results) {
    auto it = judgments.find(list.talk_id);
    if (it == judgments.end()) {
      throw Error(ErrorCode::kMissingJudgment, list.talk_id);
    }
    auto m = QueryMetrics(RankingIds(list), it->second, ks);
    for (const auto& [col, v] : m) report.macro[col] += v;
    report.per_query.emplace_back(list.talk_id, std::move(m));
  }
  report.query_count = results.size();
  for (auto& [col, v] : report.macro) v /= static_cast<double>(results.size());
  return report;
}

inline double RoundPercent(double fraction) {
  return std::round(fraction * 10000.0) / 100.0;
}

inline nlohmann::ordered_json ReportToJson(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["query_count"] = report.query_count;
  j["precision_definition"] = "R-precision (P@|gold|)";
  nlohmann::ordered_json pct = nlohmann::ordered_json::object();
  nlohmann::ordered_json raw = nlohmann::ordered_json::object();
  for (const auto& col : report.columns) {
    pct[col] = RoundPercent(report.macro.at(col));
    raw[col] = report.macro.at(col);
  }
  j["metrics"] = std::move(pct);
  j["fractions"] = std::move(raw);
  return j;
}

}  // namespace refrank

#endif  // REFRANK_EVAL_HPP_
