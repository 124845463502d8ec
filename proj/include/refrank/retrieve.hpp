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

#ifndef REFRANK_RETRIEVE_HPP_
#define REFRANK_RETRIEVE_HPP_

#include <algorithm>
#include <cstddef>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "refrank/corpus.hpp"
#include "refrank/embed.hpp"
#include "refrank/error.hpp"

namespace refrank {

// kInclusive admits papers from the talk's own year; kStrict only earlier
// years; kNone disables the filter.
enum class TemporalMode { kInclusive, kStrict, kNone };

inline TemporalMode ParseTemporalMode(std::string_view name) {
  if (name == "inclusive") return TemporalMode::kInclusive;
  if (name == "strict") return TemporalMode::kStrict;
  if (name == "none") return TemporalMode::kNone;
  throw Error(ErrorCode::kUsage, "temporal mode must be inclusive|strict|none");
}

inline std::string_view TemporalModeName(TemporalMode m) {
  switch (m) {
    case TemporalMode::kInclusive: return "inclusive";
    case TemporalMode::kStrict: return "strict";
    case TemporalMode::kNone: return "none";
  }
  return "?";
}

inline bool Eligible(int paper_year, int cutoff_year, TemporalMode mode) {
  switch (mode) {
    case TemporalMode::kInclusive: return paper_year <= cutoff_year;
    case TemporalMode::kStrict: return paper_year < cutoff_year;
    case TemporalMode::kNone: return true;
  }
  return true;
}

// Exact inner-product index over key embeddings. Immutable once built.
class PaperIndex {
 public:
  PaperIndex(std::vector<std::string> ids, const Matrix& keys,
             std::vector<int> years)
      : ids_(std::move(ids)), years_(std::move(years)) {
    if (ids_.empty()) throw Error(ErrorCode::kEmptyIndex, "no papers");
    if (static_cast<std::size_t>(keys.rows()) != ids_.size() ||
        years_.size() != ids_.size()) {
      throw Error(ErrorCode::kDimMismatch,
                  "ids/keys/years counts differ: " + std::to_string(ids_.size()) +
                      "/" + std::to_string(keys.rows()) + "/" +
                      std::to_string(years_.size()));
    }
    dim_ = static_cast<std::size_t>(keys.cols());
    keys_.resize(ids_.size() * dim_);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      for (std::size_t d = 0; d < dim_; ++d) {
        keys_[i * dim_ + d] =
            keys(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d));
      }
      if (!lookup_.emplace(ids_[i], i).second) {
        throw Error(ErrorCode::kDuplicateId, ids_[i]);
      }
    }
    std::vector<std::size_t> order(ids_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ids_[a] < ids_[b]; });
    id_rank_.resize(ids_.size());
    for (std::size_t r = 0; r < order.size(); ++r) id_rank_[order[r]] = r;
  }

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<int>& years() const { return years_; }
  std::size_t id_rank(std::size_t row) const { return id_rank_[row]; }

  std::optional<std::size_t> Find(std::string_view id) const {
    auto it = lookup_.find(std::string(id));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  // Sequential dot product of `q` with row `row`.
  double ScoreRow(const Vector& q, std::size_t row) const {
    const double* k = keys_.data() + row * dim_;
    double s = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) s += q[static_cast<Eigen::Index>(d)] * k[d];
    return s;
  }

  Vector Key(std::size_t row) const {
    return Eigen::Map<const Vector>(keys_.data() + row * dim_,
                                    static_cast<Eigen::Index>(dim_));
  }

 private:
  std::vector<std::string> ids_;
  std::vector<int> years_;
  std::vector<double> keys_;  // row-major
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> lookup_;
  std::vector<std::size_t> id_rank_;
};

inline PaperIndex BuildIndex(std::vector<std::string> ids, const Matrix& keys,
                             std::vector<int> years) {
  return PaperIndex(std::move(ids), keys, std::move(years));
}

struct RankedEntry {
  std::string paper_id;
  double score = 0.0;

  bool operator==(const RankedEntry&) const = default;
};

struct RankedList {
  std::string talk_id;
  std::size_t k = 0;
  std::vector<RankedEntry> entries;

  bool operator==(const RankedList&) const = default;
};

// Top-k eligible papers by descending score; ties go to the smaller id.
inline RankedList Search(const PaperIndex& index, const Vector& query,
                         std::size_t k, int cutoff_year,
                         TemporalMode mode = TemporalMode::kInclusive,
                         std::string talk_id = {}) {
  if (k == 0) throw Error(ErrorCode::kUsage, "k must be >= 1");
  if (static_cast<std::size_t>(query.size()) != index.dim()) {
    throw Error(ErrorCode::kDimMismatch,
                "query dim " + std::to_string(query.size()) + " vs index dim " +
                    std::to_string(index.dim()));
  }
  struct Candidate {
    double score;
    std::size_t row;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(index.size());
  for (std::size_t row = 0; row < index.size(); ++row) {
    if (!Eligible(index.years()[row], cutoff_year, mode)) continue;
    candidates.push_back({index.ScoreRow(query, row), row});
  }
  if (candidates.empty()) {
    throw Error(ErrorCode::kEmptyEligibleSet,
                "no paper eligible for cutoff year " + std::to_string(cutoff_year));
  }
  const auto better = [&](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return index.id_rank(a.row) < index.id_rank(b.row);
  };
  const std::size_t n = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(),
                    candidates.begin() + static_cast<std::ptrdiff_t>(n),
                    candidates.end(), better);
  RankedList out;
  out.talk_id = std::move(talk_id);
  out.k = k;
  out.entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.entries.push_back({index.ids()[candidates[i].row], candidates[i].score});
  }
  return out;
}

struct SearchQuery {
  std::string talk_id;
  Vector vector;
  int cutoff_year = 0;
};

// Same as calling Search per query; `workers` > 1 splits the queries over
// threads.
inline std::vector<RankedList> BatchSearch(const PaperIndex& index,
                                           const std::vector<SearchQuery>& queries,
                                           std::size_t k,
                                           TemporalMode mode = TemporalMode::kInclusive,
                                           std::size_t workers = 1) {
  std::vector<RankedList> out(queries.size());
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = Search(index, queries[i].vector, k, queries[i].cutoff_year, mode,
                      queries[i].talk_id);
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, queries.size()));
  if (workers == 1) {
    run(0, queries.size());
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> threads;
    const std::size_t per = (queries.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * per;
      const std::size_t end = std::min(queries.size(), begin + per);
      threads.emplace_back([&, w, begin, end] {
        try {
          run(begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

inline void WriteResults(const std::vector<RankedList>& lists, std::ostream& out) {
  for (const auto& list : lists) {
    nlohmann::ordered_json obj;
    obj["talk_id"] = list.talk_id;
    auto ranking = nlohmann::ordered_json::array();
    for (const auto& e : list.entries) {
      nlohmann::ordered_json item;
      item["paper_id"] = e.paper_id;
      item["score"] = e.score;
      ranking.push_back(std::move(item));
    }
    obj["ranking"] = std::move(ranking);
    out << obj.dump() << '\n';
  }
}

inline std::vector<RankedList> ReadResults(std::istream& in,
                                           const std::string& source) {
  std::vector<RankedList> lists;
  detail::ForEachJsonLine(in, source, [&](const nlohmann::json& obj,
                                          std::size_t line) {
    RankedList list;
    list.talk_id = detail::RequireString(obj, "talk_id", source, line);
    const auto& ranking = detail::RequireField(obj, "ranking", source, line);
    if (!ranking.is_array()) detail::Malformed(source, line, "'ranking' is not a list");
    for (const auto& item : ranking) {
      if (!item.is_object()) detail::Malformed(source, line, "bad ranking entry");
      RankedEntry e;
      e.paper_id = detail::RequireString(item, "paper_id", source, line);
      const auto& score = detail::RequireField(item, "score", source, line);
      if (!score.is_number()) detail::Malformed(source, line, "'score' not numeric");
      e.score = score.get<double>();
      list.entries.push_back(std::move(e));
    }
    list.k = list.entries.size();
    lists.push_back(std::move(list));
  });
  return lists;
}

}  // namespace refrank

#endif  // REFRANK_RETRIEVE_HPP_
