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

#ifndef REFRANK_AGGREGATE_HPP_
#define REFRANK_AGGREGATE_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refrank/embed.hpp"
#include "refrank/error.hpp"

namespace refrank {

enum class AggregationStrategy {
  kTruncation,
  kMeanPool,
  kMaxPool,
  kLearnedWeightedMean,
};

inline std::string_view StrategyName(AggregationStrategy s) {
  switch (s) {
    case AggregationStrategy::kTruncation: return "truncation";
    case AggregationStrategy::kMeanPool: return "mean";
    case AggregationStrategy::kMaxPool: return "max";
    case AggregationStrategy::kLearnedWeightedMean: return "learned_mean";
  }
  return "?";
}

inline AggregationStrategy ParseStrategy(std::string_view name) {
  if (name == "truncation") return AggregationStrategy::kTruncation;
  if (name == "mean") return AggregationStrategy::kMeanPool;
  if (name == "max") return AggregationStrategy::kMaxPool;
  if (name == "learned_mean") return AggregationStrategy::kLearnedWeightedMean;
  throw Error(ErrorCode::kUsage, "unknown aggregation '" + std::string(name) +
                                     "' (truncation|mean|max|learned_mean)");
}

// Linear chunk scorer of the learned weighted mean: score_j = w . c_j + b.
// The bias is shared by every chunk, so it cancels inside the softmax and
// never affects the weights.
struct ScorerParams {
  Vector w;
  double b = 0.0;

  static ScorerParams Zero(std::size_t dim) {
    return {Vector::Zero(static_cast<Eigen::Index>(dim)), 0.0};
  }
};

struct AggregateResult {
  Vector embedding;
  // Softmax chunk weights; set only for the learned weighted mean.
  std::optional<std::vector<double>> weights;
};

namespace detail {

inline void CheckChunks(const ChunkMatrix& chunks) {
  if (chunks.rows() == 0) {
    throw Error(ErrorCode::kEmptyChunkList, "no chunk vectors");
  }
}

// Max-subtracted softmax over w . c_j. The bias is left out on purpose:
// adding it would only perturb rounding.
inline Vector ChunkSoftmax(const ChunkMatrix& chunks, const ScorerParams& params) {
  if (params.w.size() != chunks.cols()) {
    throw Error(ErrorCode::kDimMismatch,
                "scorer dim " + std::to_string(params.w.size()) +
                    " vs chunk dim " + std::to_string(chunks.cols()));
  }
  Vector scores = chunks * params.w;
  const double top = scores.maxCoeff();
  Vector weights = (scores.array() - top).exp().matrix();
  weights /= weights.sum();
  return weights;
}

}  // namespace detail

// Raw scorer outputs w . c_j + b, one per chunk.
inline Vector ChunkScores(const ChunkMatrix& chunks, const ScorerParams& params) {
  detail::CheckChunks(chunks);
  if (params.w.size() != chunks.cols()) {
    throw Error(ErrorCode::kDimMismatch, "scorer/chunk dim");
  }
  return (chunks * params.w).array() + params.b;
}

inline AggregateResult Aggregate(
    const ChunkMatrix& chunks, AggregationStrategy strategy,
    const std::optional<ScorerParams>& params = std::nullopt) {
  detail::CheckChunks(chunks);
  const bool learned = strategy == AggregationStrategy::kLearnedWeightedMean;
  if (learned && !params) {
    throw Error(ErrorCode::kMissingParams, "learned_mean needs scorer params");
  }
  if (!learned && params) {
    throw Error(ErrorCode::kUsage, "scorer params given for " +
                                       std::string(StrategyName(strategy)));
  }
  AggregateResult result;
  switch (strategy) {
    case AggregationStrategy::kTruncation:
      result.embedding = chunks.row(0).transpose();
      break;
    case AggregationStrategy::kMeanPool:
      result.embedding = chunks.colwise().mean().transpose();
      break;
    case AggregationStrategy::kMaxPool:
      result.embedding = chunks.colwise().maxCoeff().transpose();
      break;
    case AggregationStrategy::kLearnedWeightedMean: {
      const Vector weights = detail::ChunkSoftmax(chunks, *params);
      result.embedding = chunks.transpose() * weights;
      result.weights.emplace(weights.data(), weights.data() + weights.size());
      break;
    }
  }
  return result;
}

struct ScorerGrads {
  Vector w;
  double b = 0.0;
};

// Gradient of a loss through the learned weighted mean, given
// upstream = dL/d(aggregated vector). Chunk vectors are constants.
//
// With a = sum_j alpha_j c_j and alpha = softmax(s):
//   dL/ds_j = alpha_j (g . c_j - g . a),  dL/dw = sum_j dL/ds_j c_j,
// and dL/db = sum_j dL/ds_j, which is zero for every input.
inline ScorerGrads AggregateBackward(const ChunkMatrix& chunks,
                                     const ScorerParams& params,
                                     const Vector& upstream) {
  detail::CheckChunks(chunks);
  if (upstream.size() != chunks.cols()) {
    throw Error(ErrorCode::kDimMismatch,
                "upstream dim " + std::to_string(upstream.size()) +
                    " vs chunk dim " + std::to_string(chunks.cols()));
  }
  const Vector weights = detail::ChunkSoftmax(chunks, params);
  const Vector projected = chunks * upstream;  // g . c_j
  const double mean = weights.dot(projected);  // g . a
  const Vector dscores = weights.cwiseProduct(projected.array().matrix() -
                                              Vector::Constant(weights.size(), mean));
  return {chunks.transpose() * dscores, 0.0};
}

}  // namespace refrank

#endif  // REFRANK_AGGREGATE_HPP_
