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

#ifndef REFRANK_GRADCHECK_HPP_
#define REFRANK_GRADCHECK_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "refrank/model.hpp"
#include "refrank/train.hpp"

namespace refrank {

struct GradCheckSetup {
  DualEncoderHeads heads;
  TrainingBatch batch;
  LabelMatrix labels;
};

struct GradCheckShape {
  std::size_t talks = 3;
  std::size_t max_chunks = 8;
  std::size_t query_dim = 8;
  std::size_t key_dim = 6;
  std::size_t papers = 6;
};

// Random learned-mean heads with a projection, random chunk matrices and a
// random citation graph (bce) or one abstract per talk (softmax).
inline GradCheckSetup RandomGradCheckSetup(std::uint64_t seed, LossKind kind,
                                           const GradCheckShape& shape = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> chunk_count(1, shape.max_chunks);
  auto gaussian = [&](Eigen::Index rows, Eigen::Index cols, double scale) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * normal(rng);
    }
    return m;
  };
  const auto qd = static_cast<Eigen::Index>(shape.query_dim);
  const auto kd = static_cast<Eigen::Index>(shape.key_dim);

  GradCheckSetup s;
  s.heads = DualEncoderHeads::Init(shape.query_dim, shape.key_dim,
                                   AggregationStrategy::kLearnedWeightedMean,
                                   ProjectionMode::kOn, true);
  s.heads.scorer.w = gaussian(qd, 1, 0.7).col(0);
  s.heads.scorer.b = normal(rng);
  s.heads.projection += gaussian(kd, qd, 0.3);
  s.heads.offset = gaussian(kd, 1, 0.2).col(0);

  for (std::size_t t = 0; t < shape.talks; ++t) {
    s.batch.talk_ids.push_back("t" + std::to_string(t));
    s.batch.talk_chunks.push_back(
        gaussian(static_cast<Eigen::Index>(chunk_count(rng)), qd, 0.6));
  }
  if (kind == LossKind::kBce) {
    CitationSet citations;
    std::bernoulli_distribution cite(0.35);
    for (std::size_t t = 0; t < shape.talks; ++t) {
      auto& cited = citations[s.batch.talk_ids[t]];
      for (std::size_t p = 0; p < shape.papers; ++p) {
        if (cite(rng)) cited.insert("p" + std::to_string(p));
      }
      if (cited.empty()) cited.insert("p" + std::to_string(t % shape.papers));
    }
    BatchLabels bl = BuildLabels(s.batch.talk_ids, citations);
    s.batch.candidate_ids = bl.candidate_ids;
    s.labels = bl.labels;
  } else {
    for (const auto& t : s.batch.talk_ids) s.batch.candidate_ids.push_back(AbstractKeyId(t));
    s.labels = LabelMatrix::Identity(static_cast<Eigen::Index>(shape.talks),
                                     static_cast<Eigen::Index>(shape.talks));
  }
  s.batch.candidate_keys =
      gaussian(static_cast<Eigen::Index>(s.batch.candidate_ids.size()), kd, 0.6);
  return s;
}

inline GradCheckResult RunGradCheck(std::uint64_t seed, LossKind kind,
                                    const GradCheckShape& shape = {}, double h = 1e-3) {
  const GradCheckSetup s = RandomGradCheckSetup(seed, kind, shape);
  return FiniteDiffCheck(s.heads, s.batch, s.labels, kind, h);
}

}  // namespace refrank

#endif  // REFRANK_GRADCHECK_HPP_
