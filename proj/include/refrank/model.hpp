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

#ifndef REFRANK_MODEL_HPP_
#define REFRANK_MODEL_HPP_

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "refrank/aggregate.hpp"
#include "refrank/corpus.hpp"
#include "refrank/embed.hpp"
#include "refrank/error.hpp"
#include "refrank/textprep.hpp"

namespace refrank {

enum class ProjectionMode { kAuto, kOn, kOff };

inline ProjectionMode ParseProjectionMode(std::string_view name) {
  if (name == "auto") return ProjectionMode::kAuto;
  if (name == "on") return ProjectionMode::kOn;
  if (name == "off") return ProjectionMode::kOff;
  throw Error(ErrorCode::kUsage, "projection must be auto|on|off");
}

// Trainable query-side heads: the chunk scorer (learned weighted mean only)
// and the affine projection q = P a + p0 into the key space.
struct DualEncoderHeads {
  AggregationStrategy strategy = AggregationStrategy::kMeanPool;
  std::size_t query_dim = 0;
  std::size_t key_dim = 0;
  ScorerParams scorer;
  bool projection_enabled = false;
  bool use_offset = true;
  Matrix projection;  // key_dim x query_dim
  Vector offset;      // key_dim

  bool learned() const {
    return strategy == AggregationStrategy::kLearnedWeightedMean;
  }

  // Zero scorer, identity projection (identity block when rectangular) and
  // zero offset: the untrained learned mean equals mean pooling.
  static DualEncoderHeads Init(std::size_t query_dim, std::size_t key_dim,
                               AggregationStrategy strategy,
                               ProjectionMode mode = ProjectionMode::kAuto,
                               bool use_offset = true) {
    DualEncoderHeads h;
    h.strategy = strategy;
    h.query_dim = query_dim;
    h.key_dim = key_dim;
    h.scorer = ScorerParams::Zero(query_dim);
    h.use_offset = use_offset;
    switch (mode) {
      case ProjectionMode::kAuto: h.projection_enabled = query_dim != key_dim; break;
      case ProjectionMode::kOn: h.projection_enabled = true; break;
      case ProjectionMode::kOff:
        if (query_dim != key_dim) {
          throw Error(ErrorCode::kDimMismatch,
                      "projection disabled but query dim " +
                          std::to_string(query_dim) + " != key dim " +
                          std::to_string(key_dim));
        }
        h.projection_enabled = false;
        break;
    }
    h.projection = Matrix::Identity(static_cast<Eigen::Index>(key_dim),
                                    static_cast<Eigen::Index>(query_dim));
    h.offset = Vector::Zero(static_cast<Eigen::Index>(key_dim));
    return h;
  }

  std::optional<ScorerParams> ScorerIfLearned() const {
    if (learned()) return scorer;
    return std::nullopt;
  }
};

struct QueryForward {
  AggregateResult aggregate;
  Vector query;
};

inline QueryForward ForwardQuery(const ChunkMatrix& chunks,
                                 const DualEncoderHeads& heads) {
  if (static_cast<std::size_t>(chunks.cols()) != heads.query_dim) {
    throw Error(ErrorCode::kDimMismatch,
                "chunk dim " + std::to_string(chunks.cols()) + " vs query dim " +
                    std::to_string(heads.query_dim));
  }
  QueryForward fwd;
  fwd.aggregate = Aggregate(chunks, heads.strategy, heads.ScorerIfLearned());
  if (heads.projection_enabled) {
    fwd.query = heads.projection * fwd.aggregate.embedding;
    if (heads.use_offset) fwd.query += heads.offset;
  } else {
    fwd.query = fwd.aggregate.embedding;
  }
  return fwd;
}

// render -> tokenize -> chunk -> embed, one row per chunk.
template <Embedder E>
ChunkMatrix EmbedTalkChunks(const TalkRecord& talk, const TextConfig& cfg,
                            const E& embedder) {
  const auto tokens = Tokenize(RenderText(talk, cfg.query_template));
  return EmbedChunks(Chunk(tokens, cfg.chunk_size, cfg.chunk_overlap), embedder);
}

template <Embedder E>
Vector EncodeQuery(const TalkRecord& talk, const DualEncoderHeads& heads,
                   const TextConfig& cfg, const E& embedder) {
  return ForwardQuery(EmbedTalkChunks(talk, cfg, embedder), heads).query;
}

// Keys are embedded as one chunk; no aggregation and no projection.
template <Embedder E>
Vector EncodeKey(const PaperRecord& paper, const TextConfig& cfg,
                 const E& embedder) {
  return embedder.Embed(Tokenize(RenderText(paper, cfg.key_template)));
}

// Dot product with sequential double accumulation.
inline double Score(const Vector& q, const Vector& k) {
  if (q.size() != k.size()) {
    throw Error(ErrorCode::kDimMismatch, std::to_string(q.size()) + " vs " +
                                             std::to_string(k.size()));
  }
  double s = 0.0;
  for (Eigen::Index d = 0; d < q.size(); ++d) s += q[d] * k[d];
  return s;
}

// Rows of `queries` against rows of `keys`.
inline Matrix ScoreBatch(const Matrix& queries, const Matrix& keys) {
  if (queries.cols() != keys.cols()) {
    throw Error(ErrorCode::kDimMismatch, std::to_string(queries.cols()) +
                                             " vs " + std::to_string(keys.cols()));
  }
  Matrix scores(queries.rows(), keys.rows());
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    const Vector q = queries.row(i).transpose();
    for (Eigen::Index j = 0; j < keys.rows(); ++j) {
      scores(i, j) = Score(q, keys.row(j).transpose());
    }
  }
  return scores;
}

// Gradients in the same shapes as the trainable parameters.
struct HeadGrads {
  Vector w;
  double b = 0.0;
  Matrix projection;
  Vector offset;

  static HeadGrads ZerosLike(const DualEncoderHeads& h) {
    return {Vector::Zero(h.scorer.w.size()), 0.0,
            Matrix::Zero(h.projection.rows(), h.projection.cols()),
            Vector::Zero(h.offset.size())};
  }

  HeadGrads& operator+=(const HeadGrads& o) {
    w += o.w;
    b += o.b;
    projection += o.projection;
    offset += o.offset;
    return *this;
  }
};

// Trainable parameters flattened in the order w, b (learned mean only),
// P column-major, p0 (projection enabled; p0 only with the offset on).
inline std::size_t ParameterCount(const DualEncoderHeads& h) {
  std::size_t n = 0;
  if (h.learned()) n += static_cast<std::size_t>(h.scorer.w.size()) + 1;
  if (h.projection_enabled) {
    n += static_cast<std::size_t>(h.projection.size());
    if (h.use_offset) n += static_cast<std::size_t>(h.offset.size());
  }
  return n;
}

namespace detail {

// Heads may be const or mutable; `visit` receives (data, size, grad_selector).
template <typename Heads, typename Visit>
void VisitParams(Heads& h, Visit&& visit) {
  if (h.learned()) {
    visit(h.scorer.w.data(), static_cast<std::size_t>(h.scorer.w.size()),
          [](HeadGrads& g) { return g.w.data(); });
    visit(&h.scorer.b, std::size_t{1}, [](HeadGrads& g) { return &g.b; });
  }
  if (h.projection_enabled) {
    visit(h.projection.data(), static_cast<std::size_t>(h.projection.size()),
          [](HeadGrads& g) { return g.projection.data(); });
    if (h.use_offset) {
      visit(h.offset.data(), static_cast<std::size_t>(h.offset.size()),
            [](HeadGrads& g) { return g.offset.data(); });
    }
  }
}

}  // namespace detail

inline Vector FlattenParams(const DualEncoderHeads& h) {
  Vector flat(static_cast<Eigen::Index>(ParameterCount(h)));
  Eigen::Index pos = 0;
  detail::VisitParams(h, [&](const double* data, std::size_t n, auto) {
    for (std::size_t i = 0; i < n; ++i) flat[pos++] = data[i];
  });
  return flat;
}

inline void AssignParams(DualEncoderHeads& h, const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != ParameterCount(h)) {
    throw Error(ErrorCode::kShapeMismatch, "parameter vector size");
  }
  Eigen::Index pos = 0;
  detail::VisitParams(h, [&](double* data, std::size_t n, auto) {
    for (std::size_t i = 0; i < n; ++i) data[i] = flat[pos++];
  });
}

inline Vector FlattenGrads(const DualEncoderHeads& h, HeadGrads grads) {
  if (grads.w.size() != h.scorer.w.size() ||
      grads.projection.rows() != h.projection.rows() ||
      grads.projection.cols() != h.projection.cols() ||
      grads.offset.size() != h.offset.size()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient shapes do not match heads");
  }
  Vector flat(static_cast<Eigen::Index>(ParameterCount(h)));
  Eigen::Index pos = 0;
  detail::VisitParams(h, [&](const double*, std::size_t n, auto select) {
    const double* src = select(grads);
    for (std::size_t i = 0; i < n; ++i) flat[pos++] = src[i];
  });
  return flat;
}

inline bool AllFinite(const DualEncoderHeads& h) {
  return FlattenParams(h).allFinite();
}

// Checkpoint: one JSON header line, then the parameter vector as a single
// row in the embedding-store binary format.
inline void SaveCheckpoint(const DualEncoderHeads& h,
                           const std::filesystem::path& path,
                           const std::string& config_hash = "") {
  nlohmann::ordered_json header;
  header["format"] = "refrank-checkpoint";
  header["strategy"] = std::string(StrategyName(h.strategy));
  header["query_dim"] = h.query_dim;
  header["key_dim"] = h.key_dim;
  header["projection"] = h.projection_enabled;
  header["offset"] = h.use_offset;
  header["param_count"] = ParameterCount(h);
  header["config_hash"] = config_hash;
  const Vector flat = FlattenParams(h);
  std::vector<float> values(static_cast<std::size_t>(flat.size()));
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    values[static_cast<std::size_t>(i)] = static_cast<float>(flat[i]);
  }
  const std::size_t rows = values.empty() ? 0 : 1;
  const auto blob = EncodeMatrix(values.size(), rows, values);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size()));
}

struct Checkpoint {
  DualEncoderHeads heads;
  std::string config_hash;
};

inline Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  const auto bytes = detail::ReadAllBytes(path);
  const auto newline = std::find(bytes.begin(), bytes.end(), '\n');
  if (newline == bytes.end()) {
    throw Error(ErrorCode::kMalformedRecord, path.string() + ": no header");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin(), newline);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedRecord, path.string() + ": " + e.what());
  }
  if (header.value("format", "") != "refrank-checkpoint") {
    throw Error(ErrorCode::kFormatVersionMismatch, path.string());
  }
  Checkpoint ckpt;
  try {
    ckpt.heads = DualEncoderHeads::Init(
        header.at("query_dim").get<std::size_t>(),
        header.at("key_dim").get<std::size_t>(),
        ParseStrategy(header.at("strategy").get<std::string>()),
        header.at("projection").get<bool>() ? ProjectionMode::kOn
                                            : ProjectionMode::kOff,
        header.at("offset").get<bool>());
    ckpt.config_hash = header.value("config_hash", "");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRecord, path.string() + ": " + e.what());
  }
  const std::span<const unsigned char> blob(
      bytes.data() + (newline - bytes.begin()) + 1,
      static_cast<std::size_t>(bytes.end() - newline - 1));
  const DecodedMatrix m = DecodeMatrix(blob, path.string());
  if (m.values.size() != ParameterCount(ckpt.heads)) {
    throw Error(ErrorCode::kShapeMismatch,
                path.string() + ": parameter count does not match header");
  }
  Vector flat(static_cast<Eigen::Index>(m.values.size()));
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    flat[static_cast<Eigen::Index>(i)] = m.values[i];
  }
  AssignParams(ckpt.heads, flat);
  return ckpt;
}

}  // namespace refrank

#endif  // REFRANK_MODEL_HPP_
