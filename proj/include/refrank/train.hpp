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

#ifndef REFRANK_TRAIN_HPP_
#define REFRANK_TRAIN_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "refrank/aggregate.hpp"
#include "refrank/corpus.hpp"
#include "refrank/error.hpp"
#include "refrank/eval.hpp"
#include "refrank/model.hpp"
#include "refrank/retrieve.hpp"

namespace refrank {

// rows = talks, cols = batch candidates; entries are exactly 0 or 1.
using LabelMatrix = Matrix;

enum class Stage { kMain, kDomainAdapt };

inline Stage ParseStage(std::string_view name) {
  if (name == "main") return Stage::kMain;
  if (name == "adapt") return Stage::kDomainAdapt;
  throw Error(ErrorCode::kUsage, "stage must be main|adapt");
}

enum class LossKind { kBce, kSoftmaxDa };

enum class EarlyStopMetric { kDevLoss, kDevMap10 };

inline EarlyStopMetric ParseEarlyStopMetric(std::string_view name) {
  if (name == "dev_loss") return EarlyStopMetric::kDevLoss;
  if (name == "dev_map10") return EarlyStopMetric::kDevMap10;
  throw Error(ErrorCode::kUsage, "early_stop_metric must be dev_loss|dev_map10");
}

// Defaults follow the head-training column of the published configuration.
struct TrainConfig {
  std::size_t batch_size = 24;
  std::size_t grad_accumulation = 3;
  double lr_head = 2e-4;
  double weight_decay = 0.01;
  double adam_eps = 1e-8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::size_t max_epochs = 100;
  std::size_t early_stop_patience = 4;
  EarlyStopMetric early_stop_metric = EarlyStopMetric::kDevLoss;
  std::uint64_t seed = 0;

  void Validate() const {
    if (batch_size == 0 || grad_accumulation == 0) {
      throw Error(ErrorCode::kUsage, "batch_size and grad_accumulation must be >= 1");
    }
    if (!(lr_head > 0.0) || weight_decay < 0.0 || !(adam_eps > 0.0)) {
      throw Error(ErrorCode::kUsage, "lr_head and adam_eps must be > 0, weight_decay >= 0");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
      throw Error(ErrorCode::kUsage, "adam betas must lie in [0, 1)");
    }
    if (early_stop_patience == 0) {
      throw Error(ErrorCode::kUsage, "early_stop_patience must be >= 1");
    }
  }
};

// Candidate list and labels of one in-batch-negatives batch.
struct BatchLabels {
  std::vector<std::string> talk_ids;
  std::vector<std::string> candidate_ids;
  LabelMatrix labels;
};

// Candidates are the union of the talks' positives in first-seen order.
// label(i, j) = 1 whenever talk i cites candidate j, also when j entered the
// batch through another talk.
inline BatchLabels BuildLabels(const std::vector<std::string>& talk_ids,
                               const CitationSet& citations) {
  BatchLabels out;
  out.talk_ids = talk_ids;
  std::unordered_map<std::string, std::size_t> column;
  for (const auto& talk : talk_ids) {
    auto it = citations.find(talk);
    if (it == citations.end() || it->second.empty()) {
      throw Error(ErrorCode::kTalkWithoutPositives, talk);
    }
    for (const auto& pid : it->second) {
      if (column.emplace(pid, out.candidate_ids.size()).second) {
        out.candidate_ids.push_back(pid);
      }
    }
  }
  out.labels = LabelMatrix::Zero(static_cast<Eigen::Index>(talk_ids.size()),
                                 static_cast<Eigen::Index>(out.candidate_ids.size()));
  for (std::size_t i = 0; i < talk_ids.size(); ++i) {
    for (const auto& pid : citations.at(talk_ids[i])) {
      out.labels(static_cast<Eigen::Index>(i),
                 static_cast<Eigen::Index>(column.at(pid))) = 1.0;
    }
  }
  return out;
}

// Inputs of one loss evaluation: per-talk chunk embeddings and the
// candidate key rows.
struct TrainingBatch {
  std::vector<std::string> talk_ids;
  std::vector<std::string> candidate_ids;
  std::vector<ChunkMatrix> talk_chunks;
  Matrix candidate_keys;  // one row per candidate
};

// Frozen embeddings the heads are trained on.
struct EncodedTalk {
  std::string id;
  int year = 0;
  ChunkMatrix chunks;
};

struct EncodedTable {
  std::unordered_map<std::string, ChunkMatrix> talk_chunks;
  // Paper keys by paper id; own-abstract keys by "abstract:<talk id>".
  std::unordered_map<std::string, Vector> keys;

  const ChunkMatrix& Chunks(const std::string& talk_id) const {
    auto it = talk_chunks.find(talk_id);
    if (it == talk_chunks.end()) {
      throw Error(ErrorCode::kUnknownId, "no chunk embeddings for talk '" + talk_id + "'");
    }
    return it->second;
  }
  const Vector& Key(const std::string& id) const {
    auto it = keys.find(id);
    if (it == keys.end()) throw Error(ErrorCode::kUnknownId, "no key embedding for '" + id + "'");
    return it->second;
  }
};

inline std::string AbstractKeyId(std::string_view talk_id) {
  return "abstract:" + std::string(talk_id);
}

inline TrainingBatch AssembleBatch(const std::vector<std::string>& talk_ids,
                                   const std::vector<std::string>& candidate_ids,
                                   const EncodedTable& table) {
  TrainingBatch batch;
  batch.talk_ids = talk_ids;
  batch.candidate_ids = candidate_ids;
  for (const auto& t : talk_ids) batch.talk_chunks.push_back(table.Chunks(t));
  if (candidate_ids.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "batch without candidates");
  }
  const Vector& first = table.Key(candidate_ids.front());
  batch.candidate_keys.resize(static_cast<Eigen::Index>(candidate_ids.size()), first.size());
  for (std::size_t j = 0; j < candidate_ids.size(); ++j) {
    const Vector& k = table.Key(candidate_ids[j]);
    if (k.size() != first.size()) {
      throw Error(ErrorCode::kDimMismatch, "key '" + candidate_ids[j] + "'");
    }
    batch.candidate_keys.row(static_cast<Eigen::Index>(j)) = k.transpose();
  }
  return batch;
}

inline std::pair<TrainingBatch, LabelMatrix> BuildBatch(
    const std::vector<std::string>& talk_ids, const CitationSet& citations,
    const EncodedTable& table) {
  BatchLabels bl = BuildLabels(talk_ids, citations);
  return {AssembleBatch(talk_ids, bl.candidate_ids, table), std::move(bl.labels)};
}

// Square batch pairing every talk with its own abstract: gold(i) = i.
inline std::pair<TrainingBatch, LabelMatrix> BuildAdaptBatch(
    const std::vector<std::string>& talk_ids, const EncodedTable& table) {
  std::vector<std::string> candidates;
  for (const auto& t : talk_ids) {
    if (!table.keys.count(AbstractKeyId(t))) {
      throw Error(ErrorCode::kMissingField, t + ".abstract");
    }
    candidates.push_back(AbstractKeyId(t));
  }
  const auto n = static_cast<Eigen::Index>(talk_ids.size());
  return {AssembleBatch(talk_ids, candidates, table), LabelMatrix::Identity(n, n)};
}

namespace detail {

// log(1 + e^x) without overflow.
inline double Softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline void CheckScores(const Matrix& scores) {
  if (!scores.allFinite()) throw Error(ErrorCode::kNonFiniteScore, "score matrix");
}

}  // namespace detail

// Loss value plus its derivative with respect to every score.
struct ScoreLoss {
  double loss = 0.0;
  Matrix dscores;
};

// Sum over all (talk, candidate) pairs of
//   -[y log sigma(s) + (1 - y) log(1 - sigma(s))],
// written as y softplus(-s) + (1 - y) softplus(s). dL/ds = sigma(s) - y.
inline ScoreLoss BceLoss(const Matrix& scores, const LabelMatrix& labels) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "scores vs labels");
  }
  detail::CheckScores(scores);
  ScoreLoss out;
  out.dscores.resize(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      const double s = scores(i, j);
      const double y = labels(i, j);
      out.loss += y * detail::Softplus(-s) + (1.0 - y) * detail::Softplus(s);
      out.dscores(i, j) = detail::Sigmoid(s) - y;
    }
  }
  return out;
}

// Negative log-likelihood of the gold column of every row under a softmax
// over that row.
inline ScoreLoss SoftmaxNllLoss(const Matrix& scores,
                                const std::vector<std::size_t>& gold) {
  if (static_cast<std::size_t>(scores.rows()) != gold.size()) {
    throw Error(ErrorCode::kShapeMismatch, "scores vs gold rows");
  }
  detail::CheckScores(scores);
  ScoreLoss out;
  out.dscores.resize(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const auto g = static_cast<Eigen::Index>(gold[static_cast<std::size_t>(i)]);
    if (g >= scores.cols()) throw Error(ErrorCode::kShapeMismatch, "gold column");
    const double top = scores.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (scores.row(i).array() - top).exp().matrix();
    const double z = e.sum();
    out.loss += top + std::log(z) - scores(i, g);
    out.dscores.row(i) = e / z;
    out.dscores(i, g) -= 1.0;
  }
  return out;
}

// Gold column per row of a one-hot label matrix.
inline std::vector<std::size_t> GoldColumns(const LabelMatrix& labels) {
  std::vector<std::size_t> gold;
  for (Eigen::Index i = 0; i < labels.rows(); ++i) {
    Eigen::Index col = -1;
    for (Eigen::Index j = 0; j < labels.cols(); ++j) {
      if (labels(i, j) != 0.0) {
        if (col >= 0) throw Error(ErrorCode::kShapeMismatch, "row with two gold columns");
        col = j;
      }
    }
    if (col < 0) throw Error(ErrorCode::kShapeMismatch, "row without gold column");
    gold.push_back(static_cast<std::size_t>(col));
  }
  return gold;
}

struct BatchLoss {
  double loss = 0.0;
  std::size_t pairs = 0;
  Matrix scores;
  HeadGrads grads;
};

namespace detail {

inline Matrix ForwardBatch(const DualEncoderHeads& heads, const TrainingBatch& batch,
                           std::vector<QueryForward>& forwards) {
  if (static_cast<std::size_t>(batch.candidate_keys.cols()) != heads.key_dim) {
    throw Error(ErrorCode::kDimMismatch, "candidate key dim vs heads key dim");
  }
  forwards.clear();
  Matrix queries(static_cast<Eigen::Index>(batch.talk_chunks.size()),
                 static_cast<Eigen::Index>(heads.key_dim));
  for (std::size_t i = 0; i < batch.talk_chunks.size(); ++i) {
    forwards.push_back(ForwardQuery(batch.talk_chunks[i], heads));
    queries.row(static_cast<Eigen::Index>(i)) = forwards.back().query.transpose();
  }
  return queries * batch.candidate_keys.transpose();
}

}  // namespace detail

// Chains dL/dS through the dot products, the projection and the learned
// weighted mean.
inline HeadGrads BackpropScores(const DualEncoderHeads& heads,
                                const TrainingBatch& batch,
                                const std::vector<QueryForward>& forwards,
                                const Matrix& dscores) {
  HeadGrads grads = HeadGrads::ZerosLike(heads);
  for (std::size_t i = 0; i < forwards.size(); ++i) {
    const Vector dq =
        batch.candidate_keys.transpose() * dscores.row(static_cast<Eigen::Index>(i)).transpose();
    Vector da;
    if (heads.projection_enabled) {
      grads.projection.noalias() += dq * forwards[i].aggregate.embedding.transpose();
      if (heads.use_offset) grads.offset += dq;
      da = heads.projection.transpose() * dq;
    } else {
      da = dq;
    }
    if (heads.learned()) {
      const ScorerGrads sg = AggregateBackward(batch.talk_chunks[i], heads.scorer, da);
      grads.w += sg.w;
      grads.b += sg.b;
    }
  }
  return grads;
}

inline BatchLoss ComputeBatchLoss(const DualEncoderHeads& heads,
                                  const TrainingBatch& batch,
                                  const LabelMatrix& labels, LossKind kind,
                                  bool with_grads = true) {
  std::vector<QueryForward> forwards;
  BatchLoss out;
  out.scores = detail::ForwardBatch(heads, batch, forwards);
  ScoreLoss sl = kind == LossKind::kBce ? BceLoss(out.scores, labels)
                                        : SoftmaxNllLoss(out.scores, GoldColumns(labels));
  out.loss = sl.loss;
  out.pairs = kind == LossKind::kBce ? static_cast<std::size_t>(labels.size())
                                     : static_cast<std::size_t>(labels.rows());
  if (with_grads) {
    out.grads = BackpropScores(heads, batch, forwards, sl.dscores);
  } else {
    out.grads = HeadGrads::ZerosLike(heads);
  }
  return out;
}

struct OptimizerState {
  Vector m;
  Vector v;
  std::size_t step = 0;

  static OptimizerState For(const DualEncoderHeads& heads) {
    const auto n = static_cast<Eigen::Index>(ParameterCount(heads));
    return {Vector::Zero(n), Vector::Zero(n), 0};
  }
};

// Decoupled weight decay p <- p - lr * wd * p, then a bias-corrected Adam
// update.
inline void AdamStep(DualEncoderHeads& heads, const Vector& grad,
                     OptimizerState& state, const TrainConfig& cfg) {
  Vector params = FlattenParams(heads);
  if (grad.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient/optimizer state vs parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  params -= cfg.lr_head * cfg.weight_decay * params;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= cfg.lr_head * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
  }
  AssignParams(heads, params);
}

// Tracks the best epoch; ShouldStop once `patience` consecutive epochs
// failed to improve on it.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, bool higher_is_better)
      : patience_(patience), higher_is_better_(higher_is_better) {}

  // Returns true when `value` is a new best.
  bool Update(std::size_t epoch, double value) {
    const bool improved =
        !best_ || (higher_is_better_ ? value > *best_ : value < *best_);
    if (improved) {
      best_ = value;
      best_epoch_ = epoch;
      stale_ = 0;
    } else {
      ++stale_;
    }
    return improved;
  }

  bool ShouldStop() const { return stale_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  std::optional<double> best() const { return best_; }

 private:
  std::size_t patience_;
  bool higher_is_better_;
  std::optional<double> best_;
  std::size_t best_epoch_ = 0;
  std::size_t stale_ = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  std::optional<double> train_loss;  // mean per pair; absent for epoch 0
  double dev_loss = 0.0;             // mean per pair
  std::optional<double> dev_map10;

  nlohmann::ordered_json ToJson() const {
    nlohmann::ordered_json j;
    j["epoch"] = epoch;
    j["train_loss"] = train_loss ? nlohmann::ordered_json(*train_loss)
                                 : nlohmann::ordered_json(nullptr);
    j["dev_loss"] = dev_loss;
    j["dev_map10"] = dev_map10 ? nlohmann::ordered_json(*dev_map10)
                               : nlohmann::ordered_json(nullptr);
    return j;
  }
};

// Everything a training run reads. `index` enables dev MAP@10.
struct TrainingData {
  std::vector<EncodedTalk> train;
  std::vector<EncodedTalk> dev;
  const CitationSet* citations = nullptr;
  EncodedTable table;
  const PaperIndex* index = nullptr;
  TemporalMode temporal = TemporalMode::kInclusive;
};

struct TrainResult {
  DualEncoderHeads best;
  DualEncoderHeads last;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  bool early_stopped = false;
};

namespace detail {

inline std::vector<std::vector<std::string>> MakeBatches(
    const std::vector<std::string>& ids, std::size_t batch_size) {
  std::vector<std::vector<std::string>> batches;
  for (std::size_t i = 0; i < ids.size(); i += batch_size) {
    batches.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(i),
                         ids.begin() + static_cast<std::ptrdiff_t>(
                                           std::min(ids.size(), i + batch_size)));
  }
  return batches;
}

inline std::pair<TrainingBatch, LabelMatrix> StageBatch(
    Stage stage, const std::vector<std::string>& ids, const TrainingData& data) {
  return stage == Stage::kMain ? BuildBatch(ids, *data.citations, data.table)
                               : BuildAdaptBatch(ids, data.table);
}

inline std::vector<std::string> Ids(const std::vector<EncodedTalk>& talks) {
  std::vector<std::string> ids;
  for (const auto& t : talks) ids.push_back(t.id);
  return ids;
}

[[noreturn]] inline void NonFinite(std::size_t epoch, std::size_t batch,
                                   const std::vector<std::string>& ids,
                                   double loss) {
  std::ostringstream msg;
  msg << "loss " << loss << " at epoch " << epoch << ", batch " << batch
      << " (first talk '" << (ids.empty() ? std::string() : ids.front()) << "')";
  throw Error(ErrorCode::kNonFiniteLoss, msg.str());
}

}  // namespace detail

// Mean per-pair loss over `talks` in fixed batches.
inline double MeanLoss(const DualEncoderHeads& heads, const TrainingData& data,
                       const std::vector<EncodedTalk>& talks, Stage stage,
                       std::size_t batch_size) {
  double total = 0.0;
  std::size_t pairs = 0;
  const LossKind kind = stage == Stage::kMain ? LossKind::kBce : LossKind::kSoftmaxDa;
  for (const auto& ids : detail::MakeBatches(detail::Ids(talks), batch_size)) {
    auto [batch, labels] = detail::StageBatch(stage, ids, data);
    const BatchLoss bl = ComputeBatchLoss(heads, batch, labels, kind, false);
    total += bl.loss;
    pairs += bl.pairs;
  }
  return pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
}

// MAP@10 of exact retrieval for `talks` against their citation sets.
inline double RetrievalMap10(const DualEncoderHeads& heads, const PaperIndex& index,
                             const CitationSet& citations,
                             const std::vector<EncodedTalk>& talks,
                             TemporalMode temporal) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& t : talks) {
    auto it = citations.find(t.id);
    if (it == citations.end() || it->second.empty()) continue;
    const Vector q = ForwardQuery(t.chunks, heads).query;
    const RankedList list = Search(index, q, 10, t.year, temporal, t.id);
    sum += AveragePrecisionAtK(RankingIds(list), it->second, 10);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

// Epoch loop with in-batch negatives, gradient accumulation, dev evaluation
// after every epoch and early stopping. Epoch 0 is the untrained model.
inline TrainResult Train(const TrainingData& data, DualEncoderHeads heads,
                         const TrainConfig& cfg, Stage stage,
                         const std::function<void(const EpochLog&)>& on_epoch = {}) {
  cfg.Validate();
  if (data.train.empty()) throw Error(ErrorCode::kEmptySplit, "train");
  if (data.dev.empty()) throw Error(ErrorCode::kEmptySplit, "dev");
  if (stage == Stage::kMain && data.citations == nullptr) {
    throw Error(ErrorCode::kUsage, "main stage needs citations");
  }
  const LossKind kind = stage == Stage::kMain ? LossKind::kBce : LossKind::kSoftmaxDa;
  const bool use_map = cfg.early_stop_metric == EarlyStopMetric::kDevMap10;
  if (use_map && (data.index == nullptr || data.citations == nullptr)) {
    throw Error(ErrorCode::kUsage, "dev_map10 early stopping needs an index");
  }

  auto evaluate = [&](std::size_t epoch, std::optional<double> train_loss) {
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = train_loss;
    log.dev_loss = MeanLoss(heads, data, data.dev, stage, cfg.batch_size);
    if (data.index != nullptr && data.citations != nullptr) {
      log.dev_map10 =
          RetrievalMap10(heads, *data.index, *data.citations, data.dev, data.temporal);
    }
    if (!std::isfinite(log.dev_loss)) detail::NonFinite(epoch, 0, {}, log.dev_loss);
    return log;
  };

  TrainResult result;
  EarlyStopping stopper(cfg.early_stop_patience, use_map);
  auto record = [&](const EpochLog& log) {
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
    const double metric = use_map ? log.dev_map10.value_or(0.0) : log.dev_loss;
    if (stopper.Update(log.epoch, metric)) result.best = heads;
  };
  record(evaluate(0, std::nullopt));

  OptimizerState opt = OptimizerState::For(heads);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::string> order = detail::Ids(data.train);
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const auto batches = detail::MakeBatches(order, cfg.batch_size);
    Vector accumulated = Vector::Zero(static_cast<Eigen::Index>(ParameterCount(heads)));
    std::size_t pending = 0;
    double epoch_loss = 0.0;
    std::size_t epoch_pairs = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      auto [batch, labels] = detail::StageBatch(stage, batches[b], data);
      const BatchLoss bl = ComputeBatchLoss(heads, batch, labels, kind);
      if (!std::isfinite(bl.loss)) detail::NonFinite(epoch, b, batches[b], bl.loss);
      epoch_loss += bl.loss;
      epoch_pairs += bl.pairs;
      accumulated += FlattenGrads(heads, bl.grads);
      if (++pending == cfg.grad_accumulation || b + 1 == batches.size()) {
        if (accumulated.size() > 0) AdamStep(heads, accumulated, opt, cfg);
        accumulated.setZero();
        pending = 0;
      }
    }
    if (!AllFinite(heads)) {
      detail::NonFinite(epoch, batches.size(), {}, std::numeric_limits<double>::quiet_NaN());
    }
    record(evaluate(epoch, epoch_loss / static_cast<double>(epoch_pairs)));
    if (stopper.ShouldStop()) {
      result.early_stopped = true;
      break;
    }
  }
  result.best_epoch = stopper.best_epoch();
  result.last = heads;
  return result;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  Vector analytic_grads;
  Vector numeric_grads;
};

// Central differences of the batch loss for every trainable parameter,
// compared against the analytic gradient. Relative error is
// |analytic - numeric| / max(1e-8, |numeric|).
inline GradCheckResult FiniteDiffCheck(const DualEncoderHeads& heads,
                                       const TrainingBatch& batch,
                                       const LabelMatrix& labels, LossKind kind,
                                       double h = 1e-3) {
  GradCheckResult out;
  const BatchLoss base = ComputeBatchLoss(heads, batch, labels, kind);
  out.analytic_grads = FlattenGrads(heads, base.grads);
  const Vector params = FlattenParams(heads);
  out.numeric_grads = Vector::Zero(params.size());
  DualEncoderHeads probe = heads;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    Vector shifted = params;
    shifted[i] = params[i] + h;
    AssignParams(probe, shifted);
    const double plus = ComputeBatchLoss(probe, batch, labels, kind, false).loss;
    shifted[i] = params[i] - h;
    AssignParams(probe, shifted);
    const double minus = ComputeBatchLoss(probe, batch, labels, kind, false).loss;
    const double numeric = (plus - minus) / (2.0 * h);
    out.numeric_grads[i] = numeric;
    const double rel = std::abs(out.analytic_grads[i] - numeric) /
                       std::max(1e-8, std::abs(numeric));
    if (rel > out.max_rel_error || i == 0) {
      out.max_rel_error = std::max(out.max_rel_error, rel);
      out.worst_param = static_cast<std::size_t>(i);
      out.analytic = out.analytic_grads[i];
      out.numeric = numeric;
    }
  }
  return out;
}

}  // namespace refrank

#endif  // REFRANK_TRAIN_HPP_
