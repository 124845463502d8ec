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

#ifndef REFRANK_CONFIG_HPP_
#define REFRANK_CONFIG_HPP_

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "refrank/aggregate.hpp"
#include "refrank/embed.hpp"
#include "refrank/error.hpp"
#include "refrank/model.hpp"
#include "refrank/retrieve.hpp"
#include "refrank/textprep.hpp"
#include "refrank/train.hpp"

namespace refrank {

inline constexpr std::string_view kVersion = "0.3.0";

// Run configuration. The file is INI-style: `[section]` headers and
// `key = value` lines, `;` or `#` comments. Every key is optional; an empty
// file yields the defaults below. Values may be wrapped in double quotes to
// keep leading or trailing spaces (e.g. separator = ". ").
//
//   [paths]     corpus, out, embeddings, init_checkpoint
//   [textprep]  query_template, key_template, separator, chunk_size,
//               chunk_overlap
//   [embedder]  kind (reference-hash|external-file), dim, seed,
//               query_store, key_store
//   [model]     aggregation (truncation|mean|max|learned_mean),
//               projection (auto|on|off), projection_offset
//   [train]     batch_size, grad_accumulation, lr_head, weight_decay,
//               adam_eps, adam_beta1, adam_beta2, max_epochs,
//               early_stop_patience, early_stop_metric (dev_loss|dev_map10)
//   [retrieve]  k, temporal (inclusive|strict|none)
//   [eval]      ks, filter_gold_by_year, baseline_splits
//   [run]       seed, workers
struct RunConfig {
  std::string corpus_dir;
  std::string out_dir = "out";
  std::string embeddings_dir;  // defaults to <out>/embeddings
  std::string init_checkpoint;

  TextConfig text;
  EmbedderSpec embedder;
  AggregationStrategy aggregation = AggregationStrategy::kLearnedWeightedMean;
  ProjectionMode projection = ProjectionMode::kAuto;
  bool projection_offset = true;
  TrainConfig train;

  std::size_t retrieve_k = 200;
  TemporalMode temporal = TemporalMode::kInclusive;

  std::vector<std::size_t> eval_ks = {10, 20, 50, 100, 200};
  bool filter_gold_by_year = false;
  std::vector<Split> baseline_splits = {Split::kTrain};

  std::uint64_t seed = 0;
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());

  std::filesystem::path EmbeddingsDir() const {
    return embeddings_dir.empty() ? std::filesystem::path(out_dir) / "embeddings"
                                  : std::filesystem::path(embeddings_dir);
  }

  nlohmann::ordered_json ToJson() const {
    nlohmann::ordered_json j;
    j["paths"] = {{"corpus", corpus_dir},
                  {"out", out_dir},
                  {"embeddings", EmbeddingsDir().string()},
                  {"init_checkpoint", init_checkpoint}};
    j["textprep"] = {{"query_template", text.query_template.ToString()},
                     {"key_template", text.key_template.ToString()},
                     {"separator", text.query_template.separator},
                     {"chunk_size", text.chunk_size},
                     {"chunk_overlap", text.chunk_overlap}};
    j["embedder"] = {{"kind", std::string(EmbedderKindName(embedder.kind))},
                     {"dim", embedder.dim},
                     {"seed", embedder.seed},
                     {"query_store", embedder.query_store},
                     {"key_store", embedder.key_store}};
    j["model"] = {{"aggregation", std::string(StrategyName(aggregation))},
                  {"projection", projection == ProjectionMode::kAuto ? "auto"
                                 : projection == ProjectionMode::kOn ? "on"
                                                                     : "off"},
                  {"projection_offset", projection_offset}};
    j["train"] = {{"batch_size", train.batch_size},
                  {"grad_accumulation", train.grad_accumulation},
                  {"lr_head", train.lr_head},
                  {"weight_decay", train.weight_decay},
                  {"adam_eps", train.adam_eps},
                  {"adam_beta1", train.beta1},
                  {"adam_beta2", train.beta2},
                  {"max_epochs", train.max_epochs},
                  {"early_stop_patience", train.early_stop_patience},
                  {"early_stop_metric", train.early_stop_metric == EarlyStopMetric::kDevLoss
                                            ? "dev_loss"
                                            : "dev_map10"}};
    j["retrieve"] = {{"k", retrieve_k},
                     {"temporal", std::string(TemporalModeName(temporal))}};
    std::vector<std::string> splits;
    for (Split s : baseline_splits) splits.emplace_back(SplitName(s));
    j["eval"] = {{"ks", eval_ks},
                 {"filter_gold_by_year", filter_gold_by_year},
                 {"baseline_splits", splits}};
    j["run"] = {{"seed", seed}};
    return j;
  }

  // CRC32 of the canonical JSON form without paths, as 8 hex digits.
  std::string Hash() const {
    auto settings = ToJson();
    settings.erase("paths");
    const std::string text_form = settings.dump();
    const auto crc = Crc32(std::span<const unsigned char>(
        reinterpret_cast<const unsigned char*>(text_form.data()), text_form.size()));
    std::ostringstream out;
    out << std::hex;
    out.width(8);
    out.fill('0');
    out << crc;
    return out.str();
  }
};

namespace config_detail {

inline std::string Unquote(std::string v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

inline std::uint64_t ToUnsigned(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    const auto out = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kUsage, "config key '" + key + "' needs a nonnegative integer, got '" + v + "'");
  }
}

inline double ToDouble(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kUsage, "config key '" + key + "' needs a number, got '" + v + "'");
  }
}

inline bool ToBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::kUsage, "config key '" + key + "' needs true|false, got '" + v + "'");
}

inline std::vector<std::string> SplitList(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace config_detail

// Parses a comma-separated list of positive cutoffs, e.g. "10,20,50".
inline std::vector<std::size_t> ParseCutoffs(const std::string& key, const std::string& v) {
  std::vector<std::size_t> ks;
  for (const auto& item : config_detail::SplitList(v)) {
    const auto k = config_detail::ToUnsigned(key, item);
    if (k == 0) throw Error(ErrorCode::kUsage, "cutoffs must be >= 1");
    ks.push_back(static_cast<std::size_t>(k));
  }
  if (ks.empty()) throw Error(ErrorCode::kUsage, "empty cutoff list for '" + key + "'");
  return ks;
}

inline RunConfig ParseRunConfig(std::istream& in, const std::string& source = "config") {
  namespace pt = boost::property_tree;
  using namespace config_detail;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::kUsage, source + ": " + e.what());
  }
  RunConfig cfg;
  std::string separator = cfg.text.query_template.separator;
  std::string query_template = cfg.text.query_template.ToString();
  std::string key_template = cfg.text.key_template.ToString();
  bool train_seed_set = false;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw Error(ErrorCode::kUsage, source + ": key '" + section + "' outside a section");
    }
    for (const auto& [name, node] : body) {
      const std::string key = section + "." + name;
      const std::string v = Unquote(node.data());
      if (key == "paths.corpus") cfg.corpus_dir = v;
      else if (key == "paths.out") cfg.out_dir = v;
      else if (key == "paths.embeddings") cfg.embeddings_dir = v;
      else if (key == "paths.init_checkpoint") cfg.init_checkpoint = v;
      else if (key == "textprep.query_template") query_template = v;
      else if (key == "textprep.key_template") key_template = v;
      else if (key == "textprep.separator") separator = v;
      else if (key == "textprep.chunk_size") cfg.text.chunk_size = ToUnsigned(key, v);
      else if (key == "textprep.chunk_overlap") cfg.text.chunk_overlap = ToUnsigned(key, v);
      else if (key == "embedder.kind") cfg.embedder.kind = ParseEmbedderKind(v);
      else if (key == "embedder.dim") cfg.embedder.dim = ToUnsigned(key, v);
      else if (key == "embedder.seed") cfg.embedder.seed = ToUnsigned(key, v);
      else if (key == "embedder.query_store") cfg.embedder.query_store = v;
      else if (key == "embedder.key_store") cfg.embedder.key_store = v;
      else if (key == "model.aggregation") cfg.aggregation = ParseStrategy(v);
      else if (key == "model.projection") cfg.projection = ParseProjectionMode(v);
      else if (key == "model.projection_offset") cfg.projection_offset = ToBool(key, v);
      else if (key == "train.batch_size") cfg.train.batch_size = ToUnsigned(key, v);
      else if (key == "train.grad_accumulation") cfg.train.grad_accumulation = ToUnsigned(key, v);
      else if (key == "train.lr_head") cfg.train.lr_head = ToDouble(key, v);
      else if (key == "train.weight_decay") cfg.train.weight_decay = ToDouble(key, v);
      else if (key == "train.adam_eps") cfg.train.adam_eps = ToDouble(key, v);
      else if (key == "train.adam_beta1") cfg.train.beta1 = ToDouble(key, v);
      else if (key == "train.adam_beta2") cfg.train.beta2 = ToDouble(key, v);
      else if (key == "train.max_epochs") cfg.train.max_epochs = ToUnsigned(key, v);
      else if (key == "train.early_stop_patience") cfg.train.early_stop_patience = ToUnsigned(key, v);
      else if (key == "train.early_stop_metric") cfg.train.early_stop_metric = ParseEarlyStopMetric(v);
      else if (key == "train.seed") {
        cfg.train.seed = ToUnsigned(key, v);
        train_seed_set = true;
      }
      else if (key == "retrieve.k") cfg.retrieve_k = ToUnsigned(key, v);
      else if (key == "retrieve.temporal") cfg.temporal = ParseTemporalMode(v);
      else if (key == "eval.ks") cfg.eval_ks = ParseCutoffs(key, v);
      else if (key == "eval.filter_gold_by_year") cfg.filter_gold_by_year = ToBool(key, v);
      else if (key == "eval.baseline_splits") {
        cfg.baseline_splits.clear();
        for (const auto& s : SplitList(v)) cfg.baseline_splits.push_back(ParseSplit(s));
      }
      else if (key == "run.seed") cfg.seed = ToUnsigned(key, v);
      else if (key == "run.workers") cfg.workers = std::max<std::size_t>(1, ToUnsigned(key, v));
      else throw Error(ErrorCode::kUsage, source + ": unknown config key '" + key + "'");
    }
  }
  cfg.text.query_template = ParseTemplate(query_template, separator);
  cfg.text.key_template = ParseTemplate(key_template, separator);
  if (!train_seed_set) cfg.train.seed = cfg.seed;
  cfg.embedder.Validate();
  cfg.train.Validate();
  if (cfg.text.chunk_size == 0 || cfg.text.chunk_overlap >= cfg.text.chunk_size) {
    throw Error(ErrorCode::kUsage, "need chunk_size >= 1 and chunk_overlap < chunk_size");
  }
  if (cfg.retrieve_k == 0) throw Error(ErrorCode::kUsage, "retrieve.k must be >= 1");
  return cfg;
}

inline RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kUsage, "cannot open config " + path.string());
  RunConfig cfg = ParseRunConfig(in, path.string());
  // Relative paths in the file resolve against the file's directory.
  const auto base = path.parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  resolve(cfg.corpus_dir);
  resolve(cfg.out_dir);
  resolve(cfg.embeddings_dir);
  resolve(cfg.init_checkpoint);
  resolve(cfg.embedder.query_store);
  resolve(cfg.embedder.key_store);
  return cfg;
}

}  // namespace refrank

#endif  // REFRANK_CONFIG_HPP_
