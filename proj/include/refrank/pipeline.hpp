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

#ifndef REFRANK_PIPELINE_HPP_
#define REFRANK_PIPELINE_HPP_

#include <chrono>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "refrank/config.hpp"
#include "refrank/corpus.hpp"
#include "refrank/embed.hpp"
#include "refrank/error.hpp"
#include "refrank/eval.hpp"
#include "refrank/model.hpp"
#include "refrank/retrieve.hpp"
#include "refrank/textprep.hpp"
#include "refrank/train.hpp"

namespace refrank {

inline constexpr const char* kQueryStoreFile = "queries.rfrk";
inline constexpr const char* kKeyStoreFile = "keys.rfrk";

// Row id of chunk `j` of a talk in a query store.
inline std::string ChunkRowId(std::string_view talk_id, std::size_t j) {
  return std::string(talk_id) + "#" + std::to_string(j);
}

// Runs fn(i) for i in [0, n) over `workers` threads. The first exception
// thrown by any worker is rethrown.
inline void ParallelFor(std::size_t n, std::size_t workers,
                        const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct EmbeddedCorpus {
  EmbeddingStore queries;  // chunk rows "<talk>#<j>"
  EmbeddingStore keys;     // paper rows, plus "abstract:<talk>" rows
};

inline nlohmann::ordered_json EmbedderMetadata(const RunConfig& cfg,
                                               std::string_view role) {
  const auto& tmpl = role == "query" ? cfg.text.query_template : cfg.text.key_template;
  nlohmann::ordered_json meta;
  meta["role"] = role;
  meta["embedder"] = EmbedderKindName(cfg.embedder.kind);
  meta["dim"] = cfg.embedder.dim;
  meta["seed"] = cfg.embedder.seed;
  meta["template"] = tmpl.ToString();
  meta["separator"] = tmpl.separator;
  if (role == "query") {
    meta["chunk_size"] = cfg.text.chunk_size;
    meta["chunk_overlap"] = cfg.text.chunk_overlap;
  }
  return meta;
}

// Embeds every talk (chunked) and every paper with the reference hash
// embedder. Talks with an abstract also get an "abstract:<talk>" key row.
inline EmbeddedCorpus EmbedCorpus(const Corpus& corpus, const RunConfig& cfg) {
  const HashEmbedder embedder(cfg.embedder.dim, cfg.embedder.seed);
  const auto& talks = corpus.talks();
  const auto& papers = corpus.papers();
  std::vector<ChunkMatrix> talk_chunks(talks.size());
  std::vector<Vector> abstract_keys(talks.size());
  std::vector<Vector> paper_keys(papers.size());
  ParallelFor(talks.size(), cfg.workers, [&](std::size_t i) {
    talk_chunks[i] = EmbedTalkChunks(talks[i], cfg.text, embedder);
    if (!detail::IsBlank(talks[i].abstract)) {
      abstract_keys[i] =
          embedder.Embed(Tokenize(RenderText(talks[i], cfg.text.key_template)));
    }
  });
  ParallelFor(papers.size(), cfg.workers, [&](std::size_t i) {
    paper_keys[i] = EncodeKey(papers[i], cfg.text, embedder);
  });
  EmbeddedCorpus out{EmbeddingStore(cfg.embedder.dim), EmbeddingStore(cfg.embedder.dim)};
  out.queries.metadata() = EmbedderMetadata(cfg, "query");
  out.keys.metadata() = EmbedderMetadata(cfg, "key");
  for (std::size_t i = 0; i < talks.size(); ++i) {
    for (Eigen::Index j = 0; j < talk_chunks[i].rows(); ++j) {
      out.queries.Append(ChunkRowId(talks[i].id, static_cast<std::size_t>(j)),
                         Vector(talk_chunks[i].row(j).transpose()));
    }
  }
  for (std::size_t i = 0; i < papers.size(); ++i) {
    out.keys.Append(papers[i].id, paper_keys[i]);
  }
  for (std::size_t i = 0; i < talks.size(); ++i) {
    if (abstract_keys[i].size() > 0) out.keys.Append(AbstractKeyId(talks[i].id), abstract_keys[i]);
  }
  return out;
}

inline void SaveEmbeddedCorpus(const EmbeddedCorpus& e, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SaveStore(e.queries, dir / kQueryStoreFile);
  SaveStore(e.keys, dir / kKeyStoreFile);
}

// Stores for `cfg`: the external files when configured, otherwise the
// embeddings directory when it matches the current settings, otherwise a
// fresh in-memory embedding.
inline EmbeddedCorpus ObtainEmbeddings(const Corpus& corpus, const RunConfig& cfg) {
  if (cfg.embedder.kind == EmbedderKind::kExternalFile) {
    return {LoadStore(cfg.embedder.query_store), LoadStore(cfg.embedder.key_store)};
  }
  const auto dir = cfg.EmbeddingsDir();
  const auto qpath = dir / kQueryStoreFile;
  const auto kpath = dir / kKeyStoreFile;
  if (std::filesystem::exists(qpath) && std::filesystem::exists(kpath)) {
    EmbeddedCorpus e{LoadStore(qpath), LoadStore(kpath)};
    if (e.queries.metadata() == EmbedderMetadata(cfg, "query") &&
        e.keys.metadata() == EmbedderMetadata(cfg, "key")) {
      return e;
    }
    throw Error(ErrorCode::kUsage, "embeddings in " + dir.string() +
                                       " were built with other settings; rerun embed");
  }
  return EmbedCorpus(corpus, cfg);
}

// Frozen chunk and key embeddings in the layout the trainer consumes.
inline EncodedTable TableFromStores(const Corpus& corpus, const EmbeddedCorpus& e) {
  EncodedTable table;
  for (const auto& talk : corpus.talks()) {
    std::vector<Vector> rows;
    for (std::size_t j = 0;; ++j) {
      auto row = e.queries.Find(ChunkRowId(talk.id, j));
      if (!row) break;
      rows.push_back(e.queries.RowVector(*row));
    }
    if (rows.empty()) {
      throw Error(ErrorCode::kUnknownId, "no chunk rows for talk '" + talk.id + "'");
    }
    ChunkMatrix m(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(e.queries.dim()));
    for (std::size_t j = 0; j < rows.size(); ++j) {
      m.row(static_cast<Eigen::Index>(j)) = rows[j].transpose();
    }
    table.talk_chunks.emplace(talk.id, std::move(m));
  }
  for (std::size_t i = 0; i < e.keys.size(); ++i) {
    table.keys.emplace(e.keys.ids()[i], e.keys.RowVector(i));
  }
  return table;
}

// Index over every paper of the collection, in collection order.
inline PaperIndex IndexFromTable(const Corpus& corpus, const EncodedTable& table) {
  const auto& papers = corpus.papers();
  if (papers.empty()) throw Error(ErrorCode::kEmptyIndex, "no papers");
  std::vector<std::string> ids;
  std::vector<int> years;
  const auto dim = table.Key(papers.front().id).size();
  Matrix keys(static_cast<Eigen::Index>(papers.size()), dim);
  for (std::size_t i = 0; i < papers.size(); ++i) {
    const Vector& k = table.Key(papers[i].id);
    if (k.size() != dim) throw Error(ErrorCode::kDimMismatch, "key dims differ");
    keys.row(static_cast<Eigen::Index>(i)) = k.transpose();
    ids.push_back(papers[i].id);
    years.push_back(papers[i].year);
  }
  return BuildIndex(std::move(ids), keys, std::move(years));
}

inline std::vector<EncodedTalk> EncodeTalks(const std::vector<const TalkRecord*>& talks,
                                            const EncodedTable& table) {
  std::vector<EncodedTalk> out;
  out.reserve(talks.size());
  for (const TalkRecord* t : talks) out.push_back({t->id, t->year, table.Chunks(t->id)});
  return out;
}

inline std::size_t QueryDim(const EncodedTable& table) {
  if (table.talk_chunks.empty()) throw Error(ErrorCode::kEmptyInput, "no talk embeddings");
  return static_cast<std::size_t>(table.talk_chunks.begin()->second.cols());
}

inline std::size_t KeyDim(const EncodedTable& table) {
  if (table.keys.empty()) throw Error(ErrorCode::kEmptyInput, "no key embeddings");
  return static_cast<std::size_t>(table.keys.begin()->second.size());
}

inline DualEncoderHeads InitHeads(const EncodedTable& table, const RunConfig& cfg) {
  return DualEncoderHeads::Init(QueryDim(table), KeyDim(table), cfg.aggregation,
                                cfg.projection, cfg.projection_offset);
}

// Ranks the collection for each talk with the given heads.
inline std::vector<RankedList> RetrieveTalks(const DualEncoderHeads& heads,
                                             const PaperIndex& index,
                                             const std::vector<EncodedTalk>& talks,
                                             std::size_t k, TemporalMode mode,
                                             std::size_t workers) {
  std::vector<SearchQuery> queries(talks.size());
  ParallelFor(talks.size(), workers, [&](std::size_t i) {
    queries[i] = {talks[i].id, ForwardQuery(talks[i].chunks, heads).query, talks[i].year};
  });
  return BatchSearch(index, queries, k, mode, workers);
}

inline std::string UtcTimestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string FileCrc32(const std::filesystem::path& path) {
  const auto bytes = detail::ReadAllBytes(path);
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", Crc32(bytes));
  return buf;
}

// Reproducibility record written to <out>/manifest.json before any other
// artifact of a command.
struct RunManifest {
  std::string command;
  std::optional<RunConfig> config;
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> inputs;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  nlohmann::ordered_json ToJson(std::chrono::system_clock::time_point started) const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["seed"] = seed;
    j["started_at"] = UtcTimestamp(started);
    if (config) {
      j["config"] = config->ToJson();
      j["config_hash"] = config->Hash();
    }
    auto files = nlohmann::ordered_json::array();
    for (const auto& p : inputs) {
      if (!std::filesystem::is_regular_file(p)) continue;
      files.push_back({{"path", p.string()}, {"crc32", FileCrc32(p)}});
    }
    j["inputs"] = std::move(files);
    for (const auto& [k, v] : extra.items()) j[k] = v;
    return j;
  }

  void Write(const std::filesystem::path& out_dir) const {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir / "manifest.json", std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write manifest in " + out_dir.string());
    out << ToJson(std::chrono::system_clock::now()).dump(2) << '\n';
  }
};

inline std::vector<std::filesystem::path> CorpusFiles(const std::filesystem::path& dir) {
  return {dir / "talks.jsonl", dir / "papers.jsonl", dir / "citations.jsonl",
          dir / "splits.jsonl"};
}

}  // namespace refrank

#endif  // REFRANK_PIPELINE_HPP_
