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

#include <atomic>

#include "refrank/pipeline.hpp"
#include "refrank/synth.hpp"
#include "test_util.hpp"

namespace refrank {
namespace {

using testing::CodeOf;
using testing::TempDir;

RunConfig SmallConfig(const TempDir& dir) {
  RunConfig cfg;
  cfg.out_dir = (dir / "out").string();
  cfg.embedder.dim = 256;
  cfg.text.chunk_size = 128;
  cfg.workers = 1;
  return cfg;
}

Corpus SmallCorpus() {
  return GenerateSyntheticCorpus({.talks = 12, .papers = 40, .seed = 1,
                                  .min_transcript_words = 300, .max_transcript_words = 400});
}

TEST(ParallelForTest, VisitsEveryIndexOnceAndPropagatesErrors) {
  for (std::size_t workers : {1u, 3u, 16u}) {
    std::vector<std::atomic<int>> hits(50);
    ParallelFor(50, workers, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  EXPECT_EQ(CodeOf([] {
              ParallelFor(10, 4, [](std::size_t i) {
                if (i == 7) throw Error(ErrorCode::kUnknownId, "x");
              });
            }),
            ErrorCode::kUnknownId);
}

TEST(EmbedCorpusTest, RowsAndWorkerIndependence) {
  TempDir dir;
  const Corpus corpus = SmallCorpus();
  auto cfg = SmallConfig(dir);
  const auto one = EmbedCorpus(corpus, cfg);
  cfg.workers = 4;
  const auto four = EmbedCorpus(corpus, cfg);
  EXPECT_TRUE(one.queries == four.queries);
  EXPECT_TRUE(one.keys == four.keys);
  // Every paper plus one abstract key per talk.
  EXPECT_EQ(one.keys.size(), corpus.papers().size() + corpus.talks().size());
  const auto& talk = corpus.talks().front();
  const HashEmbedder e(256, 0);
  const ChunkMatrix chunks = EmbedTalkChunks(talk, cfg.text, e);
  // Stores keep float32 rows.
  for (Eigen::Index j = 0; j < chunks.rows(); ++j) {
    EXPECT_EQ(one.queries.Lookup(ChunkRowId(talk.id, static_cast<std::size_t>(j))),
              Vector(chunks.row(j).transpose().cast<float>().cast<double>()));
  }
}

TEST(EmbedCorpusTest, TableAndIndexFromStores) {
  TempDir dir;
  const Corpus corpus = SmallCorpus();
  const auto cfg = SmallConfig(dir);
  const auto table = TableFromStores(corpus, EmbedCorpus(corpus, cfg));
  EXPECT_EQ(table.talk_chunks.size(), corpus.talks().size());
  EXPECT_EQ(QueryDim(table), 256u);
  EXPECT_EQ(KeyDim(table), 256u);
  const auto index = IndexFromTable(corpus, table);
  EXPECT_EQ(index.size(), corpus.papers().size());
  EXPECT_EQ(index.ids().front(), corpus.papers().front().id);
  const auto heads = InitHeads(table, cfg);
  EXPECT_FALSE(heads.projection_enabled);
  EXPECT_EQ(heads.strategy, AggregationStrategy::kLearnedWeightedMean);
}

TEST(ObtainEmbeddingsTest, ReusesMatchingStoresAndRejectsStaleOnes) {
  TempDir dir;
  const Corpus corpus = SmallCorpus();
  auto cfg = SmallConfig(dir);
  const auto fresh = EmbedCorpus(corpus, cfg);
  SaveEmbeddedCorpus(fresh, cfg.EmbeddingsDir());
  const auto loaded = ObtainEmbeddings(corpus, cfg);
  EXPECT_EQ(loaded.queries.size(), fresh.queries.size());
  EXPECT_EQ(loaded.keys.ids(), fresh.keys.ids());
  cfg.embedder.dim = 128;
  EXPECT_EQ(CodeOf([&] { ObtainEmbeddings(corpus, cfg); }), ErrorCode::kUsage);
  cfg.embedder.kind = EmbedderKind::kExternalFile;
  cfg.embedder.query_store = (cfg.EmbeddingsDir() / kQueryStoreFile).string();
  cfg.embedder.key_store = (cfg.EmbeddingsDir() / kKeyStoreFile).string();
  EXPECT_EQ(ObtainEmbeddings(corpus, cfg).keys.size(), fresh.keys.size());
}

TEST(RetrieveTalksTest, MatchesDirectSearch) {
  TempDir dir;
  const Corpus corpus = SmallCorpus();
  const auto cfg = SmallConfig(dir);
  const auto table = TableFromStores(corpus, EmbedCorpus(corpus, cfg));
  const auto index = IndexFromTable(corpus, table);
  const auto heads = InitHeads(table, cfg);
  const auto talks = EncodeTalks(FilterSplit(corpus, Split::kTest).talks, table);
  const auto run = RetrieveTalks(heads, index, talks, 10, TemporalMode::kInclusive, 3);
  ASSERT_EQ(run.size(), talks.size());
  for (std::size_t i = 0; i < talks.size(); ++i) {
    const Vector q = ForwardQuery(talks[i].chunks, heads).query;
    EXPECT_EQ(run[i], Search(index, q, 10, talks[i].year, TemporalMode::kInclusive, talks[i].id));
  }
}

TEST(ManifestTest, RecordsConfigHashAndInputChecksums) {
  TempDir dir;
  testing::WriteFile(dir / "in.txt", "123456789");
  RunManifest m;
  m.command = "embed";
  m.config = RunConfig{};
  m.seed = 4;
  m.inputs = {dir / "in.txt", dir / "absent.txt"};
  m.Write(dir / "out");
  const auto j = nlohmann::json::parse(testing::ReadFile(dir / "out" / "manifest.json"));
  EXPECT_EQ(j["command"], "embed");
  EXPECT_EQ(j["version"], std::string(kVersion));
  EXPECT_EQ(j["config_hash"], RunConfig{}.Hash());
  ASSERT_EQ(j["inputs"].size(), 1u);
  EXPECT_EQ(j["inputs"][0]["crc32"], "cbf43926");
  EXPECT_EQ(UtcTimestamp(std::chrono::system_clock::time_point{}), "1970-01-01T00:00:00Z");
}

}  // namespace
}  // namespace refrank
