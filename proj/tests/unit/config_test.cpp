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

#include <sstream>

#include "refrank/config.hpp"
#include "test_util.hpp"

namespace refrank {
namespace {

using testing::CodeOf;

RunConfig Parse(const std::string& text) {
  std::istringstream in(text);
  return ParseRunConfig(in, "test.ini");
}

TEST(ConfigTest, EmptyFileGivesDefaults) {
  const RunConfig cfg = Parse("");
  EXPECT_EQ(cfg.ToJson(), RunConfig{}.ToJson());
  EXPECT_EQ(cfg.text.chunk_size, 512u);
  EXPECT_EQ(cfg.embedder.dim, 384u);
  EXPECT_EQ(cfg.train.batch_size, 24u);
  EXPECT_EQ(cfg.train.grad_accumulation, 3u);
  EXPECT_DOUBLE_EQ(cfg.train.lr_head, 2e-4);
  EXPECT_EQ(cfg.aggregation, AggregationStrategy::kLearnedWeightedMean);
  EXPECT_EQ(cfg.temporal, TemporalMode::kInclusive);
}

TEST(ConfigTest, ShippedDefaultFileMatchesBuiltInDefaults) {
  const RunConfig file = LoadRunConfig(std::filesystem::path(REFRANK_CONFIG_DIR) / "default.ini");
  EXPECT_EQ(file.Hash(), RunConfig{}.Hash());
  EXPECT_EQ(file.text.query_template.separator, ". ");
}

TEST(ConfigTest, ParsesEverySection) {
  const RunConfig cfg = Parse(R"(
[paths]
corpus = /data/c
out = /tmp/o
[textprep]
query_template = transcript
separator = " | "
chunk_size = 128
chunk_overlap = 16
[embedder]
dim = 1024
seed = 3
[model]
aggregation = max
projection = on
projection_offset = false
[train]
batch_size = 8
lr_head = 0.01
early_stop_metric = dev_map10
[retrieve]
k = 50
temporal = strict
[eval]
ks = 5, 10
filter_gold_by_year = true
baseline_splits = train,dev
[run]
seed = 9
workers = 2
)");
  EXPECT_EQ(cfg.corpus_dir, "/data/c");
  EXPECT_EQ(cfg.EmbeddingsDir(), std::filesystem::path("/tmp/o/embeddings"));
  EXPECT_EQ(cfg.text.query_template.ToString(), "transcript");
  EXPECT_EQ(cfg.text.key_template.separator, " | ");
  EXPECT_EQ(cfg.text.chunk_overlap, 16u);
  EXPECT_EQ(cfg.embedder.dim, 1024u);
  EXPECT_EQ(cfg.aggregation, AggregationStrategy::kMaxPool);
  EXPECT_EQ(cfg.projection, ProjectionMode::kOn);
  EXPECT_FALSE(cfg.projection_offset);
  EXPECT_EQ(cfg.train.batch_size, 8u);
  EXPECT_EQ(cfg.train.early_stop_metric, EarlyStopMetric::kDevMap10);
  EXPECT_EQ(cfg.train.seed, 9u);
  EXPECT_EQ(cfg.retrieve_k, 50u);
  EXPECT_EQ(cfg.temporal, TemporalMode::kStrict);
  EXPECT_EQ(cfg.eval_ks, (std::vector<std::size_t>{5, 10}));
  EXPECT_TRUE(cfg.filter_gold_by_year);
  EXPECT_EQ(cfg.baseline_splits, (std::vector<Split>{Split::kTrain, Split::kDev}));
  EXPECT_EQ(cfg.workers, 2u);
}

TEST(ConfigTest, TrainSeedOverridesRunSeed) {
  EXPECT_EQ(Parse("[run]\nseed = 4\n[train]\nseed = 11\n").train.seed, 11u);
}

TEST(ConfigTest, InvalidInputsAreUsageErrors) {
  for (const std::string text : {
           "[train]\nlearning_rate = 1\n",
           "[nowhere]\nx = 1\n",
           "[train]\nbatch_size = -3\n",
           "[train]\nbatch_size = 0\n",
           "[train]\nlr_head = fast\n",
           "[model]\naggregation = attention\n",
           "[textprep]\nchunk_size = 4\nchunk_overlap = 4\n",
           "[retrieve]\nk = 0\n",
           "[eval]\nks = 10,0\n",
           "[model]\nprojection_offset = maybe\n",
           "[embedder]\ndim = 1\n",
           "[section\n",
       }) {
    EXPECT_EQ(CodeOf([&] { Parse(text); }), ErrorCode::kUsage) << text;
  }
}

TEST(ConfigTest, HashIgnoresPathsButTracksSettings) {
  const auto a = Parse("[paths]\nout = /a\n");
  const auto b = Parse("[paths]\nout = /b\n");
  const auto c = Parse("[embedder]\ndim = 512\n");
  EXPECT_EQ(a.Hash(), b.Hash());
  EXPECT_NE(a.Hash(), c.Hash());
  EXPECT_EQ(a.Hash().size(), 8u);
}

TEST(ConfigTest, RelativePathsResolveAgainstFileDirectory) {
  testing::TempDir dir;
  std::filesystem::create_directories(dir / "cfg");
  testing::WriteFile(dir / "cfg" / "run.ini", "[paths]\ncorpus = ../data\nout = /abs/out\n");
  const auto cfg = LoadRunConfig(dir / "cfg" / "run.ini");
  EXPECT_EQ(std::filesystem::path(cfg.corpus_dir), (dir / "data").lexically_normal());
  EXPECT_EQ(cfg.out_dir, "/abs/out");
  EXPECT_EQ(CodeOf([&] { LoadRunConfig(dir / "missing.ini"); }), ErrorCode::kUsage);
}

}  // namespace
}  // namespace refrank
