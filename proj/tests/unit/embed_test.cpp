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

#include <algorithm>
#include <random>

#include "refrank/embed.hpp"
#include "test_util.hpp"

namespace refrank {
namespace {

using testing::CodeOf;
using testing::TempDir;

TEST(HashEmbedderTest, DeterministicAndNormalized) {
  const HashEmbedder e(384, 7);
  const auto a = EmbedText("the talk cites dense retrieval work", e);
  const auto b = EmbedText("the talk cites dense retrieval work", e);
  EXPECT_EQ(a, b);
  EXPECT_NEAR(a.norm(), 1.0, 1e-6);
  EXPECT_NEAR(a.dot(a), 1.0, 1e-12);
}

TEST(HashEmbedderTest, EmptyTextIsZero) {
  const HashEmbedder e(16, 0);
  const auto v = EmbedText("", e);
  EXPECT_EQ(v.size(), 16);
  EXPECT_TRUE(v.isZero(0.0));
}

TEST(HashEmbedderTest, BagOfTokensIgnoresOrder) {
  const HashEmbedder e(64, 3);
  TokenSequence tokens{"alpha", "beta", "gamma", "beta", "delta"};
  const auto base = e.Embed(tokens);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(tokens.begin(), tokens.end(), rng);
    EXPECT_EQ(e.Embed(tokens), base);
  }
}

TEST(HashEmbedderTest, MatchesCountOracle) {
  // Each token adds +-1 to its bucket; the result is the normalized count
  // vector.
  const std::size_t dim = 32;
  const std::uint64_t seed = 9;
  const TokenSequence tokens{"a", "a", "b", "c", "a"};
  Vector counts = Vector::Zero(dim);
  for (const auto& t : tokens) {
    const auto h = detail::HashToken(t, seed);
    counts[static_cast<Eigen::Index>(h % dim)] += (h >> 63) ? -1.0 : 1.0;
  }
  counts /= counts.norm();
  EXPECT_TRUE(HashEmbedder(dim, seed).Embed(tokens).isApprox(counts, 1e-15));
}

TEST(HashEmbedderTest, SeedChangesHashing) {
  const auto a = EmbedText("one two three four five", HashEmbedder(256, 0));
  const auto b = EmbedText("one two three four five", HashEmbedder(256, 1));
  EXPECT_NE(a, b);
}

TEST(HashEmbedderTest, DimBelowTwoRejected) {
  EXPECT_EQ(CodeOf([] { HashEmbedder(1, 0); }), ErrorCode::kUsage);
}

TEST(EmbedChunksTest, OneRowPerChunkInOrder) {
  const HashEmbedder e(48, 0);
  const auto tokens = Tokenize("a b c d e f g h i j k");
  const auto set = Chunk(tokens, 4, 0);
  const ChunkMatrix m = EmbedChunks(set, e);
  ASSERT_EQ(m.rows(), 3);
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_EQ(Vector(m.row(i).transpose()), e.Embed(set.chunks[static_cast<std::size_t>(i)]));
  }
}

TEST(EmbedChunksTest, IdenticalChunksAndSingleChunk) {
  const HashEmbedder e(48, 0);
  const auto m = EmbedChunks(Chunk(Tokenize("x y x y x y"), 2, 0), e);
  EXPECT_EQ(m.row(0), m.row(1));
  EXPECT_EQ(m.row(1), m.row(2));
  const auto single = EmbedChunks(Chunk(Tokenize("p q r"), 512, 0), e);
  ASSERT_EQ(single.rows(), 1);
  EXPECT_EQ(Vector(single.row(0).transpose()), EmbedText("p q r", e));
  EXPECT_EQ(CodeOf([&] { EmbedChunks(ChunkSet{}, e); }), ErrorCode::kEmptyChunkList);
}

EmbeddingStore RandomStore(std::size_t dim, std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  EmbeddingStore s(dim);
  s.metadata()["note"] = "test";
  for (std::size_t i = 0; i < rows; ++i) {
    s.Append("id" + std::to_string(i), testing::RandomVector(rng, static_cast<Eigen::Index>(dim)));
  }
  return s;
}

TEST(Crc32Test, KnownVector) {
  const std::string text = "123456789";
  const std::span<const unsigned char> bytes(reinterpret_cast<const unsigned char*>(text.data()),
                                             text.size());
  EXPECT_EQ(Crc32(bytes), 0xCBF43926u);
}

TEST(StoreTest, HeaderLayout) {
  const std::vector<float> values{1.0f, -2.5f};
  const auto bytes = EncodeMatrix(2, 1, values);
  ASSERT_EQ(bytes.size(), 4u + 2 + 4 + 8 + 8 + 4);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "RFRK");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[6], 2);
  EXPECT_EQ(bytes[10], 1);
  // 1.0f is 0x3f800000, stored little-endian.
  EXPECT_EQ(bytes[18], 0x00);
  EXPECT_EQ(bytes[21], 0x3f);
}

TEST(StoreTest, RoundTripIsBitExact) {
  TempDir dir;
  const auto store = RandomStore(24, 50, 4);
  SaveStore(store, dir / "s.rfrk");
  const auto back = LoadStore(dir / "s.rfrk");
  EXPECT_TRUE(back == store);
  EXPECT_EQ(back.metadata()["note"], "test");
  EXPECT_EQ(back.ids(), store.ids());
  EXPECT_TRUE(std::filesystem::exists(dir / "s.ids.jsonl"));
  EXPECT_TRUE(std::filesystem::exists(dir / "s.meta.json"));
}

TEST(StoreTest, TruncatedFileIsChecksumMismatch) {
  TempDir dir;
  SaveStore(RandomStore(8, 5, 1), dir / "s.rfrk");
  auto bytes = detail::ReadAllBytes(dir / "s.rfrk");
  bytes.resize(bytes.size() - 7);
  detail::WriteAllBytes(dir / "s.rfrk", bytes);
  EXPECT_EQ(CodeOf([&] { LoadStore(dir / "s.rfrk"); }), ErrorCode::kChecksumMismatch);
}

TEST(StoreTest, CorruptedPayloadIsChecksumMismatch) {
  TempDir dir;
  SaveStore(RandomStore(8, 5, 1), dir / "s.rfrk");
  auto bytes = detail::ReadAllBytes(dir / "s.rfrk");
  bytes[40] ^= 0x01;
  detail::WriteAllBytes(dir / "s.rfrk", bytes);
  EXPECT_EQ(CodeOf([&] { LoadStore(dir / "s.rfrk"); }), ErrorCode::kChecksumMismatch);
}

TEST(StoreTest, WrongMagicOrVersion) {
  auto bytes = EncodeMatrix(2, 1, std::vector<float>{0.f, 1.f});
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(CodeOf([&] { DecodeMatrix(bad_magic, "m"); }), ErrorCode::kFormatVersionMismatch);
  auto bad_version = bytes;
  bad_version[4] = 2;
  EXPECT_EQ(CodeOf([&] { DecodeMatrix(bad_version, "m"); }), ErrorCode::kFormatVersionMismatch);
}

TEST(StoreTest, MergeRequiresEqualDims) {
  const auto a = RandomStore(384, 2, 1);
  const auto b = RandomStore(256, 2, 2);
  EXPECT_EQ(CodeOf([&] { MergeStores(a, b); }), ErrorCode::kDimMismatch);
  auto c = RandomStore(384, 3, 3);
  EmbeddingStore renamed(384);
  for (std::size_t i = 0; i < c.size(); ++i) renamed.Append("other" + std::to_string(i), c.Row(i));
  EXPECT_EQ(MergeStores(a, renamed).size(), 5u);
}

TEST(StoreTest, LookupIsTotalOrErrors) {
  auto s = RandomStore(4, 3, 1);
  EXPECT_EQ(s.Lookup("id2"), s.RowVector(2));
  EXPECT_EQ(CodeOf([&] { s.Lookup("missing"); }), ErrorCode::kUnknownId);
  EXPECT_EQ(CodeOf([&] { s.Append("id0", Vector::Zero(4)); }), ErrorCode::kDuplicateId);
  EXPECT_EQ(CodeOf([&] { s.Append("new", Vector::Zero(5)); }), ErrorCode::kDimMismatch);
}

}  // namespace
}  // namespace refrank
