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

#include "refrank/synth.hpp"
#include "refrank/textprep.hpp"
#include "test_util.hpp"

namespace refrank {
namespace {

using testing::CodeOf;

TEST(SynthTest, ShapeAndReferenceCounts) {
  const Corpus c = GenerateSyntheticCorpus({.talks = 60, .papers = 300, .seed = 2});
  EXPECT_EQ(c.talks().size(), 60u);
  EXPECT_EQ(c.papers().size(), 300u);
  for (const auto& t : c.talks()) {
    const auto n = c.CitedBy(t.id).size();
    EXPECT_GE(n, 5u) << t.id;
    EXPECT_LE(n, 40u) << t.id;
    EXPECT_FALSE(t.abstract.empty());
    for (const auto& pid : c.CitedBy(t.id)) EXPECT_LE(c.Paper(pid).year, t.year);
  }
  for (Split s : {Split::kTrain, Split::kDev, Split::kTest}) {
    EXPECT_FALSE(FilterSplit(c, s).talks.empty());
  }
}

TEST(SynthTest, DeterministicPerSeed) {
  const SynthParams p{.talks = 20, .papers = 80, .seed = 5};
  const Corpus a = GenerateSyntheticCorpus(p);
  const Corpus b = GenerateSyntheticCorpus(p);
  for (std::size_t i = 0; i < a.talks().size(); ++i) {
    EXPECT_EQ(a.talks()[i].transcript, b.talks()[i].transcript);
  }
  EXPECT_EQ(a.citations(), b.citations());
  SynthParams q = p;
  q.seed = 6;
  EXPECT_NE(GenerateSyntheticCorpus(q).talks()[0].transcript, a.talks()[0].transcript);
}

TEST(SynthTest, TranscriptsMentionCitedSignatures) {
  const Corpus c = GenerateSyntheticCorpus({.talks = 30, .papers = 120, .seed = 3});
  for (const auto& t : c.talks()) {
    const auto tokens = Tokenize(t.transcript);
    const std::set<std::string> words(tokens.begin(), tokens.end());
    for (const auto& pid : c.CitedBy(t.id)) {
      std::size_t hits = 0;
      for (const auto& sig : SignatureTokens(c.Paper(pid))) hits += words.count(sig);
      EXPECT_GE(hits, 1u) << t.id << " never mentions " << pid;
    }
  }
}

TEST(SynthTest, LateSignalKeepsFirstChunkFreeOfCitedSignatures) {
  SynthParams p{.talks = 40, .papers = 200, .seed = 7};
  p.late_signal = true;
  p.chunk_size = 512;
  const Corpus c = GenerateSyntheticCorpus(p);
  for (const auto& t : c.talks()) {
    std::set<std::string> sigs;
    for (const auto& pid : c.CitedBy(t.id)) {
      const auto s = SignatureTokens(c.Paper(pid));
      sigs.insert(s.begin(), s.end());
    }
    const auto tokens = Tokenize(t.transcript);
    ASSERT_GT(tokens.size(), 512u);
    for (std::size_t i = 0; i < 512; ++i) {
      EXPECT_FALSE(sigs.count(tokens[i])) << t.id << " token " << i << " " << tokens[i];
    }
  }
}

TEST(SynthTest, InvalidParameters) {
  EXPECT_EQ(CodeOf([] { GenerateSyntheticCorpus({.talks = 0}); }), ErrorCode::kUsage);
  EXPECT_EQ(CodeOf([] { GenerateSyntheticCorpus({.min_refs = 9, .max_refs = 3}); }),
            ErrorCode::kUsage);
}

}  // namespace
}  // namespace refrank
