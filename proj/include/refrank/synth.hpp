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

#ifndef REFRANK_SYNTH_HPP_
#define REFRANK_SYNTH_HPP_

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "refrank/corpus.hpp"
#include "refrank/error.hpp"

namespace refrank {

// Synthetic talk/paper corpus. Each paper owns a set of signature tokens;
// a talk mentions the signatures of the papers it cites inside one
// contiguous technical segment surrounded by conversational filler. With
// `late_signal` the segment starts at or after token `chunk_size` of the
// transcript, so the first chunk holds no signature token.
struct SynthParams {
  std::size_t talks = 200;
  std::size_t papers = 1000;
  std::uint64_t seed = 7;
  bool late_signal = false;
  std::size_t chunk_size = 512;
  std::size_t min_refs = 5;
  std::size_t max_refs = 40;
  std::size_t signature_size = 8;
  std::size_t mentions_per_ref = 3;
  std::size_t filler_vocabulary = 2000;
  std::size_t min_transcript_words = 1800;
  std::size_t max_transcript_words = 2800;

  void Validate() const {
    if (talks == 0 || papers == 0) {
      throw Error(ErrorCode::kUsage, "synth needs at least one talk and one paper");
    }
    if (min_refs == 0 || min_refs > max_refs) {
      throw Error(ErrorCode::kUsage, "synth needs 1 <= min_refs <= max_refs");
    }
    if (mentions_per_ref == 0 || mentions_per_ref > signature_size) {
      throw Error(ErrorCode::kUsage, "mentions_per_ref must lie in [1, signature_size]");
    }
    if (filler_vocabulary == 0 || filler_vocabulary > 48 * 48) {
      throw Error(ErrorCode::kUsage, "filler_vocabulary must lie in [1, 2304]");
    }
    if (min_transcript_words > max_transcript_words || chunk_size == 0) {
      throw Error(ErrorCode::kUsage, "bad transcript length range");
    }
  }
};

namespace synth_detail {

// Filler words are two syllables from this set, disjoint from the
// signature syllables below.
inline constexpr std::array<std::string_view, 48> kFillerSyllables = {
    "ba", "be", "bo", "da", "de", "di", "do", "fa", "fi", "fo", "ga", "ge",
    "gi", "ha", "he", "hi", "ho", "ja", "je", "jo", "ke", "ki", "la", "le",
    "li", "ma", "me", "mo", "na", "ne", "ni", "no", "pa", "pe", "pi", "po",
    "ra", "re", "ri", "ro", "sa", "se", "si", "so", "ta", "te", "ti", "to"};

inline constexpr std::array<std::string_view, 40> kTechnical = {
    "we", "propose", "our", "method", "model", "results", "show", "approach",
    "data", "task", "performance", "training", "evaluate", "baseline",
    "improve", "accuracy", "experiments", "analysis", "learning", "neural",
    "representation", "features", "outperforms", "compared", "previous",
    "work", "based", "using", "table", "figure", "score", "metric", "error",
    "layer", "attention", "encoder", "decoder", "loss", "objective", "input"};

inline constexpr std::array<std::string_view, 32> kAbstractWords = {
    "paper", "presents", "novel", "framework", "state-of-the-art", "benchmark",
    "extensive", "demonstrate", "significant", "existing", "effective",
    "efficient", "introduce", "study", "investigate", "achieve", "corpus",
    "empirical", "findings", "strong", "gains", "across", "multiple",
    "settings", "release", "code", "publicly", "available", "further",
    "proposed", "new", "methods"};

inline constexpr std::array<std::string_view, 24> kSyllables = {
    "ka", "lo", "mi", "tra", "ven", "qu", "zor", "pel", "dri", "nam", "su",
    "fex", "gol", "bri", "tan", "vu", "rim", "cho", "lex", "ny", "por", "sha",
    "wek", "dal"};

// Portable draws; the standard distributions are implementation-defined.
inline std::size_t Below(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

inline std::size_t Between(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + Below(rng, hi - lo + 1);
}

inline double Unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void Shuffle(std::mt19937_64& rng, std::vector<T>& v) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[Below(rng, i)]);
}

template <std::size_t N>
std::string_view Pick(std::mt19937_64& rng,
                      const std::array<std::string_view, N>& words) {
  return words[Below(rng, N)];
}

class SignatureFactory {
 public:
  explicit SignatureFactory(std::mt19937_64& rng) : rng_(rng) {}

  void Reserve(const std::string& word) { used_.insert(word); }

  std::vector<std::string> Make(std::size_t n) {
    std::vector<std::string> out;
    while (out.size() < n) {
      std::string word;
      const std::size_t syllables = Between(rng_, 3, 4);
      for (std::size_t i = 0; i < syllables; ++i) word += Pick(rng_, kSyllables);
      if (used_.insert(word).second) out.push_back(std::move(word));
    }
    return out;
  }

 private:
  std::mt19937_64& rng_;
  std::set<std::string> used_;
};

inline std::string Join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += ' ';
    out += words[i];
  }
  return out;
}

inline std::string Capitalized(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

inline std::string MakeId(char prefix, std::size_t i, std::size_t width) {
  std::string digits = std::to_string(i);
  return std::string(1, prefix) + std::string(width - std::min(width, digits.size()), '0') +
         digits;
}

inline std::string AbstractText(std::mt19937_64& rng,
                                const std::vector<std::string>& signature) {
  std::vector<std::string> words;
  for (const auto& s : signature) {
    const std::size_t reps = Between(rng, 2, 3);
    for (std::size_t r = 0; r < reps; ++r) words.push_back(s);
  }
  const std::size_t generic = Between(rng, 12, 24);
  for (std::size_t i = 0; i < generic; ++i) words.emplace_back(Pick(rng, kAbstractWords));
  Shuffle(rng, words);
  return Capitalized(Join(words)) + ".";
}

}  // namespace synth_detail

inline Corpus GenerateSyntheticCorpus(const SynthParams& params) {
  params.Validate();
  using namespace synth_detail;
  std::mt19937_64 rng(params.seed);
  SignatureFactory signatures(rng);

  std::vector<std::string> filler;
  for (auto a : kFillerSyllables) {
    for (auto b : kFillerSyllables) filler.push_back(std::string(a) + std::string(b));
  }
  Shuffle(rng, filler);
  filler.resize(params.filler_vocabulary);
  for (const auto& w : filler) signatures.Reserve(w);

  const std::size_t pid_width = std::to_string(params.papers).size() + 1;
  const std::size_t tid_width = std::to_string(params.talks).size() + 1;

  // Papers: recent years dominate.
  std::vector<PaperRecord> papers;
  std::vector<std::vector<std::string>> paper_sigs;
  for (std::size_t i = 0; i < params.papers; ++i) {
    PaperRecord p;
    p.id = MakeId('P', i, pid_width);
    const double u = Unit(rng);
    p.year = 2022 - static_cast<int>(std::min(40.0, -8.0 * std::log1p(-u)));
    auto sig = signatures.Make(params.signature_size);
    std::vector<std::string> title{sig[0], sig[1]};
    for (std::size_t w = 0; w < 3; ++w) title.emplace_back(Pick(rng, kAbstractWords));
    p.title = Capitalized(Join(title));
    p.abstract = AbstractText(rng, sig);
    p.authors = {"Author " + std::to_string(Below(rng, 500)),
                 "Author " + std::to_string(Below(rng, 500))};
    papers.push_back(std::move(p));
    paper_sigs.push_back(std::move(sig));
  }
  // Zipf-like popularity over a random permutation of the papers.
  std::vector<std::size_t> rank(params.papers);
  std::iota(rank.begin(), rank.end(), 0);
  Shuffle(rng, rank);
  std::vector<double> popularity(params.papers);
  for (std::size_t i = 0; i < params.papers; ++i) {
    popularity[i] = 1.0 / std::pow(static_cast<double>(rank[i]) + 10.0, 0.8);
  }

  std::vector<TalkRecord> talks;
  CitationSet citations;
  SplitAssignment splits;
  const std::size_t n_train = std::max<std::size_t>(1, params.talks * 70 / 100);
  const std::size_t n_dev = params.talks > n_train ? std::max<std::size_t>(
                                                          1, params.talks * 15 / 100)
                                                    : 0;
  for (std::size_t i = 0; i < params.talks; ++i) {
    TalkRecord t;
    t.id = MakeId('T', i, tid_width);
    Split split;
    if (i < n_train) {
      split = Split::kTrain;
      t.year = 2017 + static_cast<int>(Below(rng, 4));
    } else if (i < n_train + n_dev) {
      split = Split::kDev;
      t.year = 2021;
    } else {
      split = Split::kTest;
      t.year = 2022;
    }

    // Gold papers: weighted sampling without replacement among papers the
    // talk could have cited.
    std::vector<std::size_t> pool;
    for (std::size_t p = 0; p < params.papers; ++p) {
      if (papers[p].year <= t.year) pool.push_back(p);
    }
    if (pool.empty()) pool.push_back(0);
    const std::size_t n_refs =
        std::min(pool.size(), Between(rng, params.min_refs, params.max_refs));
    std::vector<std::size_t> gold;
    std::vector<double> weights;
    for (std::size_t p : pool) weights.push_back(popularity[p]);
    for (std::size_t r = 0; r < n_refs; ++r) {
      double total = std::accumulate(weights.begin(), weights.end(), 0.0);
      double x = Unit(rng) * total;
      std::size_t pick = 0;
      while (pick + 1 < weights.size() && x >= weights[pick]) {
        x -= weights[pick];
        ++pick;
      }
      gold.push_back(pool[pick]);
      weights[pick] = 0.0;
    }
    std::sort(gold.begin(), gold.end());

    const auto own = signatures.Make(params.signature_size);
    std::vector<std::string> title{own[0], own[1]};
    for (std::size_t w = 0; w < 3; ++w) title.emplace_back(Pick(rng, kTechnical));
    t.title = Capitalized(Join(title));
    t.abstract = AbstractText(rng, own);
    t.source_url = "https://example.org/talks/" + t.id;

    // Technical segment: signature mentions, own topic words and technical
    // speech, shuffled.
    std::vector<std::string> segment;
    for (std::size_t p : gold) {
      std::vector<std::string> sig = paper_sigs[p];
      Shuffle(rng, sig);
      for (std::size_t m = 0; m < params.mentions_per_ref; ++m) segment.push_back(sig[m]);
    }
    for (std::size_t m = 0; m < 4; ++m) segment.push_back(own[Below(rng, own.size())]);
    const std::size_t technical = segment.size() * 3 / 2;
    for (std::size_t m = 0; m < technical; ++m) segment.emplace_back(Pick(rng, kTechnical));
    Shuffle(rng, segment);

    std::size_t length =
        Between(rng, params.min_transcript_words, params.max_transcript_words);
    const std::size_t earliest = params.late_signal ? params.chunk_size : 0;
    length = std::max(length, earliest + segment.size());
    const std::size_t start = Between(rng, earliest, length - segment.size());
    std::vector<std::string> words;
    words.reserve(length);
    for (std::size_t w = 0; w < start; ++w) words.push_back(filler[Below(rng, filler.size())]);
    words.insert(words.end(), segment.begin(), segment.end());
    while (words.size() < length) words.push_back(filler[Below(rng, filler.size())]);
    t.transcript = Join(words);

    std::set<std::string> cited;
    for (std::size_t p : gold) cited.insert(papers[p].id);
    citations.emplace(t.id, std::move(cited));
    splits.emplace(t.id, split);
    talks.push_back(std::move(t));
  }
  return Corpus(std::move(talks), std::move(papers), std::move(citations),
                std::move(splits));
}

// Signature tokens of every paper, by paper id, as the generator would
// rebuild them. Recovered from titles and abstracts: a signature token is
// any abstract word outside the generic vocabulary.
inline std::set<std::string> SignatureTokens(const PaperRecord& paper) {
  std::set<std::string> generic(synth_detail::kAbstractWords.begin(),
                                synth_detail::kAbstractWords.end());
  std::set<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty() && word.back() == '.') word.pop_back();
    for (auto& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (!word.empty() && !generic.count(word)) out.insert(word);
    word.clear();
  };
  for (char c : paper.abstract) {
    if (c == ' ') {
      flush();
    } else {
      word.push_back(c);
    }
  }
  flush();
  return out;
}

}  // namespace refrank

#endif  // REFRANK_SYNTH_HPP_
