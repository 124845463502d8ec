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

#ifndef REFRANK_CORPUS_HPP_
#define REFRANK_CORPUS_HPP_

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "refrank/error.hpp"

namespace refrank {

inline constexpr int kMinYear = 1900;
inline constexpr int kMaxYear = 2100;

// A query talk. `abstract` is the abstract of the talk's own paper; it is
// optional in the on-disk schema and only needed by the domain adaptation
// stage.
struct TalkRecord {
  std::string id;
  std::string title;
  int year = 0;
  std::string transcript;
  std::string source_url;
  std::string abstract;

  bool operator==(const TalkRecord&) const = default;
};

struct PaperRecord {
  std::string id;
  std::string title;
  std::string abstract;
  int year = 0;
  std::vector<std::string> authors;

  bool operator==(const PaperRecord&) const = default;
};

// talk id -> cited paper ids. Ordered containers keep every downstream
// iteration deterministic.
using CitationSet = std::map<std::string, std::set<std::string>>;

enum class Split { kTrain, kDev, kTest };

inline constexpr std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "?";
}

inline Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw Error(ErrorCode::kUsage, "unknown split '" + std::string(name) +
                                     "' (expected train|dev|test)");
}

using SplitAssignment = std::map<std::string, Split>;

// Loaded dataset. Immutable after LoadCorpus returns; the id maps index into
// `talks` and `papers`.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<TalkRecord> talks, std::vector<PaperRecord> papers,
         CitationSet citations, SplitAssignment splits);

  const std::vector<TalkRecord>& talks() const { return talks_; }
  const std::vector<PaperRecord>& papers() const { return papers_; }
  const CitationSet& citations() const { return citations_; }
  const SplitAssignment& splits() const { return splits_; }

  const TalkRecord* FindTalk(std::string_view id) const {
    auto it = talk_index_.find(std::string(id));
    return it == talk_index_.end() ? nullptr : &talks_[it->second];
  }
  const PaperRecord* FindPaper(std::string_view id) const {
    auto it = paper_index_.find(std::string(id));
    return it == paper_index_.end() ? nullptr : &papers_[it->second];
  }
  const PaperRecord& Paper(std::string_view id) const {
    const PaperRecord* p = FindPaper(id);
    if (p == nullptr) throw Error(ErrorCode::kUnknownId, std::string(id));
    return *p;
  }

  // Empty set when the talk has no citation entry.
  const std::set<std::string>& CitedBy(std::string_view talk_id) const {
    static const std::set<std::string> kEmpty;
    auto it = citations_.find(std::string(talk_id));
    return it == citations_.end() ? kEmpty : it->second;
  }

  Split SplitOf(std::string_view talk_id) const {
    return splits_.at(std::string(talk_id));
  }

 private:
  std::vector<TalkRecord> talks_;
  std::vector<PaperRecord> papers_;
  CitationSet citations_;
  SplitAssignment splits_;
  std::unordered_map<std::string, std::size_t> talk_index_;
  std::unordered_map<std::string, std::size_t> paper_index_;
};

// Talks of one split; papers stay those of the underlying corpus.
struct CorpusView {
  const Corpus* corpus = nullptr;
  Split split = Split::kTrain;
  std::vector<const TalkRecord*> talks;
};

struct SplitStats {
  std::size_t talk_count = 0;
  // Distinct papers cited by the split's talks (whole collection for the
  // total row).
  std::size_t paper_count = 0;
  std::optional<double> mean_refs_per_talk;
  std::optional<double> mean_words_per_transcript;
  std::optional<double> mean_words_per_abstract;
};

struct CorpusStats {
  std::map<Split, SplitStats> per_split;
  SplitStats total;
};

// Number of whitespace-delimited words.
inline std::size_t CountWords(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

namespace detail {

inline bool IsBlank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

[[noreturn]] inline void Malformed(const std::string& source, std::size_t line,
                                   std::string_view what) {
  throw Error(ErrorCode::kMalformedRecord,
              source + ":" + std::to_string(line) + ": " + std::string(what));
}

inline const nlohmann::json& RequireField(const nlohmann::json& obj,
                                          const char* field,
                                          const std::string& source,
                                          std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) {
    Malformed(source, line, std::string("missing field '") + field + "'");
  }
  return *it;
}

inline std::string RequireString(const nlohmann::json& obj, const char* field,
                                 const std::string& source, std::size_t line) {
  const auto& v = RequireField(obj, field, source, line);
  if (!v.is_string()) {
    Malformed(source, line, std::string("field '") + field + "' is not a string");
  }
  return v.get<std::string>();
}

inline std::string OptionalString(const nlohmann::json& obj, const char* field,
                                  const std::string& source, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) {
    Malformed(source, line, std::string("field '") + field + "' is not a string");
  }
  return it->get<std::string>();
}

inline int RequireYear(const nlohmann::json& obj, const std::string& source,
                       std::size_t line) {
  const auto& v = RequireField(obj, "year", source, line);
  if (!v.is_number_integer()) {
    Malformed(source, line, "field 'year' is not an integer");
  }
  const auto year = v.get<long long>();
  if (year < kMinYear || year > kMaxYear) {
    Malformed(source, line, "field 'year' out of range: " + std::to_string(year));
  }
  return static_cast<int>(year);
}

inline std::vector<std::string> StringList(const nlohmann::json& v,
                                           const char* field,
                                           const std::string& source,
                                           std::size_t line) {
  if (!v.is_array()) {
    Malformed(source, line, std::string("field '") + field + "' is not a list");
  }
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& item : v) {
    if (!item.is_string()) {
      Malformed(source, line,
                std::string("field '") + field + "' holds a non-string");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

// Calls fn(json_object, line_number) for every nonblank line.
template <typename Fn>
void ForEachJsonLine(std::istream& in, const std::string& source, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsBlank(line)) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      Malformed(source, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) Malformed(source, line_no, "record is not an object");
    fn(obj, line_no);
  }
}

inline std::ifstream OpenForRead(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return in;
}

}  // namespace detail

inline std::vector<TalkRecord> ParseTalks(std::istream& in,
                                          const std::string& source) {
  std::vector<TalkRecord> talks;
  detail::ForEachJsonLine(in, source, [&](const nlohmann::json& obj,
                                          std::size_t line) {
    TalkRecord t;
    t.id = detail::RequireString(obj, "id", source, line);
    if (t.id.empty()) detail::Malformed(source, line, "empty 'id'");
    t.title = detail::RequireString(obj, "title", source, line);
    t.year = detail::RequireYear(obj, source, line);
    t.transcript = detail::RequireString(obj, "transcript", source, line);
    if (detail::IsBlank(t.transcript)) {
      detail::Malformed(source, line, "empty 'transcript'");
    }
    t.source_url = detail::OptionalString(obj, "source_url", source, line);
    t.abstract = detail::OptionalString(obj, "abstract", source, line);
    talks.push_back(std::move(t));
  });
  return talks;
}

inline std::vector<PaperRecord> ParsePapers(std::istream& in,
                                            const std::string& source) {
  std::vector<PaperRecord> papers;
  detail::ForEachJsonLine(in, source, [&](const nlohmann::json& obj,
                                          std::size_t line) {
    PaperRecord p;
    p.id = detail::RequireString(obj, "id", source, line);
    if (p.id.empty()) detail::Malformed(source, line, "empty 'id'");
    p.title = detail::RequireString(obj, "title", source, line);
    p.abstract = detail::RequireString(obj, "abstract", source, line);
    if (detail::IsBlank(p.abstract)) {
      detail::Malformed(source, line, "empty 'abstract'");
    }
    p.year = detail::RequireYear(obj, source, line);
    if (auto it = obj.find("authors"); it != obj.end() && !it->is_null()) {
      p.authors = detail::StringList(*it, "authors", source, line);
    }
    papers.push_back(std::move(p));
  });
  return papers;
}

// Repeated paper ids within one list collapse into the set. A talk listed
// on two lines is a DuplicateId.
inline CitationSet ParseCitations(std::istream& in, const std::string& source) {
  CitationSet citations;
  detail::ForEachJsonLine(in, source, [&](const nlohmann::json& obj,
                                          std::size_t line) {
    auto talk_id = detail::RequireString(obj, "talk_id", source, line);
    auto ids = detail::StringList(
        detail::RequireField(obj, "paper_ids", source, line), "paper_ids",
        source, line);
    if (ids.empty()) detail::Malformed(source, line, "empty 'paper_ids'");
    auto [it, inserted] = citations.try_emplace(talk_id);
    if (!inserted) {
      throw Error(ErrorCode::kDuplicateId,
                  "citations for talk '" + talk_id + "' listed twice");
    }
    it->second.insert(ids.begin(), ids.end());
  });
  return citations;
}

inline SplitAssignment ParseSplits(std::istream& in, const std::string& source) {
  SplitAssignment splits;
  detail::ForEachJsonLine(in, source, [&](const nlohmann::json& obj,
                                          std::size_t line) {
    auto talk_id = detail::RequireString(obj, "talk_id", source, line);
    auto name = detail::RequireString(obj, "split", source, line);
    Split split;
    if (name == "train") {
      split = Split::kTrain;
    } else if (name == "dev") {
      split = Split::kDev;
    } else if (name == "test") {
      split = Split::kTest;
    } else {
      detail::Malformed(source, line, "field 'split' must be train|dev|test");
    }
    if (!splits.emplace(talk_id, split).second) {
      throw Error(ErrorCode::kDuplicateId,
                  "split for talk '" + talk_id + "' listed twice");
    }
  });
  return splits;
}

inline Corpus::Corpus(std::vector<TalkRecord> talks,
                      std::vector<PaperRecord> papers, CitationSet citations,
                      SplitAssignment splits)
    : talks_(std::move(talks)),
      papers_(std::move(papers)),
      citations_(std::move(citations)),
      splits_(std::move(splits)) {
  for (std::size_t i = 0; i < talks_.size(); ++i) {
    if (!talk_index_.emplace(talks_[i].id, i).second) {
      throw Error(ErrorCode::kDuplicateId, "talk '" + talks_[i].id + "'");
    }
  }
  for (std::size_t i = 0; i < papers_.size(); ++i) {
    if (!paper_index_.emplace(papers_[i].id, i).second) {
      throw Error(ErrorCode::kDuplicateId, "paper '" + papers_[i].id + "'");
    }
  }
  for (const auto& [talk_id, paper_ids] : citations_) {
    if (!talk_index_.count(talk_id)) {
      throw Error(ErrorCode::kDanglingReference, talk_id);
    }
    if (paper_ids.empty()) {
      throw Error(ErrorCode::kMalformedRecord,
                  "empty citation set for talk '" + talk_id + "'");
    }
    for (const auto& pid : paper_ids) {
      if (!paper_index_.count(pid)) {
        throw Error(ErrorCode::kDanglingReference, pid);
      }
    }
  }
  for (const auto& [talk_id, split] : splits_) {
    if (!talk_index_.count(talk_id)) {
      throw Error(ErrorCode::kDanglingReference, talk_id);
    }
  }
  for (const auto& t : talks_) {
    if (!splits_.count(t.id)) {
      throw Error(ErrorCode::kMalformedRecord,
                  "talk '" + t.id + "' has no split assignment");
    }
  }
}

inline Corpus LoadCorpus(const std::filesystem::path& talks_path,
                         const std::filesystem::path& papers_path,
                         const std::filesystem::path& citations_path,
                         const std::filesystem::path& splits_path) {
  auto talks_in = detail::OpenForRead(talks_path);
  auto papers_in = detail::OpenForRead(papers_path);
  auto citations_in = detail::OpenForRead(citations_path);
  auto splits_in = detail::OpenForRead(splits_path);
  return Corpus(ParseTalks(talks_in, talks_path.string()),
                ParsePapers(papers_in, papers_path.string()),
                ParseCitations(citations_in, citations_path.string()),
                ParseSplits(splits_in, splits_path.string()));
}

// Loads `dir`/{talks,papers,citations,splits}.jsonl.
inline Corpus LoadCorpusDir(const std::filesystem::path& dir) {
  return LoadCorpus(dir / "talks.jsonl", dir / "papers.jsonl",
                    dir / "citations.jsonl", dir / "splits.jsonl");
}

inline void WriteTalks(const std::vector<TalkRecord>& talks, std::ostream& out) {
  for (const auto& t : talks) {
    nlohmann::ordered_json obj;
    obj["id"] = t.id;
    obj["title"] = t.title;
    obj["year"] = t.year;
    obj["transcript"] = t.transcript;
    if (!t.source_url.empty()) obj["source_url"] = t.source_url;
    if (!t.abstract.empty()) obj["abstract"] = t.abstract;
    out << obj.dump() << '\n';
  }
}

inline void WritePapers(const std::vector<PaperRecord>& papers,
                        std::ostream& out) {
  for (const auto& p : papers) {
    nlohmann::ordered_json obj;
    obj["id"] = p.id;
    obj["title"] = p.title;
    obj["abstract"] = p.abstract;
    obj["year"] = p.year;
    if (!p.authors.empty()) obj["authors"] = p.authors;
    out << obj.dump() << '\n';
  }
}

inline void WriteCitations(const CitationSet& citations, std::ostream& out) {
  for (const auto& [talk_id, ids] : citations) {
    nlohmann::ordered_json obj;
    obj["talk_id"] = talk_id;
    obj["paper_ids"] = std::vector<std::string>(ids.begin(), ids.end());
    out << obj.dump() << '\n';
  }
}

inline void WriteSplits(const SplitAssignment& splits, std::ostream& out) {
  for (const auto& [talk_id, split] : splits) {
    nlohmann::ordered_json obj;
    obj["talk_id"] = talk_id;
    obj["split"] = std::string(SplitName(split));
    out << obj.dump() << '\n';
  }
}

// Writes the four JSONL files into `dir` (created if needed).
inline void SaveCorpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("talks.jsonl");
    WriteTalks(corpus.talks(), out);
  }
  {
    auto out = open("papers.jsonl");
    WritePapers(corpus.papers(), out);
  }
  {
    auto out = open("citations.jsonl");
    WriteCitations(corpus.citations(), out);
  }
  {
    auto out = open("splits.jsonl");
    WriteSplits(corpus.splits(), out);
  }
}

inline CorpusView FilterSplit(const Corpus& corpus, Split which) {
  CorpusView view{&corpus, which, {}};
  for (const auto& t : corpus.talks()) {
    if (corpus.SplitOf(t.id) == which) view.talks.push_back(&t);
  }
  if (view.talks.empty()) {
    throw Error(ErrorCode::kEmptySplit, std::string(SplitName(which)));
  }
  return view;
}

namespace detail {

inline SplitStats StatsFor(const Corpus& corpus,
                           const std::vector<const TalkRecord*>& talks,
                           bool whole_collection) {
  SplitStats s;
  s.talk_count = talks.size();
  std::set<std::string> cited;
  double refs = 0.0;
  double words = 0.0;
  for (const TalkRecord* t : talks) {
    const auto& ids = corpus.CitedBy(t->id);
    refs += static_cast<double>(ids.size());
    cited.insert(ids.begin(), ids.end());
    words += static_cast<double>(CountWords(t->transcript));
  }
  if (!talks.empty()) {
    s.mean_refs_per_talk = refs / static_cast<double>(talks.size());
    s.mean_words_per_transcript = words / static_cast<double>(talks.size());
  }
  double abstract_words = 0.0;
  if (whole_collection) {
    s.paper_count = corpus.papers().size();
    for (const auto& p : corpus.papers()) {
      abstract_words += static_cast<double>(CountWords(p.abstract));
    }
  } else {
    s.paper_count = cited.size();
    for (const auto& id : cited) {
      abstract_words += static_cast<double>(CountWords(corpus.Paper(id).abstract));
    }
  }
  if (s.paper_count > 0) {
    s.mean_words_per_abstract =
        abstract_words / static_cast<double>(s.paper_count);
  }
  return s;
}

}  // namespace detail

// Per-split and total statistics. Empty splits get zero counts and no means;
// a corpus without talks is an EmptySplit.
inline CorpusStats ComputeStats(const Corpus& corpus) {
  if (corpus.talks().empty()) {
    throw Error(ErrorCode::kEmptySplit, "corpus has no talks");
  }
  CorpusStats stats;
  std::vector<const TalkRecord*> all;
  for (Split split : {Split::kTrain, Split::kDev, Split::kTest}) {
    std::vector<const TalkRecord*> talks;
    for (const auto& t : corpus.talks()) {
      if (corpus.SplitOf(t.id) == split) talks.push_back(&t);
    }
    stats.per_split[split] = detail::StatsFor(corpus, talks, false);
  }
  for (const auto& t : corpus.talks()) all.push_back(&t);
  stats.total = detail::StatsFor(corpus, all, true);
  return stats;
}

inline nlohmann::ordered_json StatsToJson(const CorpusStats& stats) {
  auto row = [](const SplitStats& s) {
    nlohmann::ordered_json j;
    j["talk_count"] = s.talk_count;
    j["paper_count"] = s.paper_count;
    auto opt = [](const std::optional<double>& v) {
      return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    j["mean_refs_per_talk"] = opt(s.mean_refs_per_talk);
    j["mean_words_per_transcript"] = opt(s.mean_words_per_transcript);
    j["mean_words_per_abstract"] = opt(s.mean_words_per_abstract);
    return j;
  };
  nlohmann::ordered_json j;
  for (const auto& [split, s] : stats.per_split) {
    j[std::string(SplitName(split))] = row(s);
  }
  j["total"] = row(stats.total);
  return j;
}

}  // namespace refrank

#endif  // REFRANK_CORPUS_HPP_
