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

#ifndef REFRANK_TEXTPREP_HPP_
#define REFRANK_TEXTPREP_HPP_

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "refrank/corpus.hpp"
#include "refrank/error.hpp"

namespace refrank {

enum class Field { kTitle, kYear, kTranscript, kAbstract };

inline constexpr std::string_view FieldName(Field f) {
  switch (f) {
    case Field::kTitle: return "title";
    case Field::kYear: return "year";
    case Field::kTranscript: return "transcript";
    case Field::kAbstract: return "abstract";
  }
  return "?";
}

// Ordered field selectors joined by `separator`.
struct InputTemplate {
  std::vector<Field> fields;
  std::string separator = ". ";

  void Validate() const {
    if (fields.empty()) throw Error(ErrorCode::kUsage, "empty input template");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      for (std::size_t j = i + 1; j < fields.size(); ++j) {
        if (fields[i] == fields[j]) {
          throw Error(ErrorCode::kUsage, "duplicate template field '" +
                                             std::string(FieldName(fields[i])) +
                                             "'");
        }
      }
    }
  }

  std::string ToString() const {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out += ',';
      out += FieldName(fields[i]);
    }
    return out;
  }
};

// Parses "title,year,transcript".
inline InputTemplate ParseTemplate(std::string_view list,
                                   std::string separator = ". ") {
  InputTemplate tmpl;
  tmpl.separator = std::move(separator);
  std::size_t pos = 0;
  while (pos <= list.size()) {
    std::size_t comma = list.find(',', pos);
    if (comma == std::string_view::npos) comma = list.size();
    std::string_view name = list.substr(pos, comma - pos);
    while (!name.empty() && std::isspace(static_cast<unsigned char>(name.front()))) {
      name.remove_prefix(1);
    }
    while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back()))) {
      name.remove_suffix(1);
    }
    if (name == "title") {
      tmpl.fields.push_back(Field::kTitle);
    } else if (name == "year") {
      tmpl.fields.push_back(Field::kYear);
    } else if (name == "transcript") {
      tmpl.fields.push_back(Field::kTranscript);
    } else if (name == "abstract") {
      tmpl.fields.push_back(Field::kAbstract);
    } else {
      throw Error(ErrorCode::kUsage,
                  "unknown template field '" + std::string(name) + "'");
    }
    pos = comma + 1;
  }
  tmpl.Validate();
  return tmpl;
}

inline InputTemplate DefaultQueryTemplate() {
  return {{Field::kTitle, Field::kYear, Field::kTranscript}, ". "};
}

inline InputTemplate DefaultKeyTemplate() {
  return {{Field::kAbstract, Field::kTitle, Field::kYear}, ". "};
}

namespace detail {

inline void AppendField(std::string& out, bool& first,
                        const InputTemplate& tmpl, std::string_view value,
                        Field field, std::string_view record_id) {
  if (IsBlank(value)) {
    throw Error(ErrorCode::kMissingField, std::string(record_id) + "." +
                                              std::string(FieldName(field)));
  }
  if (!first) out += tmpl.separator;
  out += value;
  first = false;
}

}  // namespace detail

// Talks offer title, year, transcript and (when present) their own abstract.
inline std::string RenderText(const TalkRecord& talk, const InputTemplate& tmpl) {
  tmpl.Validate();
  std::string out;
  bool first = true;
  for (Field f : tmpl.fields) {
    switch (f) {
      case Field::kTitle:
        detail::AppendField(out, first, tmpl, talk.title, f, talk.id);
        break;
      case Field::kYear:
        detail::AppendField(out, first, tmpl, std::to_string(talk.year), f,
                            talk.id);
        break;
      case Field::kTranscript:
        detail::AppendField(out, first, tmpl, talk.transcript, f, talk.id);
        break;
      case Field::kAbstract:
        detail::AppendField(out, first, tmpl, talk.abstract, f, talk.id);
        break;
    }
  }
  return out;
}

inline std::string RenderText(const PaperRecord& paper,
                              const InputTemplate& tmpl) {
  tmpl.Validate();
  std::string out;
  bool first = true;
  for (Field f : tmpl.fields) {
    switch (f) {
      case Field::kTitle:
        detail::AppendField(out, first, tmpl, paper.title, f, paper.id);
        break;
      case Field::kYear:
        detail::AppendField(out, first, tmpl, std::to_string(paper.year), f,
                            paper.id);
        break;
      case Field::kAbstract:
        detail::AppendField(out, first, tmpl, paper.abstract, f, paper.id);
        break;
      case Field::kTranscript:
        throw Error(ErrorCode::kMissingField, paper.id + ".transcript");
    }
  }
  return out;
}

using TokenSequence = std::vector<std::string>;

// Reference tokenizer: whitespace split, ASCII lowercase, punctuation kept.
inline TokenSequence Tokenize(std::string_view text) {
  TokenSequence tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

struct ChunkSet {
  std::vector<TokenSequence> chunks;
  std::size_t chunk_size = 512;
  std::size_t overlap = 0;
};

inline std::size_t ChunkCount(std::size_t length, std::size_t chunk_size,
                              std::size_t overlap) {
  const std::size_t stride = chunk_size - overlap;
  const std::size_t span = length > overlap ? length - overlap : 1;
  return (span + stride - 1) / stride;
}

// Windows of `chunk_size` tokens starting every `chunk_size - overlap`
// tokens; the last window may be short.
inline ChunkSet Chunk(const TokenSequence& tokens, std::size_t chunk_size = 512,
                      std::size_t overlap = 0) {
  if (chunk_size == 0) throw Error(ErrorCode::kUsage, "chunk_size must be >= 1");
  if (overlap >= chunk_size) {
    throw Error(ErrorCode::kUsage, "chunk_overlap must be < chunk_size");
  }
  if (tokens.empty()) throw Error(ErrorCode::kEmptyInput, "no tokens to chunk");
  ChunkSet set;
  set.chunk_size = chunk_size;
  set.overlap = overlap;
  const std::size_t stride = chunk_size - overlap;
  const std::size_t n = ChunkCount(tokens.size(), chunk_size, overlap);
  set.chunks.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t begin = i * stride;
    const std::size_t end = std::min(begin + chunk_size, tokens.size());
    set.chunks.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                            tokens.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return set;
}

// Text preparation settings shared by query and key encoding.
struct TextConfig {
  InputTemplate query_template = DefaultQueryTemplate();
  InputTemplate key_template = DefaultKeyTemplate();
  std::size_t chunk_size = 512;
  std::size_t chunk_overlap = 0;
};

}  // namespace refrank

#endif  // REFRANK_TEXTPREP_HPP_
