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

#ifndef REFRANK_EMBED_HPP_
#define REFRANK_EMBED_HPP_

#include <zlib.h>

#include <Eigen/Dense>
#include <bit>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "refrank/corpus.hpp"
#include "refrank/error.hpp"
#include "refrank/textprep.hpp"

namespace refrank {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// One chunk embedding per row.
using ChunkMatrix = Eigen::MatrixXd;

// Anything that maps a token sequence to a fixed-dimension vector.
template <typename E>
concept Embedder = requires(const E& e, const TokenSequence& tokens) {
  { e.dim() } -> std::convertible_to<std::size_t>;
  { e.Embed(tokens) } -> std::convertible_to<Vector>;
};

enum class EmbedderKind { kReferenceHash, kExternalFile };

inline std::string_view EmbedderKindName(EmbedderKind kind) {
  return kind == EmbedderKind::kReferenceHash ? "reference-hash"
                                              : "external-file";
}

inline EmbedderKind ParseEmbedderKind(std::string_view name) {
  if (name == "reference-hash") return EmbedderKind::kReferenceHash;
  if (name == "external-file") return EmbedderKind::kExternalFile;
  throw Error(ErrorCode::kUsage, "unknown embedder kind '" + std::string(name) +
                                     "'");
}

struct EmbedderSpec {
  EmbedderKind kind = EmbedderKind::kReferenceHash;
  std::size_t dim = 384;
  std::uint64_t seed = 0;
  // external-file only: stores holding talk chunk rows ("<talk>#<j>") and
  // key rows ("<paper>", plus "abstract:<talk>" for domain adaptation).
  std::string query_store;
  std::string key_store;

  void Validate() const {
    if (dim < 2) throw Error(ErrorCode::kUsage, "embedder dim must be >= 2");
  }
};

namespace detail {

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t HashToken(std::string_view token, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ SplitMix64(seed);
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return SplitMix64(h);
}

}  // namespace detail

// Signed feature hashing of a bag of tokens, L2-normalized.
class HashEmbedder {
 public:
  explicit HashEmbedder(std::size_t dim = 384, std::uint64_t seed = 0)
      : dim_(dim), seed_(seed) {
    if (dim_ < 2) throw Error(ErrorCode::kUsage, "embedder dim must be >= 2");
  }
  explicit HashEmbedder(const EmbedderSpec& spec)
      : HashEmbedder(spec.dim, spec.seed) {}

  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

  // Zero vector for an empty sequence.
  Vector Embed(const TokenSequence& tokens) const {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dim_));
    for (const auto& token : tokens) {
      const std::uint64_t h = detail::HashToken(token, seed_);
      const auto bucket = static_cast<Eigen::Index>(h % dim_);
      v[bucket] += (h >> 63) ? -1.0 : 1.0;
    }
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
    return v;
  }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

template <Embedder E>
Vector EmbedText(std::string_view text, const E& embedder) {
  return embedder.Embed(Tokenize(text));
}

// One row per chunk, chunk order preserved.
template <Embedder E>
ChunkMatrix EmbedChunks(const ChunkSet& chunks, const E& embedder) {
  if (chunks.chunks.empty()) {
    throw Error(ErrorCode::kEmptyChunkList, "no chunks to embed");
  }
  ChunkMatrix out(static_cast<Eigen::Index>(chunks.chunks.size()),
                  static_cast<Eigen::Index>(embedder.dim()));
  for (std::size_t i = 0; i < chunks.chunks.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
        embedder.Embed(chunks.chunks[i]).transpose();
  }
  return out;
}

inline constexpr std::uint16_t kStoreFormatVersion = 1;
inline constexpr char kStoreMagic[4] = {'R', 'F', 'R', 'K'};
inline constexpr std::size_t kStoreHeaderBytes = 4 + 2 + 4 + 8;

// Dense float32 rows keyed by unique ids, write-once.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<float>& values() const { return values_; }

  nlohmann::ordered_json& metadata() { return metadata_; }
  const nlohmann::ordered_json& metadata() const { return metadata_; }

  void Append(const std::string& id, std::span<const float> row) {
    if (row.size() != dim_) {
      throw Error(ErrorCode::kDimMismatch,
                  "row '" + id + "' has dim " + std::to_string(row.size()) +
                      ", store dim " + std::to_string(dim_));
    }
    if (!index_.emplace(id, ids_.size()).second) {
      throw Error(ErrorCode::kDuplicateId, id);
    }
    ids_.push_back(id);
    values_.insert(values_.end(), row.begin(), row.end());
  }

  void Append(const std::string& id, const Vector& row) {
    std::vector<float> tmp(static_cast<std::size_t>(row.size()));
    for (Eigen::Index i = 0; i < row.size(); ++i) {
      tmp[static_cast<std::size_t>(i)] = static_cast<float>(row[i]);
    }
    Append(id, std::span<const float>(tmp));
  }

  std::span<const float> Row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }

  std::optional<std::size_t> Find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // Row as a double vector; UnknownId if absent.
  Vector Lookup(std::string_view id) const {
    auto row = Find(id);
    if (!row) throw Error(ErrorCode::kUnknownId, "no embedding for '" +
                                                     std::string(id) + "'");
    return RowVector(*row);
  }

  Vector RowVector(std::size_t i) const {
    Vector v(static_cast<Eigen::Index>(dim_));
    auto row = Row(i);
    for (std::size_t d = 0; d < dim_; ++d) {
      v[static_cast<Eigen::Index>(d)] = row[d];
    }
    return v;
  }

  bool operator==(const EmbeddingStore& other) const {
    if (dim_ != other.dim_ || ids_ != other.ids_) return false;
    if (values_.size() != other.values_.size()) return false;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (std::bit_cast<std::uint32_t>(values_[i]) !=
          std::bit_cast<std::uint32_t>(other.values_[i])) {
        return false;
      }
    }
    return true;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> values_;
  std::unordered_map<std::string, std::size_t> index_;
  nlohmann::ordered_json metadata_ = nlohmann::ordered_json::object();
};

// Concatenates stores of the same dimension; ids must stay unique.
inline EmbeddingStore MergeStores(const EmbeddingStore& a,
                                  const EmbeddingStore& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimMismatch, std::to_string(a.dim()) + " vs " +
                                             std::to_string(b.dim()));
  }
  EmbeddingStore out(a.dim());
  out.metadata() = a.metadata();
  for (const EmbeddingStore* s : {&a, &b}) {
    for (std::size_t i = 0; i < s->size(); ++i) {
      out.Append(s->ids()[i], s->Row(i));
    }
  }
  return out;
}

inline std::uint32_t Crc32(std::span<const unsigned char> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - offset, 1u << 30);
    crc = crc32(crc, bytes.data() + offset, static_cast<uInt>(n));
    offset += n;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace detail {

template <typename T>
void PutLittleEndian(std::vector<unsigned char>& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<unsigned char>((value >> (8 * i)) & 0xff));
  }
}

template <typename T>
T GetLittleEndian(std::span<const unsigned char> in, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<T>(in[offset + i]) << (8 * i));
  }
  return value;
}

inline std::vector<unsigned char> ReadAllBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void WriteAllBytes(const std::filesystem::path& path,
                          std::span<const unsigned char> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace detail

// Serialized matrix: magic, version u16, dim u32, count u64, float32 rows,
// then CRC32 of every preceding byte. All little-endian.
inline std::vector<unsigned char> EncodeMatrix(std::size_t dim, std::size_t count,
                                               std::span<const float> values) {
  std::vector<unsigned char> bytes;
  bytes.reserve(kStoreHeaderBytes + values.size() * 4 + 4);
  bytes.insert(bytes.end(), std::begin(kStoreMagic), std::end(kStoreMagic));
  detail::PutLittleEndian<std::uint16_t>(bytes, kStoreFormatVersion);
  detail::PutLittleEndian<std::uint32_t>(bytes, static_cast<std::uint32_t>(dim));
  detail::PutLittleEndian<std::uint64_t>(bytes, static_cast<std::uint64_t>(count));
  for (float f : values) {
    detail::PutLittleEndian<std::uint32_t>(bytes, std::bit_cast<std::uint32_t>(f));
  }
  detail::PutLittleEndian<std::uint32_t>(bytes, Crc32(bytes));
  return bytes;
}

struct DecodedMatrix {
  std::size_t dim = 0;
  std::size_t count = 0;
  std::vector<float> values;
};

inline DecodedMatrix DecodeMatrix(std::span<const unsigned char> bytes,
                                  const std::string& source) {
  if (bytes.size() < 4 ||
      !std::equal(std::begin(kStoreMagic), std::end(kStoreMagic), bytes.begin())) {
    if (bytes.size() < 4) {
      throw Error(ErrorCode::kChecksumMismatch, source + ": truncated header");
    }
    throw Error(ErrorCode::kFormatVersionMismatch, source + ": bad magic");
  }
  if (bytes.size() < kStoreHeaderBytes + 4) {
    throw Error(ErrorCode::kChecksumMismatch, source + ": truncated header");
  }
  const auto version = detail::GetLittleEndian<std::uint16_t>(bytes, 4);
  if (version != kStoreFormatVersion) {
    throw Error(ErrorCode::kFormatVersionMismatch,
                source + ": version " + std::to_string(version));
  }
  DecodedMatrix m;
  m.dim = detail::GetLittleEndian<std::uint32_t>(bytes, 6);
  m.count = detail::GetLittleEndian<std::uint64_t>(bytes, 10);
  const std::size_t payload = m.dim * m.count * 4;
  if (bytes.size() != kStoreHeaderBytes + payload + 4) {
    throw Error(ErrorCode::kChecksumMismatch,
                source + ": size " + std::to_string(bytes.size()) +
                    " does not match header");
  }
  const auto stored = detail::GetLittleEndian<std::uint32_t>(
      bytes, kStoreHeaderBytes + payload);
  if (stored != Crc32(bytes.first(kStoreHeaderBytes + payload))) {
    throw Error(ErrorCode::kChecksumMismatch, source + ": crc mismatch");
  }
  m.values.resize(m.dim * m.count);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    m.values[i] = std::bit_cast<float>(
        detail::GetLittleEndian<std::uint32_t>(bytes, kStoreHeaderBytes + 4 * i));
  }
  return m;
}

inline std::filesystem::path IdsSidecar(std::filesystem::path path) {
  return path.replace_extension(".ids.jsonl");
}

inline std::filesystem::path MetaSidecar(std::filesystem::path path) {
  return path.replace_extension(".meta.json");
}

// Writes the binary matrix at `path`, ids to <stem>.ids.jsonl and provenance
// to <stem>.meta.json.
inline void SaveStore(const EmbeddingStore& store,
                      const std::filesystem::path& path) {
  detail::WriteAllBytes(path, EncodeMatrix(store.dim(), store.size(), store.values()));
  std::ofstream ids(IdsSidecar(path), std::ios::binary);
  if (!ids) throw Error(ErrorCode::kIo, "cannot write " + IdsSidecar(path).string());
  for (std::size_t i = 0; i < store.size(); ++i) {
    nlohmann::ordered_json row;
    row["row"] = i;
    row["id"] = store.ids()[i];
    ids << row.dump() << '\n';
  }
  std::ofstream meta(MetaSidecar(path), std::ios::binary);
  meta << store.metadata().dump(2) << '\n';
}

inline EmbeddingStore LoadStore(const std::filesystem::path& path) {
  const auto bytes = detail::ReadAllBytes(path);
  DecodedMatrix m = DecodeMatrix(bytes, path.string());
  EmbeddingStore store(m.dim);
  const auto ids_path = IdsSidecar(path);
  auto in = detail::OpenForRead(ids_path);
  std::vector<std::string> ids;
  detail::ForEachJsonLine(in, ids_path.string(), [&](const nlohmann::json& obj,
                                                     std::size_t line) {
    const auto& row = detail::RequireField(obj, "row", ids_path.string(), line);
    if (!row.is_number_integer() || row.get<long long>() !=
                                        static_cast<long long>(ids.size())) {
      detail::Malformed(ids_path.string(), line, "rows must be 0..count-1 in order");
    }
    ids.push_back(detail::RequireString(obj, "id", ids_path.string(), line));
  });
  if (ids.size() != m.count) {
    throw Error(ErrorCode::kMalformedRecord,
                ids_path.string() + ": " + std::to_string(ids.size()) +
                    " ids for " + std::to_string(m.count) + " rows");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    store.Append(ids[i], std::span<const float>(m.values.data() + i * m.dim, m.dim));
  }
  if (std::filesystem::exists(MetaSidecar(path))) {
    std::ifstream meta(MetaSidecar(path));
    try {
      store.metadata() = nlohmann::ordered_json::parse(meta);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kMalformedRecord,
                  MetaSidecar(path).string() + ": " + e.what());
    }
  }
  return store;
}

}  // namespace refrank

#endif  // REFRANK_EMBED_HPP_
