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

#ifndef REFRANK_TESTS_TEST_UTIL_HPP_
#define REFRANK_TESTS_TEST_UTIL_HPP_

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <unistd.h>

#include "refrank/refrank.hpp"

namespace refrank::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("refrank_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Runs `fn` and returns the refrank error code it throws.
inline std::optional<ErrorCode> CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline Matrix RandomMatrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                           double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

inline Vector RandomVector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  return RandomMatrix(rng, n, 1, scale).col(0);
}

inline TalkRecord MakeTalk(std::string id, int year, std::string transcript,
                           std::string title = "A talk") {
  TalkRecord t;
  t.id = std::move(id);
  t.title = std::move(title);
  t.year = year;
  t.transcript = std::move(transcript);
  return t;
}

inline PaperRecord MakePaper(std::string id, int year, std::string abstract = "some abstract",
                             std::string title = "A paper") {
  PaperRecord p;
  p.id = std::move(id);
  p.title = std::move(title);
  p.abstract = std::move(abstract);
  p.year = year;
  return p;
}

}  // namespace refrank::testing

#endif  // REFRANK_TESTS_TEST_UTIL_HPP_
