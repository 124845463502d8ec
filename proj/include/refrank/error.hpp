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

#ifndef REFRANK_ERROR_HPP_
#define REFRANK_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace refrank {

enum class ErrorCode {
  // Data errors.
  kMalformedRecord,
  kDanglingReference,
  kDuplicateId,
  kEmptySplit,
  kMissingField,
  kEmptyInput,
  kDimMismatch,
  kFormatVersionMismatch,
  kChecksumMismatch,
  kEmptyChunkList,
  kMissingParams,
  kShapeMismatch,
  kTalkWithoutPositives,
  kEmptyIndex,
  kEmptyEligibleSet,
  kEmptyGold,
  kMissingJudgment,
  kUnknownId,
  kIo,
  // Numeric errors.
  kNonFiniteScore,
  kNonFiniteLoss,
  // Caller errors.
  kUsage,
};

enum class ErrorCategory { kData, kNumeric, kUsage };

inline constexpr std::string_view ErrorName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kDanglingReference: return "DanglingReference";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kEmptySplit: return "EmptySplit";
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kFormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kEmptyChunkList: return "EmptyChunkList";
    case ErrorCode::kMissingParams: return "MissingParams";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kTalkWithoutPositives: return "TalkWithoutPositives";
    case ErrorCode::kEmptyIndex: return "EmptyIndex";
    case ErrorCode::kEmptyEligibleSet: return "EmptyEligibleSet";
    case ErrorCode::kEmptyGold: return "EmptyGold";
    case ErrorCode::kMissingJudgment: return "MissingJudgment";
    case ErrorCode::kUnknownId: return "UnknownId";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kNonFiniteScore: return "NonFiniteScore";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kUsage: return "UsageError";
  }
  return "Unknown";
}

inline constexpr ErrorCategory CategoryOf(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonFiniteScore:
    case ErrorCode::kNonFiniteLoss:
      return ErrorCategory::kNumeric;
    case ErrorCode::kUsage:
      return ErrorCategory::kUsage;
    default:
      return ErrorCategory::kData;
  }
}

// All library failures are reported through this exception type. The code
// identifies the failure; the message carries the offending id, line or
// field.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(ErrorName(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return CategoryOf(code_); }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace refrank

#endif  // REFRANK_ERROR_HPP_
