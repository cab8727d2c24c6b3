// Copyright 2026 The benchmix Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace benchmix {

// Stable, machine-readable error categories. The CLI prints these verbatim in
// its error record, so existing names must not change.
enum class ErrorKind {
  kMalformedRecord,
  kDuplicateId,
  kInvalidEntry,
  kMissingEmbedding,
  kDimensionMismatch,
  kNonFiniteEmbedding,
  kProviderUnavailable,
  kNoEligibleEntry,
  kInvalidArgument,
  kInfeasibleSampling,
  kMissingResponse,
  kJudgeFailure,
  kUndefinedStatistic,
  kIo,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMalformedRecord: return "malformed_record";
    case ErrorKind::kDuplicateId: return "duplicate_id";
    case ErrorKind::kInvalidEntry: return "invalid_entry";
    case ErrorKind::kMissingEmbedding: return "missing_embedding";
    case ErrorKind::kDimensionMismatch: return "dimension_mismatch";
    case ErrorKind::kNonFiniteEmbedding: return "non_finite_embedding";
    case ErrorKind::kProviderUnavailable: return "provider_unavailable";
    case ErrorKind::kNoEligibleEntry: return "no_eligible_entry";
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kInfeasibleSampling: return "infeasible_sampling";
    case ErrorKind::kMissingResponse: return "missing_response";
    case ErrorKind::kJudgeFailure: return "judge_failure";
    case ErrorKind::kUndefinedStatistic: return "undefined_statistic";
    case ErrorKind::kIo: return "io_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Transient failures (network, overloaded service) that a caller may retry.
  bool retryable() const noexcept {
    return kind_ == ErrorKind::kProviderUnavailable ||
           kind_ == ErrorKind::kJudgeFailure;
  }

 private:
  ErrorKind kind_;
};

}  // namespace benchmix
