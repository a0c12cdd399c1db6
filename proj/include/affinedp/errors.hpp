// Copyright 2026 The AffineDP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AFFINEDP_ERRORS_HPP_
#define AFFINEDP_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace affinedp {

// Error taxonomy shared by all modules. The CLI maps code names to stderr
// and exit code 2, so names are part of the external contract.
enum class ErrorCode {
  kRankDeficient,
  kEntryIdentifiable,
  kNoBasis,
  kIndexInBasis,
  kPointOffManifold,
  kNonPositiveY,
  kNoConvergence,
  kRankDeficientLambda,
  kDeltaZero,
  kEpsilonZero,
  kDimensionMismatch,
  kUnobservable,
  kSingularA,
  kIllConditioned,
  kDisconnected,
  kNumericalBlowup,
  kInvalidGraph,
  kInvalidBudget,
  kInvalidArgument,
};

inline const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kEntryIdentifiable: return "EntryIdentifiable";
    case ErrorCode::kNoBasis: return "NoBasis";
    case ErrorCode::kIndexInBasis: return "IndexInBasis";
    case ErrorCode::kPointOffManifold: return "PointOffManifold";
    case ErrorCode::kNonPositiveY: return "NonPositiveY";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kRankDeficientLambda: return "RankDeficientLambda";
    case ErrorCode::kDeltaZero: return "DeltaZero";
    case ErrorCode::kEpsilonZero: return "EpsilonZero";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kUnobservable: return "Unobservable";
    case ErrorCode::kSingularA: return "SingularA";
    case ErrorCode::kIllConditioned: return "IllConditioned";
    case ErrorCode::kDisconnected: return "Disconnected";
    case ErrorCode::kNumericalBlowup: return "NumericalBlowup";
    case ErrorCode::kInvalidGraph: return "InvalidGraph";
    case ErrorCode::kInvalidBudget: return "InvalidBudget";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, long index = -1)
      : std::runtime_error(std::string(error_name(code)) + ": " + what),
        code_(code),
        index_(index) {}

  ErrorCode code() const { return code_; }
  const char* name() const { return error_name(code_); }
  // Offending index for EntryIdentifiable / IllConditioned, -1 otherwise.
  long index() const { return index_; }

 private:
  ErrorCode code_;
  long index_;
};

}  // namespace affinedp

#endif  // AFFINEDP_ERRORS_HPP_
