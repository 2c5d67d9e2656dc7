// Copyright 2026 The latprune Authors
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

#ifndef LATPRUNE_ERROR_H_
#define LATPRUNE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace latprune {

enum class ErrorCode {
  kInvalidInput,
  kInfeasible,
  kVerificationFailed,
};

// Every failure surfaced by the library is an Error. The code decides the
// CLI exit status; the message is a single line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void ThrowInvalid(const std::string& message) {
  throw Error(ErrorCode::kInvalidInput, message);
}

[[noreturn]] inline void ThrowInfeasible(const std::string& message) {
  throw Error(ErrorCode::kInfeasible, message);
}

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput:
      return "invalid-input";
    case ErrorCode::kInfeasible:
      return "infeasible";
    case ErrorCode::kVerificationFailed:
      return "verification-failed";
  }
  return "unknown";
}

}  // namespace latprune

#endif  // LATPRUNE_ERROR_H_
