// callkit/errors.hpp
//
// Copyright 2026 The callkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace callkit {

enum class ErrorCode {
  io_error,
  bad_format,
  unsupported_encoding,
  empty_signal,
  no_onset,
  degenerate_autocorrelation,
  unstable_model,
  shape_mismatch,
  unvoiced_signal,
  infeasible_perplexity,
  not_finite,
  invalid_argument,
};

const char* error_code_name(ErrorCode code);

/// All library failures throw this; `code()` distinguishes the cause.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::bad_format: return "bad_format";
    case ErrorCode::unsupported_encoding: return "unsupported_encoding";
    case ErrorCode::empty_signal: return "empty_signal";
    case ErrorCode::no_onset: return "no_onset";
    case ErrorCode::degenerate_autocorrelation: return "degenerate_autocorrelation";
    case ErrorCode::unstable_model: return "unstable_model";
    case ErrorCode::shape_mismatch: return "shape_mismatch";
    case ErrorCode::unvoiced_signal: return "unvoiced_signal";
    case ErrorCode::infeasible_perplexity: return "infeasible_perplexity";
    case ErrorCode::not_finite: return "not_finite";
    case ErrorCode::invalid_argument: return "invalid_argument";
  }
  return "unknown";
}

}  // namespace callkit
