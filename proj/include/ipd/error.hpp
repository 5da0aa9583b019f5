// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ipd {

enum class ErrorCode {
  OrderingViolation,
  AgentFailure,
  UnknownStrategy,
  InvalidParams,
  TemplateError,
  UnparseableResponse,
  UnknownPlayer,
  InsufficientData,
  NoConvergence,
  MissingSwitchMetadata,
  InsufficientRounds,
  MixedHorizons,
  ConfigError,
  IoError,
  SchemaVersionMismatch,
  MissingSeries,
  SessionNotFound,
  WrongRound,
  SessionFinished,
  SessionStillActive,
  BindError,
};

std::string_view code_name(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ipd
