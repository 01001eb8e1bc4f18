#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uvgrasp {

enum class ErrorCode {
  InvalidArgument,
  NonPositiveDepth,
  EmptyMesh,
  NotWatertight,
  ParseError,
  MissingUV,
  EmptyResolution,
  NoValidSupport,
  DimensionMismatch,
  CountMismatch,
  TooSmall,
  TooFewSamples,
  RankDeficient,
  NonFiniteObjective,
  UnknownKind,
  InfeasiblePenetration,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message)
    , code_(code)
  {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void
fail(ErrorCode code, const std::string& message)
{
  throw Error(code, message);
}

} // namespace uvgrasp
