#include "uvgrasp/error.hpp"

namespace uvgrasp {

std::string_view
to_string(ErrorCode code) noexcept
{
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::NotWatertight: return "NotWatertight";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingUV: return "MissingUV";
    case ErrorCode::EmptyResolution: return "EmptyResolution";
    case ErrorCode::NoValidSupport: return "NoValidSupport";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::InfeasiblePenetration: return "InfeasiblePenetration";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

} // namespace uvgrasp
