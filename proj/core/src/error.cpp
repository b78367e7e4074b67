#include "hraml/error.hpp"

namespace hraml {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateTargets: return "DegenerateTargets";
    case ErrorCode::BadArchitecture: return "BadArchitecture";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TraceMismatch: return "TraceMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::EmptyPairs: return "EmptyPairs";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NoValidSamples: return "NoValidSamples";
    case ErrorCode::NotADistribution: return "NotADistribution";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace hraml
