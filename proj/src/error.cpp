#include "polyneck/error.hpp"

namespace polyneck {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::CodimensionTooSmall: return "CodimensionTooSmall";
    case ErrorCode::ZeroScalarCurvature: return "ZeroScalarCurvature";
    case ErrorCode::IncompatibleModels: return "IncompatibleModels";
    case ErrorCode::OutOfChart: return "OutOfChart";
    case ErrorCode::StencilOutOfChart: return "StencilOutOfChart";
    case ErrorCode::IllConditionedMetric: return "IllConditionedMetric";
    case ErrorCode::NonpositiveConformalFactor: return "NonpositiveConformalFactor";
    case ErrorCode::OutOfNeck: return "OutOfNeck";
    case ErrorCode::NotResolved: return "NotResolved";
    case ErrorCode::DeltaOutOfRange: return "DeltaOutOfRange";
    case ErrorCode::AlphaTooSmall: return "AlphaTooSmall";
    case ErrorCode::EpsilonTooLarge: return "EpsilonTooLarge";
    case ErrorCode::NonSymmetricModel: return "NonSymmetricModel";
    case ErrorCode::NearSingularOperator: return "NearSingularOperator";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::IterateOutOfBall: return "IterateOutOfBall";
    case ErrorCode::IterationDiverged: return "IterationDiverged";
  }
  return "Unknown";
}

bool is_precondition_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::UnknownModel:
    case ErrorCode::CodimensionTooSmall:
    case ErrorCode::ZeroScalarCurvature:
    case ErrorCode::IncompatibleModels:
    case ErrorCode::DeltaOutOfRange:
    case ErrorCode::AlphaTooSmall:
    case ErrorCode::EpsilonTooLarge:
    case ErrorCode::NonSymmetricModel:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace polyneck
