#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace polyneck {

enum class ErrorCode {
  InvalidConfig,
  UnknownModel,
  CodimensionTooSmall,
  ZeroScalarCurvature,
  IncompatibleModels,
  OutOfChart,
  StencilOutOfChart,
  IllConditionedMetric,
  NonpositiveConformalFactor,
  OutOfNeck,
  NotResolved,
  DeltaOutOfRange,
  AlphaTooSmall,
  EpsilonTooLarge,
  NonSymmetricModel,
  NearSingularOperator,
  NoConvergence,
  IterateOutOfBall,
  IterationDiverged,
};

std::string_view to_string(ErrorCode code);

// True for errors that signal a rejected configuration or violated
// precondition, as opposed to a numerical failure during a run.
bool is_precondition_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace polyneck
