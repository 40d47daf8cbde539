#pragma once

#include <stdexcept>
#include <string>

namespace dtoda {

enum class ErrorCode {
  InvalidParameter,
  OutOfAnnulus,
  NonPositiveDensity,
  InsideDisk,
  NoConvergence,
  PointInside,
  CoincidentPoints,
  DegenerateTangent,
  BoundaryOutsideAnnulus,
  QuadratureNotConverged,
  TooCloseToBoundary,
  ToleranceNotReached,
  OutOfAdmissibleInterval,
  StencilInfeasible,
  NoiseFloor,
  SingularJacobian,
  MaxIterExceeded,
  LeftAnnulus,
  UnivalenceLost,
  AdmissibleIntervalExceeded,
  SelfIntersection,
  FitResidualTooLarge,
  BranchAmbiguity,
  NonMonotone,
  UnsupportedFamily,
  NotStarShaped,
  ParseError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace dtoda
