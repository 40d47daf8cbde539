#include "dtoda/error.hpp"

namespace dtoda {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::OutOfAnnulus: return "OutOfAnnulus";
    case ErrorCode::NonPositiveDensity: return "NonPositiveDensity";
    case ErrorCode::InsideDisk: return "InsideDisk";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::PointInside: return "PointInside";
    case ErrorCode::CoincidentPoints: return "CoincidentPoints";
    case ErrorCode::DegenerateTangent: return "DegenerateTangent";
    case ErrorCode::BoundaryOutsideAnnulus: return "BoundaryOutsideAnnulus";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::TooCloseToBoundary: return "TooCloseToBoundary";
    case ErrorCode::ToleranceNotReached: return "ToleranceNotReached";
    case ErrorCode::OutOfAdmissibleInterval: return "OutOfAdmissibleInterval";
    case ErrorCode::StencilInfeasible: return "StencilInfeasible";
    case ErrorCode::NoiseFloor: return "NoiseFloor";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::LeftAnnulus: return "LeftAnnulus";
    case ErrorCode::UnivalenceLost: return "UnivalenceLost";
    case ErrorCode::AdmissibleIntervalExceeded: return "AdmissibleIntervalExceeded";
    case ErrorCode::SelfIntersection: return "SelfIntersection";
    case ErrorCode::FitResidualTooLarge: return "FitResidualTooLarge";
    case ErrorCode::BranchAmbiguity: return "BranchAmbiguity";
    case ErrorCode::NonMonotone: return "NonMonotone";
    case ErrorCode::UnsupportedFamily: return "UnsupportedFamily";
    case ErrorCode::NotStarShaped: return "NotStarShaped";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace dtoda
