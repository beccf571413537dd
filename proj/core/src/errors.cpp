#include "contpol/errors.hpp"

namespace contpol {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::ConstantCovariate: return "ConstantCovariate";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ContinuityViolation: return "ContinuityViolation";
    case Errc::EmptyObjective: return "EmptyObjective";
    case Errc::NonPositiveBandwidth: return "NonPositiveBandwidth";
    case Errc::BadFoldCount: return "BadFoldCount";
    case Errc::FoldTooSmall: return "FoldTooSmall";
    case Errc::MissingFoldFit: return "MissingFoldFit";
    case Errc::BadSmoothnessOrder: return "BadSmoothnessOrder";
    case Errc::DensityNotBoundedAway: return "DensityNotBoundedAway";
    case Errc::EmptyCurve: return "EmptyCurve";
    case Errc::BadRho: return "BadRho";
    case Errc::EmptyGrid: return "EmptyGrid";
    case Errc::NoAdmissiblePair: return "NoAdmissiblePair";
    case Errc::SplitTooSmall: return "SplitTooSmall";
    case Errc::DimensionTooLarge: return "DimensionTooLarge";
    case Errc::MissingPropensity: return "MissingPropensity";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IoError: return "IoError";
    case Errc::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

}  // namespace contpol
