#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace contpol {

/// Machine-readable error categories raised by the library.
enum class Errc {
  MissingColumn,
  NonFiniteValue,
  TooFewRows,
  ConstantCovariate,
  NonFiniteInput,
  DimensionMismatch,
  ContinuityViolation,
  EmptyObjective,
  NonPositiveBandwidth,
  BadFoldCount,
  FoldTooSmall,
  MissingFoldFit,
  BadSmoothnessOrder,
  DensityNotBoundedAway,
  EmptyCurve,
  BadRho,
  EmptyGrid,
  NoAdmissiblePair,
  SplitTooSmall,
  DimensionTooLarge,
  MissingPropensity,
  InvalidArgument,
  IoError,
  NumericalFailure,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace contpol
