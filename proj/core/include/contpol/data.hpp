#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace contpol {

/// A single record (y, t, x) in the caller's coordinates.
struct Observation {
  double y = 0.0;
  double t = 0.0;
  std::vector<double> x;
};

/// Per-covariate affine map: raw = lo + (hi - lo) * scaled.
struct CovariateScale {
  double lo = 0.0;
  double hi = 1.0;
};

/// Column-major storage of outcomes, treatments and a row-major covariate block.
class Dataset {
 public:
  Dataset() = default;

  /// Validates finiteness and sizes. `x` is row-major with `d_x` columns.
  Dataset(std::vector<double> y, std::vector<double> t, std::vector<double> x, std::size_t d_x);

  static Dataset from_observations(std::span<const Observation> rows, std::size_t d_x);

  std::size_t size() const noexcept { return y_.size(); }
  std::size_t d_x() const noexcept { return d_x_; }

  std::span<const double> y() const noexcept { return y_; }
  std::span<const double> t() const noexcept { return t_; }
  std::span<const double> x_data() const noexcept { return x_; }
  std::span<const double> x(std::size_t i) const noexcept { return {x_.data() + i * d_x_, d_x_}; }

  Observation observation(std::size_t i) const;

  /// Covariates of row i mapped back to the original (pre-rescaling) coordinates.
  std::vector<double> raw_x(std::size_t i) const;

  double t_lo() const noexcept { return t_lo_; }
  double t_hi() const noexcept { return t_hi_; }
  double m_bound() const noexcept { return m_bound_; }

  const std::vector<CovariateScale>& x_scale() const noexcept { return x_scale_; }
  bool rescaled() const noexcept { return rescaled_; }

  /// Rows selected by `rows`, in that order. Scale metadata is carried over.
  Dataset subset(std::span<const std::size_t> rows) const;

 private:
  friend Dataset rescale_covariates(const Dataset& ds);

  void refresh_summaries();

  std::vector<double> y_;
  std::vector<double> t_;
  std::vector<double> x_;
  std::size_t d_x_ = 0;
  double t_lo_ = 0.0;
  double t_hi_ = 0.0;
  double m_bound_ = 0.0;
  std::vector<CovariateScale> x_scale_;
  bool rescaled_ = false;
};

/// Reads a CSV whose header is exactly `y,t,x1,...,x<d_x>`.
/// Throws Error with MissingColumn, NonFiniteValue, TooFewRows, ConstantCovariate or IoError.
Dataset load_csv(const std::string& path, std::size_t d_x, std::size_t min_rows = 2);

/// Parses CSV text with the same rules as load_csv.
Dataset parse_csv(const std::string& text, std::size_t d_x, std::size_t min_rows = 2);

/// Writes `y,t,x1..xd` with round-trip precision (raw covariate coordinates).
std::string to_csv(const Dataset& ds);

/// Maps every covariate column onto [0, 1] by its observed range. Idempotent;
/// the composed map back to raw coordinates is kept in x_scale().
Dataset rescale_covariates(const Dataset& ds);

/// Maps raw covariates into [0, 1] coordinates of `scale` (no clamping).
std::vector<double> apply_scale(std::span<const double> raw_x,
                                std::span<const CovariateScale> scale);

/// Known generalized propensity: g(t, x) = 1 / f(t | x), with x in raw coordinates.
struct PropensityOracle {
  std::function<double(double, std::span<const double>)> inverse_density;
  double f_lower = 0.0;

  double g(double t, std::span<const double> raw_x) const { return inverse_density(t, raw_x); }
};

}  // namespace contpol
