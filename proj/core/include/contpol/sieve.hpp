#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "contpol/data.hpp"

namespace contpol {

/// Coefficients of a separable policy, grouped by covariate: theta[p * (k + 1) + j].
struct PolicyParams {
  std::vector<double> theta;
};

/// Position of a scaled covariate value on the hat-function grid of order k:
/// the value is (1 - frac) * theta[index] + frac * theta[index + 1].
struct BasisLocation {
  std::size_t index = 0;
  double frac = 0.0;
};

/// Separable monotone sieve: pi(x) = clamp(sum_p sum_j theta_pj phi_kj(x_p)),
/// phi_kj(x) = max(0, 1 - |k x - j|). Order k = 0 is the constant family.
class MonotoneSeparableFamily {
 public:
  MonotoneSeparableFamily() : MonotoneSeparableFamily(1, 0) {}
  MonotoneSeparableFamily(std::size_t d_x, std::size_t k,
                          double out_lo = -std::numeric_limits<double>::infinity(),
                          double out_hi = std::numeric_limits<double>::infinity());

  std::size_t d_x() const noexcept { return d_x_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t nodes() const noexcept { return k_ + 1; }
  std::size_t dim() const noexcept { return (k_ + 1) * d_x_; }
  double out_lo() const noexcept { return out_lo_; }
  double out_hi() const noexcept { return out_hi_; }

  /// VC-subgraph dimension bound (k + 1) d_x.
  std::size_t vc_bound() const noexcept { return dim(); }

  /// Locates a covariate value; values outside [0, 1] are clamped first.
  BasisLocation locate(double x) const noexcept;

  /// Unclamped linear predictor.
  double linear_predictor(const PolicyParams& params, std::span<const double> x) const;

  double evaluate(const PolicyParams& params, std::span<const double> x) const;

 private:
  std::size_t d_x_;
  std::size_t k_;
  double out_lo_;
  double out_hi_;
};

double eval_policy(const MonotoneSeparableFamily& family, const PolicyParams& params,
                   std::span<const double> x);

std::size_t vc_bound(const MonotoneSeparableFamily& family) noexcept;

/// True when every coordinate block of theta is nondecreasing (within tol).
bool is_monotone(const MonotoneSeparableFamily& family, const PolicyParams& params,
                 double tol = 0.0);

/// Continuous piecewise-linear scalar policy with thresholds s_1 < ... < s_k.
class PiecewiseLinearPolicy {
 public:
  /// intercepts/slopes have k + 1 entries; segment j covers [s_j, s_{j+1}).
  PiecewiseLinearPolicy(std::vector<double> thresholds, std::vector<double> intercepts,
                        std::vector<double> slopes, double tol = 1e-9);

  double operator()(double x) const;

  std::size_t pieces() const noexcept { return intercepts_.size(); }

 private:
  std::vector<double> thresholds_;
  std::vector<double> intercepts_;
  std::vector<double> slopes_;
};

/// Sieve coefficients interpolating per-coordinate components at the grid nodes j / k.
PolicyParams interpolate_components(
    const MonotoneSeparableFamily& family,
    std::span<const std::function<double(double)>> components);

/// Mean absolute gap between the sieve interpolant of `components` and the target
/// sum_p component_p(x_p) over the probe points (row-major, d_x columns).
double sieve_approx_gap(const MonotoneSeparableFamily& family,
                        std::span<const std::function<double(double)>> components,
                        std::span<const double> probe_points);

/// A fitted policy together with the covariate map from raw coordinates.
struct FittedPolicy {
  MonotoneSeparableFamily family;
  PolicyParams params;
  std::vector<CovariateScale> x_scale;

  double on_scaled(std::span<const double> x) const { return family.evaluate(params, x); }
  double on_raw(std::span<const double> raw_x) const;
};

}  // namespace contpol
