#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "contpol/data.hpp"
#include "contpol/nuisance.hpp"

namespace contpol {

/// c_r in B(h; r, V) = c_r V h^r for the flat-top kernel.
double bias_constant(std::size_t r);

/// Kernel-bias bound (1 / 2pi) int |1 - K^FT(h xi)| V |xi|^-(r+1) d xi in closed form.
double bias_bound(double h, std::size_t r, double V);

/// Estimated |mu^FT| on a log-uniform frequency grid, already cut at the noise floor.
struct MuFtCurve {
  std::vector<double> xi;
  std::vector<double> magnitude;
  /// Standard error of the estimate (frequency independent).
  double noise_se = 0.0;
  /// Grid length before the noise-floor cut.
  std::size_t full_grid = 0;
};

struct BiasFitConfig {
  std::size_t r_max = 4;
  double gamma = 0.1;
  std::size_t grid_points = 200;
  std::size_t folds = 2;
  /// The curve stops at the first frequency where |mu^FT| < noise_z * noise_se.
  double noise_z = 2.0;
  /// Bins for the mean curve = max(2, round(bin_constant * n^(1/3))).
  double bin_constant = 1.0;
  NuisanceConfig nuisance;
  std::uint64_t seed = 0;
};

/// Smoothness order and envelope constant, inflated by (1 + gamma) when used as a penalty.
struct BiasBoundFit {
  std::size_t r_hat = 1;
  double V_hat = 0.0;
  double gamma = 0.1;
  /// Set when every curve value was zero; then V_hat = 0 and r_hat = r_max.
  bool all_values_zero = false;
  /// False when (r, V) were supplied rather than estimated.
  bool estimated = true;

  double penalty(double h) const { return (1.0 + gamma) * bias_bound(h, r_hat, V_hat); }
};

/// Fourier transform int_lo^hi p(t) e^{i xi t} dt of a profile extended flat to [lo, hi].
std::complex<double> profile_ft(const PiecewiseProfile& profile, double lo, double hi, double xi);

/// Debiased transform of mu = E[Y | T = t] at one frequency, with the plug-in part
/// computed by adaptive quadrature over [t_lo, t_hi]:
/// int mu_hat e^{i xi t} dt + (1/n) sum_i (Y_i - mu_hat(T_i)) / fT_hat(T_i) e^{i xi T_i}.
std::complex<double> mu_ft_debiased(const Dataset& ds, const std::function<double(double)>& mu_hat,
                                    const std::function<double(double)>& fT_hat, double xi);

/// Cross-fitted debiased |mu^FT| on the grid log xi in [0, log^2 n], truncated at the noise floor.
MuFtCurve estimate_mu_ft_curve(const Dataset& ds, const BiasFitConfig& cfg);

/// Smallest envelope A |xi|^-(r+1) above the curve for each r, scored by the area
/// int_0^Lambda (log A - (r + 1) lambda) d lambda with Lambda = log of the last frequency.
BiasBoundFit fit_envelope(std::span<const double> xi, std::span<const double> magnitude,
                          std::size_t r_max, double gamma = 0.1);

BiasBoundFit estimate_bias_fit(const Dataset& ds, const BiasFitConfig& cfg);

}  // namespace contpol
