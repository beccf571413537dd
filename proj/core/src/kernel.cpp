#include "contpol/kernel.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "contpol/errors.hpp"

namespace contpol {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSeriesK = 1e-3;
constexpr double kSeriesDK = 0.5;
constexpr int kTerms = 12;

// Taylor coefficients of pi * K(u) in powers of u^2:
// (-1)^(j+1) (4^j - 1) / (2j)!, j = 1..kTerms.
constexpr std::array<double, kTerms> series_coefficients() {
  std::array<double, kTerms> c{};
  double four_j = 1.0;
  double fact = 1.0;
  for (int j = 1; j <= kTerms; ++j) {
    four_j *= 4.0;
    fact *= static_cast<double>((2 * j - 1) * (2 * j));
    c[j - 1] = ((j % 2 == 1) ? 1.0 : -1.0) * (four_j - 1.0) / fact;
  }
  return c;
}

constexpr auto kCoef = series_coefficients();

double kernel_series(double u) noexcept {
  const double u2 = u * u;
  double acc = 0.0;
  for (int j = 3; j >= 0; --j) acc = acc * u2 + kCoef[j];
  return acc / kPi;
}

double derivative_series(double u) noexcept {
  const double u2 = u * u;
  double acc = 0.0;
  for (int j = kTerms - 1; j >= 1; --j) acc = acc * u2 + kCoef[j] * static_cast<double>(2 * j);
  return acc * u / kPi;
}

void check_finite(double u) {
  if (!std::isfinite(u)) throw Error(Errc::NonFiniteInput, "kernel argument is not finite");
}

}  // namespace

void kernel_with_derivative(double u, double& value, double& derivative) noexcept {
  const double au = std::fabs(u);
  // N(u) = cos u - cos 2u = 2 s^2 (3 - 4 s^2), N'(u) = 2 s c (3 - 8 s^2), s = sin(u/2).
  const double s = std::sin(0.5 * u);
  const double c = std::cos(0.5 * u);
  const double s2 = s * s;
  const double n = 2.0 * s2 * (3.0 - 4.0 * s2);
  if (au < kSeriesK) {
    value = kernel_series(u);
  } else {
    value = n / (kPi * u * u);
  }
  if (au < kSeriesDK) {
    derivative = derivative_series(u);
  } else {
    const double dn = 2.0 * s * c * (3.0 - 8.0 * s2);
    derivative = (u * dn - 2.0 * n) / (kPi * u * u * u);
  }
}

double eval_kernel(double u) {
  check_finite(u);
  if (std::fabs(u) < kSeriesK) return kernel_series(u);
  const double s = std::sin(0.5 * u);
  const double s2 = s * s;
  return 2.0 * s2 * (3.0 - 4.0 * s2) / (kPi * u * u);
}

double kernel_derivative(double u) {
  check_finite(u);
  double v = 0.0, d = 0.0;
  kernel_with_derivative(u, v, d);
  return d;
}

double kernel_ft(double xi) {
  check_finite(xi);
  const double a = std::fabs(xi);
  if (a <= 1.0) return 1.0;
  if (a < 2.0) return 2.0 - a;
  return 0.0;
}

KernelConstants kernel_constants() noexcept { return {4.0 / (3.0 * kPi), 3.0 / (2.0 * kPi)}; }

}  // namespace contpol
