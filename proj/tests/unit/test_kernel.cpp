#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "contpol/errors.hpp"
#include "contpol/kernel.hpp"
#include "oracles.hpp"

namespace contpol {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(Kernel, ValueAtOriginAndConstants) {
  EXPECT_DOUBLE_EQ(eval_kernel(0.0), 3.0 / (2.0 * kPi));
  const KernelConstants c = kernel_constants();
  EXPECT_DOUBLE_EQ(c.l2_norm_sq, 4.0 / (3.0 * kPi));
  EXPECT_DOUBLE_EQ(c.sup_abs, 3.0 / (2.0 * kPi));
}

TEST(Kernel, MatchesLongDoubleClosedForm) {
  for (double u : {0.01, 0.05, 0.3, 0.5, 1.0, 2.0, kPi, 5.5, 10.0, 31.7, 250.0}) {
    const double ref = oracle::kernel_closed_form(u);
    EXPECT_NEAR(eval_kernel(u), ref, 1e-13 * std::max(1.0, std::fabs(ref))) << u;
    EXPECT_DOUBLE_EQ(eval_kernel(-u), eval_kernel(u));
  }
  // K(pi) = (cos pi - cos 2 pi) / pi^3 = -2 / pi^3.
  EXPECT_NEAR(eval_kernel(kPi), -2.0 / (kPi * kPi * kPi), 1e-15);
}

TEST(Kernel, ContinuousAtSeriesThreshold) {
  // Adjacent doubles on either side of each switch point between series and closed form.
  for (double u0 : {1e-3, 0.5}) {
    const double below = std::nextafter(u0, 0.0);
    EXPECT_LE(std::fabs(eval_kernel(below) - eval_kernel(u0)), 1e-12);
    EXPECT_LE(std::fabs(kernel_derivative(below) - kernel_derivative(u0)), 1e-12);
  }
}

TEST(Kernel, DerivativeMatchesCentralDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-40.0, 40.0);
  for (int i = 0; i < 200; ++i) {
    const double u = unif(rng);
    const double step = 1e-5;
    const double fd = (eval_kernel(u + step) - eval_kernel(u - step)) / (2.0 * step);
    EXPECT_NEAR(kernel_derivative(u), fd, 1e-8) << u;
    double v = 0.0, d = 0.0;
    kernel_with_derivative(u, v, d);
    EXPECT_DOUBLE_EQ(v, eval_kernel(u));
    EXPECT_DOUBLE_EQ(d, kernel_derivative(u));
  }
  EXPECT_EQ(kernel_derivative(0.0), 0.0);
  EXPECT_DOUBLE_EQ(kernel_derivative(-1.3), -kernel_derivative(1.3));
}

TEST(Kernel, IntegratesToOneWithKnownSquareNorm) {
  const auto k = [](double u) { return eval_kernel(u); };
  EXPECT_NEAR(oracle::kernel_line_integral(k, [](double v) { return v; }), 1.0, 1e-6);
  EXPECT_NEAR(oracle::kernel_line_integral(k, [](double v) { return v * v; }), 4.0 / (3.0 * kPi),
              1e-6);
}

TEST(Kernel, FourierTransformIsTrapezoid) {
  EXPECT_EQ(kernel_ft(0.0), 1.0);
  EXPECT_EQ(kernel_ft(-0.7), 1.0);
  EXPECT_DOUBLE_EQ(kernel_ft(1.5), 0.5);
  EXPECT_DOUBLE_EQ(kernel_ft(-1.25), 0.75);
  EXPECT_EQ(kernel_ft(2.0), 0.0);
  EXPECT_EQ(kernel_ft(9.0), 0.0);
}

TEST(Kernel, SampledFftReproducesTrapezoid) {
  const auto ft = oracle::sampled_kernel_ft([](double u) { return eval_kernel(u); }, 1 << 16, 0.05);
  double worst = 0.0;
  for (const auto& [xi, value] : ft) {
    if (xi > 6.0) break;
    worst = std::max(worst, std::abs(value - std::complex<double>(kernel_ft(xi), 0.0)));
  }
  EXPECT_LE(worst, 1e-3);
}

TEST(Kernel, RejectsNonFiniteInput) {
  try {
    eval_kernel(std::nan(""));
    FAIL() << "expected NonFiniteInput";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonFiniteInput);
  }
  EXPECT_THROW(kernel_derivative(INFINITY), Error);
}

}  // namespace
}  // namespace contpol
