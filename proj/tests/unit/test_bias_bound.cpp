#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "contpol/bias_bound.hpp"
#include "contpol/errors.hpp"
#include "contpol/simulation.hpp"
#include "oracles.hpp"

namespace contpol {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(BiasBound, ClosedFormMatchesIntegral) {
  for (std::size_t r : {1, 2, 3, 4})
    for (double h : {0.05, 0.1, 0.5}) {
      const double ref = oracle::bias_integral(h, r, 1.7);
      EXPECT_NEAR(bias_bound(h, r, 1.7), ref, 1e-8 * ref) << "r=" << r << " h=" << h;
    }
}

TEST(BiasBound, FrozenConstants) {
  // Values of the oracle integral at V = 1, h = 1.
  EXPECT_NEAR(bias_constant(1), 0.2206356001526516, 1e-15);
  EXPECT_NEAR(bias_constant(2), 0.07957747154594767, 1e-15);
  EXPECT_NEAR(bias_constant(3), 0.03978873577297384, 1e-15);
  EXPECT_NEAR(bias_bound(0.5, 1, 1.0), 0.1103178000763258, 1e-15);
}

TEST(BiasBound, ExactHomogeneity) {
  for (std::size_t r : {1, 2, 3, 4})
    for (double h : {0.013, 0.1, 0.37}) {
      const double s = std::ldexp(1.0, static_cast<int>(r));
      EXPECT_DOUBLE_EQ(bias_bound(2.0 * h, r, 2.5), s * bias_bound(h, r, 2.5));
    }
  EXPECT_EQ(bias_bound(0.3, 2, 0.0), 0.0);
}

TEST(BiasBound, PenaltyInflation) {
  BiasBoundFit fit;
  fit.r_hat = 1;
  fit.V_hat = 1.0;
  fit.gamma = 0.1;
  EXPECT_NEAR(fit.penalty(0.5), 1.1 * 0.1103178000763258, 1e-15);
  fit.gamma = 0.0;
  EXPECT_EQ(fit.penalty(0.5), bias_bound(0.5, 1, 1.0));
  EXPECT_LT(fit.penalty(1e-12), 1e-12);
}

TEST(BiasBound, RejectsBadArguments) {
  EXPECT_THROW(bias_bound(0.0, 1, 1.0), Error);
  try {
    bias_bound(0.1, 0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BadSmoothnessOrder);
  }
}

std::vector<double> log_grid(double lambda_max, std::size_t points) {
  std::vector<double> xi(points);
  for (std::size_t j = 0; j < points; ++j)
    xi[j] = std::exp(lambda_max * static_cast<double>(j) / static_cast<double>(points - 1));
  return xi;
}

double envelope_objective(const std::vector<double>& xi, const std::vector<double>& mag, std::size_t r,
                          double& log_a) {
  log_a = -INFINITY;
  for (std::size_t j = 0; j < xi.size(); ++j)
    log_a = std::max(log_a, std::log(mag[j]) + static_cast<double>(r + 1) * std::log(xi[j]));
  const double L = std::log(xi.back());
  return log_a * L - 0.5 * static_cast<double>(r + 1) * L * L;
}

TEST(BiasEnvelope, InverseSquareCurveGivesOrderOne) {
  const double n = 2000.0;
  const auto xi = log_grid(std::pow(std::log(n), 2.0), 200);
  std::vector<double> mag(xi.size());
  for (std::size_t j = 0; j < xi.size(); ++j) mag[j] = std::pow(xi[j], -2.0);
  const BiasBoundFit fit = fit_envelope(xi, mag, 4);
  EXPECT_EQ(fit.r_hat, 1u);
  EXPECT_NEAR(fit.V_hat, 1.0, 1e-12);
  double a1 = 0, a2 = 0;
  EXPECT_LT(envelope_objective(xi, mag, 1, a1), envelope_objective(xi, mag, 2, a2));
}

TEST(BiasEnvelope, ScalingMovesInterceptOnly) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> noise(0.5, 1.5);
  const auto xi = log_grid(3.0, 60);
  std::vector<double> mag(xi.size()), scaled(xi.size());
  for (std::size_t j = 0; j < xi.size(); ++j) {
    mag[j] = 0.4 * noise(rng) * std::pow(xi[j], -3.0);
    scaled[j] = 10.0 * mag[j];
  }
  const BiasBoundFit a = fit_envelope(xi, mag, 4), b = fit_envelope(xi, scaled, 4);
  EXPECT_EQ(a.r_hat, b.r_hat);
  EXPECT_NEAR(b.V_hat, 10.0 * a.V_hat, 1e-12 * b.V_hat);
  // Choice agrees with a direct objective scan.
  std::size_t best = 0;
  double best_score = INFINITY, la = 0;
  for (std::size_t r = 1; r <= 4; ++r) {
    const double s = envelope_objective(xi, mag, r, la);
    if (s < best_score) best_score = s, best = r;
  }
  EXPECT_EQ(a.r_hat, best);
}

TEST(BiasEnvelope, DominatesCurve) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> noise(0.1, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto xi = log_grid(5.0, 80);
    std::vector<double> mag(xi.size());
    for (std::size_t j = 0; j < xi.size(); ++j) mag[j] = noise(rng) * std::pow(xi[j], -1.5);
    const BiasBoundFit fit = fit_envelope(xi, mag, 4);
    ASSERT_GE(fit.r_hat, 1u);
    for (std::size_t j = 0; j < xi.size(); ++j)
      EXPECT_GE(std::log(fit.V_hat) - static_cast<double>(fit.r_hat + 1) * std::log(xi[j]),
                std::log(mag[j]) - 1e-9);
  }
}

TEST(BiasEnvelope, DegenerateCurves) {
  const std::vector<double> xi{1.0, 2.0, 4.0}, zero(3, 0.0);
  const BiasBoundFit fit = fit_envelope(xi, zero, 4);
  EXPECT_TRUE(fit.all_values_zero);
  EXPECT_EQ(fit.r_hat, 4u);
  EXPECT_EQ(fit.V_hat, 0.0);
  try {
    fit_envelope({}, {}, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyCurve);
  }
}

TEST(MuFt, ZeroResidualsLeaveTheIntegral) {
  std::vector<double> y, t, x;
  for (int i = 0; i < 50; ++i) {
    const double ti = (i + 0.5) / 50.0;
    t.push_back(ti);
    y.push_back(2.0 * ti);
    x.push_back(0.5);
  }
  const Dataset ds(y, t, x, 1);
  const auto mu = [](double s) { return 2.0 * s; };
  const auto f = [](double) { return 1.0; };
  // Integral of 2t e^{i xi t} over the sample range [t_lo, t_hi].
  const double xi = 3.0, a = ds.t_lo(), b = ds.t_hi();
  const std::complex<double> I(0.0, 1.0);
  const auto F = [&](double s) { return 2.0 * std::exp(I * xi * s) * (s / (I * xi) + 1.0 / (xi * xi)); };
  const std::complex<double> ref = F(b) - F(a);
  EXPECT_LT(std::abs(mu_ft_debiased(ds, mu, f, xi) - ref), 1e-9);
  // At xi = 0 the value is the integral plus the residual mean.
  const auto shifted = [](double s) { return 2.0 * s - 0.25; };
  const double ref0 = (b * b - a * a) - 0.25 * (b - a) + 0.25;
  EXPECT_NEAR(mu_ft_debiased(ds, shifted, f, 0.0).real(), ref0, 1e-9);
}

TEST(MuFt, TentTransformWithinMonteCarloError) {
  // Y = tent(T) + noise with T ~ U[0, 1]; a zero regression leaves only the residual term.
  const DgpSpec spec = tent_dgp(1.0);
  const SimulatedSample s = generate(spec, 20000, 77);
  const auto zero = [](double) { return 0.0; };
  const auto unit = [](double) { return 1.0; };
  for (double xi : {2.0 * kPi, 4.0 * kPi}) {
    // Tent on [0, 1] with peak 1 at 1/2: e^{i xi/2} (sin(xi/4) / (xi/4))^2 / 2.
    const double q = std::sin(xi / 4.0) / (xi / 4.0);
    const std::complex<double> ref = std::polar(0.5 * q * q, xi / 2.0);
    const std::complex<double> est = mu_ft_debiased(s.data, zero, unit, xi);
    double var = 0.0;
    for (std::size_t i = 0; i < s.data.size(); ++i) var += s.data.y()[i] * s.data.y()[i];
    const double se = std::sqrt(var / static_cast<double>(s.data.size())) /
                      std::sqrt(static_cast<double>(s.data.size()));
    EXPECT_LT(std::abs(est - ref), 4.0 * se) << xi;
  }
}

TEST(MuFt, RejectsNonPositiveDensity) {
  const Dataset ds({1.0, 2.0}, {0.1, 0.9}, {0.0, 1.0}, 1);
  try {
    mu_ft_debiased(ds, [](double) { return 0.0; }, [](double) { return 0.0; }, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DensityNotBoundedAway);
  }
}

TEST(BiasFit, TentRecoversOrderOne) {
  const DgpSpec spec = tent_dgp(1.0);
  const SimulatedSample s = generate(spec, 2000, 3);
  BiasFitConfig cfg;
  cfg.seed = 1;
  const BiasBoundFit fit = estimate_bias_fit(rescale_covariates(s.data), cfg);
  EXPECT_EQ(fit.r_hat, 1u);
  EXPECT_GT(fit.V_hat, 0.5 * spec.known_V);
  EXPECT_LT(fit.V_hat, 1.5 * spec.known_V);
}

TEST(BiasFit, ZeroOutcomesGiveZeroBound) {
  std::vector<double> y(200, 0.0), t(200), x(200);
  for (std::size_t i = 0; i < 200; ++i) {
    t[i] = (static_cast<double>(i) + 0.5) / 200.0;
    x[i] = static_cast<double>((i * 37) % 200) / 199.0;
  }
  BiasFitConfig cfg;
  const BiasBoundFit fit = estimate_bias_fit(Dataset(y, t, x, 1), cfg);
  EXPECT_TRUE(fit.all_values_zero);
  EXPECT_EQ(fit.penalty(0.5), 0.0);
}

}  // namespace
}  // namespace contpol
