#include <cmath>

#include <gtest/gtest.h>

#include "contpol/bias_bound.hpp"
#include "contpol/kernel.hpp"
#include "contpol/numerics.hpp"
#include "contpol/simulation.hpp"
#include "oracles.hpp"

namespace contpol {
namespace {

TEST(Generate, NoiselessLinearAndUniformPropensity) {
  DgpSpec spec = linear_dgp();
  spec.noise_sd = 0.0;
  spec.x_coef = {0.0};
  const SimulatedSample s = generate(spec, 500, 1);
  for (std::size_t i = 0; i < 500; ++i) {
    EXPECT_EQ(s.data.y()[i], s.data.t()[i]);
    EXPECT_EQ(s.propensity.g(s.data.t()[i], s.data.x(i)), 1.0);
  }
  EXPECT_EQ(s.propensity.f_lower, 1.0);
  const SimulatedSample again = generate(spec, 500, 1);
  EXPECT_EQ(std::vector<double>(again.data.t().begin(), again.data.t().end()),
            std::vector<double>(s.data.t().begin(), s.data.t().end()));
}

TEST(Generate, OutcomeMeanMatchesQuadrature) {
  const DgpSpec spec = smooth_quadratic_dgp();
  // E[Y] = int int m(t, x) f(t | x) dt dx by nested Simpson.
  const double ref = oracle::simpson(
      [&](double x) {
        const double xs[] = {x};
        return oracle::simpson([&](double t) { return spec.mean(t, xs) * spec.density(t, xs); }, 0.0, 1.0, 2000);
      },
      0.0, 1.0, 400);
  const SimulatedSample s = generate(spec, 100000, 2);
  const double mu = mean(s.data.y());
  double var = 0.0;
  for (double y : s.data.y()) var += (y - mu) * (y - mu);
  const double se = std::sqrt(var / (s.data.size() - 1) / s.data.size());
  EXPECT_LT(std::fabs(mu - ref), 3.0 * se);
  // Propensity is the reciprocal of the analytic density.
  const double xs[] = {0.3};
  EXPECT_NEAR(s.propensity.g(0.4, xs) * spec.density(0.4, xs), 1.0, 1e-12);
  EXPECT_GT(spec.density_lower(), 0.0);
}

TEST(TrueWelfare, AnalyticCases) {
  DgpSpec lin = linear_dgp();
  lin.x_coef = {0.0};
  EXPECT_NEAR(true_welfare(lin, [](std::span<const double>) { return 0.37; }), 0.37, 1e-12);
  const DgpSpec loss = quadratic_loss_dgp();
  EXPECT_NEAR(true_welfare(loss, [&](std::span<const double> x) { return loss.center(x); }), 0.0, 1e-12);
  const DgpSpec tent = tent_dgp(1.5);
  EXPECT_NEAR(true_welfare(tent, [](std::span<const double>) { return 0.5; }), 1.5, 1e-9);
  // Two covariates: the tensor rule integrates the additive x-term exactly.
  DgpSpec lin2 = linear_dgp(2);
  EXPECT_NEAR(true_welfare(lin2, [](std::span<const double>) { return 0.2; }),
              0.2 + 0.5 * (lin2.x_coef[0] + lin2.x_coef[1]), 1e-10);
}

double simpson_smoothed(const DgpSpec& spec, const std::function<double(double)>& policy, double h) {
  // Tent support is [0, 1] with a kink at the centre; integrate each smooth piece.
  return oracle::simpson(
      [&](double x) {
        const double xs[] = {x};
        const double a = policy(x);
        const auto f = [&](double t) { return oracle::kernel_closed_form_safe(t - a, h) / h * spec.mean(t, xs); };
        return oracle::simpson(f, 0.0, 0.5, 4000) + oracle::simpson(f, 0.5, 1.0, 4000);
      },
      0.0, 1.0, 60);
}

TEST(SmoothedWelfare, TentMatchesIndependentQuadrature) {
  const DgpSpec spec = tent_dgp(1.0);
  const auto policy = [](double x) { return 0.3 + 0.3 * x; };
  const RawPolicy raw = [&](std::span<const double> x) { return policy(x[0]); };
  for (double h : {0.05, 0.2}) EXPECT_NEAR(smoothed_welfare(spec, raw, h), simpson_smoothed(spec, policy, h), 1e-7);
}

TEST(SmoothedWelfare, LinearAndConstantAreExact) {
  DgpSpec lin = linear_dgp();
  const RawPolicy pol = [](std::span<const double> x) { return 0.2 + 0.6 * x[0]; };
  for (double h : {0.05, 0.5, 2.0}) EXPECT_NEAR(smoothed_welfare(lin, pol, h), true_welfare(lin, pol), 1e-10);
  lin.slope = 0.0;
  lin.level = 1.3;
  lin.x_coef = {0.0};
  EXPECT_NEAR(smoothed_welfare(lin, pol, 0.1), 1.3, 1e-10);
}

TEST(SmoothedWelfare, BiasShrinksWithinBound) {
  for (const DgpSpec& spec : {tent_dgp(1.0), smooth_quadratic_dgp()}) {
    const RawPolicy pol = [](std::span<const double> x) { return 0.35 + 0.3 * x[0]; };
    const double w = true_welfare(spec, pol);
    double prev = INFINITY;
    for (double h : {0.2, 0.1, 0.05}) {
      const double gap = std::fabs(smoothed_welfare(spec, pol, h) - w);
      EXPECT_LT(gap, prev) << spec.name;
      EXPECT_LE(gap, bias_bound(h, spec.known_r, spec.known_V) + 1e-6) << spec.name;
      prev = gap;
    }
  }
}

TEST(OracleWelfare, KnownOptima) {
  EXPECT_NEAR(oracle_welfare(quadratic_loss_dgp()), 0.0, 1e-6);
  EXPECT_NEAR(oracle_welfare(smooth_quadratic_dgp()), 1.0, 1e-6);
  const DgpSpec sq = smooth_quadratic_dgp();
  EXPECT_NEAR(welfare_range(sq, 1.0), 1.0, 0.05);
}

/// Regret left by smoothing alone: per covariate value, the action maximizing the
/// h-smoothed welfare of m(t, x) = t + c x on T in [0, 1], scored by true welfare.
double boundary_regret(double h, double c) {
  const double best_true = 1.0 + 0.5 * c;
  return best_true - oracle::simpson(
                         [&](double x) {
                           double arg = 0.0, best = -INFINITY;
                           for (int g = 0; g <= 400; ++g) {
                             const double a = 0.5 + 0.5 * g / 400.0;
                             const double w = oracle::simpson(
                                 [&](double t) { return oracle::kernel_closed_form_safe(t - a, h) / h * (t + c * x); },
                                 0.0, 1.0, 800);
                             if (w > best) best = w, arg = a;
                           }
                           return arg + c * x;
                         },
                         0.0, 1.0, 20);
}

TEST(Regret, NoiselessLinearIpwPathIsBoundaryLimited) {
  // The linear dose-response peaks at the edge of the treatment support, where the
  // kernel loses mass; the smoothed optimum sits inside the edge by a multiple of h.
  // Estimation must add little on top of that smoothing loss.
  DgpSpec spec = linear_dgp();
  spec.noise_sd = 0.0;
  RegretConfig cfg;
  cfg.paths = {{PenaltyKind::Rademacher, EstimatorKind::Ipw}};
  cfg.fit.selection.k_max = 2;
  cfg.fit.selection.draws = 5;
  cfg.fit.selection.optimizer.n_starts = 4;
  cfg.fit.selection.rademacher_optimizer.n_starts = 2;
  const std::vector<std::size_t> ns{2000};
  const auto rec = run_regret_experiment(spec, ns, 1, 3, cfg);
  ASSERT_EQ(rec.size(), 1u);
  const double floor = boundary_regret(rec[0].h_hat, spec.x_coef[0]);
  EXPECT_GE(rec[0].regret, -1e-6);
  EXPECT_LE(std::fabs(rec[0].regret - floor), 0.05) << "h " << rec[0].h_hat << " floor " << floor;
}

TEST(Regret, RecordsAndCsv) {
  RegretConfig cfg;
  cfg.paths = {{PenaltyKind::Rademacher, EstimatorKind::DoubleDebiased},
               {PenaltyKind::Holdout, EstimatorKind::Ipw}};
  cfg.fit.selection.k_max = 2;
  cfg.fit.selection.draws = 3;
  cfg.fit.selection.optimizer.n_starts = 2;
  cfg.fit.selection.rademacher_optimizer.n_starts = 1;
  const std::vector<std::size_t> ns{200, 300};
  const auto rec = run_regret_experiment(smooth_quadratic_dgp(), ns, 2, 11, cfg);
  ASSERT_EQ(rec.size(), 8u);
  for (const auto& r : rec) {
    EXPECT_GE(r.regret, -1e-6);
    EXPECT_DOUBLE_EQ(r.regret, r.oracle_welfare - r.true_welfare);
  }
  const std::string csv = regret_csv(rec);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "n,rep,penalty,estimator,h_hat,k_hat,welfare_hat,true_welfare,oracle_welfare,regret");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
  EXPECT_EQ(regret_csv(run_regret_experiment(smooth_quadratic_dgp(), ns, 2, 11, cfg)), csv);
}

TEST(Catalog, NamesRoundTrip) {
  for (const std::string& name : dgp_names()) EXPECT_EQ(dgp_by_name(name).name, name);
  EXPECT_THROW(dgp_by_name("nope"), std::exception);
}

}  // namespace
}  // namespace contpol
