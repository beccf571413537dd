#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "contpol/data.hpp"
#include "contpol/selection.hpp"

namespace contpol {

enum class MeanForm {
  Linear,             ///< level + slope t + sum_p x_coef_p x_p
  Tent,               ///< peak max(0, 1 - |t - c(x)| / half_width)
  SmoothQuadratic,    ///< peak (1 - u^2)^2 on |u| < 1, u = (t - c(x)) / width, c linear in x
  SeparableMonotone,  ///< the same bump with c(x) = center0 + sum_p center_slope_p x_p^2
  QuadraticLoss,      ///< -(t - c(x))^2, c linear in x
};

enum class TreatmentLaw {
  Uniform,          ///< T | X ~ U[0, 1]
  TruncatedNormal,  ///< N(mean0 + sum_p mean_slope_p (x_p - 1/2), sd^2) truncated to [0, 1]
};

/// Data-generating process with X ~ U[0, 1]^d_x, T | X from `law`,
/// Y = m(T, X) + noise (Gaussian truncated at 4 sd).
struct DgpSpec {
  std::string name;
  std::size_t d_x = 1;
  MeanForm form = MeanForm::SmoothQuadratic;
  double level = 0.0;
  double slope = 1.0;
  std::vector<double> x_coef;
  double peak = 1.0;
  double width = 0.3;
  double half_width = 0.5;
  double center0 = 0.5;
  std::vector<double> center_slope;
  double noise_sd = 0.5;
  TreatmentLaw law = TreatmentLaw::Uniform;
  double law_mean0 = 0.5;
  std::vector<double> law_mean_slope;
  double law_sd = 0.25;
  std::size_t known_r = 1;
  double known_V = 0.0;

  double mean(double t, std::span<const double> x) const;
  double mean_dt(double t, std::span<const double> x) const;
  /// Location of the peak (or of the loss minimum) for the bump, tent and loss forms.
  double center(std::span<const double> x) const;
  double density(double t, std::span<const double> x) const;
  /// Lower bound of density(t, x) over [0, 1] x [0, 1]^d_x.
  double density_lower() const;
  /// Support of m(., x) when compact: [center - radius, center + radius]; radius < 0 otherwise.
  double support_radius() const;
};

/// Catalog entries. Known (r, V) are set from the total variation of the r-th derivative.
DgpSpec linear_dgp(std::size_t d_x = 1);
DgpSpec tent_dgp(double peak = 1.0, std::size_t d_x = 1);
DgpSpec smooth_quadratic_dgp(std::size_t d_x = 1);
DgpSpec separable_monotone_dgp(std::size_t d_x = 1);
DgpSpec quadratic_loss_dgp(std::size_t d_x = 1);

/// Looks up "linear", "tent", "smooth-quadratic", "separable-monotone" or "quadratic-loss".
DgpSpec dgp_by_name(const std::string& name, std::size_t d_x = 1);
std::vector<std::string> dgp_names();

struct SimulatedSample {
  Dataset data;
  PropensityOracle propensity;
};

SimulatedSample generate(const DgpSpec& spec, std::size_t n, std::uint64_t seed);

/// Policy as a function of raw covariates.
using RawPolicy = std::function<double(std::span<const double>)>;

/// W(pi) = E[m(pi(X), X)]. Adaptive quadrature for d_x = 1, 64-point tensor
/// Gauss-Legendre for d_x <= 3, Monte Carlo with 10^6 draws above.
double true_welfare(const DgpSpec& spec, const RawPolicy& policy);

/// W_h(pi) = E[int (1/h) K((t - pi(X)) / h) m(t, X) dt] over the whole real line.
double smoothed_welfare(const DgpSpec& spec, const RawPolicy& policy, double h);

/// Welfare of the best monotone separable policy of order 32 (approximates W*).
double oracle_welfare(const DgpSpec& spec);

/// W* minus the worst constant-policy welfare.
double welfare_range(const DgpSpec& spec, double oracle);

struct RegretRecord {
  std::size_t n = 0;
  std::size_t rep = 0;
  PenaltyKind penalty = PenaltyKind::Rademacher;
  EstimatorKind estimator = EstimatorKind::DoubleDebiased;
  double h_hat = 0.0;
  std::size_t k_hat = 0;
  double welfare_hat = 0.0;
  double true_welfare = 0.0;
  double oracle_welfare = 0.0;
  double regret = 0.0;
  std::size_t r_hat = 0;
  double V_hat = 0.0;
};

struct RegretConfig {
  FitConfig fit;
  std::vector<std::pair<PenaltyKind, EstimatorKind>> paths{
      {PenaltyKind::Rademacher, EstimatorKind::DoubleDebiased}};
  /// Use the DGP's known (r, V) instead of estimating them.
  bool known_bias = false;
};

/// One record per (n, rep, path). Samples depend on (seed, n, rep) only.
std::vector<RegretRecord> run_regret_experiment(const DgpSpec& spec,
                                                std::span<const std::size_t> n_list,
                                                std::size_t reps, std::uint64_t seed,
                                                const RegretConfig& cfg);

/// CSV with header n,rep,penalty,estimator,h_hat,k_hat,welfare_hat,true_welfare,oracle_welfare,regret.
std::string regret_csv(std::span<const RegretRecord> records);

}  // namespace contpol
