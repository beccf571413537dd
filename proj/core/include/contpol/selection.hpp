#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "contpol/bias_bound.hpp"
#include "contpol/data.hpp"
#include "contpol/nuisance.hpp"
#include "contpol/optimizer.hpp"
#include "contpol/sieve.hpp"

namespace contpol {

enum class PenaltyKind { Rademacher, Holdout };
enum class EstimatorKind { Ipw, DoubleDebiased };
enum class GridKind { Exponential, Geometric };

std::string to_string(PenaltyKind kind);
std::string to_string(EstimatorKind kind);
std::string to_string(GridKind kind);

struct BandwidthGrid {
  std::vector<double> h;  ///< descending, h[0] = 1
  double h_min = 0.0;
};

/// Exponential grid h = rho^-j (rho > 1) or geometric grid h = j^-rho (rho > 0),
/// keeping h >= n^(-1 / (2 r_hat + 1)).
BandwidthGrid make_grid(GridKind kind, double rho, std::size_t n, std::size_t r_hat);

struct TauConfig {
  std::function<double(double)> lambda_k;
  std::function<double(double)> lambda_h;
};

/// lambda_k(k) = log(1 + log(1 + k)), lambda_h(h) = log(1 + log(1 + 1/h)).
TauConfig default_tau_config();

/// sqrt((lambda_k log k - lambda_h log h) / (n h)), with log k read as 0 for k = 0.
double tau(double h, std::size_t k, std::size_t n, const TauConfig& cfg = default_tau_config());

/// VC constraint (k + 1) d_x <= n h^2.
bool admissible(std::size_t k, std::size_t d_x, double h, std::size_t n) noexcept;

struct PenalizedScore {
  double welfare = 0.0;
  double rad_penalty = 0.0;
  double tau = 0.0;
  double bias_penalty = 0.0;
  /// welfare - (rad_penalty + tau + bias_penalty)
  double q = 0.0;
};

struct SelectionRow {
  double h = 0.0;
  std::size_t k = 0;
  PenalizedScore score;
  PolicyParams params;
};

struct SelectionResult {
  double h_hat = 0.0;
  std::size_t k_hat = 0;
  PolicyParams params;
  PenalizedScore chosen;
  std::vector<SelectionRow> table;
  std::size_t n_used = 0;  ///< sample size entering tau and the VC constraint
};

struct SelectionConfig {
  PenaltyKind penalty = PenaltyKind::Rademacher;
  EstimatorKind estimator = EstimatorKind::DoubleDebiased;
  std::size_t k_min = 1;
  std::size_t k_max = 8;
  std::size_t folds = 2;
  std::size_t draws = 100;
  double iota = 0.2;
  std::uint64_t seed = 0;
  OptimizerConfig optimizer;
  OptimizerConfig rademacher_optimizer{4, 200, 1e-8, 0.25, 0};
  NuisanceConfig nuisance;
  TauConfig tau = default_tau_config();
};

/// Rademacher signs (+1 / -1) of one draw; depend on (seed, draw) only.
std::vector<double> rademacher_signs(std::size_t n, std::uint64_t seed, std::size_t draw);

/// Per-draw suprema sup_theta (1/(n h)) sum_i 2 s_i w_i K((T_i - pi(X_i)) / h) for every
/// order in `ks` (ascending). Orders are warm-started from the smaller ones, so the
/// supremum for k is never below the one for any divisor of k. Result is [draw][k index].
std::vector<std::vector<double>> rademacher_suprema(const Dataset& ds, std::span<const std::size_t> ks,
                                                    double h, std::span<const double> weights,
                                                    const std::vector<std::vector<double>>& signs,
                                                    const OptimizerConfig& cfg, double out_lo,
                                                    double out_hi);

/// Mean over draws of the supremum above for one family.
double rademacher_penalty(const Dataset& ds, const MonotoneSeparableFamily& family, double h,
                          std::span<const double> weights, std::size_t n_draws,
                          std::uint64_t seed, const OptimizerConfig& cfg);

double rademacher_penalty(const Dataset& ds, const MonotoneSeparableFamily& family, double h,
                          std::span<const double> weights,
                          const std::vector<std::vector<double>>& signs,
                          const OptimizerConfig& cfg);

/// Penalized selection over the grid and orders k_min..k_max on a rescaled dataset.
/// Dispatches to holdout_select when cfg.penalty is Holdout. `propensity` is
/// required for the IPW estimator.
SelectionResult select(const Dataset& ds, const BandwidthGrid& grid, const BiasBoundFit& bias,
                       const SelectionConfig& cfg, const PropensityOracle* propensity = nullptr);

/// Holdout variant: fit on a (1 - iota) estimating split, penalize by the drop in
/// welfare on the testing split.
SelectionResult holdout_select(const Dataset& ds, const BandwidthGrid& grid,
                               const BiasBoundFit& bias, const SelectionConfig& cfg,
                               const PropensityOracle* propensity = nullptr);

/// Estimating-split size used by the holdout path.
std::size_t holdout_estimating_size(std::size_t n, double iota);

struct FitConfig {
  SelectionConfig selection;
  BiasFitConfig bias;
  GridKind grid = GridKind::Exponential;
  double rho = 2.0;
  /// Supplied (r, V); skips estimation when set.
  std::optional<BiasBoundFit> known_bias;
};

struct FitReport {
  BiasBoundFit bias;
  BandwidthGrid grid;
  SelectionResult selection;
  FittedPolicy policy;
};

/// Rescale covariates, fit (r, V), build the grid and select (h, k).
FitReport fit_policy(const Dataset& raw, const FitConfig& cfg,
                     const PropensityOracle* propensity = nullptr);

}  // namespace contpol
