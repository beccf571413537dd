#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "contpol/data.hpp"
#include "contpol/nuisance.hpp"
#include "contpol/optimizer.hpp"

namespace contpol {

/// Policy evaluated on the dataset's (scaled) covariates.
using ScaledPolicy = std::function<double(std::span<const double>)>;

/// g(T_i, X_i) for every row, with X_i mapped back to raw coordinates.
std::vector<double> propensity_weights(const Dataset& ds, const PropensityOracle& oracle);

/// Kernel-smoothed IPW welfare (1 / (n h)) sum_i K((T_i - pi(X_i)) / h) Y_i g_i.
double ipw_welfare(const Dataset& ds, const ScaledPolicy& policy, double h,
                   std::span<const double> g);

double ipw_welfare(const Dataset& ds, const ScaledPolicy& policy, double h,
                   const PropensityOracle& oracle);

/// Doubly robust score (1/h) K((t - a)/h) (y - m(a, x)) g + m(a, x).
double dd_score(double y, double t, std::span<const double> x, double a, double h,
                const ConditionalMean& m_hat, double g_hat);

/// Cross-fitted nuisances with g_hat already evaluated at each row.
struct CrossFit {
  FoldPlan plan;
  std::vector<NuisanceFit> fits;
  std::vector<double> g_obs;

  const ConditionalMean& m_for_row(std::size_t i) const { return *fits[plan.fold_of[i]].m_hat; }
};

/// Validates that `fits` covers every fold of `plan` and evaluates g_hat at each row.
CrossFit make_cross_fit(const Dataset& ds, FoldPlan plan, std::vector<NuisanceFit> fits);

CrossFit cross_fit(const Dataset& ds, std::size_t folds, std::uint64_t seed,
                   const NuisanceConfig& cfg);

/// Cross-fitted DD welfare: mean of dd_score with each row scored by the
/// nuisances trained outside its fold.
double dd_welfare(const Dataset& ds, const ScaledPolicy& policy, double h,
                  const std::vector<NuisanceFit>& fits, const FoldPlan& plan);

double dd_welfare(const Dataset& ds, const ScaledPolicy& policy, double h, const CrossFit& cf);

/// Per-row inputs to a DD objective: row data, g_hat at the row and the
/// outcome model used for that row.
struct DdRows {
  std::vector<double> y, t, x;
  std::size_t d_x = 0;
  std::vector<double> g;
  std::vector<std::shared_ptr<const ConditionalMean>> m;

  std::size_t size() const noexcept { return y.size(); }
};

/// Rows of `ds` listed in `rows`, each scored with the cross-fit of its fold.
DdRows dd_rows(const Dataset& ds, const CrossFit& cf, std::span<const std::size_t> rows);

/// Rows of `ds` listed in `rows`, all scored with a single nuisance fit.
DdRows dd_rows(const Dataset& ds, const NuisanceFit& fit, std::span<const std::size_t> rows);

/// J = sum_i c_i Gamma_i(pi(X_i)) with per-row multipliers c_i.
class DdObjective final : public PolicyObjective {
 public:
  DdObjective(std::shared_ptr<const DdRows> rows, std::vector<double> multipliers, double h);

  std::size_t size() const override { return rows_->size(); }
  std::size_t d_x() const override { return rows_->d_x; }
  std::span<const double> covariates(std::size_t i) const override {
    return {rows_->x.data() + i * rows_->d_x, rows_->d_x};
  }
  void pointwise(std::span<const double> actions, std::span<double> values,
                 std::span<double> derivs) const override;
  std::span<const double> treatment_sample() const override { return rows_->t; }

 private:
  std::shared_ptr<const DdRows> rows_;
  std::vector<double> c_;
  double h_;
};

}  // namespace contpol
