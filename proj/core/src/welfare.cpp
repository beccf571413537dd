#include "contpol/welfare.hpp"

#include <cmath>

#include "contpol/errors.hpp"
#include "contpol/kernel.hpp"
#include "contpol/numerics.hpp"

namespace contpol {

namespace {

void check_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(Errc::NonPositiveBandwidth, "h must be > 0");
}

}  // namespace

std::vector<double> propensity_weights(const Dataset& ds, const PropensityOracle& oracle) {
  if (!oracle.inverse_density) throw Error(Errc::MissingPropensity, "no propensity oracle");
  std::vector<double> g(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) g[i] = oracle.g(ds.t()[i], ds.raw_x(i));
  return g;
}

double ipw_welfare(const Dataset& ds, const ScaledPolicy& policy, double h,
                   std::span<const double> g) {
  check_bandwidth(h);
  if (ds.size() == 0) throw Error(Errc::EmptyObjective, "empty dataset");
  if (g.size() != ds.size()) throw Error(Errc::DimensionMismatch, "one weight per row");
  std::vector<double> terms(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i)
    terms[i] = eval_kernel((ds.t()[i] - policy(ds.x(i))) / h) * ds.y()[i] * g[i];
  return pairwise_sum(terms) / (static_cast<double>(ds.size()) * h);
}

double ipw_welfare(const Dataset& ds, const ScaledPolicy& policy, double h,
                   const PropensityOracle& oracle) {
  return ipw_welfare(ds, policy, h, propensity_weights(ds, oracle));
}

double dd_score(double y, double t, std::span<const double> x, double a, double h,
                const ConditionalMean& m_hat, double g_hat) {
  check_bandwidth(h);
  const double m = m_hat.value(a, x);
  return eval_kernel((t - a) / h) / h * (y - m) * g_hat + m;
}

CrossFit make_cross_fit(const Dataset& ds, FoldPlan plan, std::vector<NuisanceFit> fits) {
  if (plan.fold_of.size() != ds.size())
    throw Error(Errc::DimensionMismatch, "fold plan does not match the dataset");
  std::vector<NuisanceFit> ordered(plan.folds);
  std::vector<bool> seen(plan.folds, false);
  for (auto& f : fits) {
    if (f.fold < plan.folds && f.m_hat && f.g_hat) {
      ordered[f.fold] = f;
      seen[f.fold] = true;
    }
  }
  for (std::size_t l = 0; l < plan.folds; ++l)
    if (!seen[l]) throw Error(Errc::MissingFoldFit, "fold " + std::to_string(l));
  CrossFit cf{std::move(plan), std::move(ordered), std::vector<double>(ds.size())};
  for (std::size_t i = 0; i < ds.size(); ++i)
    cf.g_obs[i] = cf.fits[cf.plan.fold_of[i]].g_hat->value(ds.t()[i], ds.x(i));
  return cf;
}

CrossFit cross_fit(const Dataset& ds, std::size_t folds, std::uint64_t seed,
                   const NuisanceConfig& cfg) {
  FoldPlan plan = make_folds(ds.size(), folds, seed);
  auto fits = fit_nuisances(ds, plan, cfg);
  return make_cross_fit(ds, std::move(plan), std::move(fits));
}

double dd_welfare(const Dataset& ds, const ScaledPolicy& policy, double h, const CrossFit& cf) {
  check_bandwidth(h);
  if (ds.size() == 0) throw Error(Errc::EmptyObjective, "empty dataset");
  std::vector<double> terms(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i)
    terms[i] = dd_score(ds.y()[i], ds.t()[i], ds.x(i), policy(ds.x(i)), h, cf.m_for_row(i),
                        cf.g_obs[i]);
  return mean(terms);
}

double dd_welfare(const Dataset& ds, const ScaledPolicy& policy, double h,
                  const std::vector<NuisanceFit>& fits, const FoldPlan& plan) {
  return dd_welfare(ds, policy, h, make_cross_fit(ds, plan, fits));
}

DdRows dd_rows(const Dataset& ds, const CrossFit& cf, std::span<const std::size_t> rows) {
  DdRows out;
  out.d_x = ds.d_x();
  for (std::size_t r : rows) {
    out.y.push_back(ds.y()[r]);
    out.t.push_back(ds.t()[r]);
    auto xr = ds.x(r);
    out.x.insert(out.x.end(), xr.begin(), xr.end());
    out.g.push_back(cf.g_obs[r]);
    out.m.push_back(cf.fits[cf.plan.fold_of[r]].m_hat);
  }
  return out;
}

DdRows dd_rows(const Dataset& ds, const NuisanceFit& fit, std::span<const std::size_t> rows) {
  DdRows out;
  out.d_x = ds.d_x();
  for (std::size_t r : rows) {
    out.y.push_back(ds.y()[r]);
    out.t.push_back(ds.t()[r]);
    auto xr = ds.x(r);
    out.x.insert(out.x.end(), xr.begin(), xr.end());
    out.g.push_back(fit.g_hat->value(ds.t()[r], xr));
    out.m.push_back(fit.m_hat);
  }
  return out;
}

DdObjective::DdObjective(std::shared_ptr<const DdRows> rows, std::vector<double> multipliers,
                         double h)
    : rows_(std::move(rows)), c_(std::move(multipliers)), h_(h) {
  check_bandwidth(h);
  if (!rows_ || rows_->size() == 0) throw Error(Errc::EmptyObjective, "no rows");
  if (c_.size() != rows_->size()) throw Error(Errc::DimensionMismatch, "one multiplier per row");
}

void DdObjective::pointwise(std::span<const double> actions, std::span<double> values,
                            std::span<double> derivs) const {
  const DdRows& r = *rows_;
  const double inv_h = 1.0 / h_;
  const bool want_d = !derivs.empty();
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double a = actions[i];
    auto x = covariates(i);
    double k = 0.0, dk = 0.0, m = 0.0, dm = 0.0;
    kernel_with_derivative((r.t[i] - a) * inv_h, k, dk);
    r.m[i]->value_and_dt(a, x, m, dm);
    const double resid = (r.y[i] - m) * r.g[i];
    values[i] = c_[i] * (k * inv_h * resid + m);
    if (want_d)
      derivs[i] = c_[i] * (-dk * inv_h * inv_h * resid - k * inv_h * r.g[i] * dm + dm);
  }
}

}  // namespace contpol
