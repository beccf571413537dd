#include "contpol/selection.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "contpol/errors.hpp"
#include "contpol/numerics.hpp"
#include "contpol/parallel.hpp"
#include "contpol/welfare.hpp"

namespace contpol {

namespace {

constexpr std::size_t kMaxGridSize = 200;

std::vector<double> row_major_x(const Dataset& ds) {
  return {ds.x_data().begin(), ds.x_data().end()};
}

/// Maximizes one objective over the orders in `ks` (ascending), seeding each
/// order with the solutions of its divisors and of its predecessor.
std::vector<OptimResult> optimize_chain(const PolicyObjective& obj,
                                        std::span<const std::size_t> ks, std::size_t d_x,
                                        double lo, double hi, OptimizerConfig cfg,
                                        std::uint64_t seed) {
  std::vector<OptimResult> out;
  std::vector<MonotoneSeparableFamily> fams;
  for (std::size_t idx = 0; idx < ks.size(); ++idx) {
    const std::size_t k = ks[idx];
    MonotoneSeparableFamily fam(d_x, k, lo, hi);
    std::vector<PolicyParams> warm;
    for (std::size_t j = 0; j < idx; ++j) {
      const std::size_t kj = ks[j];
      const bool nested = kj == 0 || (k > 0 && k % kj == 0);
      if (nested || j + 1 == idx) warm.push_back(resample_params(fams[j], out[j].params, fam));
    }
    cfg.seed = derive_seed({seed, k});
    out.push_back(maximize(obj, fam, cfg, warm));
    fams.push_back(fam);
  }
  return out;
}

std::vector<std::size_t> orders_for(double h, std::size_t n, std::size_t d_x,
                                    const SelectionConfig& cfg) {
  std::vector<std::size_t> ks;
  for (std::size_t k = cfg.k_min; k <= cfg.k_max; ++k)
    if (admissible(k, d_x, h, n)) ks.push_back(k);
  return ks;
}

bool row_better(const SelectionRow& a, const SelectionRow& b) {
  if (a.score.q != b.score.q) return a.score.q > b.score.q;
  if (a.k != b.k) return a.k < b.k;
  if (a.h != b.h) return a.h > b.h;
  return std::lexicographical_compare(a.params.theta.begin(), a.params.theta.end(),
                                      b.params.theta.begin(), b.params.theta.end());
}

SelectionResult finish(std::vector<SelectionRow> table, std::size_t n_used) {
  if (table.empty()) throw Error(Errc::NoAdmissiblePair, "no (h, k) satisfies the VC constraint");
  std::size_t best = 0;
  for (std::size_t r = 1; r < table.size(); ++r)
    if (row_better(table[r], table[best])) best = r;
  SelectionResult res;
  res.h_hat = table[best].h;
  res.k_hat = table[best].k;
  res.params = table[best].params;
  res.chosen = table[best].score;
  res.table = std::move(table);
  res.n_used = n_used;
  return res;
}

PenalizedScore score(double welfare, double penalty, double tau_value, double bias) {
  return {welfare, penalty, tau_value, bias, welfare - (penalty + tau_value + bias)};
}

void check_grid(const BandwidthGrid& grid) {
  if (grid.h.empty()) throw Error(Errc::EmptyGrid, "bandwidth grid is empty");
}

SelectionResult select_rademacher(const Dataset& ds, const BandwidthGrid& grid,
                                  const BiasBoundFit& bias, const SelectionConfig& cfg,
                                  const PropensityOracle* propensity) {
  check_grid(grid);
  const std::size_t n = ds.size(), d = ds.d_x();
  const double lo = ds.t_lo(), hi = ds.t_hi();
  const std::size_t H = grid.h.size();
  std::vector<std::vector<std::size_t>> ks(H);
  bool any = false;
  for (std::size_t j = 0; j < H; ++j) {
    ks[j] = orders_for(grid.h[j], n, d, cfg);
    any = any || !ks[j].empty();
  }
  if (!any) throw Error(Errc::NoAdmissiblePair, "no (h, k) satisfies the VC constraint");

  const bool dd = cfg.estimator == EstimatorKind::DoubleDebiased;
  const std::vector<double> t(ds.t().begin(), ds.t().end());
  const std::vector<double> x = row_major_x(ds);
  std::vector<double> w;
  std::shared_ptr<const DdRows> all_rows;
  std::vector<std::shared_ptr<const DdRows>> fold_rows;
  std::vector<std::vector<std::size_t>> fold_members;
  std::size_t L = 1;
  if (dd) {
    const CrossFit cf = cross_fit(ds, cfg.folds, derive_seed({cfg.seed, 0x58464954ULL}),
                                  cfg.nuisance);
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    all_rows = std::make_shared<DdRows>(dd_rows(ds, cf, all));
    L = cf.plan.folds;
    for (std::size_t l = 0; l < L; ++l) {
      fold_members.push_back(cf.plan.members(l));
      fold_rows.push_back(std::make_shared<DdRows>(dd_rows(ds, cf, fold_members.back())));
    }
  } else {
    if (!propensity) throw Error(Errc::MissingPropensity, "IPW needs a propensity");
    const auto g = propensity_weights(ds, *propensity);
    w.resize(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = ds.y()[i] * g[i];
  }

  std::vector<std::vector<double>> signs(cfg.draws);
  for (std::size_t b = 0; b < cfg.draws; ++b) signs[b] = rademacher_signs(n, cfg.seed, b);

  // Work units: one welfare chain per h, then one Rademacher chain per (h, draw, fold).
  const std::size_t rad_units = H * cfg.draws * L;
  std::vector<std::vector<OptimResult>> ewm(H);
  std::vector<std::vector<double>> sup(rad_units);
  parallel_for(H + rad_units, [&](std::size_t u) {
    if (u < H) {
      if (ks[u].empty()) return;
      const double h = grid.h[u];
      const std::uint64_t s = derive_seed({cfg.seed, 0x45574dULL, u});
      if (dd) {
        DdObjective obj(all_rows, std::vector<double>(n, 1.0 / static_cast<double>(n)), h);
        ewm[u] = optimize_chain(obj, ks[u], d, lo, hi, cfg.optimizer, s);
      } else {
        KernelObjective obj(t, x, d, w, h);
        ewm[u] = optimize_chain(obj, ks[u], d, lo, hi, cfg.optimizer, s);
      }
      return;
    }
    const std::size_t r = u - H;
    const std::size_t j = r / (cfg.draws * L);
    const std::size_t b = (r / L) % cfg.draws;
    const std::size_t l = r % L;
    if (ks[j].empty()) return;
    const double h = grid.h[j];
    const std::uint64_t s = derive_seed({cfg.seed, 0x524144ULL, j, b, l});
    std::vector<OptimResult> chain;
    if (dd) {
      const auto& members = fold_members[l];
      std::vector<double> c(members.size());
      const double scale = 2.0 * static_cast<double>(L) / static_cast<double>(n);
      for (std::size_t q = 0; q < members.size(); ++q) c[q] = scale * signs[b][members[q]];
      DdObjective obj(fold_rows[l], std::move(c), h);
      chain = optimize_chain(obj, ks[j], d, lo, hi, cfg.rademacher_optimizer, s);
    } else {
      std::vector<double> ws(n);
      for (std::size_t i = 0; i < n; ++i) ws[i] = 2.0 * signs[b][i] * w[i];
      KernelObjective obj(t, x, d, std::move(ws), h);
      chain = optimize_chain(obj, ks[j], d, lo, hi, cfg.rademacher_optimizer, s);
    }
    sup[r].resize(chain.size());
    for (std::size_t q = 0; q < chain.size(); ++q) sup[r][q] = chain[q].value;
  });

  std::vector<SelectionRow> table;
  for (std::size_t j = 0; j < H; ++j) {
    const double h = grid.h[j];
    for (std::size_t q = 0; q < ks[j].size(); ++q) {
      std::vector<double> per_draw(cfg.draws, 0.0);
      for (std::size_t b = 0; b < cfg.draws; ++b) {
        double acc = 0.0;
        for (std::size_t l = 0; l < L; ++l) acc += sup[(j * cfg.draws + b) * L + l][q];
        per_draw[b] = acc / static_cast<double>(L);
      }
      const double rad = cfg.draws > 0 ? mean(per_draw) : 0.0;
      const std::size_t k = ks[j][q];
      table.push_back({h, k,
                       score(ewm[j][q].value, rad, tau(h, k, n, cfg.tau), bias.penalty(h)),
                       ewm[j][q].params});
    }
  }
  return finish(std::move(table), n);
}

}  // namespace

std::string to_string(PenaltyKind kind) {
  return kind == PenaltyKind::Rademacher ? "rademacher" : "holdout";
}

std::string to_string(EstimatorKind kind) {
  return kind == EstimatorKind::Ipw ? "ipw" : "dd";
}

std::string to_string(GridKind kind) { return kind == GridKind::Exponential ? "exp" : "geo"; }

BandwidthGrid make_grid(GridKind kind, double rho, std::size_t n, std::size_t r_hat) {
  if (!std::isfinite(rho)) throw Error(Errc::BadRho, "rho is not finite");
  if (kind == GridKind::Exponential && !(rho > 1.0))
    throw Error(Errc::BadRho, "exponential grid needs rho > 1");
  if (kind == GridKind::Geometric && !(rho > 0.0))
    throw Error(Errc::BadRho, "geometric grid needs rho > 0");
  if (r_hat < 1) throw Error(Errc::BadSmoothnessOrder, "r_hat must be >= 1");
  if (n < 1) throw Error(Errc::EmptyGrid, "sample size is zero");
  BandwidthGrid grid;
  grid.h_min = std::pow(static_cast<double>(n), -1.0 / (2.0 * static_cast<double>(r_hat) + 1.0));
  for (std::size_t j = 0;; ++j) {
    const double h = kind == GridKind::Exponential
                         ? std::pow(rho, -static_cast<double>(j))
                         : std::pow(static_cast<double>(j + 1), -rho);
    if (h < grid.h_min) break;
    if (grid.h.size() == kMaxGridSize)
      throw Error(Errc::BadRho, "grid would exceed " + std::to_string(kMaxGridSize) +
                                    " bandwidths; increase rho");
    grid.h.push_back(h);
  }
  if (grid.h.empty()) throw Error(Errc::EmptyGrid, "no bandwidth above h_min");
  return grid;
}

TauConfig default_tau_config() {
  return {[](double k) { return std::log(1.0 + std::log(1.0 + k)); },
          [](double h) { return std::log(1.0 + std::log(1.0 + 1.0 / h)); }};
}

double tau(double h, std::size_t k, std::size_t n, const TauConfig& cfg) {
  if (!(h > 0.0)) throw Error(Errc::NonPositiveBandwidth, "h must be > 0");
  if (n == 0) throw Error(Errc::InvalidArgument, "n must be >= 1");
  const double kk = static_cast<double>(k);
  const double log_k = k == 0 ? 0.0 : std::log(kk);
  const double num = cfg.lambda_k(kk) * log_k - cfg.lambda_h(h) * std::log(h);
  const double t = std::sqrt(std::max(num, 0.0) / (static_cast<double>(n) * h));
  return std::min(t, 1.0 - 1e-12);
}

bool admissible(std::size_t k, std::size_t d_x, double h, std::size_t n) noexcept {
  return static_cast<double>((k + 1) * d_x) <= static_cast<double>(n) * h * h;
}

std::vector<double> rademacher_signs(std::size_t n, std::uint64_t seed, std::size_t draw) {
  Rng rng(derive_seed({seed, 0x5349474eULL, draw}));
  std::vector<double> s(n);
  for (double& v : s) v = (rng() >> 63) ? 1.0 : -1.0;
  return s;
}

std::vector<std::vector<double>> rademacher_suprema(const Dataset& ds,
                                                    std::span<const std::size_t> ks, double h,
                                                    std::span<const double> weights,
                                                    const std::vector<std::vector<double>>& signs,
                                                    const OptimizerConfig& cfg, double out_lo,
                                                    double out_hi) {
  const std::size_t n = ds.size();
  if (weights.size() != n) throw Error(Errc::DimensionMismatch, "one weight per row");
  const std::vector<double> t(ds.t().begin(), ds.t().end());
  const std::vector<double> x = row_major_x(ds);
  std::vector<std::vector<double>> out(signs.size());
  parallel_for(signs.size(), [&](std::size_t b) {
    if (signs[b].size() != n) throw Error(Errc::DimensionMismatch, "one sign per row");
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = 2.0 * signs[b][i] * weights[i];
    KernelObjective obj(t, x, ds.d_x(), std::move(w), h);
    const auto chain = optimize_chain(obj, ks, ds.d_x(), out_lo, out_hi, cfg,
                                      derive_seed({cfg.seed, 0x524144ULL, b}));
    out[b].resize(chain.size());
    for (std::size_t q = 0; q < chain.size(); ++q) out[b][q] = chain[q].value;
  });
  return out;
}

double rademacher_penalty(const Dataset& ds, const MonotoneSeparableFamily& family, double h,
                          std::span<const double> weights,
                          const std::vector<std::vector<double>>& signs,
                          const OptimizerConfig& cfg) {
  if (signs.empty()) return 0.0;
  const std::size_t k = family.k();
  const auto sup = rademacher_suprema(ds, std::span<const std::size_t>(&k, 1), h, weights, signs,
                                      cfg, family.out_lo(), family.out_hi());
  std::vector<double> v(sup.size());
  for (std::size_t b = 0; b < sup.size(); ++b) v[b] = sup[b][0];
  return mean(v);
}

double rademacher_penalty(const Dataset& ds, const MonotoneSeparableFamily& family, double h,
                          std::span<const double> weights, std::size_t n_draws,
                          std::uint64_t seed, const OptimizerConfig& cfg) {
  std::vector<std::vector<double>> signs(n_draws);
  for (std::size_t b = 0; b < n_draws; ++b) signs[b] = rademacher_signs(ds.size(), seed, b);
  return rademacher_penalty(ds, family, h, weights, signs, cfg);
}

std::size_t holdout_estimating_size(std::size_t n, double iota) {
  return static_cast<std::size_t>(std::floor((1.0 - iota) * static_cast<double>(n)));
}

SelectionResult holdout_select(const Dataset& ds, const BandwidthGrid& grid,
                               const BiasBoundFit& bias, const SelectionConfig& cfg,
                               const PropensityOracle* propensity) {
  check_grid(grid);
  if (!(cfg.iota > 0.0 && cfg.iota < 1.0))
    throw Error(Errc::InvalidArgument, "iota must lie in (0, 1)");
  const std::size_t n = ds.size(), d = ds.d_x();
  const std::size_t n_e = holdout_estimating_size(n, cfg.iota);
  if (n_e < kMinTrainingRows || n_e >= n)
    throw Error(Errc::SplitTooSmall, "estimating split has " + std::to_string(n_e) + " of " +
                                         std::to_string(n) + " rows");
  const auto perm = shuffled_indices(n, derive_seed({cfg.seed, 0x484f4c44ULL}));
  const std::vector<std::size_t> est(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_e));
  const std::vector<std::size_t> tst(perm.begin() + static_cast<std::ptrdiff_t>(n_e), perm.end());
  const Dataset E = ds.subset(est);
  const Dataset T = ds.subset(tst);
  const double lo = ds.t_lo(), hi = ds.t_hi();

  const std::size_t H = grid.h.size();
  std::vector<std::vector<std::size_t>> ks(H);
  bool any = false;
  for (std::size_t j = 0; j < H; ++j) {
    ks[j] = orders_for(grid.h[j], n_e, d, cfg);
    any = any || !ks[j].empty();
  }
  if (!any) throw Error(Errc::NoAdmissiblePair, "no (h, k) satisfies the VC constraint");

  const bool dd = cfg.estimator == EstimatorKind::DoubleDebiased;
  std::vector<double> w_e, g_t;
  std::shared_ptr<const DdRows> e_rows, t_rows;
  if (dd) {
    const CrossFit cf = cross_fit(E, cfg.folds, derive_seed({cfg.seed, 0x58464954ULL}),
                                  cfg.nuisance);
    std::vector<std::size_t> all_e(n_e), all_t(T.size());
    for (std::size_t i = 0; i < n_e; ++i) all_e[i] = i;
    for (std::size_t i = 0; i < T.size(); ++i) all_t[i] = i;
    e_rows = std::make_shared<DdRows>(dd_rows(E, cf, all_e));
    const NuisanceFit full = fit_nuisances_full(E, cfg.nuisance);
    t_rows = std::make_shared<DdRows>(dd_rows(T, full, all_t));
  } else {
    if (!propensity) throw Error(Errc::MissingPropensity, "IPW needs a propensity");
    const auto g_e = propensity_weights(E, *propensity);
    w_e.resize(n_e);
    for (std::size_t i = 0; i < n_e; ++i) w_e[i] = E.y()[i] * g_e[i];
    g_t = propensity_weights(T, *propensity);
  }
  const std::vector<double> t_e(E.t().begin(), E.t().end());
  const std::vector<double> x_e = row_major_x(E);

  std::vector<std::vector<OptimResult>> chains(H);
  parallel_for(H, [&](std::size_t j) {
    if (ks[j].empty()) return;
    const double h = grid.h[j];
    const std::uint64_t s = derive_seed({cfg.seed, 0x45574dULL, j});
    if (dd) {
      DdObjective obj(e_rows, std::vector<double>(n_e, 1.0 / static_cast<double>(n_e)), h);
      chains[j] = optimize_chain(obj, ks[j], d, lo, hi, cfg.optimizer, s);
    } else {
      KernelObjective obj(t_e, x_e, d, w_e, h);
      chains[j] = optimize_chain(obj, ks[j], d, lo, hi, cfg.optimizer, s);
    }
  });

  std::vector<SelectionRow> table;
  for (std::size_t j = 0; j < H; ++j) {
    const double h = grid.h[j];
    for (std::size_t q = 0; q < ks[j].size(); ++q) {
      const std::size_t k = ks[j][q];
      const MonotoneSeparableFamily fam(d, k, lo, hi);
      const PolicyParams& params = chains[j][q].params;
      double w_test;
      if (dd) {
        DdObjective obj(t_rows,
                        std::vector<double>(T.size(), 1.0 / static_cast<double>(T.size())), h);
        w_test = objective_value(obj, fam, params);
      } else {
        w_test = ipw_welfare(
            T, [&](std::span<const double> xx) { return fam.evaluate(params, xx); }, h, g_t);
      }
      const double w_est = chains[j][q].value;
      table.push_back(
          {h, k, score(w_est, w_est - w_test, tau(h, k, n_e, cfg.tau), bias.penalty(h)), params});
    }
  }
  return finish(std::move(table), n_e);
}

SelectionResult select(const Dataset& ds, const BandwidthGrid& grid, const BiasBoundFit& bias,
                       const SelectionConfig& cfg, const PropensityOracle* propensity) {
  if (cfg.k_min > cfg.k_max) throw Error(Errc::InvalidArgument, "k_min > k_max");
  if (cfg.penalty == PenaltyKind::Holdout)
    return holdout_select(ds, grid, bias, cfg, propensity);
  return select_rademacher(ds, grid, bias, cfg, propensity);
}

FitReport fit_policy(const Dataset& raw, const FitConfig& cfg,
                     const PropensityOracle* propensity) {
  const Dataset ds = rescale_covariates(raw);
  FitReport rep;
  if (cfg.known_bias) {
    rep.bias = *cfg.known_bias;
  } else {
    BiasFitConfig bcfg = cfg.bias;
    bcfg.seed = derive_seed({cfg.selection.seed, 0x42494153ULL});
    rep.bias = estimate_bias_fit(ds, bcfg);
  }
  const std::size_t n_grid = cfg.selection.penalty == PenaltyKind::Holdout
                                 ? holdout_estimating_size(ds.size(), cfg.selection.iota)
                                 : ds.size();
  rep.grid = make_grid(cfg.grid, cfg.rho, std::max<std::size_t>(n_grid, 1), rep.bias.r_hat);
  rep.selection = select(ds, rep.grid, rep.bias, cfg.selection, propensity);
  rep.policy = FittedPolicy{MonotoneSeparableFamily(ds.d_x(), rep.selection.k_hat, ds.t_lo(),
                                                    ds.t_hi()),
                            rep.selection.params, ds.x_scale()};
  return rep;
}

}  // namespace contpol
