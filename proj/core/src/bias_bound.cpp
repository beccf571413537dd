#include "contpol/bias_bound.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "contpol/errors.hpp"
#include "contpol/numerics.hpp"
#include "contpol/quadrature.hpp"

namespace contpol {

namespace {

using cplx = std::complex<double>;

// int_{-d}^{d} (mu + beta s) e^{i xi s} ds.
cplx centered_segment(double mu, double beta, double xi, double d) {
  const double z = xi * d;
  double s0, s1;
  if (std::fabs(z) < 1e-2) {
    const double z2 = z * z;
    s0 = 2.0 * d * (1.0 - z2 / 6.0 + z2 * z2 / 120.0);
    s1 = 2.0 * d * d * z * (1.0 / 3.0 - z2 / 30.0 + z2 * z2 / 840.0);
  } else {
    s0 = 2.0 * std::sin(z) / xi;
    s1 = 2.0 * (std::sin(z) / (xi * xi) - d * std::cos(z) / xi);
  }
  return cplx(mu * s0, beta * s1);
}

// Linear piece from (a, va) to (b, vb).
cplx segment_ft(double a, double va, double b, double vb, double xi) {
  if (!(b > a)) return {0.0, 0.0};
  const double d = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const cplx inner = centered_segment(0.5 * (va + vb), (vb - va) / (b - a), xi, d);
  return std::polar(1.0, xi * mid) * inner;
}

}  // namespace

double bias_constant(std::size_t r) {
  if (r < 1) throw Error(Errc::BadSmoothnessOrder, "r must be >= 1");
  const double pi = std::numbers::pi;
  if (r == 1) return std::numbers::ln2 / pi;
  const double rr = static_cast<double>(r);
  const double p = std::pow(2.0, -rr);
  return ((1.0 - 2.0 * p) / (rr - 1.0) - (1.0 - p) / rr + p / rr) / pi;
}

double bias_bound(double h, std::size_t r, double V) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(Errc::NonPositiveBandwidth, "h must be > 0");
  if (!(V >= 0.0) || !std::isfinite(V)) throw Error(Errc::InvalidArgument, "V must be >= 0");
  return bias_constant(r) * V * std::pow(h, static_cast<double>(r));
}

cplx profile_ft(const PiecewiseProfile& p, double lo, double hi, double xi) {
  const auto& nodes = p.nodes();
  const auto& vals = p.values();
  if (nodes.empty() || !(hi > lo)) return {0.0, 0.0};
  cplx acc{0.0, 0.0};
  if (p.shape() == MeanShape::PiecewiseConstant) {
    const auto& edges = p.edges();
    double a = lo;
    for (std::size_t j = 0; j < vals.size(); ++j) {
      double b = j < edges.size() ? std::clamp(edges[j], lo, hi) : hi;
      if (b > a) acc += segment_ft(a, vals[j], b, vals[j], xi);
      a = std::max(a, b);
    }
    return acc;
  }
  auto clip = [&](double t) { return std::clamp(t, lo, hi); };
  const double first = clip(nodes.front());
  const double last = clip(nodes.back());
  acc += segment_ft(lo, vals.front(), first, vals.front(), xi);
  for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
    const double a = clip(nodes[j]), b = clip(nodes[j + 1]);
    if (b > a) acc += segment_ft(a, p.value(a), b, p.value(b), xi);
  }
  acc += segment_ft(last, vals.back(), hi, vals.back(), xi);
  return acc;
}

cplx mu_ft_debiased(const Dataset& ds, const std::function<double(double)>& mu_hat,
                    const std::function<double(double)>& fT_hat, double xi) {
  if (ds.size() == 0) throw Error(Errc::EmptyCurve, "empty dataset");
  const double lo = ds.t_lo(), hi = ds.t_hi();
  const double re = integrate_adaptive([&](double t) { return mu_hat(t) * std::cos(xi * t); },
                                       lo, hi, 1e-12);
  const double im = integrate_adaptive([&](double t) { return mu_hat(t) * std::sin(xi * t); },
                                       lo, hi, 1e-12);
  std::vector<double> cr(ds.size()), ci(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double ti = ds.t()[i];
    const double f = fT_hat(ti);
    if (!(f > 0.0)) throw Error(Errc::DensityNotBoundedAway, "treatment density is not positive");
    const double r = (ds.y()[i] - mu_hat(ti)) / f;
    cr[i] = r * std::cos(xi * ti);
    ci[i] = r * std::sin(xi * ti);
  }
  return {re + mean(cr), im + mean(ci)};
}

MuFtCurve estimate_mu_ft_curve(const Dataset& ds, const BiasFitConfig& cfg) {
  const std::size_t n = ds.size();
  if (n < 2 * kMinTrainingRows) throw Error(Errc::TooFewRows, "too few rows for the bias fit");
  const FoldPlan plan = make_folds(n, cfg.folds, derive_seed({cfg.seed, 0x424941ULL}));
  const double lo = ds.t_lo(), hi = ds.t_hi();
  const double log_n = std::log(static_cast<double>(n));
  const double lambda_max = log_n * log_n;
  const std::size_t g = std::max<std::size_t>(cfg.grid_points, 2);

  MuFtCurve curve;
  curve.full_grid = g;
  std::vector<double> grid(g);
  for (std::size_t j = 0; j < g; ++j)
    grid[j] = std::exp(lambda_max * static_cast<double>(j) / static_cast<double>(g - 1));

  std::vector<cplx> total(g, cplx{0.0, 0.0});
  double var = 0.0;
  const double L = static_cast<double>(plan.folds);
  for (std::size_t l = 0; l < plan.folds; ++l) {
    const auto train = plan.complement(l);
    const auto eval = plan.members(l);
    const double bins = std::round(cfg.bin_constant * std::cbrt(static_cast<double>(train.size())));
    const auto mu = PiecewiseProfile::fit(ds.t(), ds.y(), train,
                                          static_cast<std::size_t>(std::max(2.0, bins)), lo, hi,
                                          cfg.nuisance.shape);
    const auto fT = TreatmentDensity::fit(ds.t(), train, cfg.nuisance);
    const double nl = static_cast<double>(eval.size());
    std::vector<double> resid(eval.size()), te(eval.size());
    for (std::size_t q = 0; q < eval.size(); ++q) {
      const std::size_t i = eval[q];
      te[q] = ds.t()[i];
      resid[q] = (ds.y()[i] - mu.value(te[q])) / fT(te[q]);
      var += resid[q] * resid[q] / (L * L * nl * nl);
    }
    std::vector<double> cr(eval.size()), ci(eval.size());
    for (std::size_t j = 0; j < g; ++j) {
      for (std::size_t q = 0; q < eval.size(); ++q) {
        cr[q] = resid[q] * std::cos(grid[j] * te[q]);
        ci[q] = resid[q] * std::sin(grid[j] * te[q]);
      }
      const cplx correction{mean(cr), mean(ci)};
      total[j] += (profile_ft(mu, lo, hi, grid[j]) + correction) / L;
    }
  }
  curve.noise_se = std::sqrt(var);
  const double floor = cfg.noise_z * curve.noise_se;
  for (std::size_t j = 0; j < g; ++j) {
    const double mag = std::abs(total[j]);
    if (j > 0 && mag < floor) break;
    curve.xi.push_back(grid[j]);
    curve.magnitude.push_back(mag);
    if (mag < floor) break;
  }
  return curve;
}

BiasBoundFit fit_envelope(std::span<const double> xi, std::span<const double> magnitude,
                          std::size_t r_max, double gamma) {
  if (xi.empty() || xi.size() != magnitude.size())
    throw Error(Errc::EmptyCurve, "curve must be non-empty with one value per frequency");
  if (r_max < 1) throw Error(Errc::BadSmoothnessOrder, "r_max must be >= 1");
  BiasBoundFit fit;
  fit.gamma = gamma;
  bool any = false;
  for (double m : magnitude) any = any || m > 0.0;
  if (!any) {
    fit.r_hat = r_max;
    fit.V_hat = 0.0;
    fit.all_values_zero = true;
    return fit;
  }
  double Lambda = 0.0;
  for (double x : xi) Lambda = std::max(Lambda, std::log(x));
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t r = 1; r <= r_max; ++r) {
    const double rp1 = static_cast<double>(r + 1);
    double log_a = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < xi.size(); ++j) {
      if (!(magnitude[j] > 0.0)) continue;
      log_a = std::max(log_a, std::log(magnitude[j]) + rp1 * std::log(xi[j]));
    }
    const double score = log_a * Lambda - 0.5 * rp1 * Lambda * Lambda;
    if (score < best_score) {
      best_score = score;
      fit.r_hat = r;
      fit.V_hat = std::exp(log_a);
    }
  }
  return fit;
}

BiasBoundFit estimate_bias_fit(const Dataset& ds, const BiasFitConfig& cfg) {
  const MuFtCurve curve = estimate_mu_ft_curve(ds, cfg);
  return fit_envelope(curve.xi, curve.magnitude, cfg.r_max, cfg.gamma);
}

}  // namespace contpol
