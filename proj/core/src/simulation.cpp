#include "contpol/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "contpol/errors.hpp"
#include "contpol/kernel.hpp"
#include "contpol/numerics.hpp"
#include "contpol/optimizer.hpp"
#include "contpol/parallel.hpp"
#include "contpol/quadrature.hpp"

namespace contpol {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

double norm_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double norm_quantile(double p) { return -kSqrt2 * boost::math::erfc_inv(2.0 * p); }

double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double coef(const std::vector<double>& v, std::size_t p) { return p < v.size() ? v[p] : 0.0; }

double law_mean(const DgpSpec& s, std::span<const double> x) {
  double mu = s.law_mean0;
  for (std::size_t p = 0; p < x.size(); ++p) mu += coef(s.law_mean_slope, p) * (x[p] - 0.5);
  return mu;
}

std::vector<double> spread(double total, std::size_t d) {
  return std::vector<double>(d, total / static_cast<double>(d));
}

}  // namespace

double DgpSpec::center(std::span<const double> x) const {
  double c = center0;
  for (std::size_t p = 0; p < x.size(); ++p) {
    const double b = coef(center_slope, p);
    c += form == MeanForm::SeparableMonotone ? b * x[p] * x[p] : b * x[p];
  }
  return c;
}

double DgpSpec::support_radius() const {
  switch (form) {
    case MeanForm::Tent: return half_width;
    case MeanForm::SmoothQuadratic:
    case MeanForm::SeparableMonotone: return width;
    default: return -1.0;
  }
}

double DgpSpec::mean(double t, std::span<const double> x) const {
  switch (form) {
    case MeanForm::Linear: {
      double m = level + slope * t;
      for (std::size_t p = 0; p < x.size(); ++p) m += coef(x_coef, p) * x[p];
      return m;
    }
    case MeanForm::Tent:
      return peak * std::max(0.0, 1.0 - std::fabs(t - center(x)) / half_width);
    case MeanForm::SmoothQuadratic:
    case MeanForm::SeparableMonotone: {
      const double u = (t - center(x)) / width;
      if (std::fabs(u) >= 1.0) return 0.0;
      const double v = 1.0 - u * u;
      return peak * v * v;
    }
    case MeanForm::QuadraticLoss: {
      const double z = t - center(x);
      return -z * z;
    }
  }
  return 0.0;
}

double DgpSpec::mean_dt(double t, std::span<const double> x) const {
  switch (form) {
    case MeanForm::Linear: return slope;
    case MeanForm::Tent: {
      const double z = t - center(x);
      if (std::fabs(z) >= half_width || z == 0.0) return 0.0;
      return -peak * (z > 0.0 ? 1.0 : -1.0) / half_width;
    }
    case MeanForm::SmoothQuadratic:
    case MeanForm::SeparableMonotone: {
      const double u = (t - center(x)) / width;
      if (std::fabs(u) >= 1.0) return 0.0;
      return -4.0 * peak * u * (1.0 - u * u) / width;
    }
    case MeanForm::QuadraticLoss: return -2.0 * (t - center(x));
  }
  return 0.0;
}

double DgpSpec::density(double t, std::span<const double> x) const {
  if (t < 0.0 || t > 1.0) return 0.0;
  if (law == TreatmentLaw::Uniform) return 1.0;
  const double mu = law_mean(*this, x);
  const double z = norm_cdf((1.0 - mu) / law_sd) - norm_cdf(-mu / law_sd);
  return norm_pdf((t - mu) / law_sd) / (law_sd * z);
}

double DgpSpec::density_lower() const {
  if (law == TreatmentLaw::Uniform) return 1.0;
  // law mean is affine in x, so its range is attained at the corners.
  double lo = law_mean0, hi = law_mean0;
  for (std::size_t p = 0; p < d_x; ++p) {
    const double b = 0.5 * std::fabs(coef(law_mean_slope, p));
    lo -= b;
    hi += b;
  }
  double f = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= 400; ++j) {
    const double mu = lo + (hi - lo) * j / 400.0;
    const double z = norm_cdf((1.0 - mu) / law_sd) - norm_cdf(-mu / law_sd);
    for (double t : {0.0, 1.0}) f = std::min(f, norm_pdf((t - mu) / law_sd) / (law_sd * z));
  }
  return f;
}

DgpSpec linear_dgp(std::size_t d_x) {
  DgpSpec s;
  s.name = "linear";
  s.d_x = d_x;
  s.form = MeanForm::Linear;
  s.level = 0.0;
  s.slope = 1.0;
  s.x_coef = spread(0.5, d_x);
  s.noise_sd = 0.5;
  s.known_r = 1;
  s.known_V = 0.0;
  return s;
}

DgpSpec tent_dgp(double peak, std::size_t d_x) {
  DgpSpec s;
  s.name = "tent";
  s.d_x = d_x;
  s.form = MeanForm::Tent;
  s.peak = peak;
  s.center0 = 0.5;
  s.center_slope = std::vector<double>(d_x, 0.0);
  s.half_width = 0.5;
  s.noise_sd = 0.5;
  s.known_r = 1;
  // Total variation of the first derivative: slopes +-peak/half_width with three jumps.
  s.known_V = 4.0 * peak / s.half_width;
  return s;
}

DgpSpec smooth_quadratic_dgp(std::size_t d_x) {
  DgpSpec s;
  s.name = "smooth-quadratic";
  s.d_x = d_x;
  s.form = MeanForm::SmoothQuadratic;
  s.peak = 1.0;
  s.width = 0.3;
  s.center0 = 0.3;
  s.center_slope = spread(0.4, d_x);
  s.noise_sd = 0.5;
  s.law = TreatmentLaw::TruncatedNormal;
  s.law_mean0 = 0.5;
  s.law_mean_slope = spread(0.3, d_x);
  s.law_sd = 0.3;
  s.known_r = 2;
  s.known_V = 40.0 * s.peak / (s.width * s.width);
  return s;
}

DgpSpec separable_monotone_dgp(std::size_t d_x) {
  DgpSpec s = smooth_quadratic_dgp(d_x);
  s.name = "separable-monotone";
  s.form = MeanForm::SeparableMonotone;
  return s;
}

DgpSpec quadratic_loss_dgp(std::size_t d_x) {
  DgpSpec s;
  s.name = "quadratic-loss";
  s.d_x = d_x;
  s.form = MeanForm::QuadraticLoss;
  s.center0 = 0.25;
  s.center_slope = spread(0.5, d_x);
  s.noise_sd = 0.5;
  s.known_r = 2;
  s.known_V = 0.0;
  return s;
}

std::vector<std::string> dgp_names() {
  return {"linear", "tent", "smooth-quadratic", "separable-monotone", "quadratic-loss"};
}

DgpSpec dgp_by_name(const std::string& name, std::size_t d_x) {
  if (name == "linear") return linear_dgp(d_x);
  if (name == "tent") return tent_dgp(1.0, d_x);
  if (name == "smooth-quadratic") return smooth_quadratic_dgp(d_x);
  if (name == "separable-monotone") return separable_monotone_dgp(d_x);
  if (name == "quadratic-loss") return quadratic_loss_dgp(d_x);
  throw Error(Errc::InvalidArgument, "unknown dgp '" + name + "'");
}

SimulatedSample generate(const DgpSpec& spec, std::size_t n, std::uint64_t seed) {
  const std::size_t d = spec.d_x;
  Rng rng(derive_seed({seed, 0x47454eULL}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> y(n), t(n), x(n * d);
  std::vector<double> xi(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < d; ++p) xi[p] = x[i * d + p] = unif(rng);
    if (spec.law == TreatmentLaw::Uniform) {
      t[i] = unif(rng);
    } else {
      const double mu = law_mean(spec, xi);
      const double a = norm_cdf(-mu / spec.law_sd), b = norm_cdf((1.0 - mu) / spec.law_sd);
      const double u = a + (b - a) * unif(rng);
      t[i] = std::clamp(mu + spec.law_sd * norm_quantile(u), 0.0, 1.0);
    }
    double z;
    do {
      z = normal(rng);
    } while (std::fabs(z) > 4.0);
    y[i] = spec.mean(t[i], xi) + spec.noise_sd * z;
  }
  SimulatedSample out{Dataset(std::move(y), std::move(t), std::move(x), d), {}};
  const DgpSpec copy = spec;
  out.propensity.inverse_density = [copy](double tt, std::span<const double> raw) {
    return 1.0 / copy.density(tt, raw);
  };
  out.propensity.f_lower = spec.density_lower();
  return out;
}

namespace {

/// E over X ~ U[0,1]^d of f(x).
double integrate_covariates(std::size_t d, const std::function<double(std::span<const double>)>& f) {
  if (d == 1) {
    double x1 = 0.0;
    return integrate_adaptive(
        [&](double x) {
          x1 = x;
          return f(std::span<const double>(&x1, 1));
        },
        0.0, 1.0, 1e-11);
  }
  if (d <= 3) {
    std::vector<double> nodes, weights;
    composite_rule(0.0, 1.0, 64, 1, {}, nodes, weights);
    const std::size_t m = nodes.size();
    std::size_t total = 1;
    for (std::size_t p = 0; p < d; ++p) total *= m;
    std::vector<double> terms(total);
    std::vector<double> x(d);
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t r = idx;
      double w = 1.0;
      for (std::size_t p = 0; p < d; ++p) {
        x[p] = nodes[r % m];
        w *= weights[r % m];
        r /= m;
      }
      terms[idx] = w * f(x);
    }
    return pairwise_sum(terms);
  }
  Rng rng(derive_seed({d, 0x4d43ULL}));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  constexpr std::size_t draws = 1000000;
  std::vector<double> terms(draws), x(d);
  for (std::size_t i = 0; i < draws; ++i) {
    for (double& v : x) v = unif(rng);
    terms[i] = f(x);
  }
  return mean(terms);
}

/// int (1/h) K((t - a)/h) m(t, x) dt over the real line.
double smoothed_mean(const DgpSpec& spec, double a, std::span<const double> x, double h) {
  switch (spec.form) {
    case MeanForm::Linear:
    case MeanForm::QuadraticLoss:
      // The kernel's Fourier transform is flat at zero, so every moment of
      // order one and above vanishes and polynomials pass through unchanged.
      return spec.mean(a, x);
    default: break;
  }
  const double c = spec.center(x);
  const double r = spec.support_radius();
  const double breaks[] = {c};
  return integrate_adaptive(
      [&](double t) { return eval_kernel((t - a) / h) / h * spec.mean(t, x); }, c - r, c + r,
      1e-12, spec.form == MeanForm::Tent ? std::span<const double>(breaks) : std::span<const double>{});
}

/// J(theta) = sum_j w_j m(pi(x_j), x_j) on quadrature nodes.
class QuadratureObjective final : public PolicyObjective {
 public:
  QuadratureObjective(const DgpSpec& spec, std::size_t knots) : spec_(spec), d_(spec.d_x) {
    std::vector<double> nodes, weights;
    if (d_ == 1)
      composite_rule(0.0, 1.0, 8, knots, {}, nodes, weights);
    else
      composite_rule(0.0, 1.0, d_ == 2 ? 64 : 16, 1, {}, nodes, weights);
    const std::size_t m = nodes.size();
    std::size_t total = 1;
    for (std::size_t p = 0; p < d_; ++p) total *= m;
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t r = idx;
      double w = 1.0;
      for (std::size_t p = 0; p < d_; ++p) {
        x_.push_back(nodes[r % m]);
        w *= weights[r % m];
        r /= m;
      }
      w_.push_back(w);
    }
    for (int j = 0; j <= 100; ++j) t_.push_back(j / 100.0);
  }

  std::size_t size() const override { return w_.size(); }
  std::size_t d_x() const override { return d_; }
  std::span<const double> covariates(std::size_t i) const override {
    return {x_.data() + i * d_, d_};
  }
  void pointwise(std::span<const double> a, std::span<double> values,
                 std::span<double> derivs) const override {
    for (std::size_t i = 0; i < w_.size(); ++i) {
      values[i] = w_[i] * spec_.mean(a[i], covariates(i));
      if (!derivs.empty()) derivs[i] = w_[i] * spec_.mean_dt(a[i], covariates(i));
    }
  }
  std::span<const double> treatment_sample() const override { return t_; }

 private:
  const DgpSpec& spec_;
  std::size_t d_;
  std::vector<double> x_, w_, t_;
};

}  // namespace

double true_welfare(const DgpSpec& spec, const RawPolicy& policy) {
  return integrate_covariates(spec.d_x,
                              [&](std::span<const double> x) { return spec.mean(policy(x), x); });
}

double smoothed_welfare(const DgpSpec& spec, const RawPolicy& policy, double h) {
  if (!(h > 0.0)) throw Error(Errc::NonPositiveBandwidth, "h must be > 0");
  return integrate_covariates(
      spec.d_x, [&](std::span<const double> x) { return smoothed_mean(spec, policy(x), x, h); });
}

double oracle_welfare(const DgpSpec& spec) {
  constexpr std::size_t k = 32;
  const MonotoneSeparableFamily fam(spec.d_x, k, 0.0, 1.0);
  QuadratureObjective obj(spec, k);
  std::vector<PolicyParams> warm;
  if (spec.form != MeanForm::Linear) {
    std::vector<std::function<double(double)>> comps;
    const double share = spec.center0 / static_cast<double>(spec.d_x);
    for (std::size_t p = 0; p < spec.d_x; ++p) {
      const double b = coef(spec.center_slope, p);
      const bool square = spec.form == MeanForm::SeparableMonotone;
      comps.emplace_back([=](double x) { return share + b * (square ? x * x : x); });
    }
    PolicyParams start = interpolate_components(fam, comps);
    if (is_monotone(fam, start)) warm.push_back(std::move(start));
  }
  OptimizerConfig cfg;
  cfg.n_starts = 12;
  cfg.max_iters = 2000;
  cfg.tol = 1e-13;
  cfg.seed = 0x4f5241434c45ULL;
  const OptimResult best = maximize(obj, fam, cfg, warm);
  return true_welfare(spec, [&](std::span<const double> x) { return fam.evaluate(best.params, x); });
}

double welfare_range(const DgpSpec& spec, double oracle) {
  double worst = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= 200; ++j) {
    const double c = j / 200.0;
    worst = std::min(worst, true_welfare(spec, [c](std::span<const double>) { return c; }));
  }
  return oracle - worst;
}

std::vector<RegretRecord> run_regret_experiment(const DgpSpec& spec,
                                                std::span<const std::size_t> n_list,
                                                std::size_t reps, std::uint64_t seed,
                                                const RegretConfig& cfg) {
  const double w_star = oracle_welfare(spec);
  const std::size_t paths = cfg.paths.size();
  const std::size_t units = n_list.size() * reps * paths;
  std::vector<RegretRecord> out(units);
  parallel_for(units, [&](std::size_t u) {
    const std::size_t path = u % paths;
    const std::size_t rep = (u / paths) % reps;
    const std::size_t n = n_list[u / (paths * reps)];
    const SimulatedSample sample = generate(spec, n, derive_seed({seed, n, rep}));
    FitConfig fc = cfg.fit;
    fc.selection.penalty = cfg.paths[path].first;
    fc.selection.estimator = cfg.paths[path].second;
    fc.selection.seed = derive_seed({seed, n, rep, 0x53454cULL});
    if (cfg.known_bias) {
      BiasBoundFit known;
      known.r_hat = spec.known_r;
      known.V_hat = spec.known_V;
      known.gamma = fc.bias.gamma;
      known.estimated = false;
      fc.known_bias = known;
    }
    const FitReport rep_fit = fit_policy(sample.data, fc, &sample.propensity);
    const double w = true_welfare(
        spec, [&](std::span<const double> raw) { return rep_fit.policy.on_raw(raw); });
    RegretRecord& rec = out[u];
    rec.n = n;
    rec.rep = rep;
    rec.penalty = fc.selection.penalty;
    rec.estimator = fc.selection.estimator;
    rec.h_hat = rep_fit.selection.h_hat;
    rec.k_hat = rep_fit.selection.k_hat;
    rec.welfare_hat = rep_fit.selection.chosen.welfare;
    rec.true_welfare = w;
    rec.oracle_welfare = w_star;
    rec.regret = w_star - w;
    rec.r_hat = rep_fit.bias.r_hat;
    rec.V_hat = rep_fit.bias.V_hat;
  });
  return out;
}

std::string regret_csv(std::span<const RegretRecord> records) {
  std::string out = "n,rep,penalty,estimator,h_hat,k_hat,welfare_hat,true_welfare,oracle_welfare,regret\n";
  char buf[512];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%s,%s,%.10g,%zu,%.10g,%.10g,%.10g,%.10g\n", r.n, r.rep,
                  to_string(r.penalty).c_str(), to_string(r.estimator).c_str(), r.h_hat, r.k_hat,
                  r.welfare_hat, r.true_welfare, r.oracle_welfare, r.regret);
    out += buf;
  }
  return out;
}

}  // namespace contpol
