#include "contpol/sieve.hpp"

#include <algorithm>
#include <cmath>

#include "contpol/errors.hpp"

namespace contpol {

MonotoneSeparableFamily::MonotoneSeparableFamily(std::size_t d_x, std::size_t k, double out_lo,
                                                 double out_hi)
    : d_x_(d_x), k_(k), out_lo_(out_lo), out_hi_(out_hi) {
  if (d_x == 0) throw Error(Errc::InvalidArgument, "d_x must be >= 1");
  if (!(out_lo <= out_hi)) throw Error(Errc::InvalidArgument, "out_lo > out_hi");
}

BasisLocation MonotoneSeparableFamily::locate(double x) const noexcept {
  if (k_ == 0) return {0, 0.0};
  const double kx = static_cast<double>(k_) * std::clamp(x, 0.0, 1.0);
  auto j = static_cast<std::size_t>(kx);
  if (j >= k_) j = k_ - 1;
  return {j, kx - static_cast<double>(j)};
}

double MonotoneSeparableFamily::linear_predictor(const PolicyParams& params,
                                                 std::span<const double> x) const {
  if (x.size() != d_x_) throw Error(Errc::DimensionMismatch, "covariate length");
  if (params.theta.size() != dim()) throw Error(Errc::DimensionMismatch, "theta length");
  double a = 0.0;
  for (std::size_t p = 0; p < d_x_; ++p) {
    const double* th = params.theta.data() + p * (k_ + 1);
    const BasisLocation loc = locate(x[p]);
    a += th[loc.index] * (1.0 - loc.frac);
    if (k_ > 0) a += th[loc.index + 1] * loc.frac;
  }
  return a;
}

double MonotoneSeparableFamily::evaluate(const PolicyParams& params,
                                         std::span<const double> x) const {
  return std::clamp(linear_predictor(params, x), out_lo_, out_hi_);
}

double eval_policy(const MonotoneSeparableFamily& family, const PolicyParams& params,
                   std::span<const double> x) {
  return family.evaluate(params, x);
}

std::size_t vc_bound(const MonotoneSeparableFamily& family) noexcept { return family.vc_bound(); }

bool is_monotone(const MonotoneSeparableFamily& family, const PolicyParams& params, double tol) {
  const std::size_t m = family.nodes();
  for (std::size_t p = 0; p < family.d_x(); ++p)
    for (std::size_t j = 1; j < m; ++j)
      if (params.theta[p * m + j] < params.theta[p * m + j - 1] - tol) return false;
  return true;
}

PiecewiseLinearPolicy::PiecewiseLinearPolicy(std::vector<double> thresholds,
                                             std::vector<double> intercepts,
                                             std::vector<double> slopes, double tol)
    : thresholds_(std::move(thresholds)),
      intercepts_(std::move(intercepts)),
      slopes_(std::move(slopes)) {
  if (intercepts_.size() != thresholds_.size() + 1 || slopes_.size() != intercepts_.size())
    throw Error(Errc::DimensionMismatch, "piecewise-linear policy needs k+1 segments");
  for (std::size_t j = 1; j < thresholds_.size(); ++j)
    if (!(thresholds_[j] > thresholds_[j - 1]))
      throw Error(Errc::InvalidArgument, "thresholds must be strictly increasing");
  for (std::size_t j = 0; j < thresholds_.size(); ++j) {
    const double s = thresholds_[j];
    const double left = intercepts_[j] + slopes_[j] * s;
    const double right = intercepts_[j + 1] + slopes_[j + 1] * s;
    if (std::fabs(left - right) > tol)
      throw Error(Errc::ContinuityViolation, "jump at threshold " + std::to_string(j + 1));
  }
}

double PiecewiseLinearPolicy::operator()(double x) const {
  const auto it = std::upper_bound(thresholds_.begin(), thresholds_.end(), x);
  const auto j = static_cast<std::size_t>(it - thresholds_.begin());
  return intercepts_[j] + slopes_[j] * x;
}

PolicyParams interpolate_components(const MonotoneSeparableFamily& family,
                                    std::span<const std::function<double(double)>> components) {
  if (components.size() != family.d_x())
    throw Error(Errc::DimensionMismatch, "one component per covariate");
  const std::size_t m = family.nodes();
  PolicyParams out{std::vector<double>(family.dim())};
  for (std::size_t p = 0; p < family.d_x(); ++p)
    for (std::size_t j = 0; j < m; ++j) {
      const double node = family.k() == 0 ? 0.5 : static_cast<double>(j) / family.k();
      out.theta[p * m + j] = components[p](node);
    }
  return out;
}

double sieve_approx_gap(const MonotoneSeparableFamily& family,
                        std::span<const std::function<double(double)>> components,
                        std::span<const double> probe_points) {
  const std::size_t d = family.d_x();
  if (probe_points.empty() || probe_points.size() % d != 0)
    throw Error(Errc::DimensionMismatch, "probe points must be rows of d_x values");
  const PolicyParams params = interpolate_components(family, components);
  const std::size_t n = probe_points.size() / d;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto x = probe_points.subspan(i * d, d);
    double target = 0.0;
    for (std::size_t p = 0; p < d; ++p) target += components[p](x[p]);
    total += std::fabs(family.linear_predictor(params, x) - target);
  }
  return total / static_cast<double>(n);
}

double FittedPolicy::on_raw(std::span<const double> raw_x) const {
  auto x = apply_scale(raw_x, x_scale);
  return family.evaluate(params, x);
}

}  // namespace contpol
