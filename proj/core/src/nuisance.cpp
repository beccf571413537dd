#include "contpol/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "contpol/errors.hpp"
#include "contpol/numerics.hpp"

namespace contpol {

namespace {

double robust_scale(std::vector<double> v) {
  const double n = static_cast<double>(v.size());
  double m = 0.0;
  for (double x : v) m += x;
  m /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
  double s = iqr > 0.0 ? std::min(sd, iqr / 1.349) : sd;
  if (!(s > 0.0)) s = 1.0;
  return s;
}

double silverman(double scale, std::size_t n, std::size_t dims) {
  const double d = static_cast<double>(dims);
  return scale * std::pow(4.0 / ((d + 2.0) * static_cast<double>(n)), 1.0 / (d + 4.0));
}

// Unnormalized Gaussian with reflection at lo and hi.
double reflected(double t, double ti, double lo, double hi, double inv_bw) {
  auto g = [inv_bw](double z) {
    const double u = z * inv_bw;
    return u * u > 80.0 ? 0.0 : std::exp(-0.5 * u * u);
  };
  return g(t - ti) + g(t - (2.0 * lo - ti)) + g(t - (2.0 * hi - ti));
}

void require_rows(std::span<const std::size_t> rows) {
  if (rows.size() < kMinTrainingRows)
    throw Error(Errc::FoldTooSmall, std::to_string(rows.size()) + " training rows, need " +
                                        std::to_string(kMinTrainingRows));
}

}  // namespace

PiecewiseProfile::PiecewiseProfile(std::vector<double> nodes, std::vector<double> values,
                                   MeanShape shape)
    : nodes_(std::move(nodes)), values_(std::move(values)), shape_(shape) {
  if (nodes_.size() != values_.size())
    throw Error(Errc::DimensionMismatch, "profile nodes and values differ in length");
  for (std::size_t j = 1; j < nodes_.size(); ++j) {
    if (!(nodes_[j] > nodes_[j - 1]))
      throw Error(Errc::InvalidArgument, "profile nodes must increase");
    edges_.push_back(0.5 * (nodes_[j] + nodes_[j - 1]));
  }
}

PiecewiseProfile PiecewiseProfile::fit(std::span<const double> t, std::span<const double> y,
                                       std::span<const std::size_t> rows, std::size_t bins,
                                       double lo, double hi, MeanShape shape) {
  bins = std::max<std::size_t>(bins, 1);
  std::vector<double> st(bins, 0.0), sy(bins, 0.0);
  std::vector<std::size_t> cnt(bins, 0);
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  for (std::size_t r : rows) {
    double pos = hi > lo ? (t[r] - lo) / width : 0.0;
    auto b = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    st[b] += t[r];
    sy[b] += y[r];
    ++cnt[b];
  }
  std::vector<double> nodes, values;
  for (std::size_t b = 0; b < bins; ++b) {
    if (cnt[b] == 0) continue;
    const double tn = st[b] / static_cast<double>(cnt[b]);
    const double yn = sy[b] / static_cast<double>(cnt[b]);
    if (!nodes.empty() && !(tn > nodes.back())) {
      // Only possible when bins collapse onto identical t; merge.
      values.back() = 0.5 * (values.back() + yn);
      continue;
    }
    nodes.push_back(tn);
    values.push_back(yn);
  }
  return PiecewiseProfile(std::move(nodes), std::move(values), shape);
}

double PiecewiseProfile::value(double t) const noexcept {
  if (nodes_.empty()) return 0.0;
  if (shape_ == MeanShape::PiecewiseConstant) {
    const auto it = std::upper_bound(edges_.begin(), edges_.end(), t);
    return values_[static_cast<std::size_t>(it - edges_.begin())];
  }
  if (t <= nodes_.front()) return values_.front();
  if (t >= nodes_.back()) return values_.back();
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
  const auto j = static_cast<std::size_t>(it - nodes_.begin());
  const double w = (t - nodes_[j - 1]) / (nodes_[j] - nodes_[j - 1]);
  return values_[j - 1] + w * (values_[j] - values_[j - 1]);
}

double PiecewiseProfile::dt(double t) const noexcept {
  if (shape_ == MeanShape::PiecewiseConstant || nodes_.size() < 2) return 0.0;
  if (t < nodes_.front() || t >= nodes_.back()) return 0.0;
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
  const auto j = static_cast<std::size_t>(it - nodes_.begin());
  return (values_[j] - values_[j - 1]) / (nodes_[j] - nodes_[j - 1]);
}

std::shared_ptr<PartitionRegression> PartitionRegression::fit(const Dataset& ds,
                                                              std::span<const std::size_t> rows,
                                                              const NuisanceConfig& cfg) {
  require_rows(rows);
  auto out = std::make_shared<PartitionRegression>();
  const std::size_t d = ds.d_x();
  out->d_x_ = d;
  const double n = static_cast<double>(rows.size());
  const double per_axis = std::round(cfg.cell_constant * std::pow(n, 1.0 / (3.0 + d)));
  out->cells_ = static_cast<std::size_t>(std::max(1.0, per_axis));
  std::size_t total = 1;
  for (std::size_t p = 0; p < d; ++p) total *= out->cells_;

  double lo = ds.t()[rows[0]], hi = lo;
  for (std::size_t r : rows) {
    lo = std::min(lo, ds.t()[r]);
    hi = std::max(hi, ds.t()[r]);
  }
  std::vector<std::vector<std::size_t>> members(total);
  for (std::size_t r : rows) members[out->cell_index(ds.x(r))].push_back(r);
  out->global_ = PiecewiseProfile::fit(ds.t(), ds.y(), rows, out->cells_, lo, hi, cfg.shape);
  out->profiles_.resize(total);
  for (std::size_t c = 0; c < total; ++c)
    if (!members[c].empty())
      out->profiles_[c] =
          PiecewiseProfile::fit(ds.t(), ds.y(), members[c], out->cells_, lo, hi, cfg.shape);
  return out;
}

std::size_t PartitionRegression::cell_index(std::span<const double> x) const noexcept {
  std::size_t idx = 0;
  const double m = static_cast<double>(cells_);
  for (std::size_t p = d_x_; p-- > 0;) {
    const double c = std::clamp(std::floor(x[p] * m), 0.0, m - 1.0);
    idx = idx * cells_ + static_cast<std::size_t>(c);
  }
  return idx;
}

const PiecewiseProfile& PartitionRegression::profile(std::span<const double> x) const {
  if (x.size() != d_x_) throw Error(Errc::DimensionMismatch, "covariate length");
  const PiecewiseProfile& p = profiles_[cell_index(x)];
  return p.empty() ? global_ : p;
}

double PartitionRegression::value(double t, std::span<const double> x) const {
  return profile(x).value(t);
}

double PartitionRegression::dt(double t, std::span<const double> x) const {
  return profile(x).dt(t);
}

void PartitionRegression::value_and_dt(double t, std::span<const double> x, double& v,
                                       double& d) const {
  const PiecewiseProfile& p = profile(x);
  v = p.value(t);
  d = p.dt(t);
}

std::shared_ptr<KernelConditionalDensity> KernelConditionalDensity::fit(
    const Dataset& ds, std::span<const std::size_t> rows, const NuisanceConfig& cfg) {
  require_rows(rows);
  auto out = std::make_shared<KernelConditionalDensity>();
  const std::size_t d = ds.d_x();
  out->d_x_ = d;
  out->t_.reserve(rows.size());
  out->x_.reserve(rows.size() * d);
  for (std::size_t r : rows) {
    out->t_.push_back(ds.t()[r]);
    auto xr = ds.x(r);
    out->x_.insert(out->x_.end(), xr.begin(), xr.end());
  }
  out->t_lo_ = *std::min_element(out->t_.begin(), out->t_.end());
  out->t_hi_ = *std::max_element(out->t_.begin(), out->t_.end());
  const std::size_t dims = d + 1;
  out->bw_t_ = cfg.bandwidth_scale * silverman(robust_scale(out->t_), rows.size(), dims);
  out->bw_x_.resize(d);
  for (std::size_t p = 0; p < d; ++p) {
    std::vector<double> col(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) col[i] = out->x_[i * d + p];
    out->bw_x_[p] = cfg.bandwidth_scale * silverman(robust_scale(col), rows.size(), dims);
  }
  out->floor_ = 0.0;
  std::vector<double> in_sample(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    in_sample[i] = out->density(out->t_[i], {out->x_.data() + i * d, d});
  out->floor_ = std::max(quantile(in_sample, cfg.floor_quantile), cfg.density_floor);
  return out;
}

double KernelConditionalDensity::density(double t, std::span<const double> x) const {
  if (x.size() != d_x_) throw Error(Errc::DimensionMismatch, "covariate length");
  if (t < t_lo_ || t > t_hi_) return 0.0;
  const double inv_t = 1.0 / bw_t_;
  double num = 0.0, den = 0.0;
  const std::size_t n = t_.size();
  for (std::size_t i = 0; i < n; ++i) {
    double q = 0.0;
    const double* xi = x_.data() + i * d_x_;
    for (std::size_t p = 0; p < d_x_; ++p) {
      const double u = (x[p] - xi[p]) / bw_x_[p];
      q += u * u;
    }
    if (q > 80.0) continue;
    const double w = std::exp(-0.5 * q);
    den += w;
    num += w * reflected(t, t_[i], t_lo_, t_hi_, inv_t);
  }
  if (!(den > 0.0)) return 0.0;
  return num / (den * bw_t_ * std::sqrt(2.0 * std::numbers::pi));
}

double KernelConditionalDensity::value(double t, std::span<const double> x) const {
  return 1.0 / std::max(density(t, x), floor_);
}

TreatmentDensity TreatmentDensity::fit(std::span<const double> t,
                                       std::span<const std::size_t> rows,
                                       const NuisanceConfig& cfg) {
  require_rows(rows);
  TreatmentDensity out;
  for (std::size_t r : rows) out.t_.push_back(t[r]);
  out.lo_ = *std::min_element(out.t_.begin(), out.t_.end());
  out.hi_ = *std::max_element(out.t_.begin(), out.t_.end());
  out.bw_ = cfg.bandwidth_scale * silverman(robust_scale(out.t_), out.t_.size(), 1);
  out.floor_ = 0.0;
  std::vector<double> in_sample;
  in_sample.reserve(out.t_.size());
  for (double ti : out.t_) in_sample.push_back(out(ti));
  out.floor_ = std::max(quantile(in_sample, cfg.floor_quantile), cfg.density_floor);
  return out;
}

double TreatmentDensity::operator()(double t) const {
  double f = 0.0;
  if (t >= lo_ && t <= hi_) {
    const double inv = 1.0 / bw_;
    for (double ti : t_) f += reflected(t, ti, lo_, hi_, inv);
    f /= static_cast<double>(t_.size()) * bw_ * std::sqrt(2.0 * std::numbers::pi);
  }
  return std::max(f, floor_);
}

std::vector<std::size_t> FoldPlan::members(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::complement(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != fold) out.push_back(i);
  return out;
}

FoldPlan make_folds(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2 || folds > n)
    throw Error(Errc::BadFoldCount, "need 2 <= L <= n, got L=" + std::to_string(folds));
  FoldPlan plan;
  plan.folds = folds;
  plan.fold_of.resize(n);
  const auto perm = shuffled_indices(n, derive_seed({seed, 0x464f4c44ULL}));
  for (std::size_t pos = 0; pos < n; ++pos) plan.fold_of[perm[pos]] = pos % folds;
  return plan;
}

std::vector<NuisanceFit> fit_nuisances(const Dataset& ds, const FoldPlan& plan,
                                       const NuisanceConfig& cfg) {
  if (plan.fold_of.size() != ds.size())
    throw Error(Errc::DimensionMismatch, "fold plan does not match the dataset");
  std::vector<NuisanceFit> fits;
  for (std::size_t l = 0; l < plan.folds; ++l) {
    const auto train = plan.complement(l);
    auto g = KernelConditionalDensity::fit(ds, train, cfg);
    fits.push_back({l, PartitionRegression::fit(ds, train, cfg), g, g->cap()});
  }
  return fits;
}

NuisanceFit fit_nuisances_full(const Dataset& ds, const NuisanceConfig& cfg) {
  std::vector<std::size_t> all(ds.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto g = KernelConditionalDensity::fit(ds, all, cfg);
  return {0, PartitionRegression::fit(ds, all, cfg), g, g->cap()};
}

}  // namespace contpol
