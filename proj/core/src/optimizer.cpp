#include "contpol/optimizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "contpol/errors.hpp"
#include "contpol/kernel.hpp"
#include "contpol/numerics.hpp"
#include "contpol/parallel.hpp"

namespace contpol {

KernelObjective::KernelObjective(std::vector<double> t, std::vector<double> x, std::size_t d_x,
                                 std::vector<double> w, double h, double normalizer)
    : t_(std::move(t)), x_(std::move(x)), d_x_(d_x), w_(std::move(w)), h_(h) {
  if (t_.empty()) throw Error(Errc::EmptyObjective, "no points");
  if (!(h > 0.0)) throw Error(Errc::NonPositiveBandwidth, "h must be > 0");
  if (x_.size() != t_.size() * d_x_ || w_.size() != t_.size())
    throw Error(Errc::DimensionMismatch, "objective point arrays disagree");
  const double n = normalizer > 0.0 ? normalizer : static_cast<double>(t_.size());
  scale_ = 1.0 / (n * h_);
}

void KernelObjective::pointwise(std::span<const double> actions, std::span<double> values,
                                std::span<double> derivs) const {
  const double inv_h = 1.0 / h_;
  if (derivs.empty()) {
    for (std::size_t i = 0; i < t_.size(); ++i)
      values[i] = scale_ * w_[i] * eval_kernel((t_[i] - actions[i]) * inv_h);
    return;
  }
  for (std::size_t i = 0; i < t_.size(); ++i) {
    double k = 0.0, dk = 0.0;
    kernel_with_derivative((t_[i] - actions[i]) * inv_h, k, dk);
    values[i] = scale_ * w_[i] * k;
    derivs[i] = -scale_ * w_[i] * dk * inv_h;
  }
}

std::vector<double> project_monotone(std::span<const double> values,
                                     std::span<const double> weights) {
  if (weights.size() != values.size())
    throw Error(Errc::DimensionMismatch, "weights and values differ in length");
  struct Block {
    double mean;
    double weight;
    std::size_t count;
  };
  std::vector<Block> stack;
  stack.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    Block b{values[i], weights[i], 1};
    while (!stack.empty() && stack.back().mean > b.mean) {
      const Block& top = stack.back();
      const double w = top.weight + b.weight;
      b.mean = w > 0.0 ? (top.mean * top.weight + b.mean * b.weight) / w
                       : 0.5 * (top.mean + b.mean);
      b.weight = w;
      b.count += top.count;
      stack.pop_back();
    }
    stack.push_back(b);
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const Block& b : stack) out.insert(out.end(), b.count, b.mean);
  return out;
}

std::vector<double> project_monotone(std::span<const double> values) {
  std::vector<double> w(values.size(), 1.0);
  return project_monotone(values, w);
}

PolicyParams resample_params(const MonotoneSeparableFamily& source, const PolicyParams& params,
                             const MonotoneSeparableFamily& target) {
  if (source.d_x() != target.d_x()) throw Error(Errc::DimensionMismatch, "families differ in d_x");
  const std::size_t ms = source.nodes(), mt = target.nodes();
  PolicyParams out{std::vector<double>(target.dim())};
  for (std::size_t p = 0; p < target.d_x(); ++p) {
    const double* th = params.theta.data() + p * ms;
    for (std::size_t j = 0; j < mt; ++j) {
      const double node = target.k() == 0 ? 0.5 : static_cast<double>(j) / target.k();
      const BasisLocation loc = source.locate(node);
      double v = th[loc.index] * (1.0 - loc.frac);
      if (source.k() > 0) v += th[loc.index + 1] * loc.frac;
      out.theta[p * mt + j] = v;
    }
  }
  return out;
}

namespace {

/// Precomputed basis geometry for one objective and one family.
class Evaluator {
 public:
  Evaluator(const PolicyObjective& obj, const MonotoneSeparableFamily& fam)
      : obj_(obj), fam_(fam), n_(obj.size()), d_(fam.d_x()), m_(fam.nodes()) {
    loc_.resize(n_ * d_);
    node_weight_.assign(fam.dim(), 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      auto x = obj.covariates(i);
      for (std::size_t p = 0; p < d_; ++p) {
        const BasisLocation l = fam.locate(x[p]);
        loc_[i * d_ + p] = l;
        node_weight_[p * m_ + l.index] += (1.0 - l.frac) * (1.0 - l.frac);
        if (m_ > 1) node_weight_[p * m_ + l.index + 1] += l.frac * l.frac;
      }
    }
    // Nodes without data get a small floor so the scaled step stays finite.
    double total = 0.0;
    for (double w : node_weight_) total += w;
    const double floor = std::max(1e-3 * total / static_cast<double>(node_weight_.size()), 1e-12);
    for (double& w : node_weight_) w = std::max(w, floor);
    raw_.resize(n_);
    act_.resize(n_);
    val_.resize(n_);
    der_.resize(n_);
  }

  const std::vector<double>& node_weight() const { return node_weight_; }
  const std::vector<BasisLocation>& locations() const { return loc_; }

  void actions(const std::vector<double>& theta) {
    const double lo = fam_.out_lo(), hi = fam_.out_hi();
    for (std::size_t i = 0; i < n_; ++i) {
      double a = 0.0;
      for (std::size_t p = 0; p < d_; ++p) {
        const BasisLocation& l = loc_[i * d_ + p];
        const double* th = theta.data() + p * m_;
        a += th[l.index] * (1.0 - l.frac);
        if (m_ > 1) a += th[l.index + 1] * l.frac;
      }
      raw_[i] = a;
      act_[i] = std::clamp(a, lo, hi);
    }
  }

  double value(const std::vector<double>& theta) {
    actions(theta);
    obj_.pointwise(act_, val_, {});
    return pairwise_sum(val_);
  }

  double value_and_gradient(const std::vector<double>& theta, std::vector<double>& grad) {
    actions(theta);
    obj_.pointwise(act_, val_, der_);
    grad.assign(theta.size(), 0.0);
    const double lo = fam_.out_lo(), hi = fam_.out_hi();
    for (std::size_t i = 0; i < n_; ++i) {
      if (raw_[i] < lo || raw_[i] > hi) continue;
      const double d = der_[i];
      for (std::size_t p = 0; p < d_; ++p) {
        const BasisLocation& l = loc_[i * d_ + p];
        grad[p * m_ + l.index] += d * (1.0 - l.frac);
        if (m_ > 1) grad[p * m_ + l.index + 1] += d * l.frac;
      }
    }
    return pairwise_sum(val_);
  }

  /// Per-point values at a constant action.
  const std::vector<double>& values_at_constant(double c) {
    std::fill(act_.begin(), act_.end(), std::clamp(c, fam_.out_lo(), fam_.out_hi()));
    obj_.pointwise(act_, val_, {});
    return val_;
  }

  void project(std::vector<double>& theta) const {
    for (std::size_t p = 0; p < d_; ++p) {
      std::span<const double> block(theta.data() + p * m_, m_);
      std::span<const double> w(node_weight_.data() + p * m_, m_);
      const auto z = project_monotone(block, w);
      std::copy(z.begin(), z.end(), theta.begin() + static_cast<std::ptrdiff_t>(p * m_));
    }
  }

 private:
  const PolicyObjective& obj_;
  const MonotoneSeparableFamily& fam_;
  std::size_t n_, d_, m_;
  std::vector<BasisLocation> loc_;
  std::vector<double> node_weight_;
  std::vector<double> raw_, act_, val_, der_;
};

constexpr std::array<double, 9> kStartQuantiles = {0.5, 0.3, 0.7, 0.1, 0.9, 0.2, 0.8, 0.4, 0.6};

struct Range {
  double lo;
  double hi;
};

Range treatment_range(const PolicyObjective& obj, const MonotoneSeparableFamily& fam) {
  auto t = obj.treatment_sample();
  double lo = *std::min_element(t.begin(), t.end());
  double hi = *std::max_element(t.begin(), t.end());
  lo = std::clamp(lo, fam.out_lo(), fam.out_hi());
  hi = std::clamp(hi, fam.out_lo(), fam.out_hi());
  if (!(hi > lo)) hi = lo + 1.0;
  return {lo, hi};
}

std::vector<std::vector<double>> start_list(const PolicyObjective& obj,
                                            const MonotoneSeparableFamily& fam,
                                            const OptimizerConfig& cfg, Evaluator& ev) {
  std::vector<std::vector<double>> starts;
  const std::size_t want = cfg.n_starts;
  if (want == 0) return starts;
  const std::size_t d = fam.d_x(), m = fam.nodes();
  const double dd = static_cast<double>(d);
  auto t = obj.treatment_sample();

  std::vector<double> candidates;
  for (double q : kStartQuantiles) candidates.push_back(quantile(t, q));

  // Nodal start: at every node pick the candidate constant with the largest
  // basis-weighted objective contribution, then project.
  {
    std::vector<double> best_score(fam.dim(), -std::numeric_limits<double>::infinity());
    std::vector<double> best_value(fam.dim(), candidates.front());
    const auto& loc = ev.locations();
    std::vector<double> score(fam.dim());
    for (double c : candidates) {
      const auto& v = ev.values_at_constant(c);
      std::fill(score.begin(), score.end(), 0.0);
      for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t p = 0; p < d; ++p) {
          const BasisLocation& l = loc[i * d + p];
          score[p * m + l.index] += v[i] * (1.0 - l.frac);
          if (m > 1) score[p * m + l.index + 1] += v[i] * l.frac;
        }
      for (std::size_t j = 0; j < fam.dim(); ++j)
        if (score[j] > best_score[j]) {
          best_score[j] = score[j];
          best_value[j] = c;
        }
    }
    for (double& v : best_value) v /= dd;
    ev.project(best_value);
    starts.push_back(std::move(best_value));
  }

  for (double c : candidates) {
    if (starts.size() >= want) return starts;
    starts.emplace_back(fam.dim(), c / dd);
  }

  const Range r = treatment_range(obj, fam);
  std::uniform_real_distribution<double> unif(r.lo, r.hi);
  for (std::size_t s = 0; starts.size() < want; ++s) {
    Rng rng(derive_seed({cfg.seed, 0x5741525453ULL, s}));
    std::vector<double> theta(fam.dim());
    for (std::size_t p = 0; p < d; ++p) {
      std::vector<double> u(m);
      for (double& v : u) v = unif(rng) / dd;
      std::sort(u.begin(), u.end());
      std::copy(u.begin(), u.end(), theta.begin() + static_cast<std::ptrdiff_t>(p * m));
    }
    starts.push_back(std::move(theta));
  }
  return starts;
}

struct LocalResult {
  std::vector<double> theta;
  double value;
  std::size_t iterations;
};

LocalResult ascend(Evaluator& ev, std::vector<double> theta, const OptimizerConfig& cfg,
                   double range) {
  const auto& w = ev.node_weight();
  ev.project(theta);
  std::vector<double> grad, trial(theta.size()), dir(theta.size());
  double value = ev.value_and_gradient(theta, grad);
  double step = -1.0;
  std::size_t it = 0;
  for (; it < cfg.max_iters; ++it) {
    double dir_max = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      dir[j] = grad[j] / w[j];
      dir_max = std::max(dir_max, std::fabs(dir[j]));
    }
    if (!(dir_max > 0.0) || !std::isfinite(dir_max)) break;
    if (step < 0.0) step = cfg.step_init * range / dir_max;
    const double min_step = 1e-12 * range / dir_max;

    bool accepted = false;
    double trial_value = value;
    while (step >= min_step) {
      for (std::size_t j = 0; j < theta.size(); ++j) trial[j] = theta[j] + step * dir[j];
      ev.project(trial);
      double gain = 0.0;
      bool moved = false;
      for (std::size_t j = 0; j < theta.size(); ++j) {
        gain += grad[j] * (trial[j] - theta[j]);
        moved = moved || trial[j] != theta[j];
      }
      if (!moved) break;
      trial_value = ev.value(trial);
      if (trial_value >= value + 1e-4 * gain && trial_value > value) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double change = trial_value - value;
    theta.swap(trial);
    value = ev.value_and_gradient(theta, grad);
    step *= 2.0;
    if (change <= cfg.tol * std::max(1.0, std::fabs(value))) {
      ++it;
      break;
    }
  }
  return {std::move(theta), value, it};
}

double sq_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

bool better(const LocalResult& a, const LocalResult& b) {
  if (a.value != b.value) return a.value > b.value;
  const double na = sq_norm(a.theta), nb = sq_norm(b.theta);
  if (na != nb) return na < nb;
  return std::lexicographical_compare(a.theta.begin(), a.theta.end(), b.theta.begin(),
                                      b.theta.end());
}

}  // namespace

double objective_value(const PolicyObjective& objective, const MonotoneSeparableFamily& family,
                       const PolicyParams& params) {
  if (objective.size() == 0) throw Error(Errc::EmptyObjective, "no points");
  if (params.theta.size() != family.dim()) throw Error(Errc::DimensionMismatch, "theta length");
  Evaluator ev(objective, family);
  return ev.value(params.theta);
}

double objective_gradient(const PolicyObjective& objective, const MonotoneSeparableFamily& family,
                          const PolicyParams& params, std::vector<double>& gradient) {
  if (objective.size() == 0) throw Error(Errc::EmptyObjective, "no points");
  if (params.theta.size() != family.dim()) throw Error(Errc::DimensionMismatch, "theta length");
  Evaluator ev(objective, family);
  return ev.value_and_gradient(params.theta, gradient);
}

OptimResult maximize(const PolicyObjective& objective, const MonotoneSeparableFamily& family,
                     const OptimizerConfig& config, std::span<const PolicyParams> warm_starts) {
  if (objective.size() == 0) throw Error(Errc::EmptyObjective, "no points");
  if (objective.d_x() != family.d_x())
    throw Error(Errc::DimensionMismatch, "objective and family differ in d_x");

  Evaluator setup(objective, family);
  std::vector<std::vector<double>> starts;
  for (const auto& w : warm_starts) {
    if (w.theta.size() != family.dim())
      throw Error(Errc::DimensionMismatch, "warm start has wrong length");
    starts.push_back(w.theta);
  }
  auto listed = start_list(objective, family, config, setup);
  for (auto& s : listed) starts.push_back(std::move(s));
  if (starts.empty()) starts.emplace_back(family.dim(), 0.0);

  const Range r = treatment_range(objective, family);
  std::vector<LocalResult> results(starts.size());
  parallel_for(starts.size(), [&](std::size_t s) {
    Evaluator ev(objective, family);
    results[s] = ascend(ev, starts[s], config, r.hi - r.lo);
  });

  std::size_t best = 0;
  std::size_t iterations = 0;
  for (std::size_t s = 0; s < results.size(); ++s) {
    iterations += results[s].iterations;
    if (s > 0 && better(results[s], results[best])) best = s;
  }
  if (!std::isfinite(results[best].value))
    throw Error(Errc::NumericalFailure, "objective is not finite at the optimum");
  return {PolicyParams{std::move(results[best].theta)}, results[best].value, iterations};
}

}  // namespace contpol
