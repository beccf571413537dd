#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "contpol/sieve.hpp"

namespace contpol {

/// Objective J(theta) = sum_i value_i(a_i) with a_i = pi_theta(x_i).
/// Implementations report per-point values and their derivatives in a_i;
/// the optimizer handles the chain rule through the sieve.
class PolicyObjective {
 public:
  virtual ~PolicyObjective() = default;

  virtual std::size_t size() const = 0;
  virtual std::size_t d_x() const = 0;
  /// Covariates of point i in [0, 1] coordinates.
  virtual std::span<const double> covariates(std::size_t i) const = 0;
  /// Fills values[i]; fills derivs[i] = d value_i / d a_i when derivs is non-empty.
  virtual void pointwise(std::span<const double> actions, std::span<double> values,
                         std::span<double> derivs) const = 0;
  /// Treatment values used to place constant starting policies.
  virtual std::span<const double> treatment_sample() const = 0;
};

/// J(theta) = (1 / (normalizer * h)) sum_i w_i K((t_i - pi_theta(x_i)) / h).
class KernelObjective final : public PolicyObjective {
 public:
  /// `x` is row-major with d_x columns. normalizer <= 0 means the number of points.
  KernelObjective(std::vector<double> t, std::vector<double> x, std::size_t d_x,
                  std::vector<double> w, double h, double normalizer = 0.0);

  std::size_t size() const override { return t_.size(); }
  std::size_t d_x() const override { return d_x_; }
  std::span<const double> covariates(std::size_t i) const override {
    return {x_.data() + i * d_x_, d_x_};
  }
  void pointwise(std::span<const double> actions, std::span<double> values,
                 std::span<double> derivs) const override;
  std::span<const double> treatment_sample() const override { return t_; }

  double bandwidth() const noexcept { return h_; }

 private:
  std::vector<double> t_;
  std::vector<double> x_;
  std::size_t d_x_;
  std::vector<double> w_;
  double h_;
  double scale_;
};

struct OptimizerConfig {
  std::size_t n_starts = 16;
  std::size_t max_iters = 400;
  double tol = 1e-7;
  /// First trial step, as a fraction of the treatment range.
  double step_init = 0.25;
  std::uint64_t seed = 0;
};

struct OptimResult {
  PolicyParams params;
  double value = 0.0;
  std::size_t iterations = 0;
};

/// Euclidean projection onto nondecreasing sequences (pool adjacent violators).
std::vector<double> project_monotone(std::span<const double> values);

/// Weighted projection: minimizes sum_j w_j (z_j - v_j)^2 over nondecreasing z.
std::vector<double> project_monotone(std::span<const double> values,
                                     std::span<const double> weights);

/// Objective value of a fixed parameter vector.
double objective_value(const PolicyObjective& objective, const MonotoneSeparableFamily& family,
                       const PolicyParams& params);

/// Objective value and its gradient in theta, as used by the ascent steps.
/// Points whose unclamped action leaves [out_lo, out_hi] contribute no gradient.
double objective_gradient(const PolicyObjective& objective, const MonotoneSeparableFamily& family,
                          const PolicyParams& params, std::vector<double>& gradient);

/// Multi-start projected gradient ascent over monotone coefficient blocks.
/// Warm starts are tried in addition to the first n_starts entries of the
/// deterministic start list, so a larger n_starts never returns a lower value.
/// Equal values are broken by the smaller Euclidean norm of theta.
OptimResult maximize(const PolicyObjective& objective, const MonotoneSeparableFamily& family,
                     const OptimizerConfig& config,
                     std::span<const PolicyParams> warm_starts = {});

/// Resamples a policy of order k onto the node grid of `target` (exact when
/// target.k() is a multiple of k).
PolicyParams resample_params(const MonotoneSeparableFamily& source, const PolicyParams& params,
                             const MonotoneSeparableFamily& target);

}  // namespace contpol
