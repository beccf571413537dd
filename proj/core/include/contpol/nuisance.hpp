#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "contpol/data.hpp"

namespace contpol {

/// Outcome regression m(t, x) = E[Y | T = t, X = x].
class ConditionalMean {
 public:
  virtual ~ConditionalMean() = default;
  virtual double value(double t, std::span<const double> x) const = 0;
  /// Partial derivative in t (zero where the estimate is flat).
  virtual double dt(double t, std::span<const double> x) const = 0;
  virtual void value_and_dt(double t, std::span<const double> x, double& v, double& d) const {
    v = value(t, x);
    d = dt(t, x);
  }
};

/// Generalized propensity g(t, x) = 1 / f(t | x).
class InverseDensity {
 public:
  virtual ~InverseDensity() = default;
  virtual double value(double t, std::span<const double> x) const = 0;
  /// Upper bound on value(): 1 / (density floor).
  virtual double cap() const = 0;
};

enum class MeanShape { PiecewiseConstant, PiecewiseLinear };

struct NuisanceConfig {
  MeanShape shape = MeanShape::PiecewiseLinear;
  /// Cells per axis = max(1, round(cell_constant * n^(1 / (3 + d_x)))).
  double cell_constant = 1.0;
  double density_floor = 1e-3;
  /// Density clamp = max(quantile of in-sample density estimates, density_floor).
  double floor_quantile = 0.01;
  double bandwidth_scale = 1.0;
};

/// Piecewise-linear (or step) function of t through nodes (t_b, v_b),
/// flat beyond the end nodes.
class PiecewiseProfile {
 public:
  PiecewiseProfile() = default;
  /// Nodes must be strictly increasing. Step profiles jump halfway between nodes.
  PiecewiseProfile(std::vector<double> nodes, std::vector<double> values, MeanShape shape);

  /// Bins rows `rows` of (t, y) into `bins` equal-width bins on [lo, hi] and
  /// places a node at the within-bin means. Empty rows give an empty profile.
  static PiecewiseProfile fit(std::span<const double> t, std::span<const double> y,
                              std::span<const std::size_t> rows, std::size_t bins, double lo,
                              double hi, MeanShape shape);

  bool empty() const noexcept { return nodes_.empty(); }
  double value(double t) const noexcept;
  double dt(double t) const noexcept;

  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& values() const noexcept { return values_; }
  MeanShape shape() const noexcept { return shape_; }
  /// Step boundaries between consecutive nodes (PiecewiseConstant only).
  const std::vector<double>& edges() const noexcept { return edges_; }

 private:
  std::vector<double> nodes_;
  std::vector<double> values_;
  std::vector<double> edges_;
  MeanShape shape_ = MeanShape::PiecewiseLinear;
};

/// Partitioning regression: tensor cells in x, a t-profile inside each cell.
class PartitionRegression final : public ConditionalMean {
 public:
  static std::shared_ptr<PartitionRegression> fit(const Dataset& ds,
                                                   std::span<const std::size_t> rows,
                                                   const NuisanceConfig& cfg);

  double value(double t, std::span<const double> x) const override;
  double dt(double t, std::span<const double> x) const override;
  void value_and_dt(double t, std::span<const double> x, double& v, double& d) const override;

  std::size_t cells_per_axis() const noexcept { return cells_; }
  const PiecewiseProfile& profile(std::span<const double> x) const;

 private:
  std::size_t cell_index(std::span<const double> x) const noexcept;

  std::size_t d_x_ = 0;
  std::size_t cells_ = 1;
  std::vector<PiecewiseProfile> profiles_;
  PiecewiseProfile global_;
};

/// Gaussian product-kernel estimate of f(t | x) with reflection at the
/// training range of t, clamped below; exposes 1 / f.
class KernelConditionalDensity final : public InverseDensity {
 public:
  static std::shared_ptr<KernelConditionalDensity> fit(const Dataset& ds,
                                                       std::span<const std::size_t> rows,
                                                       const NuisanceConfig& cfg);

  double density(double t, std::span<const double> x) const;
  double value(double t, std::span<const double> x) const override;
  double cap() const override { return 1.0 / floor_; }
  double floor() const noexcept { return floor_; }

 private:
  std::size_t d_x_ = 0;
  std::vector<double> t_;
  std::vector<double> x_;
  double t_lo_ = 0.0, t_hi_ = 1.0;
  double bw_t_ = 1.0;
  std::vector<double> bw_x_;
  double floor_ = 1e-3;
};

/// One-dimensional reflected Gaussian KDE of the treatment density, clamped below.
class TreatmentDensity {
 public:
  static TreatmentDensity fit(std::span<const double> t, std::span<const std::size_t> rows,
                              const NuisanceConfig& cfg);
  double operator()(double t) const;
  double floor() const noexcept { return floor_; }

 private:
  std::vector<double> t_;
  double lo_ = 0.0, hi_ = 1.0, bw_ = 1.0, floor_ = 1e-3;
};

/// Assignment of rows to L folds from a seeded shuffle (fold sizes differ by at most one).
struct FoldPlan {
  std::size_t folds = 0;
  std::vector<std::size_t> fold_of;

  std::vector<std::size_t> members(std::size_t fold) const;
  std::vector<std::size_t> complement(std::size_t fold) const;
};

FoldPlan make_folds(std::size_t n, std::size_t folds, std::uint64_t seed);

struct NuisanceFit {
  std::size_t fold = 0;
  std::shared_ptr<const ConditionalMean> m_hat;
  std::shared_ptr<const InverseDensity> g_hat;
  double g_cap = 0.0;
};

/// Cross-fitted nuisances: entry l is trained on the rows outside fold l only.
std::vector<NuisanceFit> fit_nuisances(const Dataset& ds, const FoldPlan& plan,
                                       const NuisanceConfig& cfg);

/// Nuisances trained on every row.
NuisanceFit fit_nuisances_full(const Dataset& ds, const NuisanceConfig& cfg);

/// Minimum rows required to train a nuisance fit.
inline constexpr std::size_t kMinTrainingRows = 20;

}  // namespace contpol
