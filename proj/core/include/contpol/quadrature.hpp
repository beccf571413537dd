#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace contpol {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached n-point Gauss-Legendre rule.
const GaussRule& gauss_legendre(std::size_t n);

/// Composite Gauss-Legendre over [a, b] split at `breaks` (ignored outside (a, b))
/// and then into `panels` equal sub-panels per piece.
double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    std::size_t points, std::size_t panels = 1,
                    std::span<const double> breaks = {});

/// Nodes and weights of the same composite rule, for objectives that need the points.
void composite_rule(double a, double b, std::size_t points, std::size_t panels,
                    std::span<const double> breaks, std::vector<double>& nodes,
                    std::vector<double>& weights);

/// Adaptive Gauss-Kronrod (31 point) with relative tolerance `tol`.
/// Infinite limits are allowed. Breakpoints inside (a, b) split the range first.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol = 1e-10, std::span<const double> breaks = {},
                          double* error_estimate = nullptr);

}  // namespace contpol
