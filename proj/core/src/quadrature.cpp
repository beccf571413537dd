#include "contpol/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include "contpol/errors.hpp"

namespace contpol {

namespace {

GaussRule build_rule(std::size_t n) {
  // legendre_p_zeros returns the non-negative zeros in ascending order.
  const auto zeros = boost::math::legendre_p_zeros<double>(static_cast<int>(n));
  GaussRule rule;
  auto weight = [n](double x) {
    const double dp = boost::math::legendre_p_prime<double>(static_cast<int>(n), x);
    return 2.0 / ((1.0 - x * x) * dp * dp);
  };
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
    if (*it == 0.0) continue;
    rule.nodes.push_back(-*it);
    rule.weights.push_back(weight(*it));
  }
  if (n % 2 == 1) {
    rule.nodes.push_back(0.0);
    rule.weights.push_back(weight(0.0));
  }
  for (double z : zeros) {
    if (z == 0.0) continue;
    rule.nodes.push_back(z);
    rule.weights.push_back(weight(z));
  }
  return rule;
}

std::vector<double> pieces(double a, double b, std::span<const double> breaks) {
  std::vector<double> cuts{a};
  std::vector<double> inner;
  for (double c : breaks)
    if (c > a && c < b) inner.push_back(c);
  std::sort(inner.begin(), inner.end());
  for (double c : inner)
    if (c > cuts.back()) cuts.push_back(c);
  cuts.push_back(b);
  return cuts;
}

}  // namespace

const GaussRule& gauss_legendre(std::size_t n) {
  if (n == 0) throw Error(Errc::InvalidArgument, "Gauss-Legendre rule needs n >= 1");
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<GaussRule>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussRule>(build_rule(n));
  return *slot;
}

void composite_rule(double a, double b, std::size_t points, std::size_t panels,
                    std::span<const double> breaks, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  const GaussRule& rule = gauss_legendre(points);
  nodes.clear();
  weights.clear();
  const auto cuts = pieces(a, b, breaks);
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double width = (cuts[c + 1] - cuts[c]) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
      const double lo = cuts[c] + width * static_cast<double>(p);
      const double half = 0.5 * width;
      const double mid = lo + half;
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        nodes.push_back(mid + half * rule.nodes[q]);
        weights.push_back(half * rule.weights[q]);
      }
    }
  }
}

double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    std::size_t points, std::size_t panels, std::span<const double> breaks) {
  std::vector<double> nodes, weights;
  composite_rule(a, b, points, panels, breaks, nodes, weights);
  double s = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
  return s;
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol, std::span<const double> breaks, double* error_estimate) {
  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  double err_total = 0.0;
  const auto cuts = pieces(a, b, breaks);
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    double err = 0.0;
    total += gauss_kronrod<double, 31>::integrate(f, cuts[c], cuts[c + 1], 20, tol, &err);
    err_total += err;
  }
  if (error_estimate) *error_estimate = err_total;
  return total;
}

}  // namespace contpol
