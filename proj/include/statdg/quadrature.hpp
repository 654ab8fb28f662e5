#ifndef STATDG_QUADRATURE_HPP_
#define STATDG_QUADRATURE_HPP_

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace statdg {

/// Gauss-Legendre rule on the reference interval [-1, 1].
struct QuadratureRule {
  std::vector<double> nodes;    // strictly increasing
  std::vector<double> weights;  // positive, sum to 2

  int size() const { return static_cast<int>(nodes.size()); }

  template <typename F>
  auto integrate(F &&f) const {
    auto sum = weights[0] * f(nodes[0]);
    for (int q = 1; q < size(); ++q) sum += weights[q] * f(nodes[q]);
    return sum;
  }
};

/// Value and first derivative of the Legendre polynomial P_k at x, by the
/// three-term recurrence. Total on [-1, 1] for k <= 16.
inline std::pair<double, double> legendre_eval(int k, double x) {
  if (k == 0) return {1.0, 0.0};
  double p_prev = 1.0, p = x;
  double d_prev = 0.0, d = 1.0;
  for (int n = 1; n < k; ++n) {
    const double p_next = ((2 * n + 1) * x * p - n * p_prev) / (n + 1);
    // P'_{n+1} = P'_{n-1} + (2n+1) P_n
    const double d_next = d_prev + (2 * n + 1) * p;
    p_prev = p;
    p = p_next;
    d_prev = d;
    d = d_next;
  }
  return {p, d};
}

/// n-point Gauss-Legendre rule, nodes found by Newton iteration on the roots
/// of P_n from Chebyshev initial guesses.
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1 || n > 32) {
    throw std::invalid_argument("gauss_legendre: node count " +
                                std::to_string(n) + " outside [1, 32]");
  }
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      auto [p, d] = legendre_eval(n, x);
      dp = d;
      const double dx = p / d;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    dp = legendre_eval(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Legendre basis P_0..P_p tabulated at the nodes of a quadrature rule.
class LegendreBasis {
 public:
  LegendreBasis(int degree, const QuadratureRule &rule)
      : degree_(degree), points_(rule.size()) {
    values_.resize(static_cast<size_t>(points_) * (degree + 1));
    derivs_.resize(values_.size());
    for (int q = 0; q < points_; ++q) {
      for (int k = 0; k <= degree; ++k) {
        auto [v, d] = legendre_eval(k, rule.nodes[q]);
        values_[index(q, k)] = v;
        derivs_[index(q, k)] = d;
      }
    }
  }

  int degree() const { return degree_; }
  int points() const { return points_; }
  double value(int q, int k) const { return values_[index(q, k)]; }
  double derivative(int q, int k) const { return derivs_[index(q, k)]; }

  /// P_k(+1) = 1 and P_k(-1) = (-1)^k.
  static double right_trace(int /*k*/) { return 1.0; }
  static double left_trace(int k) { return (k % 2 == 0) ? 1.0 : -1.0; }

 private:
  size_t index(int q, int k) const {
    return static_cast<size_t>(q) * (degree_ + 1) + k;
  }

  int degree_;
  int points_;
  std::vector<double> values_;
  std::vector<double> derivs_;
};

/// Point counts used throughout: the estimator integrals always use 10 points
/// per spatial cell and 7 per time slab.
inline constexpr int kSpatialEstimatorPoints = 10;
inline constexpr int kTemporalEstimatorPoints = 7;

}  // namespace statdg

#endif  // STATDG_QUADRATURE_HPP_
