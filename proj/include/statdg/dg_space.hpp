#ifndef STATDG_DG_SPACE_HPP_
#define STATDG_DG_SPACE_HPP_

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "statdg/physics.hpp"
#include "statdg/quadrature.hpp"

namespace statdg {

/// Periodic quasi-uniform partition of (0, 1).
class Mesh {
 public:
  explicit Mesh(std::vector<double> boundaries)
      : boundaries_(std::move(boundaries)) {
    if (boundaries_.size() < 2) {
      throw std::invalid_argument("Mesh: empty mesh");
    }
    if (boundaries_.front() != 0.0 || boundaries_.back() != 1.0) {
      throw std::invalid_argument("Mesh: boundaries must span [0, 1]");
    }
    h_min_ = 1.0;
    h_max_ = 0.0;
    for (int l = 0; l < cells(); ++l) {
      const double h = width(l);
      if (!(h > 0.0)) throw std::invalid_argument("Mesh: degenerate cell");
      h_min_ = std::min(h_min_, h);
      h_max_ = std::max(h_max_, h);
    }
    if (h_max_ / h_min_ > 10.0) {
      throw std::invalid_argument("Mesh: not quasi-uniform (h_max/h_min > 10)");
    }
  }

  static std::shared_ptr<const Mesh> uniform(int cells) {
    if (cells < 1) throw std::invalid_argument("Mesh: empty mesh");
    std::vector<double> b(cells + 1);
    for (int l = 0; l <= cells; ++l) b[l] = static_cast<double>(l) / cells;
    b.back() = 1.0;
    return std::make_shared<const Mesh>(std::move(b));
  }

  int cells() const { return static_cast<int>(boundaries_.size()) - 1; }
  double left(int l) const { return boundaries_[l]; }
  double right(int l) const { return boundaries_[l + 1]; }
  double width(int l) const { return boundaries_[l + 1] - boundaries_[l]; }
  double center(int l) const { return 0.5 * (left(l) + right(l)); }
  double h_min() const { return h_min_; }
  double h_max() const { return h_max_; }

  /// Physical coordinate of reference point xi in [-1, 1] of cell l.
  double map(int l, double xi) const { return center(l) + 0.5 * width(l) * xi; }

  /// Periodic neighbours.
  int prev(int l) const { return l == 0 ? cells() - 1 : l - 1; }
  int next(int l) const { return l + 1 == cells() ? 0 : l + 1; }

 private:
  std::vector<double> boundaries_;
  double h_min_ = 0.0;
  double h_max_ = 0.0;
};

/// Piecewise polynomial field of degree p in the modal Legendre basis; the
/// coefficient of mode k in cell l is coeffs[l * (p + 1) + k].
template <int M>
class DGState {
 public:
  using State = StateVector<M>;

  DGState() = default;
  DGState(std::shared_ptr<const Mesh> mesh, int degree, double time = 0.0)
      : mesh_(std::move(mesh)),
        degree_(degree),
        time_(time),
        coeffs_(static_cast<size_t>(mesh_->cells()) * (degree + 1),
                State::Zero()) {
    if (degree < 0) throw std::invalid_argument("DGState: negative degree");
  }

  const Mesh &mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh> &mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  int modes() const { return degree_ + 1; }
  int cells() const { return mesh_->cells(); }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  State &coeff(int cell, int k) { return coeffs_[index(cell, k)]; }
  const State &coeff(int cell, int k) const { return coeffs_[index(cell, k)]; }
  std::vector<State> &coefficients() { return coeffs_; }
  const std::vector<State> &coefficients() const { return coeffs_; }

  State evaluate_reference(int cell, double xi) const {
    State u = State::Zero();
    for (int k = 0; k <= degree_; ++k) u += legendre_eval(k, xi).first * coeff(cell, k);
    return u;
  }

  /// Point evaluation; at a cell boundary the right cell's value is used.
  State evaluate(double x) const {
    const int l = locate(x);
    const double xi = 2.0 * (x - mesh_->center(l)) / mesh_->width(l);
    return evaluate_reference(l, std::clamp(xi, -1.0, 1.0));
  }

  State right_trace(int cell) const {
    State u = State::Zero();
    for (int k = 0; k <= degree_; ++k) u += coeff(cell, k);
    return u;
  }
  State left_trace(int cell) const {
    State u = State::Zero();
    for (int k = 0; k <= degree_; ++k)
      u += LegendreBasis::left_trace(k) * coeff(cell, k);
    return u;
  }
  const State &mean(int cell) const { return coeff(cell, 0); }

  bool all_finite() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(),
                       [](const State &u) { return u.allFinite(); });
  }

  int locate(double x) const {
    x -= std::floor(x);
    const int n = mesh_->cells();
    int l = std::min(n - 1, static_cast<int>(x * n));
    while (l > 0 && x < mesh_->left(l)) --l;
    while (l + 1 < n && x >= mesh_->right(l)) ++l;
    return l;
  }

 private:
  size_t index(int cell, int k) const {
    return static_cast<size_t>(cell) * (degree_ + 1) + k;
  }

  std::shared_ptr<const Mesh> mesh_;
  int degree_ = 0;
  double time_ = 0.0;
  std::vector<State> coeffs_;
};

/// Cellwise L2 projection c_{l,k} = (2k+1)/2 int f(x_l(xi)) P_k(xi) dxi with
/// the given rule (10 points unless stated otherwise).
template <int M, typename F>
DGState<M> l2_project(F &&f, std::shared_ptr<const Mesh> mesh, int degree,
                      int points = kSpatialEstimatorPoints, double time = 0.0) {
  if (!mesh || mesh->cells() < 1) {
    throw std::invalid_argument("l2_project: empty mesh");
  }
  const QuadratureRule rule = gauss_legendre(points);
  const LegendreBasis basis(degree, rule);
  DGState<M> out(mesh, degree, time);
  for (int l = 0; l < out.cells(); ++l) {
    for (int q = 0; q < rule.size(); ++q) {
      const StateVector<M> fx = f(out.mesh().map(l, rule.nodes[q]));
      for (int k = 0; k <= degree; ++k) {
        out.coeff(l, k) += (0.5 * (2 * k + 1) * rule.weights[q] *
                            basis.value(q, k)) * fx;
      }
    }
  }
  return out;
}

}  // namespace statdg

#endif  // STATDG_DG_SPACE_HPP_
