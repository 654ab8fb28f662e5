#ifndef STATDG_RECONSTRUCTION_HPP_
#define STATDG_RECONSTRUCTION_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "statdg/dg_space.hpp"
#include "statdg/physics.hpp"
#include "statdg/quadrature.hpp"
#include "statdg/rkdg.hpp"

namespace statdg {

/// Continuous degree-(p+1) field from a degree-p DG field and one value per
/// interface: in every cell the polynomial takes the prescribed interface
/// values at both ends and has the same Legendre moments as u_h up to degree
/// p-1. Interface i sits between cells i-1 and i.
template <int M>
DGState<M> spatial_reconstruct(const DGState<M> &u,
                               const std::vector<StateVector<M>> &interface_values) {
  using State = StateVector<M>;
  const Mesh &mesh = u.mesh();
  const int n = mesh.cells();
  const int p = u.degree();
  if (static_cast<int>(interface_values.size()) != n) {
    throw std::invalid_argument("spatial_reconstruct: need one value per interface");
  }
  DGState<M> out(u.mesh_ptr(), p + 1, u.time());
  const double sign_p = LegendreBasis::left_trace(p);
  for (int l = 0; l < n; ++l) {
    State r_right = interface_values[mesh.next(l)];
    State r_left = interface_values[l];
    for (int j = 0; j < p; ++j) {
      out.coeff(l, j) = u.coeff(l, j);
      r_right -= u.coeff(l, j);
      r_left -= LegendreBasis::left_trace(j) * u.coeff(l, j);
    }
    out.coeff(l, p) = 0.5 * (r_right + sign_p * r_left);
    out.coeff(l, p + 1) = 0.5 * (r_right - sign_p * r_left);
  }
  return out;
}

/// Cubic Hermite interpolation in time over one step [t0, t0 + dt] between
/// spatial reconstructions (value) and their time derivatives (rate).
template <int M>
struct SpaceTimeSlab {
  using State = StateVector<M>;
  double t0 = 0.0;
  double dt = 0.0;
  DGState<M> value0, value1;
  DGState<M> rate0, rate1;

  double t1() const { return t0 + dt; }
  int degree() const { return value0.degree(); }
  const Mesh &mesh() const { return value0.mesh(); }

  struct Weights {
    double v0, r0, v1, r1;     // value
    double dv0, dr0, dv1, dr1; // time derivative
  };

  Weights weights(double tau) const {
    const double t2 = tau * tau, t3 = t2 * tau;
    Weights w;
    w.v0 = 2 * t3 - 3 * t2 + 1;
    w.r0 = dt * (t3 - 2 * t2 + tau);
    w.v1 = -2 * t3 + 3 * t2;
    w.r1 = dt * (t3 - t2);
    w.dv0 = (6 * t2 - 6 * tau) / dt;
    w.dr0 = 3 * t2 - 4 * tau + 1;
    w.dv1 = (-6 * t2 + 6 * tau) / dt;
    w.dr1 = 3 * t2 - 2 * tau;
    return w;
  }

  State coeff(const Weights &w, int cell, int k) const {
    return w.v0 * value0.coeff(cell, k) + w.r0 * rate0.coeff(cell, k) +
           w.v1 * value1.coeff(cell, k) + w.r1 * rate1.coeff(cell, k);
  }
  State coeff_rate(const Weights &w, int cell, int k) const {
    return w.dv0 * value0.coeff(cell, k) + w.dr0 * rate0.coeff(cell, k) +
           w.dv1 * value1.coeff(cell, k) + w.dr1 * rate1.coeff(cell, k);
  }

  /// The spatial field at time t in the slab.
  DGState<M> slice(double t) const {
    const Weights w = weights((t - t0) / dt);
    DGState<M> out(value0.mesh_ptr(), degree(), t);
    for (int l = 0; l < out.cells(); ++l) {
      for (int k = 0; k <= degree(); ++k) out.coeff(l, k) = coeff(w, l, k);
    }
    return out;
  }
};

/// Builds the slab of one step from the recorded node data.
template <int M>
SpaceTimeSlab<M> make_slab(const StepRecord<M> &record) {
  const TimeNode<M> &a = *record.begin;
  const TimeNode<M> &b = *record.end;
  auto rate_field = [](const TimeNode<M> &node) {
    DGState<M> rhs(node.state.mesh_ptr(), node.state.degree(), node.state.time());
    rhs.coefficients() = node.rhs;
    return spatial_reconstruct(rhs, node.interface_rates);
  };
  SpaceTimeSlab<M> slab;
  slab.t0 = a.state.time();
  slab.dt = b.state.time() - a.state.time();
  slab.value0 = spatial_reconstruct(a.state, a.interface_states);
  slab.value1 = spatial_reconstruct(b.state, b.interface_states);
  slab.rate0 = rate_field(a);
  slab.rate1 = rate_field(b);
  return slab;
}

/// u^st of one sample: Lipschitz in time, continuous piecewise degree p+1 in
/// space.
template <int M>
class SpaceTimeReconstruction {
 public:
  using State = StateVector<M>;

  explicit SpaceTimeReconstruction(std::vector<SpaceTimeSlab<M>> slabs)
      : slabs_(std::move(slabs)) {
    if (slabs_.empty()) {
      throw std::invalid_argument("SpaceTimeReconstruction: no time steps");
    }
  }

  const std::vector<SpaceTimeSlab<M>> &slabs() const { return slabs_; }
  double t_begin() const { return slabs_.front().t0; }
  double t_end() const { return slabs_.back().t1(); }
  const Mesh &mesh() const { return slabs_.front().mesh(); }
  int degree() const { return slabs_.front().degree(); }

  const SpaceTimeSlab<M> &slab_at(double t) const {
    auto it = std::upper_bound(
        slabs_.begin(), slabs_.end(), t,
        [](double value, const SpaceTimeSlab<M> &s) { return value < s.t0; });
    if (it != slabs_.begin()) --it;
    return *it;
  }

  DGState<M> slice(double t) const {
    if (t >= t_end()) return slabs_.back().value1;
    if (t <= t_begin()) return slabs_.front().value0;
    return slab_at(t).slice(t);
  }

  State evaluate(double t, double x) const { return slice(t).evaluate(x); }

 private:
  std::vector<SpaceTimeSlab<M>> slabs_;
};

template <int M>
SpaceTimeReconstruction<M> temporal_reconstruct(
    const std::vector<StepRecord<M>> &records) {
  if (records.empty()) {
    throw std::invalid_argument("temporal_reconstruct: empty record list");
  }
  std::vector<SpaceTimeSlab<M>> slabs;
  slabs.reserve(records.size());
  for (const auto &r : records) slabs.push_back(make_slab(r));
  return SpaceTimeReconstruction<M>(std::move(slabs));
}

/// Quantities gathered from u^st over (0, s) x D.
template <int M>
struct ResidualSummary {
  double residual_sq = 0.0;  // int_0^s int_D |R^st|^2
  double lipschitz = 0.0;    // max |d_x u^st| over components
  StateVector<M> box_lo = StateVector<M>::Constant(std::numeric_limits<double>::infinity());
  StateVector<M> box_hi = StateVector<M>::Constant(-std::numeric_limits<double>::infinity());

  void merge(const ResidualSummary &o) {
    residual_sq += o.residual_sq;
    lipschitz = std::max(lipschitz, o.lipschitz);
    box_lo = box_lo.cwiseMin(o.box_lo);
    box_hi = box_hi.cwiseMax(o.box_hi);
  }
};

/// Evaluates R^st = d_t u^st + d_x f(u^st) - Q on the tensor Gauss rule
/// (temporal x spatial points per slab and cell). The Lipschitz constant and
/// the state box additionally include cell ends and time nodes.
template <ConservationLaw S>
class ResidualIntegrator {
 public:
  static constexpr int M = S::kComponents;
  using State = typename S::State;

  ResidualIntegrator(S system, int degree, double xi,
                     int temporal_points = kTemporalEstimatorPoints,
                     int spatial_points = kSpatialEstimatorPoints)
      : sys_(std::move(system)),
        xi_(xi),
        degree_(degree),
        time_rule_(gauss_legendre(temporal_points)) {
    const QuadratureRule space = gauss_legendre(spatial_points);
    // Gauss points first, then the two cell ends
    space_nodes_ = space.nodes;
    space_weights_ = space.weights;
    space_nodes_.push_back(-1.0);
    space_nodes_.push_back(1.0);
    gauss_count_ = space.size();
    const int np = static_cast<int>(space_nodes_.size());
    values_.resize(static_cast<size_t>(np) * (degree + 1));
    derivs_.resize(values_.size());
    for (int q = 0; q < np; ++q) {
      for (int k = 0; k <= degree; ++k) {
        auto [v, d] = legendre_eval(k, space_nodes_[q]);
        values_[q * (degree + 1) + k] = v;
        derivs_[q * (degree + 1) + k] = d;
      }
    }
  }

  /// Adds the slab's contribution over [t0, min(t1, s)].
  void accumulate(const SpaceTimeSlab<M> &slab, double s,
                  ResidualSummary<M> &out) const {
    const double t_hi = std::min(slab.t1(), s);
    if (!(t_hi > slab.t0)) return;
    const double tau_hi = (t_hi - slab.t0) / slab.dt;
    const double length = t_hi - slab.t0;
    const Mesh &mesh = slab.mesh();
    const int p1 = degree_ + 1;
    std::vector<State> a(p1), a_t(p1);

    const int nt = time_rule_.size();
    for (int iq = 0; iq < nt + 2; ++iq) {
      // Gauss points in time, then the slab ends
      const bool gauss_t = iq < nt;
      const double tau = gauss_t ? 0.5 * tau_hi * (1.0 + time_rule_.nodes[iq])
                                 : (iq == nt ? 0.0 : tau_hi);
      const double wt = gauss_t ? 0.5 * length * time_rule_.weights[iq] : 0.0;
      const double t = slab.t0 + tau * slab.dt;
      const auto w = slab.weights(tau);
      for (int l = 0; l < mesh.cells(); ++l) {
        const double h = mesh.width(l);
        for (int k = 0; k < p1; ++k) {
          a[k] = slab.coeff(w, l, k);
          if (gauss_t) a_t[k] = slab.coeff_rate(w, l, k);
        }
        const int np = gauss_t ? static_cast<int>(space_nodes_.size()) : 2;
        for (int jj = 0; jj < np; ++jj) {
          const int q = gauss_t ? jj : gauss_count_ + jj;
          State u = State::Zero(), ux = State::Zero();
          for (int k = 0; k < p1; ++k) {
            u += values_[q * p1 + k] * a[k];
            ux += derivs_[q * p1 + k] * a[k];
          }
          ux *= 2.0 / h;
          out.lipschitz = std::max(out.lipschitz, ux.cwiseAbs().maxCoeff());
          out.box_lo = out.box_lo.cwiseMin(u);
          out.box_hi = out.box_hi.cwiseMax(u);
          if (!gauss_t || q >= gauss_count_) continue;
          State ut = State::Zero();
          for (int k = 0; k < p1; ++k) ut += values_[q * p1 + k] * a_t[k];
          const double x = mesh.map(l, space_nodes_[q]);
          const State r = ut + sys_.flux_jacobian(u) * ux - sys_.source(t, x, xi_, u);
          out.residual_sq += wt * 0.5 * h * space_weights_[q] * r.squaredNorm();
        }
      }
    }
  }

 private:
  S sys_;
  double xi_;
  int degree_;
  QuadratureRule time_rule_;
  std::vector<double> space_nodes_;
  std::vector<double> space_weights_;
  int gauss_count_ = 0;
  std::vector<double> values_;
  std::vector<double> derivs_;
};

template <ConservationLaw S>
ResidualSummary<S::kComponents> analyze_reconstruction(
    const S &sys, const SpaceTimeReconstruction<S::kComponents> &recon,
    double xi, double s, int temporal_points = kTemporalEstimatorPoints,
    int spatial_points = kSpatialEstimatorPoints) {
  ResidualIntegrator<S> integrator(sys, recon.degree(), xi, temporal_points,
                                   spatial_points);
  ResidualSummary<S::kComponents> out;
  for (const auto &slab : recon.slabs()) {
    if (slab.t0 >= s) break;
    integrator.accumulate(slab, s, out);
  }
  return out;
}

/// int_0^s int_D |R^st|^2 dx dt.
template <ConservationLaw S>
double residual_norm_sq(const S &sys,
                        const SpaceTimeReconstruction<S::kComponents> &recon,
                        double xi, double s) {
  return analyze_reconstruction(sys, recon, xi, s).residual_sq;
}

/// max |d_x u^st| over (0, s) x D.
template <ConservationLaw S>
double lipschitz_bound(const S &sys,
                       const SpaceTimeReconstruction<S::kComponents> &recon,
                       double xi, double s) {
  return analyze_reconstruction(sys, recon, xi, s).lipschitz;
}

}  // namespace statdg

#endif  // STATDG_RECONSTRUCTION_HPP_
