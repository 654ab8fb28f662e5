#ifndef STATDG_RKDG_HPP_
#define STATDG_RKDG_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "statdg/dg_space.hpp"
#include "statdg/errors.hpp"
#include "statdg/physics.hpp"
#include "statdg/quadrature.hpp"

namespace statdg {

enum class NumericalFlux { kLaxWendroff, kLocalLaxFriedrichs };

struct SolverConfig {
  int cells = 64;
  int degree = 2;
  double cfl = 1.0;
  double t_final = 0.2;
  NumericalFlux flux = NumericalFlux::kLaxWendroff;
  double m_tvb = 100.0;
  bool limiter_enabled = true;

  void validate() const {
    if (cells < 4) throw std::invalid_argument("SolverConfig: cells < 4");
    if (degree < 0 || degree > 8) {
      throw std::invalid_argument("SolverConfig: degree outside [0, 8]");
    }
    if (!(cfl > 0.0 && cfl <= 1.0)) {
      throw std::invalid_argument("SolverConfig: cfl outside (0, 1]");
    }
    if (!(t_final > 0.0)) throw std::invalid_argument("SolverConfig: t_final <= 0");
    if (!(m_tvb >= 0.0)) throw std::invalid_argument("SolverConfig: m_tvb < 0");
  }
};

/// Intermediate state w(u, v) = ((u + v) - (dt/h)(f(v) - f(u))) / 2 of the
/// Lax-Wendroff flux, u the left and v the right trace.
template <ConservationLaw S>
typename S::State lax_wendroff_state(const S &sys, const typename S::State &u,
                                     const typename S::State &v,
                                     double dt_over_h) {
  typename S::State w = 0.5 * ((u + v) - dt_over_h * (sys.flux(v) - sys.flux(u)));
  sys.require_admissible(w);
  return w;
}

/// F(u, v) = f(w(u, v)).
template <ConservationLaw S>
typename S::State lax_wendroff_flux(const S &sys, const typename S::State &u,
                                    const typename S::State &v, double dt,
                                    double h) {
  if (!(dt > 0.0 && h > 0.0)) {
    throw std::invalid_argument("lax_wendroff_flux: dt and h must be positive");
  }
  return sys.flux(lax_wendroff_state(sys, u, v, dt / h));
}

template <ConservationLaw S>
typename S::State local_lax_friedrichs_flux(const S &sys,
                                            const typename S::State &u,
                                            const typename S::State &v) {
  const double lambda = std::max(sys.wave_speed(u), sys.wave_speed(v));
  return 0.5 * (sys.flux(u) + sys.flux(v)) - 0.5 * lambda * (v - u);
}

/// minmod(a1, a2, a3)
inline double minmod(double a1, double a2, double a3) {
  if (a1 > 0.0 && a2 > 0.0 && a3 > 0.0) return std::min({a1, a2, a3});
  if (a1 < 0.0 && a2 < 0.0 && a3 < 0.0) return std::max({a1, a2, a3});
  return 0.0;
}

/// TVB-modified minmod: a1 is kept when |a1| <= threshold (= M h^2).
inline double tvb_minmod(double a1, double a2, double a3, double threshold) {
  if (std::abs(a1) <= threshold) return a1;
  return minmod(a1, a2, a3);
}

/// Data of the discrete trajectory at one time node.
template <int M>
struct TimeNode {
  using State = StateVector<M>;
  DGState<M> state;
  std::vector<State> rhs;               // L_h(u_h) + projected source
  std::vector<State> interface_states;  // w at x_i, between cells i-1 and i
  std::vector<State> interface_rates;   // d/dt of interface_states
};

/// One time step [t^n, t^{n+1}].
template <int M>
struct StepRecord {
  std::shared_ptr<const TimeNode<M>> begin;
  std::shared_ptr<const TimeNode<M>> end;
  double dt = 0.0;
};

/// Semidiscrete operator, limiter and time stepper for one sample xi.
template <ConservationLaw S>
class RkdgSolver {
 public:
  static constexpr int M = S::kComponents;
  using State = typename S::State;
  using Matrix = typename S::Matrix;

  struct OperatorValue {
    std::vector<State> rhs;
    std::vector<State> interface_states;
  };

  RkdgSolver(S system, SolverConfig config, double xi = 0.0)
      : sys_(std::move(system)),
        config_(std::move(config)),
        xi_(xi),
        rule_(gauss_legendre(config_.degree + 2)),
        basis_(config_.degree, rule_) {}

  const S &system() const { return sys_; }
  const SolverConfig &config() const { return config_; }
  double xi() const { return xi_; }

  /// Modal coefficients of L_h(u_h) plus the projection of the source, and
  /// the interface states the numerical flux was evaluated at.
  OperatorValue evaluate(const DGState<M> &u, double dt) const {
    const Mesh &mesh = u.mesh();
    const int n = mesh.cells();
    const int p = u.degree();
    OperatorValue out;
    out.rhs.assign(u.coefficients().size(), State::Zero());
    out.interface_states.resize(n);
    std::vector<State> fluxes(n);

    for (int i = 0; i < n; ++i) {
      const int left = mesh.prev(i);
      const State um = u.right_trace(left);
      const State up = u.left_trace(i);
      try {
        if (config_.flux == NumericalFlux::kLaxWendroff) {
          const double h = 0.5 * (mesh.width(left) + mesh.width(i));
          out.interface_states[i] = lax_wendroff_state(sys_, um, up, dt / h);
          fluxes[i] = sys_.flux(out.interface_states[i]);
        } else {
          out.interface_states[i] = 0.5 * (um + up);
          fluxes[i] = local_lax_friedrichs_flux(sys_, um, up);
        }
      } catch (const StateSpaceError &e) {
        throw StateSpaceError("interface " + std::to_string(i), e);
      }
    }

    const double t = u.time();
    for (int l = 0; l < n; ++l) {
      const double h = mesh.width(l);
      const int r = mesh.next(l);
      try {
        for (int q = 0; q < rule_.size(); ++q) {
          State uq = State::Zero();
          for (int k = 0; k <= p; ++k) uq += basis_.value(q, k) * u.coeff(l, k);
          const State fq = sys_.flux(uq);
          const double wq = rule_.weights[q];
          for (int k = 1; k <= p; ++k) {
            out.rhs[l * (p + 1) + k] +=
                ((2 * k + 1) / h * wq * basis_.derivative(q, k)) * fq;
          }
          if (sys_.has_source()) {
            const State sq = sys_.source(t, mesh.map(l, rule_.nodes[q]), xi_, uq);
            for (int k = 0; k <= p; ++k) {
              out.rhs[l * (p + 1) + k] +=
                  (0.5 * (2 * k + 1) * wq * basis_.value(q, k)) * sq;
            }
          }
        }
      } catch (const StateSpaceError &e) {
        throw StateSpaceError("cell " + std::to_string(l), e);
      }
      for (int k = 0; k <= p; ++k) {
        out.rhs[l * (p + 1) + k] -=
            ((2 * k + 1) / h) *
            (fluxes[r] - LegendreBasis::left_trace(k) * fluxes[l]);
      }
    }
    return out;
  }

  /// TVBM minmod limiter in local characteristic variables. Cells that pass
  /// the deviation test are left bit-identical.
  void limit(DGState<M> &u) const {
    const int p = u.degree();
    if (p < 1 || !config_.limiter_enabled) return;
    const Mesh &mesh = u.mesh();
    const int n = mesh.cells();
    std::vector<State> means(n);
    for (int l = 0; l < n; ++l) means[l] = u.mean(l);

    for (int l = 0; l < n; ++l) {
      const double h = mesh.width(l);
      const double threshold = config_.m_tvb * h * h;
      const State &mean = means[l];
      const auto [right, left] = eigenbasis(mean);
      const State dplus = left * (means[mesh.next(l)] - mean);
      const State dminus = left * (mean - means[mesh.prev(l)]);
      const State dev_r = left * (u.right_trace(l) - mean);
      const State dev_l = left * (mean - u.left_trace(l));
      bool changed = false;
      for (int i = 0; i < M && !changed; ++i) {
        changed = tvb_minmod(dev_r[i], dplus[i], dminus[i], threshold) != dev_r[i] ||
                  tvb_minmod(dev_l[i], dplus[i], dminus[i], threshold) != dev_l[i];
      }
      if (!changed) continue;
      State slope = left * u.coeff(l, 1);
      for (int i = 0; i < M; ++i) {
        slope[i] = tvb_minmod(slope[i], dplus[i], dminus[i], threshold);
      }
      u.coeff(l, 1) = right * slope;
      for (int k = 2; k <= p; ++k) u.coeff(l, k) = State::Zero();
    }
  }

  /// dt = cfl h_min / (lambda_max (2p + 1)), clipped to land on t_final.
  double timestep(const DGState<M> &u) const {
    const double remaining = config_.t_final - u.time();
    double lambda = 0.0;
    for (int l = 0; l < u.cells(); ++l) {
      lambda = std::max({lambda, sys_.wave_speed(u.mean(l)),
                         sys_.wave_speed(u.left_trace(l)),
                         sys_.wave_speed(u.right_trace(l))});
    }
    if (lambda <= 0.0) return remaining;
    const double dt =
        config_.cfl * u.mesh().h_min() / (lambda * (2 * u.degree() + 1));
    return std::min(dt, remaining);
  }

  /// Trajectory data at a node, with rhs evaluated using the step size dt
  /// of the step that starts there.
  std::shared_ptr<const TimeNode<M>> make_node(DGState<M> u, double dt) const {
    auto node = std::make_shared<TimeNode<M>>();
    OperatorValue op = evaluate(u, dt);
    node->rhs = std::move(op.rhs);
    node->interface_states = std::move(op.interface_states);
    node->state = std::move(u);
    node->interface_rates = interface_rates(node->state, node->rhs, dt);
    return node;
  }

  /// Shu-Osher SSP-RK3 with the limiter applied after every stage. `start`
  /// must have been built with the same dt.
  DGState<M> advance(const TimeNode<M> &start, double dt) const {
    const DGState<M> &u0 = start.state;
    const double t0 = u0.time();

    DGState<M> u1 = u0;
    axpy(u1, dt, start.rhs);
    u1.set_time(t0 + dt);
    limit(u1);

    DGState<M> u2 = u1;
    try {
      axpy(u2, dt, evaluate(u1, dt).rhs);
    } catch (const StateSpaceError &e) {
      throw StateSpaceError("stage 2", e);
    }
    combine(u2, 0.75, u0, 0.25);
    u2.set_time(t0 + 0.5 * dt);
    limit(u2);

    DGState<M> u3 = u2;
    try {
      axpy(u3, dt, evaluate(u2, dt).rhs);
    } catch (const StateSpaceError &e) {
      throw StateSpaceError("stage 3", e);
    }
    combine(u3, 1.0 / 3.0, u0, 2.0 / 3.0);
    limit(u3);
    // exact landing on the final time
    u3.set_time(std::abs(t0 + dt - config_.t_final) < 1e-14 * config_.t_final
                    ? config_.t_final
                    : t0 + dt);
    check_finite(u3);
    return u3;
  }

  /// Runs from `initial` (limited first) to t_final, handing every step to
  /// `on_step`.
  void solve(DGState<M> initial,
             const std::function<void(const StepRecord<M> &)> &on_step) const {
    limit(initial);
    double dt = timestep(initial);
    if (!(dt > 0.0)) throw std::invalid_argument("solve: nothing to integrate");
    auto node = make_node(std::move(initial), dt);
    while (true) {
      DGState<M> u;
      try {
        u = advance(*node, dt);
      } catch (const StateSpaceError &e) {
        throw StateSpaceError("t = " + std::to_string(node->state.time()), e);
      }
      const bool done = u.time() >= config_.t_final;
      const double next_dt = done ? dt : timestep(u);
      auto next = make_node(std::move(u), next_dt);
      on_step(StepRecord<M>{node, next, dt});
      if (done) break;
      node = std::move(next);
      dt = next_dt;
    }
  }

 private:
  std::pair<Matrix, Matrix> eigenbasis(const State &mean) const {
    if constexpr (M == 1) {
      return {Matrix::Identity(), Matrix::Identity()};
    } else {
      Matrix right = Matrix::Identity();
      bool ok = sys_.admissible(mean);
      if (ok) {
        if constexpr (HasEigenbasis<S>) {
          right = sys_.right_eigenvectors(mean);
        } else {
          Eigen::EigenSolver<Matrix> es(sys_.flux_jacobian(mean));
          ok = es.info() == Eigen::Success &&
               es.eigenvalues().imag().cwiseAbs().maxCoeff() < 1e-12;
          if (ok) right = es.eigenvectors().real();
        }
      }
      if (!ok) return {Matrix::Identity(), Matrix::Identity()};
      Matrix left = right.inverse();
      const double cond = right.cwiseAbs().rowwise().sum().maxCoeff() *
                          left.cwiseAbs().rowwise().sum().maxCoeff();
      if (!std::isfinite(cond) || cond > 1e8) {
        return {Matrix::Identity(), Matrix::Identity()};
      }
      return {right, left};
    }
  }

  std::vector<State> interface_rates(const DGState<M> &u,
                                     const std::vector<State> &rhs,
                                     double dt) const {
    const Mesh &mesh = u.mesh();
    const int n = mesh.cells();
    const int p = u.degree();
    std::vector<State> rates(n);
    for (int i = 0; i < n; ++i) {
      const int left = mesh.prev(i);
      State lm = State::Zero(), lp = State::Zero();
      for (int k = 0; k <= p; ++k) {
        lm += rhs[left * (p + 1) + k];
        lp += LegendreBasis::left_trace(k) * rhs[i * (p + 1) + k];
      }
      rates[i] = 0.5 * (lm + lp);
      if (config_.flux == NumericalFlux::kLaxWendroff) {
        const double h = 0.5 * (mesh.width(left) + mesh.width(i));
        rates[i] -= (0.5 * dt / h) *
                    (sys_.flux_jacobian(u.left_trace(i)) * lp -
                     sys_.flux_jacobian(u.right_trace(left)) * lm);
      }
    }
    return rates;
  }

  static void axpy(DGState<M> &u, double a, const std::vector<State> &x) {
    auto &c = u.coefficients();
    for (size_t i = 0; i < c.size(); ++i) c[i] += a * x[i];
  }

  /// u <- a u_other + b u, where u holds the forward-Euler stage.
  static void combine(DGState<M> &stage, double a, const DGState<M> &base,
                      double b) {
    auto &c = stage.coefficients();
    const auto &c0 = base.coefficients();
    for (size_t i = 0; i < c.size(); ++i) c[i] = a * c0[i] + b * c[i];
  }

  void check_finite(const DGState<M> &u) const {
    for (int l = 0; l < u.cells(); ++l) {
      for (int k = 0; k < u.modes(); ++k) {
        if (!u.coeff(l, k).allFinite()) {
          throw SolverBlowUp("non-finite coefficient at t = " +
                             std::to_string(u.time()) + " in cell " +
                             std::to_string(l));
        }
      }
    }
  }

  S sys_;
  SolverConfig config_;
  double xi_;
  QuadratureRule rule_;
  LegendreBasis basis_;
};

template <ConservationLaw S>
std::vector<typename S::State> dg_rhs(const RkdgSolver<S> &solver,
                                      const DGState<S::kComponents> &u,
                                      double dt) {
  return solver.evaluate(u, dt).rhs;
}

template <ConservationLaw S>
DGState<S::kComponents> tvbm_limit(const S &sys, DGState<S::kComponents> u,
                                   double m_tvb) {
  SolverConfig config;
  config.degree = u.degree();
  config.m_tvb = m_tvb;
  config.limiter_enabled = true;
  RkdgSolver<S>(sys, config).limit(u);
  return u;
}

template <ConservationLaw S>
double cfl_timestep(const RkdgSolver<S> &solver,
                    const DGState<S::kComponents> &u) {
  return solver.timestep(u);
}

/// One SSP-RK3 step from u with step size dt.
template <ConservationLaw S>
std::pair<DGState<S::kComponents>, StepRecord<S::kComponents>> ssp_rk3_step(
    const RkdgSolver<S> &solver, const DGState<S::kComponents> &u, double dt) {
  auto begin = solver.make_node(u, dt);
  auto end = solver.make_node(solver.advance(*begin, dt), dt);
  DGState<S::kComponents> next = end->state;
  return {std::move(next), StepRecord<S::kComponents>{begin, end, dt}};
}

/// Full trajectory from the L2 projection of `initial`.
template <ConservationLaw S, typename F>
std::vector<StepRecord<S::kComponents>> run_deterministic(
    const RkdgSolver<S> &solver, F &&initial) {
  const SolverConfig &config = solver.config();
  config.validate();
  auto mesh = Mesh::uniform(config.cells);
  std::vector<StepRecord<S::kComponents>> records;
  solver.solve(l2_project<S::kComponents>(initial, mesh, config.degree),
               [&](const StepRecord<S::kComponents> &r) { records.push_back(r); });
  return records;
}

/// The manufactured Euler problem for one sample xi.
inline std::vector<StepRecord<3>> run_deterministic(double xi,
                                                   const SolverConfig &config) {
  RkdgSolver<Euler> solver(Euler(true), config, xi);
  return run_deterministic(
      solver, [xi](double x) { return manufactured_solution(0.0, x, xi); });
}

}  // namespace statdg

#endif  // STATDG_RKDG_HPP_
