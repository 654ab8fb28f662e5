#ifndef STATDG_PHYSICS_HPP_
#define STATDG_PHYSICS_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <numbers>
#include <vector>

#include "statdg/errors.hpp"

namespace statdg {

template <int M>
using StateVector = Eigen::Matrix<double, M, 1>;
template <int M>
using StateMatrix = Eigen::Matrix<double, M, M>;

// clang-format off
/// A hyperbolic system u_t + f(u)_x = Q(t, x, xi, u) with a strictly convex
/// entropy pair (eta, q).
template <typename S>
concept ConservationLaw = requires(const S &s, const typename S::State &u,
                                   double t, double x, double xi, int i) {
  { S::kComponents } -> std::convertible_to<int>;
  { s.flux(u) } -> std::same_as<typename S::State>;
  { s.flux_jacobian(u) } -> std::same_as<typename S::Matrix>;
  { s.flux_hessian(u, i) } -> std::same_as<typename S::Matrix>;
  { s.entropy(u) } -> std::convertible_to<double>;
  { s.entropy_gradient(u) } -> std::same_as<typename S::State>;
  { s.entropy_hessian(u) } -> std::same_as<typename S::Matrix>;
  { s.entropy_flux(u) } -> std::convertible_to<double>;
  { s.wave_speed(u) } -> std::convertible_to<double>;
  { s.admissible(u) } -> std::convertible_to<bool>;
  { s.require_admissible(u) };
  { s.has_source() } -> std::convertible_to<bool>;
  { s.source(t, x, xi, u) } -> std::same_as<typename S::State>;
};
// clang-format on

/// Systems that supply a closed-form eigenbasis of the flux Jacobian.
template <typename S>
concept HasEigenbasis = requires(const S &s, const typename S::State &u) {
  { s.right_eigenvectors(u) } -> std::same_as<typename S::Matrix>;
};

template <int M>
std::vector<double> to_std_vector(const StateVector<M> &u) {
  return std::vector<double>(u.data(), u.data() + M);
}

/// eta(u|v) = eta(u) - eta(v) - Deta(v)(u - v)
template <ConservationLaw S>
double relative_entropy(const S &sys, const typename S::State &u,
                        const typename S::State &v) {
  sys.require_admissible(u);
  sys.require_admissible(v);
  return sys.entropy(u) - sys.entropy(v) -
         sys.entropy_gradient(v).dot(u - v);
}

/// f(u|v) = f(u) - f(v) - Df(v)(u - v)
template <ConservationLaw S>
typename S::State relative_flux(const S &sys, const typename S::State &u,
                                const typename S::State &v) {
  sys.require_admissible(u);
  sys.require_admissible(v);
  return sys.flux(u) - sys.flux(v) - sys.flux_jacobian(v) * (u - v);
}

// ---------------------------------------------------------------------------
// Scalar test systems

/// u_t + a u_x = 0 with eta = u^2/2.
class LinearAdvection {
 public:
  static constexpr int kComponents = 1;
  using State = StateVector<1>;
  using Matrix = StateMatrix<1>;

  explicit LinearAdvection(double speed = 1.0) : a_(speed) {}

  double speed() const { return a_; }
  State flux(const State &u) const { return a_ * u; }
  Matrix flux_jacobian(const State &) const { return Matrix::Constant(a_); }
  Matrix flux_hessian(const State &, int) const { return Matrix::Zero(); }
  double entropy(const State &u) const { return 0.5 * u[0] * u[0]; }
  State entropy_gradient(const State &u) const { return u; }
  Matrix entropy_hessian(const State &) const { return Matrix::Identity(); }
  double entropy_flux(const State &u) const { return 0.5 * a_ * u[0] * u[0]; }
  double wave_speed(const State &) const { return std::abs(a_); }
  bool admissible(const State &u) const { return std::isfinite(u[0]); }
  void require_admissible(const State &u) const {
    if (!admissible(u)) throw StateSpaceError("non-finite state", {u[0]});
  }
  bool has_source() const { return false; }
  State source(double, double, double, const State &) const {
    return State::Zero();
  }

 private:
  double a_;
};

/// Inviscid Burgers, f(u) = u^2/2, eta = u^2/2, q = u^3/3.
class Burgers {
 public:
  static constexpr int kComponents = 1;
  using State = StateVector<1>;
  using Matrix = StateMatrix<1>;

  State flux(const State &u) const { return State(0.5 * u[0] * u[0]); }
  Matrix flux_jacobian(const State &u) const { return Matrix::Constant(u[0]); }
  Matrix flux_hessian(const State &, int) const { return Matrix::Identity(); }
  double entropy(const State &u) const { return 0.5 * u[0] * u[0]; }
  State entropy_gradient(const State &u) const { return u; }
  Matrix entropy_hessian(const State &) const { return Matrix::Identity(); }
  double entropy_flux(const State &u) const { return u[0] * u[0] * u[0] / 3.0; }
  double wave_speed(const State &u) const { return std::abs(u[0]); }
  bool admissible(const State &u) const { return std::isfinite(u[0]); }
  void require_admissible(const State &u) const {
    if (!admissible(u)) throw StateSpaceError("non-finite state", {u[0]});
  }
  bool has_source() const { return false; }
  State source(double, double, double, const State &) const {
    return State::Zero();
  }
};

// ---------------------------------------------------------------------------
// Compressible Euler

inline constexpr double kAdiabaticIndex = 1.4;
inline constexpr double kAdmissibilityFloor = 1e-10;

using EulerState = StateVector<3>;

/// p = (gamma - 1)(E - m^2 / (2 rho))
inline double euler_pressure(const EulerState &u) {
  const double rho = u[0], m = u[1], e = u[2];
  if (!(rho > kAdmissibilityFloor)) {
    throw StateSpaceError("density below admissibility floor",
                          to_std_vector<3>(u));
  }
  const double p = (kAdiabaticIndex - 1.0) * (e - 0.5 * m * m / rho);
  if (!(p > kAdmissibilityFloor)) {
    throw StateSpaceError("pressure below admissibility floor",
                          to_std_vector<3>(u));
  }
  return p;
}

inline EulerState euler_flux(const EulerState &u) {
  const double p = euler_pressure(u);
  const double vel = u[1] / u[0];
  return EulerState(u[1], u[1] * vel + p, (u[2] + p) * vel);
}

/// Spectral radius |v| + c of the flux Jacobian.
inline double euler_wave_speed(const EulerState &u) {
  const double p = euler_pressure(u);
  return std::abs(u[1] / u[0]) + std::sqrt(kAdiabaticIndex * p / u[0]);
}

struct EntropyPair {
  double eta;
  EulerState gradient;
  StateMatrix<3> hessian;
  double flux;
};

/// Physical entropy eta = -rho s / (gamma - 1), s = ln p - gamma ln rho, with
/// entropy flux q = (m / rho) eta.
inline EntropyPair euler_entropy_pair(const EulerState &u) {
  constexpr double g = kAdiabaticIndex;
  constexpr double gm1 = g - 1.0;
  const double rho = u[0], m = u[1];
  const double p = euler_pressure(u);
  const double s = std::log(p) - g * std::log(rho);

  EntropyPair out;
  out.eta = -rho * s / gm1;
  out.flux = m / rho * out.eta;

  // entropy variables
  out.gradient = EulerState((g - s) / gm1 - 0.5 * m * m / (rho * p), m / p,
                            -rho / p);

  const EulerState dp(0.5 * gm1 * m * m / (rho * rho), -gm1 * m / rho, gm1);
  const EulerState ds(dp[0] / p - g / rho, dp[1] / p, dp[2] / p);
  const double p2 = p * p;
  StateMatrix<3> &H = out.hessian;
  for (int j = 0; j < 3; ++j) {
    const double drho = (j == 0) ? 1.0 : 0.0;
    const double dm = (j == 1) ? 1.0 : 0.0;
    // d/du_j of -m^2 / (2 rho p)
    const double kin = -(m * dm) / (rho * p) +
                       0.5 * m * m * (drho * p + rho * dp[j]) / (rho * rho * p2);
    H(0, j) = -ds[j] / gm1 + kin;
    H(1, j) = dm / p - m * dp[j] / p2;
    H(2, j) = -drho / p + rho * dp[j] / p2;
  }
  return out;
}

/// The traveling-wave manufactured solution
///   rho = 2 + 0.2 xi cos(6 pi (x - t)), m = rho (1 + 0.2 xi sin(6 pi (x - t))),
///   E = rho^2.
inline EulerState manufactured_solution(double t, double x, double xi) {
  const double phase = 6.0 * std::numbers::pi * (x - t);
  const double amp = 0.2 * xi;
  const double rho = 2.0 + amp * std::cos(phase);
  return EulerState(rho, rho * (1.0 + amp * std::sin(phase)), rho * rho);
}

/// Q = U_t + f(U)_x at the manufactured solution. Every field is a function of
/// x - t, so Q = d/dx (f(U) - U).
inline EulerState manufactured_source(double t, double x, double xi) {
  constexpr double k = 6.0 * std::numbers::pi;
  constexpr double gm1 = kAdiabaticIndex - 1.0;
  const double phase = k * (x - t);
  const double amp = 0.2 * xi;
  const double c = std::cos(phase), s = std::sin(phase);
  const double rho = 2.0 + amp * c;
  const double vel = 1.0 + amp * s;
  const double rho_x = -k * amp * s;
  const double vel_x = k * amp * c;
  const double e = rho * rho;
  const double e_x = 2.0 * rho * rho_x;
  const double p = gm1 * (e - 0.5 * rho * vel * vel);
  const double p_x = gm1 * (e_x - 0.5 * rho_x * vel * vel - rho * vel * vel_x);

  const double q1 = rho_x * (vel - 1.0) + rho * vel_x;
  const double q2 = rho_x * vel * vel + 2.0 * rho * vel * vel_x + p_x -
                    rho_x * vel - rho * vel_x;
  const double q3 = (e_x + p_x) * vel + (e + p) * vel_x - e_x;
  return EulerState(q1, q2, q3);
}

/// One-dimensional compressible Euler equations for an ideal gas, optionally
/// driven by the manufactured source.
class Euler {
 public:
  static constexpr int kComponents = 3;
  using State = EulerState;
  using Matrix = StateMatrix<3>;

  explicit Euler(bool manufactured_source = false)
      : source_(manufactured_source) {}

  State flux(const State &u) const { return euler_flux(u); }

  Matrix flux_jacobian(const State &u) const {
    constexpr double g = kAdiabaticIndex;
    const double rho = u[0], m = u[1], e = u[2];
    const double v = m / rho;
    Matrix J;
    J << 0.0, 1.0, 0.0,
        0.5 * (g - 3.0) * v * v, (3.0 - g) * v, g - 1.0,
        -g * e * m / (rho * rho) + (g - 1.0) * v * v * v,
        g * e / rho - 1.5 * (g - 1.0) * v * v, g * v;
    return J;
  }

  /// Hessian of the i-th flux component.
  Matrix flux_hessian(const State &u, int component) const {
    constexpr double g = kAdiabaticIndex;
    const double rho = u[0], m = u[1], e = u[2];
    Matrix H = Matrix::Zero();
    if (component == 1) {
      // (3 - g)/2 * m^2/rho + (g - 1) E
      const double c = 0.5 * (3.0 - g);
      H(0, 0) = c * 2.0 * m * m / (rho * rho * rho);
      H(0, 1) = H(1, 0) = -c * 2.0 * m / (rho * rho);
      H(1, 1) = c * 2.0 / rho;
    } else if (component == 2) {
      // g E m / rho - (g - 1)/2 * m^3 / rho^2
      const double c = 0.5 * (g - 1.0);
      const double r2 = rho * rho, r3 = r2 * rho, r4 = r3 * rho;
      H(0, 0) = g * 2.0 * e * m / r3 - c * 6.0 * m * m * m / r4;
      H(0, 1) = H(1, 0) = -g * e / r2 + c * 6.0 * m * m / r3;
      H(0, 2) = H(2, 0) = -g * m / r2;
      H(1, 1) = -c * 6.0 * m / r2;
      H(1, 2) = H(2, 1) = g / rho;
    }
    return H;
  }

  double entropy(const State &u) const { return euler_entropy_pair(u).eta; }
  State entropy_gradient(const State &u) const {
    return euler_entropy_pair(u).gradient;
  }
  Matrix entropy_hessian(const State &u) const {
    return euler_entropy_pair(u).hessian;
  }
  double entropy_flux(const State &u) const { return euler_entropy_pair(u).flux; }
  double wave_speed(const State &u) const { return euler_wave_speed(u); }

  /// Columns are the right eigenvectors of Df(u) for v - c, v, v + c.
  Matrix right_eigenvectors(const State &u) const {
    const double p = euler_pressure(u);
    const double v = u[1] / u[0];
    const double c = std::sqrt(kAdiabaticIndex * p / u[0]);
    const double enthalpy = (u[2] + p) / u[0];
    Matrix R;
    R << 1.0, 1.0, 1.0,
        v - c, v, v + c,
        enthalpy - v * c, 0.5 * v * v, enthalpy + v * c;
    return R;
  }

  bool admissible(const State &u) const {
    if (!u.allFinite() || !(u[0] > kAdmissibilityFloor)) return false;
    const double p = (kAdiabaticIndex - 1.0) * (u[2] - 0.5 * u[1] * u[1] / u[0]);
    return p > kAdmissibilityFloor;
  }
  void require_admissible(const State &u) const { (void)euler_pressure(u); }

  bool has_source() const { return source_; }
  State source(double t, double x, double xi, const State &) const {
    return source_ ? manufactured_source(t, x, xi) : State::Zero();
  }

 private:
  bool source_;
};

}  // namespace statdg

#endif  // STATDG_PHYSICS_HPP_
