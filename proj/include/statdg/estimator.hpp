#ifndef STATDG_ESTIMATOR_HPP_
#define STATDG_ESTIMATOR_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "statdg/dg_space.hpp"
#include "statdg/errors.hpp"
#include "statdg/measure.hpp"
#include "statdg/physics.hpp"
#include "statdg/reconstruction.hpp"
#include "statdg/transport.hpp"

namespace statdg {

/// A nonnegative number stored as its natural logarithm. The a posteriori
/// bound carries exp(s A^3 B (L + 1)), which leaves double range for Euler.
struct LogValue {
  double log = -std::numeric_limits<double>::infinity();  // log(0)

  static LogValue of(double x) {
    if (x < 0.0) throw std::invalid_argument("LogValue: negative value");
    return LogValue{std::log(x)};
  }
  bool is_zero() const { return log == -std::numeric_limits<double>::infinity(); }
  /// exp(log); +inf once out of range.
  double value() const { return std::exp(log); }
  bool operator<=(const LogValue &o) const { return log <= o.log; }

  /// Scientific notation with `digits` significant digits, also beyond the
  /// double exponent range.
  std::string scientific(int digits = 15) const {
    digits = std::clamp(digits, 1, 17);
    char buf[64];
    if (is_zero()) {
      std::snprintf(buf, sizeof buf, "%.*e", digits - 1, 0.0);
      return buf;
    }
    const double v = value();
    if (std::isfinite(v) && v > 0.0 && std::isnormal(v)) {
      std::snprintf(buf, sizeof buf, "%.*e", digits - 1, v);
      return buf;
    }
    const double l10 = log / std::log(10.0);
    double exponent = std::floor(l10);
    double mantissa = std::pow(10.0, l10 - exponent);
    char mant[40];
    std::snprintf(mant, sizeof mant, "%.*f", digits - 1, mantissa);
    if (mant[0] == '1' && mant[1] == '0') {  // rounded up to 10
      exponent += 1.0;
      std::snprintf(mant, sizeof mant, "%.*f", digits - 1, mantissa / 10.0);
    }
    std::snprintf(buf, sizeof buf, "%se%+.0f", mant, exponent);
    return buf;
  }

  static LogValue parse(const std::string &text) {
    const auto e = text.find_first_of("eE");
    const double mantissa = std::stod(text.substr(0, e));
    const double exponent = e == std::string::npos ? 0.0 : std::stod(text.substr(e + 1));
    if (mantissa < 0.0) throw std::invalid_argument("LogValue::parse: negative value");
    if (mantissa == 0.0) return LogValue{};
    return LogValue{std::log(mantissa) + exponent * std::log(10.0)};
  }
};

/// E^det = sum_k w_k int_0^s int_D |R^st_k|^2.
inline double e_det(const std::vector<double> &residual_norms_sq,
                    const std::vector<double> &weights) {
  if (residual_norms_sq.size() != weights.size()) {
    throw std::invalid_argument("e_det: residuals and weights differ in length");
  }
  double sum = 0.0;
  for (size_t k = 0; k < weights.size(); ++k) sum += weights[k] * residual_norms_sq[k];
  return sum;
}

/// ||a_k - b_k||^2 for paired columns.
inline std::vector<double> paired_squared_distances(const SampledAtoms &a,
                                                    const SampledAtoms &b) {
  if (a.size() != b.size() || a.columns.rows() != b.columns.rows()) {
    throw std::invalid_argument("paired distances: atoms are not paired");
  }
  std::vector<double> out(static_cast<size_t>(a.size()));
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    out[static_cast<size_t>(k)] = (a.columns.col(k) - b.columns.col(k)).squaredNorm();
  }
  return out;
}

/// E_0^det = sum_k w_k ||u_k(0) - u^st_k(0)||^2.
template <int M>
double e0_det(const std::vector<Field<M>> &initial_atoms,
              const std::vector<Field<M>> &reconstructed_initial,
              const std::vector<double> &weights, const Mesh &mesh) {
  if (initial_atoms.size() != reconstructed_initial.size() ||
      initial_atoms.size() != weights.size()) {
    throw std::invalid_argument("e0_det: atoms, reconstructions and weights must pair up");
  }
  return e_det(paired_squared_distances(sample_atoms<M>(initial_atoms, mesh),
                                        sample_atoms<M>(reconstructed_initial, mesh)),
               weights);
}

/// E_0^stoch = W2(reference, sample measure)^2.
template <int M>
double e0_stoch(const EmpiricalMeasure<M> &samples, const EmpiricalMeasure<M> &reference,
                const Mesh &mesh) {
  return wasserstein2_sq(samples, reference, mesh);
}

/// Componentwise bounds of the observed states, widened by a relative margin.
template <int M>
struct StateBox {
  StateVector<M> lo, hi;

  static StateBox around(const StateVector<M> &lo, const StateVector<M> &hi,
                         double margin) {
    if (!((lo.array() <= hi.array()).all())) {
      throw std::invalid_argument("StateBox: empty box");
    }
    const StateVector<M> center = 0.5 * (lo + hi);
    const StateVector<M> half = 0.5 * (1.0 + margin) * (hi - lo);
    return StateBox{center - half, center + half};
  }

  bool contains(const StateVector<M> &u) const {
    return (u.array() >= lo.array()).all() && (u.array() <= hi.array()).all();
  }
};

template <int M>
StateBox<M> state_box(const std::vector<const ResidualSummary<M> *> &summaries,
                      double margin) {
  if (summaries.empty()) throw std::invalid_argument("state_box: no samples");
  ResidualSummary<M> all;
  for (const auto *s : summaries) all.merge(*s);
  return StateBox<M>::around(all.box_lo, all.box_hi, margin);
}

struct Constants {
  double A = 0.0, B = 0.0;
  double flux_hessian_max = 0.0;  // C_f
  double entropy_hessian_min = 0.0, entropy_hessian_max = 0.0;
};

/// A = max{(1 + C_f) / eta_min, eta_max}, B = eta_max from Hessian bounds
/// sampled on a uniform grid over the box, then scaled by `safety`.
template <ConservationLaw S>
Constants estimate_constants(const StateBox<S::kComponents> &box, const S &sys,
                             int grid = 21, double safety = 1.1) {
  constexpr int M = S::kComponents;
  using State = typename S::State;
  using Matrix = typename S::Matrix;
  if (grid < 2) throw std::invalid_argument("estimate_constants: grid < 2");
  if (!(safety >= 1.0)) throw std::invalid_argument("estimate_constants: safety < 1");

  double cf = 0.0;
  double eta_min = std::numeric_limits<double>::infinity(), eta_max = 0.0;
  long total = 1;
  for (int c = 0; c < M; ++c) total *= grid;
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  for (long index = 0; index < total; ++index) {
    State u;
    long rest = index;
    for (int c = 0; c < M; ++c) {
      const double frac = static_cast<double>(rest % grid) / (grid - 1);
      rest /= grid;
      u[c] = box.lo[c] + frac * (box.hi[c] - box.lo[c]);
    }
    if (!sys.admissible(u)) {
      throw StateSpaceError("estimate_constants: state box leaves the admissible set",
                            to_std_vector<M>(u));
    }
    for (int i = 0; i < M; ++i) {
      eig.compute(sys.flux_hessian(u, i), Eigen::EigenvaluesOnly);
      cf = std::max(cf, eig.eigenvalues().cwiseAbs().maxCoeff());
    }
    eig.compute(sys.entropy_hessian(u), Eigen::EigenvaluesOnly);
    eta_min = std::min(eta_min, eig.eigenvalues().minCoeff());
    eta_max = std::max(eta_max, eig.eigenvalues().maxCoeff());
  }
  if (!(eta_min > 0.0)) {
    throw std::domain_error("estimate_constants: entropy not strictly convex on the box");
  }
  Constants out;
  out.flux_hessian_max = cf;
  out.entropy_hessian_min = eta_min;
  out.entropy_hessian_max = eta_max;
  out.A = safety * std::max((1.0 + cf) / eta_min, eta_max);
  out.B = safety * eta_max;
  return out;
}

/// A (E^det + A W2(initial)^2) exp(s A^3 B (L + 1)).
inline LogValue total_bound(double e_det_value, double w2_initial_sq, double A, double B,
                            double L, double s) {
  if (e_det_value < 0.0 || w2_initial_sq < 0.0 || !(A > 0.0) || !(B > 0.0) || L < 0.0 ||
      s < 0.0) {
    throw std::invalid_argument("total_bound: negative or zero input");
  }
  const double parts = e_det_value + A * w2_initial_sq;
  if (parts == 0.0) return LogValue{};
  return LogValue{std::log(A) + std::log(parts) + s * A * A * A * B * (L + 1.0)};
}

struct InitialSplit {
  double w2_initial_sq = 0.0;  // (sqrt(E_0^stoch) + sqrt(E_0^det))^2
  double e0_stoch = 0.0;
  double e0_det = 0.0;
  // ||u_k - u^st_k(0)||^2 <= min_{l != k} ||u_k - u_l||^2 / 2 for every k
  bool pairing_condition = true;
};

/// Triangle-inequality split of W2(initial measure, u^st(0) measure)^2.
/// `pair_costs` holds ||u_k - u_l||^2 between the initial samples.
inline InitialSplit initial_split(double e0_stoch_value,
                                  const std::vector<double> &sample_distances_sq,
                                  const std::vector<double> &weights,
                                  const Eigen::MatrixXd &pair_costs) {
  const size_t K = weights.size();
  if (sample_distances_sq.size() != K || static_cast<size_t>(pair_costs.rows()) < K ||
      static_cast<size_t>(pair_costs.cols()) < K) {
    throw std::invalid_argument("initial_split: inconsistent sample counts");
  }
  InitialSplit out;
  out.e0_stoch = e0_stoch_value;
  out.e0_det = e_det(sample_distances_sq, weights);
  const double r = std::sqrt(out.e0_stoch) + std::sqrt(out.e0_det);
  out.w2_initial_sq = r * r;
  for (size_t k = 0; k < K && out.pairing_condition; ++k) {
    double nearest = std::numeric_limits<double>::infinity();
    for (size_t l = 0; l < K; ++l) {
      if (l != k) {
        nearest = std::min(nearest, pair_costs(static_cast<Eigen::Index>(k),
                                               static_cast<Eigen::Index>(l)));
      }
    }
    if (sample_distances_sq[k] > 0.5 * nearest) out.pairing_condition = false;
  }
  return out;
}

/// Same split from fields: sample atoms u_k(0), their reconstructions and
/// the reference measure standing in for the initial measure.
template <int M>
InitialSplit initial_split(const EmpiricalMeasure<M> &samples,
                           const std::vector<Field<M>> &reconstructed_initial,
                           const EmpiricalMeasure<M> &reference, const Mesh &mesh) {
  samples.validate();
  if (reconstructed_initial.size() != samples.size()) {
    throw std::invalid_argument("initial_split: one reconstruction per sample needed");
  }
  const SampledAtoms u = sample_atoms<M>(samples.atoms, mesh);
  const SampledAtoms r = sample_atoms<M>(reconstructed_initial, mesh);
  const SampledAtoms ref = sample_atoms<M>(reference.atoms, mesh);
  const double stoch =
      std::max(0.0, solve_emd(samples.weights, reference.weights, cost_matrix(u, ref)).cost);
  return initial_split(stoch, paired_squared_distances(u, r), samples.weights,
                       cost_matrix(u, u));
}

/// One evaluation of the a posteriori estimate and of the measured error.
struct EstimatorReport {
  double s = 0.0;
  double h = 0.0;
  size_t samples = 0;
  size_t reference_samples = 0;
  uint64_t seed = 0;
  int degree = 0;

  double e_det = 0.0;
  double e0_det = 0.0;
  double e0_stoch = 0.0;
  double w2_initial_sq = 0.0;
  bool pairing_condition = true;
  double A = 0.0, B = 0.0, L = 0.0;
  LogValue total_bound;

  double error = 0.0;       // squared W2 of the density marginals at s
  double error_full = 0.0;  // squared W2 of the full states at s

  /// error <= total_bound
  bool reliable() const { return LogValue::of(error) <= total_bound; }
};

}  // namespace statdg

#endif  // STATDG_ESTIMATOR_HPP_
