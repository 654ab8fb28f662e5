#ifndef STATDG_MEASURE_HPP_
#define STATDG_MEASURE_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "statdg/dg_space.hpp"
#include "statdg/physics.hpp"
#include "statdg/quadrature.hpp"

namespace statdg {

/// A vector field on the periodic unit interval.
template <int M>
using Field = std::function<StateVector<M>(double)>;

template <int M>
Field<M> as_field(DGState<M> u) {
  return [u = std::move(u)](double x) { return u.evaluate(x); };
}

/// Weighted sum of Dirac masses sitting on fields.
template <int M>
struct EmpiricalMeasure {
  std::vector<Field<M>> atoms;
  std::vector<double> weights;

  size_t size() const { return atoms.size(); }

  static EmpiricalMeasure uniform(std::vector<Field<M>> atoms) {
    EmpiricalMeasure out;
    const double w = 1.0 / static_cast<double>(atoms.size());
    out.weights.assign(atoms.size(), w);
    out.atoms = std::move(atoms);
    out.validate();
    return out;
  }

  void validate() const {
    if (atoms.empty() || atoms.size() != weights.size()) {
      throw std::invalid_argument(
          "EmpiricalMeasure: need as many weights as atoms, at least one");
    }
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("EmpiricalMeasure: negative weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw std::invalid_argument("EmpiricalMeasure: weights do not sum to 1");
    }
  }
};

/// Push-forward under u -> u[component].
template <int M>
EmpiricalMeasure<1> marginal(const EmpiricalMeasure<M> &measure, int component) {
  if (component < 0 || component >= M) {
    throw std::invalid_argument("marginal: component out of range");
  }
  EmpiricalMeasure<1> out;
  out.weights = measure.weights;
  out.atoms.reserve(measure.size());
  for (const auto &atom : measure.atoms) {
    out.atoms.push_back([atom, component](double x) {
      return StateVector<1>(atom(x)[component]);
    });
  }
  return out;
}

/// Atoms evaluated on the per-cell Gauss rule of a mesh and scaled by the
/// square root of the quadrature weight, so that the L2 distance of two
/// atoms is the Euclidean distance of their columns.
struct SampledAtoms {
  Eigen::MatrixXd columns;  // rows: (point, component), one column per atom
  int components = 0;

  Eigen::Index size() const { return columns.cols(); }

  SampledAtoms head(Eigen::Index count) const {
    return SampledAtoms{columns.leftCols(count), components};
  }
};

/// Quadrature grid (points and sqrt-weights) of a mesh.
inline std::pair<std::vector<double>, std::vector<double>> quadrature_grid(
    const Mesh &mesh, int points = kSpatialEstimatorPoints) {
  const QuadratureRule rule = gauss_legendre(points);
  std::vector<double> x, sw;
  x.reserve(static_cast<size_t>(mesh.cells()) * points);
  sw.reserve(x.capacity());
  for (int l = 0; l < mesh.cells(); ++l) {
    for (int q = 0; q < points; ++q) {
      x.push_back(mesh.map(l, rule.nodes[q]));
      sw.push_back(std::sqrt(0.5 * mesh.width(l) * rule.weights[q]));
    }
  }
  return {std::move(x), std::move(sw)};
}

template <int M, typename FieldLike>
SampledAtoms sample_atoms(const std::vector<FieldLike> &atoms, const Mesh &mesh,
                          int points = kSpatialEstimatorPoints) {
  const auto [x, sw] = quadrature_grid(mesh, points);
  SampledAtoms out;
  out.components = M;
  out.columns.resize(static_cast<Eigen::Index>(x.size()) * M,
                     static_cast<Eigen::Index>(atoms.size()));
  for (size_t a = 0; a < atoms.size(); ++a) {
    for (size_t q = 0; q < x.size(); ++q) {
      const StateVector<M> v = atoms[a](x[q]);
      for (int c = 0; c < M; ++c) {
        out.columns(static_cast<Eigen::Index>(q) * M + c,
                    static_cast<Eigen::Index>(a)) = sw[q] * v[c];
      }
    }
  }
  return out;
}

/// Sampling of DG fields living on the mesh itself: evaluates the modal
/// expansion directly instead of locating cells.
template <int M>
SampledAtoms sample_dg_atoms(const std::vector<DGState<M>> &atoms,
                             const Mesh &mesh, int component = -1,
                             int points = kSpatialEstimatorPoints) {
  const QuadratureRule rule = gauss_legendre(points);
  const int comps = component < 0 ? M : 1;
  SampledAtoms out;
  out.components = comps;
  out.columns.resize(static_cast<Eigen::Index>(mesh.cells()) * points * comps,
                     static_cast<Eigen::Index>(atoms.size()));
  for (size_t a = 0; a < atoms.size(); ++a) {
    const DGState<M> &u = atoms[a];
    if (u.cells() != mesh.cells()) {
      throw std::invalid_argument("sample_dg_atoms: atom lives on another mesh");
    }
    Eigen::Index row = 0;
    for (int l = 0; l < mesh.cells(); ++l) {
      for (int q = 0; q < points; ++q) {
        const double sw = std::sqrt(0.5 * mesh.width(l) * rule.weights[q]);
        const StateVector<M> v = u.evaluate_reference(l, rule.nodes[q]);
        if (component < 0) {
          for (int c = 0; c < M; ++c) {
            out.columns(row++, static_cast<Eigen::Index>(a)) = sw * v[c];
          }
        } else {
          out.columns(row++, static_cast<Eigen::Index>(a)) = sw * v[component];
        }
      }
    }
  }
  return out;
}

/// ||a - b||^2_{L2} of two fields by the per-cell Gauss rule.
template <int M>
double squared_distance(const Field<M> &a, const Field<M> &b, const Mesh &mesh,
                        int points = kSpatialEstimatorPoints) {
  const auto [x, sw] = quadrature_grid(mesh, points);
  double sum = 0.0;
  for (size_t q = 0; q < x.size(); ++q) {
    const StateVector<M> d = a(x[q]) - b(x[q]);
    sum += sw[q] * sw[q] * d.squaredNorm();
  }
  return sum;
}

}  // namespace statdg

#endif  // STATDG_MEASURE_HPP_
