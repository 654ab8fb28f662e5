#ifndef STATDG_TRANSPORT_HPP_
#define STATDG_TRANSPORT_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "statdg/dg_space.hpp"
#include "statdg/measure.hpp"

namespace statdg {

/// Marginals that cannot be coupled (negative mass, wrong total).
class InfeasibleMarginals : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Squared L2 distances between every pair of sampled atoms. Entries below
/// 1e-15 are quadrature noise and set to zero.
inline Eigen::MatrixXd cost_matrix(const SampledAtoms &a, const SampledAtoms &b) {
  if (a.components != b.components || a.columns.rows() != b.columns.rows()) {
    throw std::invalid_argument("cost_matrix: atoms sampled on different grids (" +
                                std::to_string(a.columns.rows()) + " vs " +
                                std::to_string(b.columns.rows()) + " rows)");
  }
  Eigen::MatrixXd cost(a.size(), b.size());
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    cost.row(k) = (b.columns.colwise() - a.columns.col(k)).colwise().squaredNorm();
  }
  cost = (cost.array() < 1e-15).select(0.0, cost);
  return cost;
}

template <int M>
Eigen::MatrixXd cost_matrix(const std::vector<Field<M>> &a,
                            const std::vector<Field<M>> &b, const Mesh &mesh) {
  return cost_matrix(sample_atoms<M>(a, mesh), sample_atoms<M>(b, mesh));
}

struct TransportPlan {
  Eigen::MatrixXd plan;  // rows: first marginal, columns: second
  double cost = 0.0;
  // Dual certificate: cost(k, m) - potential_a[k] - potential_b[m] >= min_reduced_cost
  Eigen::VectorXd potential_a, potential_b;
  double min_reduced_cost = 0.0;
  size_t pivots = 0;
};

namespace detail {

/// Primal network simplex on the complete bipartite graph sources -> sinks
/// with unbounded arcs. The initial tree is the northwest-corner solution;
/// degenerate ties are broken so that zero-flow tree arcs point away from
/// the root, and the leaving arc rule keeps the tree strongly feasible.
class TransportSimplex {
 public:
  TransportSimplex(const std::vector<double> &a, const std::vector<double> &b,
                   const Eigen::MatrixXd &cost)
      : K_(static_cast<int>(a.size())),
        M_(static_cast<int>(b.size())),
        n_(K_ + M_),
        arcs_(static_cast<int64_t>(K_) * M_),
        cost_(static_cast<size_t>(arcs_)),
        flow_(static_cast<size_t>(arcs_), 0.0),
        in_tree_(static_cast<size_t>(arcs_), 0),
        parent_(n_, -1),
        pred_(n_, -1),
        up_(n_, 0),
        depth_(n_, 0),
        first_child_(n_, -1),
        next_sibling_(n_, -1),
        prev_sibling_(n_, -1),
        pi_(n_, 0.0) {
    double max_cost = 0.0;
    for (int i = 0; i < K_; ++i) {
      for (int j = 0; j < M_; ++j) {
        const double c = cost(i, j);
        if (!std::isfinite(c)) throw std::invalid_argument("solve_emd: non-finite cost");
        cost_[arc(i, j)] = c;
        max_cost = std::max(max_cost, std::abs(c));
      }
    }
    tolerance_ = 1e-13 * max_cost;
    northwest_corner(a, b);
  }

  TransportPlan solve() {
    const int64_t block = std::max<int64_t>(
        16, static_cast<int64_t>(std::sqrt(static_cast<double>(arcs_))));
    const size_t budget =
        1000 + 20 * static_cast<size_t>(n_) *
                   static_cast<size_t>(std::ceil(std::log2(n_ + 1.0)));
    const size_t hard_limit = budget + 50 * static_cast<size_t>(arcs_) + 100000;
    size_t pivots = 0;
    int64_t next = 0;
    while (true) {
      const int64_t entering =
          pivots < budget ? block_search(block, next) : first_eligible();
      if (entering < 0) break;
      pivot(entering);
      if (++pivots > hard_limit) {
        throw std::runtime_error("solve_emd: pivot limit exceeded");
      }
      if (pivots % 4096 == 0) recompute_potentials();
    }
    recompute_potentials();
    return extract(pivots);
  }

 private:
  int64_t arc(int i, int j) const { return static_cast<int64_t>(i) * M_ + j; }
  int source(int64_t e) const { return static_cast<int>(e / M_); }
  int sink(int64_t e) const { return K_ + static_cast<int>(e % M_); }
  double reduced_cost(int64_t e) const {
    return cost_[e] + pi_[source(e)] - pi_[sink(e)];
  }

  void attach(int node, int parent, int64_t arc_id, bool up) {
    parent_[node] = parent;
    pred_[node] = arc_id;
    up_[node] = up;
    prev_sibling_[node] = -1;
    next_sibling_[node] = first_child_[parent];
    if (first_child_[parent] >= 0) prev_sibling_[first_child_[parent]] = node;
    first_child_[parent] = node;
  }

  void detach(int node) {
    const int p = parent_[node];
    if (prev_sibling_[node] >= 0) {
      next_sibling_[prev_sibling_[node]] = next_sibling_[node];
    } else {
      first_child_[p] = next_sibling_[node];
    }
    if (next_sibling_[node] >= 0) prev_sibling_[next_sibling_[node]] = prev_sibling_[node];
    prev_sibling_[node] = next_sibling_[node] = -1;
  }

  void northwest_corner(const std::vector<double> &a, const std::vector<double> &b) {
    int i = 0, j = 0;
    double ra = a[0], rb = b[0];
    // root: source 0; sink 0 hangs below it
    attach(K_, 0, arc(0, 0), false);
    in_tree_[arc(0, 0)] = 1;
    while (true) {
      const double x = std::max(0.0, std::min(ra, rb));
      flow_[arc(i, j)] = x;
      ra -= x;
      rb -= x;
      if (i == K_ - 1 && j == M_ - 1) break;
      bool down;
      if (i == K_ - 1) {
        down = false;
      } else if (j == M_ - 1) {
        down = true;
      } else {
        down = ra < rb;  // ties move right: the zero arc then points away from the root
      }
      if (down) {
        ++i;
        ra = a[i];
        attach(i, K_ + j, arc(i, j), true);
      } else {
        ++j;
        rb = b[j];
        attach(K_ + j, i, arc(i, j), false);
      }
      in_tree_[arc(i, j)] = 1;
    }
    recompute_potentials();
  }

  /// Potentials and depths from the tree by a walk from the root.
  void recompute_potentials() {
    std::vector<int> stack{0};
    pi_[0] = 0.0;
    depth_[0] = 0;
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      for (int c = first_child_[x]; c >= 0; c = next_sibling_[c]) {
        const double ce = cost_[pred_[c]];
        pi_[c] = up_[c] ? pi_[x] - ce : pi_[x] + ce;
        depth_[c] = depth_[x] + 1;
        stack.push_back(c);
      }
    }
  }

  int64_t block_search(int64_t block, int64_t &next) const {
    int64_t best = -1;
    double best_rc = -tolerance_;
    int64_t count = 0;
    for (int64_t scanned = 0; scanned < arcs_; ++scanned) {
      int64_t e = next + scanned;
      if (e >= arcs_) e -= arcs_;
      if (!in_tree_[e]) {
        const double rc = reduced_cost(e);
        if (rc < best_rc) {
          best_rc = rc;
          best = e;
        }
      }
      if (++count == block) {
        if (best >= 0) {
          next = e + 1 == arcs_ ? 0 : e + 1;
          return best;
        }
        count = 0;
      }
    }
    return best;
  }

  // Bland's rule: lowest index with negative reduced cost.
  int64_t first_eligible() const {
    for (int64_t e = 0; e < arcs_; ++e) {
      if (!in_tree_[e] && reduced_cost(e) < -tolerance_) return e;
    }
    return -1;
  }

  void pivot(int64_t entering) {
    const int first = source(entering), second = sink(entering);
    const double rc = reduced_cost(entering);

    int x = first, y = second;
    while (x != y) {
      if (depth_[x] > depth_[y]) {
        x = parent_[x];
      } else if (depth_[y] > depth_[x]) {
        y = parent_[y];
      } else {
        x = parent_[x];
        y = parent_[y];
      }
    }
    const int join = x;

    // Flow enters at `first`, runs to `second` along the new arc and back to
    // `first` through the join.
    constexpr double kInf = std::numeric_limits<double>::infinity();
    double delta = kInf;
    int leaving_node = -1;
    int side = 0;
    for (int u = first; u != join; u = parent_[u]) {
      const double d = up_[u] ? flow_[pred_[u]] : kInf;
      if (d < delta) {
        delta = d;
        leaving_node = u;
        side = 1;
      }
    }
    for (int u = second; u != join; u = parent_[u]) {
      const double d = up_[u] ? kInf : flow_[pred_[u]];
      if (d <= delta) {
        delta = d;
        leaving_node = u;
        side = 2;
      }
    }
    if (side == 0) throw std::logic_error("solve_emd: unbounded cycle");

    if (delta > 0.0) {
      flow_[entering] += delta;
      for (int u = first; u != join; u = parent_[u]) {
        flow_[pred_[u]] += up_[u] ? -delta : delta;
      }
      for (int u = second; u != join; u = parent_[u]) {
        flow_[pred_[u]] += up_[u] ? delta : -delta;
      }
      flow_[pred_[leaving_node]] = 0.0;
    }

    const int64_t leaving = pred_[leaving_node];
    in_tree_[leaving] = 0;
    in_tree_[entering] = 1;

    // Re-hang the subtree of leaving_node below the other end of the new arc,
    // reversing the path between them.
    const int u_in = side == 1 ? first : second;
    int new_parent = side == 1 ? second : first;
    int64_t new_pred = entering;
    bool new_up = side == 1;  // source -> sink seen from the source is "up"
    for (int u = u_in;;) {
      const int old_parent = parent_[u];
      const int64_t old_pred = pred_[u];
      const bool old_up = up_[u];
      detach(u);
      attach(u, new_parent, new_pred, new_up);
      if (u == leaving_node) break;
      new_parent = u;
      new_pred = old_pred;
      new_up = !old_up;
      u = old_parent;
    }

    const double shift = side == 1 ? -rc : rc;
    std::vector<int> &stack = scratch_;
    stack.assign(1, u_in);
    depth_[u_in] = depth_[parent_[u_in]] + 1;
    pi_[u_in] += shift;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int c = first_child_[v]; c >= 0; c = next_sibling_[c]) {
        pi_[c] += shift;
        depth_[c] = depth_[v] + 1;
        stack.push_back(c);
      }
    }
  }

  TransportPlan extract(size_t pivots) const {
    TransportPlan out;
    out.plan.setZero(K_, M_);
    out.potential_a.resize(K_);
    out.potential_b.resize(M_);
    for (int i = 0; i < K_; ++i) out.potential_a[i] = -pi_[i];
    for (int j = 0; j < M_; ++j) out.potential_b[j] = pi_[K_ + j];
    double cost = 0.0, min_rc = std::numeric_limits<double>::infinity();
    for (int i = 0; i < K_; ++i) {
      for (int j = 0; j < M_; ++j) {
        const int64_t e = arc(i, j);
        out.plan(i, j) = flow_[e];
        cost += flow_[e] * cost_[e];
        min_rc = std::min(min_rc, reduced_cost(e));
      }
    }
    out.cost = cost;
    out.min_reduced_cost = min_rc;
    out.pivots = pivots;
    return out;
  }

  int K_, M_, n_;
  int64_t arcs_;
  std::vector<double> cost_;
  std::vector<double> flow_;
  std::vector<char> in_tree_;
  std::vector<int> parent_;
  std::vector<int64_t> pred_;
  std::vector<char> up_;  // tree arc points from the node to its parent
  std::vector<int> depth_;
  std::vector<int> first_child_, next_sibling_, prev_sibling_;
  std::vector<double> pi_;
  std::vector<int> scratch_;
  double tolerance_ = 0.0;
};

inline void check_marginal(const std::vector<double> &w, const char *name) {
  if (w.empty()) throw InfeasibleMarginals(std::string("solve_emd: empty ") + name);
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw InfeasibleMarginals(std::string("solve_emd: negative or non-finite mass in ") +
                                name);
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw InfeasibleMarginals(std::string("solve_emd: ") + name + " sums to " +
                              std::to_string(sum));
  }
}

}  // namespace detail

/// Optimal coupling of two discrete probability vectors for the given cost.
/// Throws if the returned basis cannot be certified optimal.
inline TransportPlan solve_emd(const std::vector<double> &weights_a,
                               const std::vector<double> &weights_b,
                               const Eigen::MatrixXd &cost) {
  detail::check_marginal(weights_a, "first marginal");
  detail::check_marginal(weights_b, "second marginal");
  if (cost.rows() != static_cast<Eigen::Index>(weights_a.size()) ||
      cost.cols() != static_cast<Eigen::Index>(weights_b.size())) {
    throw std::invalid_argument("solve_emd: cost matrix shape does not match weights");
  }
  TransportPlan plan = detail::TransportSimplex(weights_a, weights_b, cost).solve();
  const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
  if (plan.min_reduced_cost < -1e-10 * scale) {
    throw std::runtime_error("solve_emd: optimality certificate failed (reduced cost " +
                             std::to_string(plan.min_reduced_cost) + ")");
  }
  return plan;
}

inline std::vector<double> uniform_weights(size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

/// Brute force over all permutations for uniform square problems (K <= 8).
inline double assignment_oracle(const Eigen::MatrixXd &cost) {
  const Eigen::Index n = cost.rows();
  if (n != cost.cols() || n < 1) {
    throw std::invalid_argument("assignment_oracle: need a non-empty square matrix");
  }
  if (n > 8) throw std::invalid_argument("assignment_oracle: refusing K > 8");
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) sum += cost(k, perm[static_cast<size_t>(k)]);
    best = std::min(best, sum);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

/// Squared 2-Wasserstein distance of two empirical measures on the mesh's
/// quadrature grid.
template <int M>
double wasserstein2_sq(const EmpiricalMeasure<M> &a, const EmpiricalMeasure<M> &b,
                       const Mesh &mesh) {
  a.validate();
  b.validate();
  const Eigen::MatrixXd cost = cost_matrix<M>(a.atoms, b.atoms, mesh);
  return std::max(0.0, solve_emd(a.weights, b.weights, cost).cost);
}

template <int M>
double wasserstein2(const EmpiricalMeasure<M> &a, const EmpiricalMeasure<M> &b,
                    const Mesh &mesh) {
  return std::sqrt(wasserstein2_sq(a, b, mesh));
}

}  // namespace statdg

#endif  // STATDG_TRANSPORT_HPP_
