#ifndef STATDG_ENSEMBLE_HPP_
#define STATDG_ENSEMBLE_HPP_

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "statdg/dg_space.hpp"
#include "statdg/errors.hpp"
#include "statdg/measure.hpp"
#include "statdg/physics.hpp"
#include "statdg/reconstruction.hpp"
#include "statdg/rkdg.hpp"

namespace statdg {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform(0,1) draw that depends only on (seed, stream, index).
inline double counter_uniform(uint64_t seed, uint64_t stream, uint64_t index) {
  const uint64_t key = splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL));
  const uint64_t bits = splitmix64(key ^ splitmix64(index));
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline constexpr uint64_t kSampleStream = 0;
inline constexpr uint64_t kReferenceStream = 1;

struct SampleSet {
  std::vector<double> xi;
  uint64_t seed = 0;
  std::vector<double> weights;

  size_t size() const { return xi.size(); }

  /// The first k samples, reweighted uniformly.
  SampleSet prefix(size_t k) const {
    if (k == 0 || k > size()) throw std::invalid_argument("SampleSet::prefix: bad count");
    SampleSet out{std::vector<double>(xi.begin(), xi.begin() + static_cast<long>(k)),
                  seed, {}};
    out.weights.assign(k, 1.0 / static_cast<double>(k));
    return out;
  }

  /// Explicit parameter values (e.g. all zero).
  static SampleSet from_values(std::vector<double> values, uint64_t seed = 0) {
    if (values.empty()) throw std::invalid_argument("SampleSet: no samples");
    SampleSet out{std::move(values), seed, {}};
    out.weights.assign(out.xi.size(), 1.0 / static_cast<double>(out.xi.size()));
    return out;
  }
};

/// K Monte-Carlo draws of xi ~ U(0,1); draw k does not depend on K.
inline SampleSet sample_initial(size_t K, uint64_t seed, uint64_t stream = kSampleStream) {
  if (K == 0) throw std::invalid_argument("sample_initial: K must be at least 1");
  std::vector<double> xi(K);
  for (size_t k = 0; k < K; ++k) xi[k] = counter_uniform(seed, stream, k);
  return SampleSet::from_values(std::move(xi), seed);
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0: hardware
/// concurrency). Exceptions are stored per index and not propagated.
template <typename F>
void parallel_for(size_t n, unsigned threads, F &&fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<size_t>(threads, n));
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto &th : pool) th.join();
}

/// Per-sample data kept after a solve; the trajectory itself is dropped
/// unless asked for.
template <int M>
struct SampleOutcome {
  double xi = 0.0;
  DGState<M> final_state;   // u_h(T)
  DGState<M> initial_recon; // u^st(0)
  DGState<M> final_recon;   // u^st(s)
  ResidualSummary<M> summary;
  size_t steps = 0;
  std::optional<SpaceTimeReconstruction<M>> reconstruction;
};

/// Solver failures of individual samples.
class EnsembleError : public std::runtime_error {
 public:
  EnsembleError(std::vector<size_t> failed, const std::string &first_message)
      : std::runtime_error(format(failed, first_message)), failed_(std::move(failed)) {}
  const std::vector<size_t> &failed() const { return failed_; }

 private:
  static std::string format(const std::vector<size_t> &failed, const std::string &msg) {
    std::string s = "ensemble: " + std::to_string(failed.size()) + " sample(s) failed [";
    for (size_t i = 0; i < failed.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(failed[i]);
    }
    return s + "]; first: " + msg;
  }
  std::vector<size_t> failed_;
};

struct EnsembleOptions {
  std::optional<double> s;  // estimator time, defaults to the final time
  bool keep_reconstructions = false;
  unsigned threads = 0;
};

template <int M>
struct Ensemble {
  SampleSet samples;
  std::vector<SampleOutcome<M>> outcomes;
  double s = 0.0;

  size_t size() const { return outcomes.size(); }

  /// Atoms u_h(T).
  EmpiricalMeasure<M> raw() const {
    std::vector<Field<M>> atoms;
    for (const auto &o : outcomes) atoms.push_back(as_field(o.final_state));
    return EmpiricalMeasure<M>{std::move(atoms), samples.weights};
  }

  /// Atoms u^st_k(t) for t = 0 or t = s; any t if trajectories were kept.
  EmpiricalMeasure<M> regularized(double t) const {
    std::vector<Field<M>> atoms;
    for (const auto &o : outcomes) {
      if (o.reconstruction) {
        atoms.push_back(as_field(o.reconstruction->slice(t)));
      } else if (t == 0.0) {
        atoms.push_back(as_field(o.initial_recon));
      } else if (t == s) {
        atoms.push_back(as_field(o.final_recon));
      } else {
        throw std::invalid_argument(
            "Ensemble::regularized: trajectory not kept for this time");
      }
    }
    return EmpiricalMeasure<M>{std::move(atoms), samples.weights};
  }

  std::vector<double> residual_norms_sq() const {
    std::vector<double> out;
    for (const auto &o : outcomes) out.push_back(o.summary.residual_sq);
    return out;
  }
};

/// Solves, reconstructs and integrates the residual of every sample.
/// `initial(xi)` returns the initial field of sample xi.
template <ConservationLaw S, typename InitialData>
Ensemble<S::kComponents> compute_ensemble(const S &sys, InitialData &&initial,
                                          const SampleSet &samples,
                                          const SolverConfig &config,
                                          const EnsembleOptions &options = {}) {
  constexpr int M = S::kComponents;
  config.validate();
  if (samples.size() == 0) throw std::invalid_argument("compute_ensemble: no samples");
  const double s = options.s.value_or(config.t_final);
  if (!(s > 0.0 && s <= config.t_final)) {
    throw std::invalid_argument("compute_ensemble: evaluation time outside (0, T]");
  }
  auto mesh = Mesh::uniform(config.cells);

  Ensemble<M> out;
  out.samples = samples;
  out.s = s;
  out.outcomes.resize(samples.size());
  std::vector<std::string> errors(samples.size());

  parallel_for(samples.size(), options.threads, [&](size_t k) {
    try {
      const double xi = samples.xi[k];
      RkdgSolver<S> solver(sys, config, xi);
      ResidualIntegrator<S> integrator(sys, config.degree + 1, xi);
      SampleOutcome<M> o;
      o.xi = xi;
      std::vector<SpaceTimeSlab<M>> kept;
      bool first = true;
      solver.solve(l2_project<M>(initial(xi), mesh, config.degree),
                   [&](const StepRecord<M> &record) {
                     SpaceTimeSlab<M> slab = make_slab(record);
                     if (first) {
                       o.initial_recon = slab.value0;
                       first = false;
                     }
                     integrator.accumulate(slab, s, o.summary);
                     const double t_end = record.end->state.time();
                     if (slab.t0 < s && s <= t_end) {
                       o.final_recon = s == t_end ? slab.value1 : slab.slice(s);
                     }
                     o.final_state = record.end->state;
                     ++o.steps;
                     if (options.keep_reconstructions) kept.push_back(std::move(slab));
                   });
      if (options.keep_reconstructions) o.reconstruction.emplace(std::move(kept));
      out.outcomes[k] = std::move(o);
    } catch (const std::exception &e) {
      errors[k] = e.what();
      if (errors[k].empty()) errors[k] = "unknown failure";
    }
  });

  std::vector<size_t> failed;
  for (size_t k = 0; k < errors.size(); ++k) {
    if (!errors[k].empty()) failed.push_back(k);
  }
  if (!failed.empty()) throw EnsembleError(failed, errors[failed.front()]);
  return out;
}

/// The manufactured Euler problem.
inline Ensemble<3> compute_ensemble(const SampleSet &samples, const SolverConfig &config,
                                    const EnsembleOptions &options = {}) {
  return compute_ensemble(
      Euler(true),
      [](double xi) {
        return [xi](double x) { return manufactured_solution(0.0, x, xi); };
      },
      samples, config, options);
}

/// Exact manufactured solution fields at time t for the parameters in `samples`.
inline std::vector<Field<3>> manufactured_atoms(const std::vector<double> &xi, double t) {
  std::vector<Field<3>> atoms;
  atoms.reserve(xi.size());
  for (double x : xi) {
    atoms.push_back([x, t](double y) { return manufactured_solution(t, y, x); });
  }
  return atoms;
}

/// M analytic atoms of the exact measure at time t, drawn from their own stream.
inline EmpiricalMeasure<3> reference_measure(size_t M, uint64_t seed, double t,
                                             uint64_t stream = kReferenceStream) {
  const SampleSet draws = sample_initial(M, seed, stream);
  return EmpiricalMeasure<3>{manufactured_atoms(draws.xi, t), draws.weights};
}

}  // namespace statdg

#endif  // STATDG_ENSEMBLE_HPP_
