// End-to-end acceptance run. Prints one PASS/FAIL line per criterion with the
// measured values and exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "statdg/harness.hpp"

using namespace statdg;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string join(const std::vector<double> &v, const char *f = "%.3f") {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(f, v[i]);
  return out;
}

double mean(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

struct Outcome {
  int id;
  bool pass;
  std::string detail;
};

std::vector<Outcome> outcomes;

void report(int id, bool pass, const std::string &detail) {
  outcomes.push_back({id, pass, detail});
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
}

void progress(const std::string &msg) {
  std::fprintf(stderr, "  .. %s\n", msg.c_str());
}

// 1 -------------------------------------------------------------------------
void advection_order() {
  const auto start = Clock::now();
  std::vector<double> errors, scales;
  for (int cells : {16, 32, 64, 128}) {
    SolverConfig c;
    c.cells = cells;
    c.limiter_enabled = false;
    RkdgSolver<LinearAdvection> solver(LinearAdvection(1.0), c);
    DGState<1> u;
    solver.solve(l2_project<1>([](double x) { return StateVector<1>(std::sin(2 * std::numbers::pi * x)); },
                               Mesh::uniform(cells), 2),
                 [&](const StepRecord<1> &r) { u = r.end->state; });
    const QuadratureRule q = gauss_legendre(10);
    double sum = 0.0;
    for (int l = 0; l < cells; ++l) {
      for (int i = 0; i < q.size(); ++i) {
        const double x = u.mesh().map(l, q.nodes[i]);
        const double d = u.evaluate_reference(l, q.nodes[i])[0] -
                         std::sin(2 * std::numbers::pi * (x - 0.2));
        sum += 0.5 * u.mesh().width(l) * q.weights[i] * d * d;
      }
    }
    errors.push_back(std::sqrt(sum));
    scales.push_back(1.0 / cells);
  }
  const double elapsed = seconds_since(start);
  const auto eoc = compute_eoc(errors, scales);
  bool ok = elapsed < 10.0;
  for (double e : eoc) ok = ok && std::abs(e - 3.0) <= 0.25;
  report(1, ok, "advection L2 EOC [" + join(eoc) + "] (target 3 +- 0.25 each), " +
                    fmt("%.3f s", elapsed) + " (limit 10 s)");
}

// 7 -------------------------------------------------------------------------
void transport_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 5;
    Eigen::MatrixXd C(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) C(i, j) = uni(gen);
    const double emd = solve_emd(uniform_weights(n), uniform_weights(n), C).cost;
    worst = std::max(worst, std::abs(emd - assignment_oracle(C)));
  }
  const double elapsed = seconds_since(start);
  report(7, worst <= 1e-12 && elapsed < 5.0,
         "200 instances K = M in 2..6, max |emd - oracle| = " + fmt("%.2e", worst) +
             " (limit 1e-12), " + fmt("%.3f s", elapsed) + " (limit 5 s)");
}

// 8 -------------------------------------------------------------------------
void transport_metric() {
  std::mt19937_64 gen(77);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.05, 1.0);
  auto mesh = Mesh::uniform(8);
  double worst_sym = 0.0, worst_tri = -1e300, worst_marg = 0.0;
  auto random_measure = [&]() {
    const int n = 1 + static_cast<int>(gen() % 6);
    std::vector<DGState<1>> atoms;
    for (int k = 0; k < n; ++k) {
      DGState<1> u(mesh, 3);
      for (int l = 0; l < mesh->cells(); ++l)
        for (int m = 0; m <= 3; ++m) u.coeff(l, m)[0] = normal(gen) / (m + 1);
      atoms.push_back(u);
    }
    std::vector<double> w(static_cast<size_t>(n));
    double sum = 0.0;
    for (auto &x : w) sum += (x = uni(gen));
    for (auto &x : w) x /= sum;
    double rest = 1.0;
    for (int i = 0; i + 1 < n; ++i) rest -= w[static_cast<size_t>(i)];
    w.back() = rest;
    return std::make_pair(sample_dg_atoms<1>(atoms, *mesh), w);
  };
  auto w2 = [&](const auto &a, const auto &b) {
    const TransportPlan p = solve_emd(a.second, b.second, cost_matrix(a.first, b.first));
    for (Eigen::Index i = 0; i < p.plan.rows(); ++i) {
      worst_marg = std::max(worst_marg, std::abs(p.plan.row(i).sum() - a.second[static_cast<size_t>(i)]));
    }
    for (Eigen::Index j = 0; j < p.plan.cols(); ++j) {
      worst_marg = std::max(worst_marg, std::abs(p.plan.col(j).sum() - b.second[static_cast<size_t>(j)]));
    }
    worst_marg = std::max(worst_marg, std::max(0.0, -p.plan.minCoeff()));
    return std::sqrt(std::max(0.0, p.cost));
  };
  for (int trial = 0; trial < 100; ++trial) {
    const auto A = random_measure(), B = random_measure(), C = random_measure();
    const double ab = w2(A, B), ba = w2(B, A), bc = w2(B, C), ac = w2(A, C);
    worst_sym = std::max(worst_sym, std::abs(ab - ba));
    worst_tri = std::max(worst_tri, ac - ab - bc);
  }
  report(8, worst_sym <= 1e-9 && worst_tri <= 1e-9 && worst_marg <= 1e-10,
         "100 triples: max |W(A,B) - W(B,A)| = " + fmt("%.2e", worst_sym) +
             ", max W(A,C) - W(A,B) - W(B,C) = " + fmt("%.2e", worst_tri) +
             ", max marginal defect = " + fmt("%.2e", worst_marg));
}

// 10 ------------------------------------------------------------------------
void zero_perturbation() {
  ExperimentConfig c;
  c.cells = 16;
  c.solver.cells = 16;
  const SampleSet zeros = SampleSet::from_values(std::vector<double>(10, 0.0));
  EnsembleOptions o;
  o.threads = c.threads;
  const Ensemble<3> e = compute_ensemble(zeros, c.solver, o);
  const PrefixData d = prepare_prefixes(e, std::vector<double>(10, 0.0));
  const EstimatorReport r = assess_prefix(d, 10, c, e.s);
  report(10, r.e_det < 1e-18 && r.e0_det < 1e-24 && std::abs(r.e0_stoch) <= 1e-12,
         "xi = 0: e_det = " + fmt("%.2e", r.e_det) + " (< 1e-18), e0_det = " +
             fmt("%.2e", r.e0_det) + " (< 1e-24), e0_stoch = " + fmt("%.2e", r.e0_stoch) +
             " (|.| <= 1e-12)");
}

// 11 ------------------------------------------------------------------------
void conservation() {
  SolverConfig c;
  c.cells = 64;
  c.t_final = 100.0;
  RkdgSolver<Burgers> solver(Burgers(), c);
  auto u = l2_project<1>([](double x) { return StateVector<1>(0.5 + std::sin(2 * std::numbers::pi * x)); },
                         Mesh::uniform(64), 2);
  solver.limit(u);
  auto mass = [](const DGState<1> &v) {
    double m = 0.0;
    for (int l = 0; l < v.cells(); ++l) m += v.mesh().width(l) * v.mean(l)[0];
    return m;
  };
  const double m0 = mass(u);
  double drift = 0.0;
  for (int n = 0; n < 100; ++n) {
    const double dt = cfl_timestep(solver, u);
    u = ssp_rk3_step(solver, u, dt).first;
    drift = std::max(drift, std::abs(mass(u) - m0));
  }

  SolverConfig r;
  r.cells = 100;
  r.t_final = 0.4;
  r.m_tvb = 0.0;
  r.cfl = 0.5;
  r.flux = NumericalFlux::kLocalLaxFriedrichs;
  RkdgSolver<Burgers> riemann(Burgers(), r);
  auto tv = [](const DGState<1> &v) {
    double s = 0.0;
    for (int l = 0; l < v.cells(); ++l) s += std::abs(v.mean(v.mesh().next(l))[0] - v.mean(l)[0]);
    return s;
  };
  auto init = l2_project<1>([](double x) { return StateVector<1>(x > 0.2 && x < 0.6 ? 1.0 : -0.5); },
                            Mesh::uniform(100), 2);
  riemann.limit(init);
  double previous = tv(init), worst_increase = -1e300;
  size_t steps = 0;
  riemann.solve(init, [&](const StepRecord<1> &rec) {
    const double now = tv(rec.end->state);
    worst_increase = std::max(worst_increase, now - previous);
    previous = now;
    ++steps;
  });
  report(11, drift < 1e-12 && worst_increase <= 1e-12,
         "Burgers mass drift over 100 steps = " + fmt("%.2e", drift) +
             " (< 1e-12); Riemann data, M_tvb = 0, " + std::to_string(steps) +
             " steps, max TV increase of means = " + fmt("%.2e", worst_increase));
}

}  // namespace

int main() {
  std::printf("acceptance: one line per criterion\n");
  std::fflush(stdout);
  advection_order();
  transport_oracle();
  transport_metric();
  zero_perturbation();
  conservation();

  std::vector<EstimatorReport> all_rows;  // for criterion 9

  // 2, 3, 6: spatial study, K = 100, seed 1
  {
    ExperimentConfig c;
    c.study = StudyKind::kSpatial;
    c.samples = 100;
    c.seed = 1;
    c.cells_sweep = {16, 32, 64, 128};
    const auto start = Clock::now();
    const StudyResult r = run_spatial_study(c, progress);
    const double elapsed = seconds_since(start);
    all_rows.insert(all_rows.end(), r.rows.begin(), r.rows.end());
    const auto eoc0 = r.eoc(&EstimatorReport::e0_det);
    const auto eocd = r.eoc(&EstimatorReport::e_det);
    const double m0 = mean(eoc0), md = mean(eocd);
    report(2, m0 >= 5.4 && m0 <= 6.6 && elapsed < 180.0,
           "e0_det EOC [" + join(eoc0) + "], mean " + fmt("%.3f", m0) +
               " (target [5.4, 6.6]); values [" + join(r.column(&EstimatorReport::e0_det), "%.3e") +
               "]; study " + fmt("%.1f s", elapsed) + " (limit 180 s)");
    report(3, md >= 4.4 && md <= 5.6 && elapsed < 180.0,
           "e_det EOC [" + join(eocd) + "], mean " + fmt("%.3f", md) +
               " (target [4.4, 5.6]); values [" + join(r.column(&EstimatorReport::e_det), "%.3e") + "]");
    const auto stoch = r.column(&EstimatorReport::e0_stoch);
    const double lo = *std::min_element(stoch.begin(), stoch.end());
    const double hi = *std::max_element(stoch.begin(), stoch.end());
    const double variation = (hi - lo) / lo;
    report(6, variation < 0.01,
           "e0_stoch across h = 1/16..1/128: [" + join(stoch, "%.12e") + "], relative variation " +
               fmt("%.2e", variation) + " (< 1e-2)");
  }

  // 4: K = 100 vs K = 1000 at h = 1/32 (prefixes of one K = 1000 ensemble)
  {
    ExperimentConfig c;
    c.cells = 32;
    c.solver.cells = 32;
    c.seed = 1;
    c.samples = 1000;
    const auto start = Clock::now();
    const auto rows = run_pipeline(c, sample_initial(1000, c.seed), {100, 1000}, progress);
    const double elapsed = seconds_since(start);
    all_rows.insert(all_rows.end(), rows.begin(), rows.end());
    auto within3 = [](double a, double b) { return a > 0 && b > 0 && std::max(a / b, b / a) <= 3.0; };
    const bool ok = within3(rows[0].e_det, rows[1].e_det) &&
                    within3(rows[0].e0_det, rows[1].e0_det) && elapsed < 300.0;
    report(4, ok,
           "h = 1/32: e_det K=100 " + fmt("%.3e", rows[0].e_det) + " vs K=1000 " +
               fmt("%.3e", rows[1].e_det) + ", e0_det " + fmt("%.3e", rows[0].e0_det) + " vs " +
               fmt("%.3e", rows[1].e0_det) + " (factor <= 3); " + fmt("%.1f s", elapsed) +
               " (limit 300 s)");
  }

  // 5: stochastic study, 3 seeds
  {
    const std::vector<size_t> counts{4, 8, 16, 32, 64, 128, 256, 512};
    std::vector<double> averaged(counts.size(), 0.0);
    const auto start = Clock::now();
    for (uint64_t seed : {1, 2, 3}) {
      ExperimentConfig c;
      c.study = StudyKind::kStochastic;
      c.cells = 128;
      c.reference_samples = 2000;
      c.samples_sweep = counts;
      c.seed = seed;
      const StudyResult r = run_stochastic_study(c, progress);
      all_rows.insert(all_rows.end(), r.rows.begin(), r.rows.end());
      for (size_t i = 0; i < counts.size(); ++i) averaged[i] += r.rows[i].e0_stoch / 3.0;
    }
    const double elapsed = seconds_since(start);
    // least-squares slope of log e0_stoch against log K
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(counts.size());
    for (size_t i = 0; i < counts.size(); ++i) {
      const double x = std::log(static_cast<double>(counts[i])), y = std::log(averaged[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    report(5, slope >= -1.35 && slope <= -0.65 && elapsed < 600.0,
           "seed-averaged e0_stoch [" + join(averaged, "%.3e") + "] for K = 4..512, slope " +
               fmt("%.3f", slope) + " (target [-1.35, -0.65]); " + fmt("%.1f s", elapsed) +
               " (limit 600 s)");
  }

  // 9: reliability on every row of 2-5
  {
    size_t reliable = 0;
    double worst_gap = -1e300;  // log(error) - log(bound), should be <= 0
    for (const auto &r : all_rows) {
      if (r.reliable()) ++reliable;
      worst_gap = std::max(worst_gap, LogValue::of(r.error).log - r.total_bound.log);
    }
    report(9, reliable == all_rows.size(),
           std::to_string(reliable) + "/" + std::to_string(all_rows.size()) +
               " rows with error <= total_bound; max log(error / bound) = " + fmt("%.3e", worst_gap));
  }

  size_t failed = 0;
  for (const auto &o : outcomes) failed += o.pass ? 0 : 1;
  std::printf("acceptance: %zu/%zu criteria passed\n", outcomes.size() - failed, outcomes.size());
  return failed == 0 ? 0 : 1;
}
