#ifndef STATDG_HARNESS_HPP_
#define STATDG_HARNESS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "statdg/ensemble.hpp"
#include "statdg/estimator.hpp"
#include "statdg/measure.hpp"
#include "statdg/rkdg.hpp"
#include "statdg/transport.hpp"

namespace statdg {

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class StudyKind { kRun, kSpatial, kStochastic };

inline StudyKind parse_study_kind(const std::string &s) {
  if (s == "run") return StudyKind::kRun;
  if (s == "spatial-study") return StudyKind::kSpatial;
  if (s == "stochastic-study") return StudyKind::kStochastic;
  throw ConfigError("unknown study '" + s + "'");
}

inline NumericalFlux parse_flux(const std::string &s) {
  if (s == "lax-wendroff") return NumericalFlux::kLaxWendroff;
  if (s == "local-lax-friedrichs") return NumericalFlux::kLocalLaxFriedrichs;
  throw ConfigError("unknown flux '" + s + "'");
}

struct ExperimentConfig {
  StudyKind study = StudyKind::kRun;
  int cells = 128;                                // run, stochastic study
  std::vector<int> cells_sweep{16, 32, 64, 128};  // spatial study
  size_t samples = 100;                           // run, spatial study
  std::vector<size_t> samples_sweep{2, 4, 8, 16, 32, 64, 128, 256, 512};
  size_t reference_samples = 2000;
  uint64_t seed = 1;
  SolverConfig solver;
  double box_margin = 0.1;
  double constants_safety = 1.1;
  int constants_grid = 21;
  unsigned threads = 0;
  std::string output;

  size_t max_samples() const {
    return study == StudyKind::kStochastic ? samples_sweep.back() : samples;
  }

  /// Hard errors for unusable settings; the returned list holds soft
  /// warnings (a reference that does not dominate the sample count).
  std::vector<std::string> validate() const {
    try {
      solver.validate();
    } catch (const std::invalid_argument &e) {
      throw ConfigError(e.what());
    }
    auto check_sweep = [](const auto &sweep, const char *name) {
      if (sweep.empty()) throw ConfigError(std::string(name) + " is empty");
      for (size_t i = 1; i < sweep.size(); ++i) {
        if (!(sweep[i] > sweep[i - 1])) {
          throw ConfigError(std::string(name) + " must be strictly increasing");
        }
      }
    };
    if (study == StudyKind::kSpatial) {
      check_sweep(cells_sweep, "cells_sweep");
      if (cells_sweep.front() < 4) throw ConfigError("cells_sweep entries must be >= 4");
    }
    if (study == StudyKind::kStochastic) {
      check_sweep(samples_sweep, "samples_sweep");
      if (samples_sweep.front() < 1) throw ConfigError("samples_sweep entries must be >= 1");
    }
    if (samples < 1) throw ConfigError("samples must be >= 1");
    if (reference_samples < 1) throw ConfigError("reference_samples must be >= 1");
    if (!(box_margin >= 0.0)) throw ConfigError("box_margin must be >= 0");
    if (!(constants_safety >= 1.0)) throw ConfigError("constants_safety must be >= 1");
    if (constants_grid < 2) throw ConfigError("constants_grid must be >= 2");
    std::vector<std::string> warnings;
    if (reference_samples < 4 * max_samples()) {
      warnings.push_back("reference_samples (" + std::to_string(reference_samples) +
                         ") is below 4 x samples (" + std::to_string(max_samples()) +
                         "); the reference floor may show in the error column");
    }
    return warnings;
  }
};

/// Reads a flat JSON object. Unknown keys are errors.
inline ExperimentConfig parse_config(const nlohmann::json &j,
                                     ExperimentConfig base = ExperimentConfig()) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c = std::move(base);
  try {
    for (const auto &[key, value] : j.items()) {
      if (key == "study") c.study = parse_study_kind(value.get<std::string>());
      else if (key == "cells") c.cells = value.get<int>();
      else if (key == "cells_sweep") c.cells_sweep = value.get<std::vector<int>>();
      else if (key == "samples") c.samples = value.get<size_t>();
      else if (key == "samples_sweep") c.samples_sweep = value.get<std::vector<size_t>>();
      else if (key == "reference_samples") c.reference_samples = value.get<size_t>();
      else if (key == "seed") c.seed = value.get<uint64_t>();
      else if (key == "degree") c.solver.degree = value.get<int>();
      else if (key == "cfl") c.solver.cfl = value.get<double>();
      else if (key == "t_final") c.solver.t_final = value.get<double>();
      else if (key == "flux") c.solver.flux = parse_flux(value.get<std::string>());
      else if (key == "m_tvb") c.solver.m_tvb = value.get<double>();
      else if (key == "limiter_enabled") c.solver.limiter_enabled = value.get<bool>();
      else if (key == "box_margin") c.box_margin = value.get<double>();
      else if (key == "constants_safety") c.constants_safety = value.get<double>();
      else if (key == "constants_grid") c.constants_grid = value.get<int>();
      else if (key == "threads") c.threads = value.get<unsigned>();
      else if (key == "output") c.output = value.get<std::string>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.solver.cells = c.cells;
  return c;
}

inline ExperimentConfig load_config(const std::string &path,
                                    ExperimentConfig base = ExperimentConfig()) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  return parse_config(j, std::move(base));
}

/// eoc_i = log(v_i / v_{i+1}) / log(s_i / s_{i+1}); NaN where undefined.
inline std::vector<double> compute_eoc(const std::vector<double> &values,
                                       const std::vector<double> &scales) {
  if (values.size() != scales.size() || values.size() < 2) {
    throw std::invalid_argument("compute_eoc: need two or more paired values");
  }
  std::vector<double> out;
  for (size_t i = 0; i + 1 < values.size(); ++i) {
    const double v0 = values[i], v1 = values[i + 1];
    const double s0 = scales[i], s1 = scales[i + 1];
    if (!(v0 > 0.0 && v1 > 0.0 && s0 > 0.0 && s1 > 0.0) || s0 == s1) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      out.push_back(std::log(v0 / v1) / std::log(s0 / s1));
    }
  }
  return out;
}

struct StudyResult {
  std::vector<EstimatorReport> rows;
  bool sweep_in_samples = false;  // otherwise in h

  std::vector<double> column(double EstimatorReport::*field) const {
    std::vector<double> out;
    for (const auto &r : rows) out.push_back(r.*field);
    return out;
  }
  std::vector<double> sweep() const {
    std::vector<double> out;
    for (const auto &r : rows) {
      out.push_back(sweep_in_samples ? static_cast<double>(r.samples) : r.h);
    }
    return out;
  }
  std::vector<double> eoc(double EstimatorReport::*field) const {
    if (rows.size() < 2) return {};
    return compute_eoc(column(field), sweep());
  }
};

/// Data shared by every prefix evaluation of one ensemble.
struct PrefixData {
  std::vector<double> residuals;        // int |R|^2 per sample
  std::vector<double> initial_gap;      // ||u_k(0) - u^st_k(0)||^2
  std::vector<double> lipschitz;
  std::vector<ResidualSummary<3>> summaries;
  Eigen::MatrixXd initial_cost;         // samples x reference at t = 0
  Eigen::MatrixXd pair_cost;            // samples x samples at t = 0
  Eigen::MatrixXd final_cost_density;   // samples x reference at s
  Eigen::MatrixXd final_cost_full;
};

inline SampledAtoms component_rows(const SampledAtoms &atoms, int component) {
  const Eigen::Index points = atoms.columns.rows() / atoms.components;
  SampledAtoms out;
  out.components = 1;
  out.columns.resize(points, atoms.columns.cols());
  for (Eigen::Index q = 0; q < points; ++q) {
    out.columns.row(q) = atoms.columns.row(q * atoms.components + component);
  }
  return out;
}

inline PrefixData prepare_prefixes(const Ensemble<3> &ensemble,
                                   const std::vector<double> &reference_xi) {
  const Mesh &mesh = ensemble.outcomes.front().final_state.mesh();
  PrefixData d;
  std::vector<DGState<3>> initial_recon, final_recon;
  for (const auto &o : ensemble.outcomes) {
    d.residuals.push_back(o.summary.residual_sq);
    d.lipschitz.push_back(o.summary.lipschitz);
    d.summaries.push_back(o.summary);
    initial_recon.push_back(o.initial_recon);
    final_recon.push_back(o.final_recon);
  }
  const SampledAtoms exact0 = sample_atoms<3>(manufactured_atoms(ensemble.samples.xi, 0.0), mesh);
  const SampledAtoms recon0 = sample_dg_atoms<3>(initial_recon, mesh);
  d.initial_gap = paired_squared_distances(exact0, recon0);
  d.pair_cost = cost_matrix(exact0, exact0);
  {
    const SampledAtoms ref0 = sample_atoms<3>(manufactured_atoms(reference_xi, 0.0), mesh);
    d.initial_cost = cost_matrix(exact0, ref0);
  }
  const SampledAtoms reconT = sample_dg_atoms<3>(final_recon, mesh);
  const SampledAtoms refT =
      sample_atoms<3>(manufactured_atoms(reference_xi, ensemble.s), mesh);
  d.final_cost_full = cost_matrix(reconT, refT);
  d.final_cost_density = cost_matrix(component_rows(reconT, 0), component_rows(refT, 0));
  return d;
}

/// Estimator report of the first `count` samples.
inline EstimatorReport assess_prefix(const PrefixData &d, size_t count,
                                     const ExperimentConfig &config, double s) {
  if (count == 0 || count > d.residuals.size()) {
    throw std::invalid_argument("assess_prefix: bad sample count");
  }
  const auto K = static_cast<Eigen::Index>(count);
  const std::vector<double> w = uniform_weights(count);
  const std::vector<double> w_ref =
      uniform_weights(static_cast<size_t>(d.initial_cost.cols()));

  EstimatorReport r;
  r.s = s;
  r.h = 1.0 / config.solver.cells;
  r.samples = count;
  r.reference_samples = static_cast<size_t>(d.initial_cost.cols());
  r.seed = config.seed;
  r.degree = config.solver.degree;

  r.e_det = e_det(std::vector<double>(d.residuals.begin(), d.residuals.begin() + K), w);
  const double stoch =
      std::max(0.0, solve_emd(w, w_ref, d.initial_cost.topRows(K)).cost);
  const InitialSplit split = initial_split(
      stoch, std::vector<double>(d.initial_gap.begin(), d.initial_gap.begin() + K), w,
      d.pair_cost.topLeftCorner(K, K));
  r.e0_stoch = split.e0_stoch;
  r.e0_det = split.e0_det;
  r.w2_initial_sq = split.w2_initial_sq;
  r.pairing_condition = split.pairing_condition;

  std::vector<const ResidualSummary<3> *> summaries;
  for (Eigen::Index k = 0; k < K; ++k) {
    summaries.push_back(&d.summaries[static_cast<size_t>(k)]);
  }
  const StateBox<3> box = state_box<3>(summaries, config.box_margin);
  const Constants c = estimate_constants(box, Euler(true), config.constants_grid,
                                         config.constants_safety);
  r.A = c.A;
  r.B = c.B;
  r.L = *std::max_element(d.lipschitz.begin(), d.lipschitz.begin() + K);
  r.total_bound = total_bound(r.e_det, r.w2_initial_sq, r.A, r.B, r.L, s);

  r.error = std::max(0.0, solve_emd(w, w_ref, d.final_cost_density.topRows(K)).cost);
  r.error_full = std::max(0.0, solve_emd(w, w_ref, d.final_cost_full.topRows(K)).cost);
  return r;
}

using ProgressFn = std::function<void(const std::string &)>;

/// Manufactured Euler pipeline on one mesh for the given sample counts
/// (prefixes of one ensemble of the largest count).
inline std::vector<EstimatorReport> run_pipeline(const ExperimentConfig &config,
                                                 const SampleSet &samples,
                                                 const std::vector<size_t> &counts,
                                                 const ProgressFn &progress = {}) {
  EnsembleOptions options;
  options.threads = config.threads;
  const Ensemble<3> ensemble = compute_ensemble(samples, config.solver, options);
  const SampleSet reference = sample_initial(config.reference_samples, config.seed,
                                             kReferenceStream);
  const PrefixData data = prepare_prefixes(ensemble, reference.xi);
  std::vector<EstimatorReport> rows;
  for (size_t count : counts) {
    rows.push_back(assess_prefix(data, count, config, ensemble.s));
    if (progress) {
      progress("cells " + std::to_string(config.solver.cells) + ", samples " +
               std::to_string(count) + " done");
    }
  }
  return rows;
}

inline StudyResult run_single(const ExperimentConfig &config, const ProgressFn &progress = {}) {
  ExperimentConfig c = config;
  c.solver.cells = c.cells;
  StudyResult out;
  out.rows = run_pipeline(c, sample_initial(c.samples, c.seed), {c.samples}, progress);
  return out;
}

/// Fixed samples, refined meshes.
inline StudyResult run_spatial_study(const ExperimentConfig &config,
                                     const ProgressFn &progress = {}) {
  StudyResult out;
  const SampleSet samples = sample_initial(config.samples, config.seed);
  for (int cells : config.cells_sweep) {
    ExperimentConfig c = config;
    c.cells = cells;
    c.solver.cells = cells;
    auto rows = run_pipeline(c, samples, {config.samples}, progress);
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  }
  return out;
}

/// Fixed mesh, growing sample counts; one ensemble of the largest count is
/// solved and its prefixes evaluated.
inline StudyResult run_stochastic_study(const ExperimentConfig &config,
                                        const ProgressFn &progress = {}) {
  ExperimentConfig c = config;
  c.solver.cells = c.cells;
  StudyResult out;
  out.sweep_in_samples = true;
  out.rows = run_pipeline(c, sample_initial(c.samples_sweep.back(), c.seed),
                          c.samples_sweep, progress);
  return out;
}

inline StudyResult run_study(const ExperimentConfig &config, const ProgressFn &progress = {}) {
  switch (config.study) {
    case StudyKind::kSpatial: return run_spatial_study(config, progress);
    case StudyKind::kStochastic: return run_stochastic_study(config, progress);
    case StudyKind::kRun: break;
  }
  return run_single(config, progress);
}

inline const char *csv_header() {
  return "h,error,residual,errorsample,errorreconst,A,B,L,total_bound,seed,samples,"
         "error_full";
}

inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.14e", x);
  return buf;
}

inline std::string csv_row(const EstimatorReport &r) {
  std::ostringstream os;
  os << format_real(r.h) << ',' << format_real(r.error) << ',' << format_real(r.e_det)
     << ',' << format_real(r.e0_stoch) << ',' << format_real(r.e0_det) << ','
     << format_real(r.A) << ',' << format_real(r.B) << ',' << format_real(r.L) << ','
     << r.total_bound.scientific(15) << ',' << r.seed << ',' << r.samples << ','
     << format_real(r.error_full);
  return os.str();
}

/// Inverse of csv_row for the emitted columns.
inline EstimatorReport parse_csv_row(const std::string &line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
  if (cells.size() != 12) {
    throw std::invalid_argument("parse_csv_row: expected 12 columns, got " +
                                std::to_string(cells.size()));
  }
  EstimatorReport r;
  r.h = std::stod(cells[0]);
  r.error = std::stod(cells[1]);
  r.e_det = std::stod(cells[2]);
  r.e0_stoch = std::stod(cells[3]);
  r.e0_det = std::stod(cells[4]);
  r.A = std::stod(cells[5]);
  r.B = std::stod(cells[6]);
  r.L = std::stod(cells[7]);
  r.total_bound = LogValue::parse(cells[8]);
  r.seed = std::stoull(cells[9]);
  r.samples = std::stoull(cells[10]);
  r.error_full = std::stod(cells[11]);
  return r;
}

inline void write_csv(const StudyResult &result, std::ostream &out) {
  out << csv_header() << '\n';
  for (const auto &r : result.rows) out << csv_row(r) << '\n';
}

inline void emit_csv(const StudyResult &result, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path);
  write_csv(result, out);
  out.flush();
  if (!out) throw std::ios_base::failure("write failed for " + path);
}

}  // namespace statdg

#endif  // STATDG_HARNESS_HPP_
