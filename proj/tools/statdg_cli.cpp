// statdg: studies of the manufactured Euler ensemble and a standalone
// transport solver.
//
//   statdg run              --config c.json --out run.csv [--seed N] [--samples K]
//   statdg spatial-study    --config c.json --out h.csv
//   statdg stochastic-study --config c.json --out k.csv
//   statdg emd --cost C.csv --weights-a a.csv --weights-b b.csv --out plan.csv
//
// Failures exit nonzero with one line "error: <category>: <message>".

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "statdg/harness.hpp"

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kStateSpace = 3, kSolver = 4, kIo = 5,
                kTransport = 6 };

[[noreturn]] void fail(ExitCode code, const std::string &category, const std::string &msg) {
  std::string line = msg;
  for (char &c : line) {
    if (c == '\n') c = ' ';
  }
  std::cerr << "error: " << category << ": " << line << '\n';
  std::exit(code);
}

std::vector<std::vector<double>> read_csv_matrix(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception &) {
        throw std::invalid_argument(path + ": not a number: '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// Weights may be given as one row or one column.
std::vector<double> read_weights(const std::string &path) {
  std::vector<double> out;
  for (const auto &row : read_csv_matrix(path)) out.insert(out.end(), row.begin(), row.end());
  return out;
}

int run_emd(const std::string &cost_path, const std::string &a_path,
            const std::string &b_path, const std::string &out_path) {
  const auto rows = read_csv_matrix(cost_path);
  if (rows.empty()) throw std::invalid_argument(cost_path + ": empty cost matrix");
  Eigen::MatrixXd cost(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) {
      throw std::invalid_argument(cost_path + ": ragged cost matrix");
    }
    for (size_t j = 0; j < rows[i].size(); ++j) {
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  const statdg::TransportPlan plan =
      statdg::solve_emd(read_weights(a_path), read_weights(b_path), cost);

  std::ofstream file;
  std::ostream *out = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::binary);
    if (!file) throw std::ios_base::failure("cannot write " + out_path);
    out = &file;
  }
  *out << "cost," << statdg::format_real(plan.cost) << '\n';
  for (Eigen::Index i = 0; i < plan.plan.rows(); ++i) {
    for (Eigen::Index j = 0; j < plan.plan.cols(); ++j) {
      if (j) *out << ',';
      *out << statdg::format_real(plan.plan(i, j));
    }
    *out << '\n';
  }
  out->flush();
  if (!*out) throw std::ios_base::failure("write failed for " + out_path);
  return kOk;
}

void print_summary(const statdg::StudyResult &result) {
  std::cout << statdg::csv_header() << '\n';
  for (const auto &r : result.rows) std::cout << statdg::csv_row(r) << '\n';
  if (result.rows.size() < 2) return;
  auto show = [&](const char *name, double statdg::EstimatorReport::*field) {
    std::cout << "EOC " << name << ':';
    for (double e : result.eoc(field)) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " %.3f", e);
      std::cout << buf;
    }
    std::cout << '\n';
  };
  show("residual", &statdg::EstimatorReport::e_det);
  show("errorreconst", &statdg::EstimatorReport::e0_det);
  show("errorsample", &statdg::EstimatorReport::e0_stoch);
  show("error", &statdg::EstimatorReport::error);
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Statistical solutions of 1D conservation laws: RKDG ensembles, "
               "a posteriori estimates and Wasserstein errors"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  uint64_t seed = 0;
  size_t samples = 0;
  unsigned threads = 0;

  std::vector<CLI::App *> studies;
  for (const char *name : {"run", "spatial-study", "stochastic-study"}) {
    CLI::App *sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON experiment configuration");
    sub->add_option("--out", out_path, "CSV output path (overrides config)");
    sub->add_option("--seed", seed, "random seed (overrides config)");
    sub->add_option("--samples", samples, "sample count K (overrides config)");
    sub->add_option("--threads", threads, "worker threads, 0 = all cores");
    studies.push_back(sub);
  }
  std::string cost_path, a_path, b_path;
  CLI::App *emd = app.add_subcommand("emd", "optimal transport between two weight vectors");
  emd->add_option("--cost", cost_path, "cost matrix CSV (rows: first marginal)")->required();
  emd->add_option("--weights-a", a_path, "first marginal CSV")->required();
  emd->add_option("--weights-b", b_path, "second marginal CSV")->required();
  emd->add_option("--out", out_path, "output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (emd->parsed()) return run_emd(cost_path, a_path, b_path, out_path);

    CLI::App *chosen = nullptr;
    for (CLI::App *s : studies) {
      if (s->parsed()) chosen = s;
    }
    const statdg::StudyKind kind = statdg::parse_study_kind(chosen->get_name());
    statdg::ExperimentConfig config;
    config.study = kind;
    if (!config_path.empty()) config = statdg::load_config(config_path, config);
    if (config.study != kind) {
      throw statdg::ConfigError("config declares a different study than '" +
                                chosen->get_name() + "'");
    }
    if (chosen->count("--seed")) config.seed = seed;
    if (chosen->count("--threads")) config.threads = threads;
    if (chosen->count("--samples")) {
      config.samples = samples;
      if (kind == statdg::StudyKind::kStochastic) {
        throw statdg::ConfigError("--samples does not apply to a stochastic study; "
                                  "set samples_sweep in the config");
      }
    }
    if (chosen->count("--out")) config.output = out_path;
    for (const auto &w : config.validate()) std::cerr << "warning: " << w << '\n';

    const statdg::StudyResult result = statdg::run_study(
        config, [](const std::string &msg) { std::cerr << msg << '\n'; });
    if (!config.output.empty()) statdg::emit_csv(result, config.output);
    print_summary(result);
    return kOk;
  } catch (const statdg::ConfigError &e) {
    fail(kConfig, "config", e.what());
  } catch (const statdg::StateSpaceError &e) {
    fail(kStateSpace, "state-space", e.what());
  } catch (const statdg::SolverBlowUp &e) {
    fail(kSolver, "solver", e.what());
  } catch (const statdg::EnsembleError &e) {
    fail(kSolver, "solver", e.what());
  } catch (const statdg::InfeasibleMarginals &e) {
    fail(kTransport, "transport", e.what());
  } catch (const std::ios_base::failure &e) {
    fail(kIo, "io", e.what());
  } catch (const std::exception &e) {
    fail(kOther, "invalid-argument", e.what());
  }
}
