#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

#include "statdg/physics.hpp"

using namespace statdg;

namespace {

EulerState from_primitive(double rho, double vel, double p) {
  return EulerState(rho, rho * vel, p / (kAdiabaticIndex - 1.0) + 0.5 * rho * vel * vel);
}

std::vector<EulerState> random_states(int n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> rho(0.5, 3.0), vel(-2.0, 2.0), p(0.2, 3.0);
  std::vector<EulerState> out;
  for (int i = 0; i < n; ++i) out.push_back(from_primitive(rho(gen), vel(gen), p(gen)));
  return out;
}

EulerState unit(int i) {
  EulerState e = EulerState::Zero();
  e[i] = 1.0;
  return e;
}

}  // namespace

TEST(EulerPressure, Examples) {
  EXPECT_NEAR(euler_pressure(EulerState(1, 0, 1)), 0.4, 1e-15);
  EXPECT_NEAR(euler_pressure(EulerState(2, 0, 2)), 0.8, 1e-15);
  EXPECT_THROW(euler_pressure(EulerState(1, 1, 0.5)), StateSpaceError);
  EXPECT_THROW(euler_pressure(EulerState(-1, 0, 1)), StateSpaceError);
}

TEST(EulerPressure, ErrorCarriesState) {
  try {
    euler_pressure(EulerState(1, 1, 0.5));
    FAIL();
  } catch (const StateSpaceError &e) {
    ASSERT_EQ(e.state().size(), 3u);
    EXPECT_EQ(e.state()[2], 0.5);
  }
}

TEST(EulerFlux, Examples) {
  EXPECT_NEAR((euler_flux(EulerState(1, 0, 1)) - EulerState(0, 0.4, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((euler_flux(EulerState(1, 1, 2)) - EulerState(1, 1.6, 2.6)).norm(), 0.0, 1e-14);
}

TEST(EulerWaveSpeed, Examples) {
  EXPECT_NEAR(euler_wave_speed(EulerState(1, 0, 1)), std::sqrt(0.56), 1e-14);
  EXPECT_NEAR(euler_wave_speed(EulerState(1, 1, 2)), 1 + std::sqrt(1.4 * 0.6), 1e-14);
  EXPECT_DOUBLE_EQ(euler_wave_speed(EulerState(1, 1, 2)), euler_wave_speed(EulerState(1, -1, 2)));
}

TEST(EulerWaveSpeed, IsSpectralRadius) {
  const Euler sys;
  for (const auto &u : random_states(50, 3)) {
    Eigen::EigenSolver<StateMatrix<3>> eig(sys.flux_jacobian(u));
    const double rho = eig.eigenvalues().cwiseAbs().maxCoeff();
    EXPECT_NEAR(sys.wave_speed(u), rho, 1e-10 * rho);
  }
}

TEST(EulerEntropy, GradientMatchesFiniteDifferences) {
  const EulerState u(1, 0.3, 1.5);
  const EntropyPair pair = euler_entropy_pair(u);
  const double step = 1e-6;
  for (int i = 0; i < 3; ++i) {
    const double fd = (euler_entropy_pair(u + step * unit(i)).eta -
                       euler_entropy_pair(u - step * unit(i)).eta) / (2 * step);
    EXPECT_NEAR(pair.gradient[i], fd, 1e-6);
  }
}

TEST(EulerEntropy, HessianPositiveDefinite) {
  const Euler sys;
  const StateMatrix<3> H = sys.entropy_hessian(EulerState(1, 0, 1));
  EXPECT_NEAR((H - H.transpose()).norm(), 0.0, 1e-12);
  Eigen::SelfAdjointEigenSolver<StateMatrix<3>> eig(H);
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
  for (const auto &u : random_states(100, 4)) {
    const StateMatrix<3> Hu = sys.entropy_hessian(u);
    EXPECT_NEAR((Hu - Hu.transpose()).norm(), 0.0, 1e-10 * Hu.norm());
    Eigen::SelfAdjointEigenSolver<StateMatrix<3>> e(Hu);
    EXPECT_GT(e.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(EulerEntropy, HessianMatchesFiniteDifferencesOfGradient) {
  const Euler sys;
  const double step = 1e-6;
  for (const auto &u : random_states(100, 5)) {
    const StateMatrix<3> H = sys.entropy_hessian(u);
    for (int j = 0; j < 3; ++j) {
      const EulerState fd = (sys.entropy_gradient(u + step * unit(j)) -
                             sys.entropy_gradient(u - step * unit(j))) / (2 * step);
      EXPECT_NEAR((H.col(j) - fd).norm(), 0.0, 1e-5 * std::max(1.0, H.norm()));
    }
  }
}

TEST(EulerEntropy, FluxCompatibility) {
  const Euler sys;
  const double step = 1e-6;
  for (const auto &u : random_states(100, 6)) {
    const EulerState lhs_row = sys.flux_jacobian(u).transpose() * sys.entropy_gradient(u);
    for (int i = 0; i < 3; ++i) {
      const double dq = (sys.entropy_flux(u + step * unit(i)) -
                         sys.entropy_flux(u - step * unit(i))) / (2 * step);
      EXPECT_NEAR(dq, lhs_row[i], 1e-6 * std::max(1.0, std::abs(dq)));
    }
  }
}

TEST(EulerFlux, JacobianMatchesFiniteDifferences) {
  const Euler sys;
  const double step = 1e-6;
  for (const auto &u : random_states(100, 7)) {
    const StateMatrix<3> J = sys.flux_jacobian(u);
    for (int j = 0; j < 3; ++j) {
      const EulerState fd = (sys.flux(u + step * unit(j)) - sys.flux(u - step * unit(j))) / (2 * step);
      EXPECT_NEAR((J.col(j) - fd).norm(), 0.0, 1e-6 * std::max(1.0, J.norm()));
    }
  }
}

TEST(EulerFlux, HessianMatchesFiniteDifferencesOfJacobian) {
  const Euler sys;
  const double step = 1e-6;
  for (const auto &u : random_states(30, 8)) {
    for (int i = 0; i < 3; ++i) {
      const StateMatrix<3> H = sys.flux_hessian(u, i);
      for (int j = 0; j < 3; ++j) {
        const EulerState fd = (sys.flux_jacobian(u + step * unit(j)).row(i).transpose() -
                               sys.flux_jacobian(u - step * unit(j)).row(i).transpose()) /
                              (2 * step);
        EXPECT_NEAR((H.col(j) - fd).norm(), 0.0, 1e-5 * std::max(1.0, H.norm()));
      }
    }
  }
}

TEST(EulerEigenbasis, Diagonalizes) {
  const Euler sys;
  for (const auto &u : random_states(20, 9)) {
    const StateMatrix<3> R = sys.right_eigenvectors(u);
    const StateMatrix<3> D = R.inverse() * sys.flux_jacobian(u) * R;
    const double off = D.norm() - D.diagonal().norm();
    EXPECT_LT(std::abs(off), 1e-9 * D.norm());
  }
}

TEST(RelativeEntropy, VanishesOnDiagonal) {
  const Euler sys;
  for (const auto &u : random_states(10, 10)) {
    EXPECT_NEAR(relative_entropy(sys, u, u), 0.0, 1e-14);
    EXPECT_NEAR(relative_flux(sys, u, u).norm(), 0.0, 1e-14);
  }
}

TEST(RelativeEntropy, PositiveOffDiagonal) {
  const Euler sys;
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> rho(1.0, 2.0), vel(-1.0, 1.0), p(0.5, 1.5);
  for (int i = 0; i < 100; ++i) {
    // convex box in primitive variables maps to admissible conservative states
    const EulerState u = from_primitive(rho(gen), vel(gen), p(gen));
    const EulerState v = from_primitive(rho(gen), vel(gen), p(gen));
    EXPECT_GT(relative_entropy(sys, u, v), 0.0);
  }
}

TEST(RelativeEntropy, QuadraticAsStatesMerge) {
  const Euler sys;
  const EulerState v = from_primitive(1.3, 0.2, 0.9);
  const EulerState dir = EulerState(0.3, -0.2, 0.5).normalized();
  const double limit = 0.5 * dir.dot(sys.entropy_hessian(v) * dir);
  for (double eps : {1e-2, 1e-3}) {
    const double ratio = relative_entropy(sys, EulerState(v + eps * dir), v) / (eps * eps);
    EXPECT_NEAR(ratio, limit, 0.05 * limit);
  }
}

TEST(RelativeEntropy, InadmissibleRejected) {
  const Euler sys;
  EXPECT_THROW(relative_entropy(sys, EulerState(1, 1, 0.5), EulerState(1, 0, 1)), StateSpaceError);
}

TEST(Manufactured, Examples) {
  const EulerState u = manufactured_solution(0, 0, 1);
  EXPECT_NEAR(u[0], 2.2, 1e-14);
  EXPECT_NEAR(u[1], 2.2, 1e-14);
  EXPECT_NEAR(u[2], 4.84, 1e-13);
  for (double x : {0.0, 0.3, 0.71}) {
    EXPECT_NEAR((manufactured_solution(0.13, x, 0.0) - EulerState(2, 2, 4)).norm(), 0.0, 1e-15);
  }
}

TEST(Manufactured, PeriodicTravelingPhase) {
  for (double t : {0.0, 0.05, 0.2}) {
    for (double x : {0.1, 0.4, 0.9}) {
      const EulerState u = manufactured_solution(t, x, 0.7);
      EXPECT_NEAR((u - manufactured_solution(t, x + 1.0, 0.7)).norm(), 0.0, 1e-12);
      double shifted = x - t;
      shifted -= std::floor(shifted);
      EXPECT_NEAR((u - manufactured_solution(0.0, shifted, 0.7)).norm(), 0.0, 1e-12);
    }
  }
}

TEST(Manufactured, AdmissibleOverParameterRange) {
  for (int it = 0; it <= 10; ++it) {
    const double xi = it / 10.0;
    for (int i = 0; i < 100; ++i) {
      for (int j = 0; j < 100; ++j) {
        const EulerState u = manufactured_solution(0.2 * i / 99.0, j / 99.0, xi);
        ASSERT_GE(u[0], 1.8 - 1e-14);
        ASSERT_GT(euler_pressure(u), 0.0);
      }
    }
  }
}

TEST(ManufacturedSource, ZeroWithoutPerturbation) {
  EXPECT_NEAR(manufactured_source(0.1, 0.3, 0.0).norm(), 0.0, 1e-15);
}

TEST(ManufacturedSource, MatchesFiniteDifferences) {
  const double step = 1e-6;
  auto fd_source = [&](double t, double x, double xi) {
    const EulerState ut = (manufactured_solution(t + step, x, xi) -
                           manufactured_solution(t - step, x, xi)) / (2 * step);
    const EulerState fx = (euler_flux(manufactured_solution(t, x + step, xi)) -
                           euler_flux(manufactured_solution(t, x - step, xi))) / (2 * step);
    return EulerState(ut + fx);
  };
  EXPECT_NEAR((manufactured_source(0, 0.1, 0.5) - fd_source(0, 0.1, 0.5)).norm(), 0.0, 1e-5);
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const double t = 0.2 * uni(gen), x = uni(gen), xi = uni(gen);
    const EulerState q = manufactured_source(t, x, xi);
    EXPECT_NEAR((q - fd_source(t, x, xi)).norm(), 0.0, 1e-5);
    // first component by hand: d_t rho + d_x m
    const double k = 6 * std::numbers::pi, a = 0.2 * xi, ph = k * (x - t);
    const double rho = 2 + a * std::cos(ph), vel = 1 + a * std::sin(ph);
    const double rho_t = a * k * std::sin(ph);
    const double m_x = -a * k * std::sin(ph) * vel + rho * a * k * std::cos(ph);
    EXPECT_NEAR(q[0], rho_t + m_x, 1e-12);
  }
}

TEST(EulerSystem, SourceSwitch) {
  const EulerState u(2, 2, 4);
  EXPECT_FALSE(Euler(false).has_source());
  EXPECT_TRUE(Euler(true).has_source());
  EXPECT_NEAR((Euler(true).source(0.05, 0.2, 0.8, u) - manufactured_source(0.05, 0.2, 0.8)).norm(),
              0.0, 1e-15);
}

TEST(ScalarSystems, AdvectionCompatibilityExact) {
  const LinearAdvection sys(1.7);
  for (double u : {-2.0, -0.3, 0.0, 1.1, 4.0}) {
    const StateVector<1> s(u);
    // q' = eta' f' holds exactly: (a u^2 / 2)' = u a
    EXPECT_NEAR(sys.entropy_gradient(s)[0] * sys.flux_jacobian(s)(0, 0), 1.7 * u, 1e-14);
    EXPECT_NEAR(sys.entropy_flux(s), 0.5 * 1.7 * u * u, 1e-14);
    EXPECT_NEAR(sys.flux(s)[0], 1.7 * u, 1e-14);
    EXPECT_EQ(sys.entropy_hessian(s)(0, 0), 1.0);
    EXPECT_EQ(sys.flux_hessian(s, 0)(0, 0), 0.0);
  }
}

TEST(ScalarSystems, BurgersCompatibility) {
  const Burgers sys;
  for (double u : {-2.0, -0.3, 0.0, 1.1, 4.0}) {
    const StateVector<1> s(u);
    EXPECT_NEAR(sys.entropy_gradient(s)[0] * sys.flux_jacobian(s)(0, 0), u * u, 1e-14);
    EXPECT_NEAR(sys.wave_speed(s), std::abs(u), 0.0);
  }
}
