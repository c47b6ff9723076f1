#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "atomguide/two_level.hpp"

using namespace atomguide;
using namespace atomguide::two_level;

namespace {

constexpr double pi = std::numbers::pi;

double infidelity(const CVector& a, const CVector& b) { return 1.0 - fidelity(a, b); }

TwoLevelDrive sweep_drive(int n = 4001) {
  // Landau-Zener style: Delta from -20 to 20, Gaussian coupling of peak 2.
  return TwoLevelDrive(numerics::linspace(-10.0, 10.0, n),
                       linear_sweep_profile(0.0, 2.0, cplx(2.0, 0.5), 0.0, 3.0));
}

}  // namespace

TEST(SU2, Definitions) {
  auto a = su2_angles({3.0, 0.0});
  EXPECT_DOUBLE_EQ(a.omega, 3.0);
  EXPECT_DOUBLE_EQ(a.theta, 0.0);
  a = su2_angles({0.0, 1.5});
  EXPECT_DOUBLE_EQ(a.omega, 3.0);
  EXPECT_DOUBLE_EQ(a.theta, pi / 2);
  EXPECT_DOUBLE_EQ(a.phi, 0.0);
  a = su2_angles({0.4, cplx(0.7, -0.7)});  // v1 = v2
  EXPECT_NEAR(a.phi, pi / 4, 1e-15);
  EXPECT_THROW(su2_angles({0.0, 0.0}), DomainError);
}

TEST(SU2, OmegaBoundsDetuningAndPhiStaysContinuous) {
  // Coupling winds its phase several times and passes through zero.
  const TwoLevelDrive d(numerics::linspace(0.0, 10.0, 2001), [](double t) {
    const double amp = t > 4.0 && t < 5.0 ? 0.0 : 1.0;
    return DriveSample{0.3, amp * std::exp(cplx(0.0, -3.0 * t))};
  });
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_GE(d.omega(i), std::abs(d.sample(i).delta));
    EXPECT_NEAR(std::cos(d.theta(i)), d.sample(i).delta / d.omega(i), 1e-15);
    if (i > 0) EXPECT_LE(std::abs(d.phi(i) - d.phi(i - 1)), pi);
  }
  EXPECT_GT(d.phi(2000), 25.0);
}

TEST(Invariant, MatrixSpecialValues) {
  const auto i0 = invariant_matrix(0.0, 0.7);
  EXPECT_NEAR(std::real(i0(0, 0)), 0.5, 1e-16);
  EXPECT_NEAR(std::real(i0(1, 1)), -0.5, 1e-16);
  EXPECT_EQ(std::abs(i0(0, 1)), 0.0);
  const auto i1 = invariant_matrix(pi / 2, 0.0);
  EXPECT_NEAR(std::real(i1(0, 1)), 0.5, 1e-16);
  EXPECT_NEAR(std::abs(i1(0, 0)), 0.0, 1e-16);
}

TEST(Invariant, SpectrumAndEigenstates) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 2.0 * pi);
  for (int k = 0; k < 200; ++k) {
    const double vs = 0.5 * u(rng), z = u(rng);
    const auto m = invariant_matrix(vs, z);
    // closed-form 2x2 eigenvalues of a traceless Hermitian matrix
    const double ev = std::sqrt(std::norm(m(0, 0)) + std::norm(m(0, 1)));
    EXPECT_NEAR(ev, 0.5, 1e-14);
    const auto st = invariant_eigenstates(vs, z);
    EXPECT_NEAR(std::abs(inner(st[0], st[1])), 0.0, 1e-15);
    EXPECT_NEAR(norm(st[0]), 1.0, 1e-15);
    EXPECT_NEAR(norm(st[1]), 1.0, 1e-15);
    for (int s = 0; s < 2; ++s) {
      const double eta = s == 0 ? 0.5 : -0.5;
      const CVector r = m * st[s];
      EXPECT_LT(std::abs(r[0] - eta * st[s][0]) + std::abs(r[1] - eta * st[s][1]), 1e-13);
    }
  }
  const auto st = invariant_eigenstates(0.0, 1.0);
  EXPECT_EQ(st[0], (CVector{1.0, 0.0}));
  EXPECT_EQ(st[1], (CVector{0.0, 1.0}));
}

TEST(Auxiliary, StationaryDriveStaysFixed) {
  const TwoLevelDrive d(numerics::linspace(0.0, 50.0, 1001), constant_profile(0.8, cplx(0.6, -0.3)));
  const auto p = solve_auxiliary(d, d.theta(0), d.phi(0));
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_NEAR(p.varsigma[i], d.theta(0), 1e-12);
    EXPECT_NEAR(p.zeta[i], d.phi(0), 1e-12);
  }
  EXPECT_LT(p.lvn_residual, 1e-8);
}

TEST(Auxiliary, PerturbedStationarySeedPrecesses) {
  const TwoLevelDrive d(numerics::linspace(0.0, 20.0, 2001), constant_profile(0.8, cplx(0.6, 0.0)));
  const auto p = solve_auxiliary(d, d.theta(0) + 0.1, d.phi(0));
  double lo = 10, hi = -10;
  for (std::size_t i = 0; i < d.size(); ++i) {
    lo = std::min(lo, p.varsigma[i]);
    hi = std::max(hi, p.varsigma[i]);
    const auto e = jacobi_eigh(invariant_matrix(p, i));
    EXPECT_NEAR(e.values[0], -0.5, 1e-12);
    EXPECT_NEAR(e.values[1], 0.5, 1e-12);
  }
  EXPECT_GT(hi - lo, 0.05);
  EXPECT_LT(p.lvn_residual, 1e-8);
}

TEST(Auxiliary, SweepResidualAndPoleGuard) {
  const auto d = sweep_drive();
  const auto p = solve_auxiliary(d);
  EXPECT_LT(p.lvn_residual, 1e-8);
  EXPECT_THROW(solve_auxiliary(d, 0.0, 0.0), DomainError);
  // A resonant drive carries a seed near the pole straight through it.
  const TwoLevelDrive res(numerics::linspace(0.0, 5.0, 501), constant_profile(0.0, cplx(1.0, 0.0)));
  EXPECT_THROW(solve_auxiliary(res, 1e-3, pi / 2), NumericalError);
}

// zeta winds up to ~100 rad on the sweep; a denser grid must not cost digits
TEST(Auxiliary, ResidualDoesNotGrowWithGridDensity) {
  const double coarse = solve_auxiliary(sweep_drive(2001), 1.2, 0.4).lvn_residual;
  const double fine = solve_auxiliary(sweep_drive(32001), 1.2, 0.4).lvn_residual;
  EXPECT_LT(coarse, 1e-10);
  EXPECT_LT(fine, 1e-10);
}

TEST(Phases, ResonantStationaryDrive) {
  const double v0 = 0.7;
  const TwoLevelDrive d(numerics::linspace(0.0, 10.0, 501), constant_profile(0.0, v0));
  const auto p = solve_auxiliary(d);
  for (double eta : {0.5, -0.5}) {
    const auto ph = phases(d, p, eta);
    for (std::size_t i = 0; i < d.size(); ++i) {
      EXPECT_NEAR(ph.geometric[i], 0.0, 1e-12);
      EXPECT_NEAR(ph.dynamical[i], eta * 2.0 * v0 * d.times()[i], 1e-10);
    }
  }
}

TEST(Phases, GeometricPartAdiabaticSolidAngle) {
  // Slow conical rotation of the field: theta fixed, phi advancing 2 pi.
  const double theta = 0.9, big_omega = 40.0, period = 200.0;
  const TwoLevelDrive d(numerics::linspace(0.0, period, 40001), [=](double t) {
    const double phi = 2.0 * pi * t / period;
    return DriveSample{big_omega * std::cos(theta), 0.5 * big_omega * std::sin(theta) * std::exp(cplx(0.0, -phi))};
  });
  const auto p = solve_auxiliary(d);
  const auto ph = phases(d, p, 0.5);
  const double solid = 2.0 * pi * (1.0 - std::cos(theta));
  EXPECT_NEAR(ph.geometric.back(), 0.5 * solid, 0.5 * solid * 5e-3);
}

TEST(Phases, TotalMatchesDirectExpectation) {
  // <t;eta| H - i d/dt |t;eta> integrated directly with differentiated eigenstates.
  const auto d = sweep_drive(8001);
  const auto p = solve_auxiliary(d);
  for (double eta : {0.5, -0.5}) {
    const auto ph = phases(d, p, eta);
    const std::size_t n = d.size();
    const int s = eta > 0 ? 0 : 1;
    std::vector<CVector> st(n);
    for (std::size_t i = 0; i < n; ++i) st[i] = invariant_eigenstates(p, i)[s];
    std::vector<double> integrand(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = i == 0 ? 0 : i - 1, b = i + 1 == n ? i : i + 1;
      const double dt = d.times()[b] - d.times()[a];
      CVector dpsi(2);
      for (int c = 0; c < 2; ++c) dpsi[c] = (st[b][c] - st[a][c]) / dt;
      const CVector hpsi = hamiltonian(d.sample(i)) * st[i];
      integrand[i] = std::real(inner(st[i], hpsi)) + std::real(cplx(0.0, -1.0) * inner(st[i], dpsi));
    }
    const auto direct = numerics::cumulative_trapezoid(d.times(), integrand);
    EXPECT_NEAR(ph.total.back(), direct.back(), 1e-6 * std::abs(direct.back()));
  }
}

TEST(LR, StationaryStartsInPlusState) {
  const double v0 = 1.2;
  const TwoLevelDrive d(numerics::linspace(0.0, 10.0, 1001), constant_profile(0.0, v0));
  const auto p = solve_auxiliary(d);
  const auto traj = lr_solution(d, p, 1.0, 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double t = d.times()[i];
    const auto plus = invariant_eigenstates(p, i)[0];
    EXPECT_NEAR(traj.excited_population(i), 0.5, 1e-12);
    const cplx expect = std::exp(cplx(0.0, -0.5 * d.omega(i) * t)) * plus[0];
    EXPECT_NEAR(std::abs(traj.amplitudes[i][0] - expect), 0.0, 1e-10);
  }
}

TEST(LR, DecoupledLevel) {
  const double delta = 2.0;
  const TwoLevelDrive d(numerics::linspace(0.0, 3.0, 301), constant_profile(delta, 0.0));
  InvariantParams p;
  p.times = d.times();
  p.varsigma.assign(d.size(), 0.0);
  p.zeta.assign(d.size(), 0.0);
  p.varsigma_rate.assign(d.size(), 0.0);
  p.zeta_rate.assign(d.size(), delta);
  const auto traj = lr_solution(d, p, 1.0, 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const cplx expect = std::exp(cplx(0.0, -0.5 * delta * d.times()[i]));
    EXPECT_NEAR(std::abs(traj.amplitudes[i][0] - expect), 0.0, 1e-12);
    EXPECT_EQ(std::abs(traj.amplitudes[i][1]), 0.0);
  }
  EXPECT_THROW(lr_solution(d, p, 1.0, 1.0), DomainError);
}

TEST(LR, MatchesSchrodingerOnSweep) {
  // phases are trapezoid sums on the grid, so the grid has to resolve Omega
  const auto d = sweep_drive(16001);
  const auto p = solve_auxiliary(d, 1.2, 0.4);
  const std::array<cplx, 2> psi0{0.0, 1.0};
  const auto c = invariant_coefficients(p, psi0);
  const auto lr = lr_solution(d, p, c[0], c[1]);
  const auto rk = evolve_schrodinger(d, psi0);
  double worst = 0.0, drift = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    worst = std::max(worst, infidelity(lr.state(i), rk.state(i)));
    drift = std::max({drift, std::abs(norm(lr.state(i)) - 1.0), std::abs(norm(rk.state(i)) - 1.0)});
  }
  EXPECT_LT(worst, 1e-6);
  EXPECT_LT(drift, 1e-9);
}

TEST(LR, AdiabaticTrackingScalesWithRate) {
  auto deviation = [](double duration) {
    const TwoLevelDrive d(numerics::linspace(0.0, duration, 4001), [=](double t) {
      const double s = t / duration;
      return DriveSample{10.0 * std::cos(pi * s), 5.0 * std::sin(pi * s) + 0.1};
    });
    const auto p = solve_auxiliary(d);
    double worst = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) worst = std::max(worst, std::abs(p.varsigma[i] - d.theta(i)));
    return worst;
  };
  const double slow = deviation(200.0), fast = deviation(20.0);
  EXPECT_LT(slow, 0.02);
  EXPECT_GT(fast / slow, 5.0);
  EXPECT_LT(fast / slow, 20.0);
}

TEST(Schrodinger, ResonantRabi) {
  const double v0 = 1.0;
  const double period = pi / v0;
  const TwoLevelDrive d(numerics::linspace(0.0, 20.0 * period, 4001), constant_profile(0.0, v0));
  const auto traj = evolve_schrodinger(d, {0.0, 1.0});
  double worst = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double s = std::sin(v0 * d.times()[i]);
    worst = std::max(worst, std::abs(traj.excited_population(i) - s * s));
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(Schrodinger, GeneralizedRabi) {
  const double v0 = 0.8, delta = 1.1;
  const TwoLevelDrive d(numerics::linspace(0.0, 60.0, 3001), constant_profile(delta, v0));
  const auto traj = evolve_schrodinger(d, {0.0, 1.0});
  const double om = std::sqrt(delta * delta + 4 * v0 * v0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double s = std::sin(0.5 * om * d.times()[i]);
    EXPECT_NEAR(traj.excited_population(i), 4 * v0 * v0 / (om * om) * s * s, 1e-8);
  }
}

TEST(Schrodinger, FreePhases) {
  const double delta = 1.7;
  const TwoLevelDrive d(numerics::linspace(0.0, 8.0, 401), constant_profile(delta, 0.0));
  const cplx a = 0.6, b = cplx(0.0, 0.8);
  const auto traj = evolve_schrodinger(d, {a, b});
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double t = d.times()[i];
    EXPECT_NEAR(std::abs(traj.amplitudes[i][0] - a * std::exp(cplx(0, -0.5 * delta * t))), 0.0, 1e-10);
    EXPECT_NEAR(std::abs(traj.amplitudes[i][1] - b * std::exp(cplx(0, 0.5 * delta * t))), 0.0, 1e-10);
  }
}

TEST(Adiabatic, EigenstatesDiagonalizeHamiltonian) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  for (int k = 0; k < 100; ++k) {
    const DriveSample s{g(rng), cplx(g(rng), g(rng))};
    const TwoLevelDrive d({0.0, 1.0}, constant_profile(s.delta, s.coupling));
    const auto st = adiabatic_eigenstates(d, 0);
    const auto h = hamiltonian(s);
    for (int e = 0; e < 2; ++e) {
      const double eta = e == 0 ? 0.5 : -0.5;
      const CVector r = h * st[e];
      EXPECT_LT(std::abs(r[0] - eta * d.omega(0) * st[e][0]) + std::abs(r[1] - eta * d.omega(0) * st[e][1]), 1e-12);
    }
  }
  const TwoLevelDrive far({0.0, 1.0}, constant_profile(1e9, 1.0));
  const auto st = adiabatic_eigenstates(far, 0);
  EXPECT_NEAR(std::abs(st[0][0]), 1.0, 1e-9);
  EXPECT_NEAR(std::abs(st[1][1]), 1.0, 1e-9);
  const TwoLevelDrive res({0.0, 1.0}, constant_profile(0.0, 1.0));
  const auto eq = adiabatic_eigenstates(res, 0);
  EXPECT_NEAR(std::abs(eq[0][0]), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(std::abs(eq[0][1]), std::sqrt(0.5), 1e-15);
}
