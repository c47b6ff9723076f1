#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "atomguide/dressed.hpp"
#include "atomguide/two_level.hpp"

using namespace atomguide;
using namespace atomguide::dressed;

namespace {

constexpr double pi = std::numbers::pi;

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace

TEST(Classical, LimitsAndMatrixOracle) {
  std::vector<cplx> zero(3, 0.0);
  auto u = classical_adiabatic_potential(-2.0, zero);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(u.plus[i], 1.0);
    EXPECT_DOUBLE_EQ(u.minus[i], -1.0);
  }
  std::vector<cplx> v0{cplx(0.6, 0.8)};
  u = classical_adiabatic_potential(0.0, v0);
  EXPECT_DOUBLE_EQ(u.plus[0], 1.0);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int k = 0; k < 100; ++k) {
    const double delta = g(rng);
    std::vector<cplx> v{cplx(g(rng), g(rng))};
    const auto pot = classical_adiabatic_potential(delta, v);
    const auto e = jacobi_eigh(two_level::hamiltonian({delta, v[0]}));
    EXPECT_NEAR(pot.minus[0], e.values[0], 1e-13);
    EXPECT_NEAR(pot.plus[0], e.values[1], 1e-13);
  }
}

TEST(Monophoton, ScalingAndReferenceValue) {
  const double w = 2.0 * pi * constants::speed_of_light / 780e-9;
  const double e0 = monophoton_strength(w, 1e-12);
  // 40-digit evaluation of sqrt(hbar omega / (2 eps0 V)) with the same constants
  EXPECT_NEAR(e0, 119.9227839954326, 1e-12 * e0);
  EXPECT_NEAR(monophoton_strength(2 * w, 1e-12) / e0, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(monophoton_strength(w, 4e-12) / e0, 0.5, 1e-15);
  EXPECT_THROW(monophoton_strength(w, 0.0), DomainError);
  EXPECT_THROW(monophoton_strength(w, -1.0), DomainError);
}

TEST(Monophoton, DipoleCoupling) {
  const double e0 = 100.0, d = 2.5e-29;
  const cplx g = coupling_from_dipole(e0, {0.0, 0.0, d}, {0.0, 0.0, cplx(0.0, 1.0)});
  EXPECT_NEAR(std::abs(g), e0 * d / constants::hbar, 1e-12 * std::abs(g));
  EXPECT_NEAR(std::real(g), 0.0, 1e-12 * std::abs(g));
  EXPECT_THROW(require_real_coupling(g), DomainError);
  EXPECT_DOUBLE_EQ(require_real_coupling(cplx(3.0, 0.0)), 3.0);
}

TEST(DressedTwoLevel, Limits) {
  auto d = dressed_two_level(3, 2.0, 10.0, 0.0);
  EXPECT_DOUBLE_EQ(d.u_plus, 3.5 * 10.0 + 1.0);
  EXPECT_DOUBLE_EQ(d.u_minus, 3.5 * 10.0 - 1.0);
  EXPECT_DOUBLE_EQ(d.theta_m, 0.0);
  d = dressed_two_level(3, 0.0, 10.0, 0.5);
  EXPECT_NEAR(d.u_plus - d.u_minus, 2.0 * 2.0 * 0.5, 1e-14);
  EXPECT_NEAR(d.theta_m, -pi / 2, 1e-15);
  EXPECT_THROW(dressed_two_level(-1, 0.0, 1.0, 1.0), DomainError);
}

TEST(DressedTwoLevel, ManifoldDiagonalizationSweep) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> mdist(0, 10);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 200; ++k) {
    const int m = mdist(rng);
    const double delta = u(rng), omega = 50.0 + u(rng), g = u(rng);
    const auto d = dressed_two_level(m, delta, omega, g);
    const CMatrix block = two_level_manifold_block(m, delta, omega, g);
    const auto e = jacobi_eigh(block);
    EXPECT_LT(rel(d.u_minus, e.values[0]), 1e-12);
    EXPECT_LT(rel(d.u_plus, e.values[1]), 1e-12);
    EXPECT_NEAR(d.u_plus + d.u_minus, (2 * m + 1) * omega, 1e-12 * omega * (2 * m + 1));
    EXPECT_GE(d.u_plus, d.u_minus);
    // states are orthonormal eigenvectors of the block
    const CVector sp{d.state_plus[0], d.state_plus[1]}, sm{d.state_minus[0], d.state_minus[1]};
    EXPECT_NEAR(std::abs(inner(sp, sm)), 0.0, 1e-12);
    EXPECT_NEAR(norm(sp), 1.0, 1e-12);
    const CVector hp = block * sp, hm = block * sm;
    for (int c = 0; c < 2; ++c) {
      EXPECT_LT(std::abs(hp[c] - d.u_plus * sp[c]), 1e-12 * omega * (m + 1));
      EXPECT_LT(std::abs(hm[c] - d.u_minus * sm[c]), 1e-12 * omega * (m + 1));
    }
  }
}

TEST(DressedTwoLevel, AvoidedCrossingMinimumAtResonance) {
  const int m = 4;
  const double g = 0.3;
  double best = 1e9, at = 1e9;
  for (int k = -400; k <= 400; ++k) {
    const double delta = 0.01 * k;
    const auto d = dressed_two_level(m, delta, 20.0, g);
    if (d.u_plus - d.u_minus < best) {
      best = d.u_plus - d.u_minus;
      at = delta;
    }
  }
  EXPECT_NEAR(best, 2.0 * std::sqrt(m + 1.0) * g, 1e-13);
  EXPECT_EQ(at, 0.0);
}

TEST(Lambda, MatrixStructure) {
  const auto h0 = lambda_matrix(1, 2, 0.0, 0.0, 3.0);
  const auto e = lambda_exact_eigs(h0);
  EXPECT_EQ(e[0].value, 0.0);
  EXPECT_EQ(e[1].value, 0.0);
  EXPECT_EQ(e[2].value, 3.0);
  const auto h = lambda_matrix(2, 0, 0.4, -1.3, 0.9);
  EXPECT_EQ(hermiticity_defect(h), 0.0);
  EXPECT_THROW(lambda_matrix(-1, 0, 1, 1, 1), DomainError);
}

TEST(Lambda, CharacteristicPolynomialOracle) {
  const int n1 = 2, n2 = 5;
  const double g1 = 0.7, g2 = -0.4, e0 = 1.3;
  const auto e = lambda_exact_eigs(lambda_matrix(n1, n2, g1, g2, e0));
  const double c = g1 * g1 * (n1 + 1) + g2 * g2 * (n2 + 1);
  // roots of x^2 - e0 x - c, and 0
  const double r = std::sqrt(e0 * e0 + 4 * c);
  EXPECT_NEAR(e[0].value, 0.5 * (e0 - r), 1e-13);
  EXPECT_NEAR(e[1].value, 0.0, 1e-13);
  EXPECT_NEAR(e[2].value, 0.5 * (e0 + r), 1e-13);
  EXPECT_NEAR(e[0].value + e[1].value + e[2].value, e0, 1e-13);
  // dark state
  const auto& dark = e[1].vector;
  EXPECT_LT(std::abs(dark[0]), 1e-12);
  const double a1 = g1 * std::sqrt(n1 + 1.0), a2 = g2 * std::sqrt(n2 + 1.0);
  EXPECT_LT(std::abs(a1 * dark[1] + a2 * dark[2]), 1e-12);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      EXPECT_NEAR(std::abs(inner(e[i].vector, e[j].vector)), i == j ? 1.0 : 0.0, 1e-12);
}

TEST(Lambda, ClosedFormAgainstExactSweep) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> nd(0, 8);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    const int n1 = nd(rng), n2 = nd(rng);
    const double g1 = u(rng), g2 = u(rng), e0 = u(rng);
    const auto f = lambda_closed_form(n1, n2, g1, g2, e0);
    const auto e = lambda_exact_eigs(lambda_matrix(n1, n2, g1, g2, e0));
    EXPECT_LT(rel(f.e_minus, e[0].value), 1e-12);
    EXPECT_LT(rel(f.e_plus, e[2].value), 1e-12);
    const double a1 = g1 * std::sqrt(n1 + 1.0), a2 = g2 * std::sqrt(n2 + 1.0);
    EXPECT_NEAR(f.n0 * f.n0 * (a1 * a1 + a2 * a2), 1.0, 1e-14);
    const double dn = f.dark_state[0] * f.dark_state[0] + f.dark_state[1] * f.dark_state[1] +
                      f.dark_state[2] * f.dark_state[2];
    EXPECT_NEAR(dn, 1.0, 1e-12);
    EXPECT_LT(f.dark_residual, 1e-12 * (std::abs(a1) + std::abs(a2)));
    const double pn = f.plus_state[0] * f.plus_state[0] + f.plus_state[1] * f.plus_state[1] +
                      f.plus_state[2] * f.plus_state[2];
    EXPECT_NEAR(pn, 1.0, 1e-12);
    EXPECT_TRUE(std::isfinite(f.plus_residual));
    EXPECT_TRUE(std::isfinite(f.minus_residual));
  }
}

TEST(Lambda, PrintedKRootsConsistentOnlyAtZeroOffset) {
  const auto zero = lambda_closed_form(1, 1, 0.5, 0.8, 0.0);
  EXPECT_LT(zero.plus_residual, 1e-12);
  EXPECT_LT(zero.minus_residual, 1e-12);
  const auto off = lambda_closed_form(1, 1, 0.5, 0.8, 1.0);
  EXPECT_GT(off.plus_residual, 1e-3);
  EXPECT_GT(off.dark_residual_labelled, 1e-3);
}

TEST(Lambda, SymmetricPointDarkState) {
  const auto f = lambda_closed_form(2, 2, 0.6, 0.6, 0.3);
  EXPECT_EQ(f.dark_state[0], 0.0);
  EXPECT_NEAR(f.dark_state[1], std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(f.dark_state[2], -std::sqrt(0.5), 1e-15);
  EXPECT_THROW(lambda_closed_form(0, 0, 0.0, 0.0, 1.0), DomainError);
}

TEST(SideGuide, Linearity) {
  GuidePotentialParams p;
  p.polarizability = 5e-39;
  std::vector<double> b{0.0, 1e-4, 2e-4}, e{0.0, 1e4, 2e4};
  const auto u = side_guide_potential(p, b, e);
  EXPECT_EQ(u[0], 0.0);
  const double mag = p.bohr_magneton * p.lande_g * p.m_f;
  EXPECT_NEAR(u[2] - 2e-4 * mag, 4.0 * (u[1] - 1e-4 * mag), 1e-12 * std::abs(u[2]));
  p.m_f = -p.m_f;
  const auto flipped = side_guide_potential(p, b, std::vector<double>(3, 0.0));
  EXPECT_NEAR(flipped[1], -1e-4 * mag, 1e-40);
  p.polarizability = -1.0;
  EXPECT_THROW(side_guide_potential(p, b, e), DomainError);
}
