#pragma once

// Guiding potentials seen by the atomic centre of mass.
//
// Frequencies and energies are in hbar = 1 units (rad/s) unless a function
// says otherwise; multiply by constants::hbar for joules. The side-guide
// potential is SI throughout.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "atomguide/constants.hpp"
#include "atomguide/errors.hpp"
#include "atomguide/linalg.hpp"

namespace atomguide::dressed {

// ------------------------------------------------------------ classical field

struct AdiabaticPotentials {
  std::vector<double> minus;
  std::vector<double> plus;
};

/// U_+-(x) = +- sqrt(Delta^2/4 + |V(x)|^2), V in the same units as Delta.
inline AdiabaticPotentials classical_adiabatic_potential(double delta, std::span<const cplx> coupling) {
  require(std::isfinite(delta), "classical_adiabatic_potential: detuning must be finite");
  AdiabaticPotentials out;
  out.minus.resize(coupling.size());
  out.plus.resize(coupling.size());
  for (std::size_t i = 0; i < coupling.size(); ++i) {
    require(std::isfinite(std::abs(coupling[i])), "classical_adiabatic_potential: coupling must be finite");
    const double r = std::sqrt(0.25 * delta * delta + std::norm(coupling[i]));
    out.plus[i] = r;
    out.minus[i] = -r;
  }
  return out;
}

// ------------------------------------------------------------ quantized field

/// E0 = sqrt(hbar omega / (2 eps0 V)) in V/m, omega in rad/s, volume in m^3.
inline double monophoton_strength(double omega, double volume) {
  require(volume > 0.0, "monophoton_strength: quantization volume must be positive");
  require(omega > 0.0, "monophoton_strength: mode frequency must be positive");
  return std::sqrt(constants::hbar * omega / (2.0 * constants::vacuum_permittivity * volume));
}

/// g = -E0 d . u* / hbar (rad/s) for a dipole matrix element d (C m) and the
/// mode function value u at the atom.
inline cplx coupling_from_dipole(double field_per_photon, const std::array<cplx, 3>& dipole,
                                 const std::array<cplx, 3>& mode) {
  cplx du{};
  for (int k = 0; k < 3; ++k) du += dipole[k] * std::conj(mode[k]);
  return -field_per_photon * du / constants::hbar;
}

/// Couplings must be real for the dressed-state formulas below.
inline double require_real_coupling(cplx g) {
  if (std::abs(std::imag(g)) > 1e-12 * std::max(1.0, std::abs(g)))
    throw DomainError("dressed potentials require a real coupling g(r); got a complex value");
  return std::real(g);
}

struct TwoLevelDressedManifold {
  int m = 0;
  double delta = 0.0;
  double omega = 0.0;
  double g = 0.0;
  double u_plus = 0.0;
  double u_minus = 0.0;
  double theta_m = 0.0;
  // Over the basis {|e, m>, |g, m+1>}.
  std::array<double, 2> state_plus{};
  std::array<double, 2> state_minus{};
};

/// Dressed manifold of one atom and one quantized mode:
///   U_+-,m = (m + 1/2) omega +- sqrt(Delta^2/4 + (m+1) g^2)
///   theta_m = atan2(-2 sqrt(m+1) g, Delta)
///   |+> = cos(theta_m/2)|e,m> - sin(theta_m/2)|g,m+1>
///   |-> = cos(theta_m/2)|g,m+1> + sin(theta_m/2)|e,m>
inline TwoLevelDressedManifold dressed_two_level(int m, double delta, double omega, double g) {
  require(m >= 0, "dressed_two_level: photon number must be non-negative");
  require(std::isfinite(delta) && std::isfinite(omega) && std::isfinite(g), "dressed_two_level: inputs must be finite");
  TwoLevelDressedManifold d;
  d.m = m;
  d.delta = delta;
  d.omega = omega;
  d.g = g;
  const double root = std::sqrt(m + 1.0);
  // hypot keeps the splitting accurate when one term dominates.
  const double split = std::hypot(0.5 * delta, root * g);
  const double centre = (m + 0.5) * omega;
  d.u_plus = centre + split;
  d.u_minus = centre - split;
  d.theta_m = std::atan2(-2.0 * root * g, delta);
  const double c = std::cos(0.5 * d.theta_m);
  const double s = std::sin(0.5 * d.theta_m);
  d.state_plus = {c, -s};
  d.state_minus = {s, c};
  return d;
}

/// The 2x2 block of the atom-field Hamiltonian on {|e,m>, |g,m+1>} with atomic
/// frequency omega_e = Delta + omega.
inline CMatrix two_level_manifold_block(int m, double delta, double omega, double g) {
  const double omega_e = delta + omega;
  CMatrix h(2);
  h(0, 0) = 0.5 * omega_e + m * omega;
  h(1, 1) = -0.5 * omega_e + (m + 1.0) * omega;
  h(0, 1) = h(1, 0) = g * std::sqrt(m + 1.0);
  return h;
}

// ------------------------------------------------------------ Lambda system

/// Rotating-frame block on {|e,n1,n2>, |g1,n1+1,n2>, |g2,n1,n2+1>} with the
/// ground states at zero and the excited state at e0.
inline CMatrix lambda_matrix(int n1, int n2, double g1, double g2, double e0) {
  require(n1 >= 0 && n2 >= 0, "lambda_matrix: photon numbers must be non-negative");
  CMatrix h(3);
  h(0, 0) = e0;
  h(0, 1) = h(1, 0) = g1 * std::sqrt(n1 + 1.0);
  h(0, 2) = h(2, 0) = g2 * std::sqrt(n2 + 1.0);
  return h;
}

struct Eigenpair {
  double value = 0.0;
  CVector vector;
};

/// Exact spectrum of a Hermitian 3x3 block by Jacobi rotations, ascending.
inline std::array<Eigenpair, 3> lambda_exact_eigs(const CMatrix& h) {
  require(h.dim() == 3, "lambda_exact_eigs: expected a 3x3 matrix");
  const auto eig = jacobi_eigh(h);
  std::array<Eigenpair, 3> out;
  for (std::size_t k = 0; k < 3; ++k) out[k] = {eig.values[k], eig.vectors.column(k)};
  return out;
}

/// The closed-form Lambda-manifold quantities, evaluated exactly as printed,
/// plus how well each printed state satisfies H v = E v for lambda_matrix.
struct LambdaClosedForm {
  double n0 = 0.0;
  double n_plus = 0.0;
  double n_minus = 0.0;
  double k_plus = 0.0;
  double k_minus = 0.0;
  double e_zero = 0.0;  // labelled dark-state energy (the e0 argument)
  double e_plus = 0.0;
  double e_minus = 0.0;
  std::array<double, 3> dark_state{};
  std::array<double, 3> plus_state{};
  std::array<double, 3> minus_state{};
  // || H v - E v || for dark (with E = 0, the value the block gives it), +, -.
  double dark_residual = 0.0;
  double plus_residual = 0.0;
  double minus_residual = 0.0;
  // Same for the printed dark state against its labelled energy e_zero.
  double dark_residual_labelled = 0.0;
};

inline LambdaClosedForm lambda_closed_form(int n1, int n2, double g1, double g2, double e0) {
  require(n1 >= 0 && n2 >= 0, "lambda_closed_form: photon numbers must be non-negative");
  const double a1 = g1 * std::sqrt(n1 + 1.0);
  const double a2 = g2 * std::sqrt(n2 + 1.0);
  const double inv_n0_sq = a1 * a1 + a2 * a2;
  if (!(inv_n0_sq > 0.0)) throw DomainError("lambda_closed_form: N0 undefined (both couplings are zero)");

  LambdaClosedForm f;
  f.n0 = 1.0 / std::sqrt(inv_n0_sq);
  const double n0sq = f.n0 * f.n0;
  const double b = n0sq * e0;
  const double disc = std::sqrt(b * b + 4.0 * n0sq);
  f.k_plus = 0.5 * (b + disc);
  f.k_minus = 0.5 * (b - disc);
  f.n_plus = 1.0 / std::sqrt(1.0 + f.k_plus * f.k_plus / n0sq);
  f.n_minus = 1.0 / std::sqrt(1.0 + f.k_minus * f.k_minus / n0sq);
  f.e_zero = e0;
  const double root = std::sqrt(e0 * e0 + 4.0 / n0sq);
  f.e_plus = 0.5 * (e0 + root);
  f.e_minus = 0.5 * (e0 - root);
  f.dark_state = {0.0, f.n0 * a2, -f.n0 * a1};
  f.plus_state = {f.n_plus, f.n_plus * f.k_plus * a1, f.n_plus * f.k_plus * a2};
  f.minus_state = {f.n_minus, f.n_minus * f.k_minus * a1, f.n_minus * f.k_minus * a2};

  const CMatrix h = lambda_matrix(n1, n2, g1, g2, e0);
  auto residual = [&](const std::array<double, 3>& v, double e) {
    const CVector cv{v[0], v[1], v[2]};
    const CVector hv = h * cv;
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += std::norm(hv[k] - e * cv[k]);
    return std::sqrt(s);
  };
  f.dark_residual = residual(f.dark_state, 0.0);
  f.dark_residual_labelled = residual(f.dark_state, e0);
  f.plus_residual = residual(f.plus_state, f.e_plus);
  f.minus_residual = residual(f.minus_state, f.e_minus);
  return f;
}

// ------------------------------------------------------------ side guide

struct GuidePotentialParams {
  double bohr_magneton = constants::bohr_magneton;  // J/T
  double lande_g = 0.5;
  double m_f = 2.0;
  double polarizability = 0.0;  // C m^2 / V
};

/// H = mu_B g_F m_F B(x) - alpha E(x)^2 / 2 (J), with B in tesla and E in V/m.
inline std::vector<double> side_guide_potential(const GuidePotentialParams& p, std::span<const double> b_field,
                                                std::span<const double> e_field) {
  require(b_field.size() == e_field.size(), "side_guide_potential: field profiles differ in length");
  require(p.bohr_magneton > 0.0 && p.polarizability >= 0.0, "side_guide_potential: constants must be positive");
  std::vector<double> u(b_field.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    require(std::isfinite(b_field[i]) && std::isfinite(e_field[i]), "side_guide_potential: profiles must be finite");
    u[i] = p.bohr_magneton * p.lande_g * p.m_f * b_field[i] - 0.5 * p.polarizability * e_field[i] * e_field[i];
  }
  return u;
}

}  // namespace atomguide::dressed
