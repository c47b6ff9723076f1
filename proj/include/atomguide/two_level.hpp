#pragma once

// Driven two-level dynamics through the Lewis-Riesenfeld invariant.
//
// Units: hbar = 1. Every frequency (detuning, coupling V/hbar, Rabi frequency)
// is expressed in one caller-chosen angular-frequency unit and time in its
// inverse; phases are therefore dimensionless. Multiply by hbar at the
// boundary to recover energies and actions in SI.
//
// In the basis {|e>, |g>} the Hamiltonian is
//
//   H(t) = [[ Delta/2, V     ],
//           [ V*,     -Delta/2]]  = Omega (sin(theta) cos(phi), sin(theta) sin(phi), cos(theta)) . S
//
// with Omega = 2 sqrt(Delta^2/4 + |V|^2), theta = acos(Delta/Omega) and
// V = v1 - i v2, phi = atan2(v2, v1).
//
// Phase bookkeeping for the position-dependent split: the Born-Oppenheimer
// factor exp[(i/hbar) integral U dt'] relating the internal state to the
// solution of i d/dt |psi>_U = H |psi>_U is a pure c-number phase; everything
// here works with |psi>_U and callers attach that factor themselves.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "atomguide/errors.hpp"
#include "atomguide/linalg.hpp"
#include "atomguide/numerics.hpp"

namespace atomguide::two_level {

struct DriveSample {
  double delta = 0.0;  // detuning
  cplx coupling{};     // V / hbar
};

using DriveProfile = std::function<DriveSample(double)>;

struct SU2Angles {
  double omega = 0.0;
  double theta = 0.0;
  double phi = 0.0;  // wrapped to (-pi, pi]; only meaningful when V != 0
};

inline SU2Angles su2_angles(const DriveSample& s) {
  const double v = std::abs(s.coupling);
  SU2Angles a;
  a.omega = 2.0 * std::sqrt(0.25 * s.delta * s.delta + v * v);
  if (!(a.omega > 0.0)) throw DomainError("su2_params: degenerate drive (Delta = 0 and V = 0)");
  a.theta = std::acos(std::clamp(s.delta / a.omega, -1.0, 1.0));
  const double v1 = std::real(s.coupling);
  const double v2 = -std::imag(s.coupling);
  a.phi = v > 0.0 ? std::atan2(v2, v1) : 0.0;
  return a;
}

inline CMatrix hamiltonian(const DriveSample& s) {
  CMatrix h(2);
  h(0, 0) = 0.5 * s.delta;
  h(1, 1) = -0.5 * s.delta;
  h(0, 1) = s.coupling;
  h(1, 0) = std::conj(s.coupling);
  return h;
}

/// A drive profile together with its sample grid and the derived
/// Omega(t), theta(t), phi(t) (phi unwrapped; held where V = 0).
class TwoLevelDrive {
 public:
  TwoLevelDrive(std::vector<double> times, DriveProfile profile) : times_(std::move(times)), profile_(std::move(profile)) {
    require(times_.size() >= 2, "su2_params: at least 2 time samples are required");
    require(numerics::strictly_increasing(times_), "su2_params: time grid must be strictly increasing");
    const std::size_t n = times_.size();
    samples_.resize(n);
    omega_.resize(n);
    theta_.resize(n);
    phi_.resize(n);
    std::vector<bool> has_phase(n);
    for (std::size_t i = 0; i < n; ++i) {
      samples_[i] = profile_(times_[i]);
      require(std::isfinite(samples_[i].delta) && std::isfinite(std::real(samples_[i].coupling)) &&
                  std::isfinite(std::imag(samples_[i].coupling)),
              "su2_params: drive must be finite");
      const SU2Angles a = su2_angles(samples_[i]);
      omega_[i] = a.omega;
      theta_[i] = a.theta;
      phi_[i] = a.phi;
      has_phase[i] = std::abs(samples_[i].coupling) > 0.0;
    }
    std::size_t first = 0;
    while (first < n && !has_phase[first]) ++first;
    if (first < n) {
      for (std::size_t i = 0; i < first; ++i) phi_[i] = phi_[first];
      for (std::size_t i = first + 1; i < n; ++i)
        if (!has_phase[i]) phi_[i] = phi_[i - 1];
    }
    numerics::unwrap(phi_);
  }

  std::size_t size() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  const DriveSample& sample(std::size_t i) const { return samples_[i]; }
  DriveSample at(double t) const { return profile_(t); }
  double omega(std::size_t i) const { return omega_[i]; }
  double theta(std::size_t i) const { return theta_[i]; }
  double phi(std::size_t i) const { return phi_[i]; }
  const std::vector<double>& omegas() const { return omega_; }
  const std::vector<double>& thetas() const { return theta_; }
  const std::vector<double>& phis() const { return phi_; }

 private:
  std::vector<double> times_;
  DriveProfile profile_;
  std::vector<DriveSample> samples_;
  std::vector<double> omega_, theta_, phi_;
};

inline TwoLevelDrive su2_params(std::vector<double> times, DriveProfile profile) {
  return TwoLevelDrive(std::move(times), std::move(profile));
}

// ------------------------------------------------------------------ profiles

inline DriveProfile constant_profile(double delta, cplx coupling) {
  return [=](double) { return DriveSample{delta, coupling}; };
}

/// Delta(t) = delta0 + rate t, V(t) = coupling * exp(-(t - center)^2 / (2 width^2)).
/// A non-positive width keeps V constant.
inline DriveProfile linear_sweep_profile(double delta0, double rate, cplx coupling, double center = 0.0,
                                         double width = 0.0) {
  return [=](double t) {
    const double env = width > 0.0 ? std::exp(-0.5 * (t - center) * (t - center) / (width * width)) : 1.0;
    return DriveSample{delta0 + rate * t, coupling * env};
  };
}

inline DriveProfile gaussian_pulse_profile(double delta, cplx peak, double center, double width) {
  require(width > 0.0, "gaussian_pulse_profile: width must be positive");
  return linear_sweep_profile(delta, 0.0, peak, center, width);
}

/// Piecewise-linear interpolation of sampled (t, Delta, V); constant outside the grid.
inline DriveProfile sampled_profile(std::vector<double> times, std::vector<double> deltas, std::vector<cplx> couplings) {
  require(times.size() >= 2 && deltas.size() == times.size() && couplings.size() == times.size(),
          "sampled_profile: need at least 2 samples of equal length");
  require(numerics::strictly_increasing(times), "sampled_profile: times must be strictly increasing");
  return [t = std::move(times), d = std::move(deltas), v = std::move(couplings)](double x) {
    if (x <= t.front()) return DriveSample{d.front(), v.front()};
    if (x >= t.back()) return DriveSample{d.back(), v.back()};
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
    const double s = (x - t[i]) / (t[i + 1] - t[i]);
    return DriveSample{(1.0 - s) * d[i] + s * d[i + 1], (1.0 - s) * v[i] + s * v[i + 1]};
  };
}

// ------------------------------------------------------------------ invariant

/// I = (1/2) sin(vs) e^{-i zeta} S+ + (1/2) sin(vs) e^{i zeta} S- + cos(vs) S3,
/// i.e. s . S with the unit Bloch vector s = (sin vs cos zeta, sin vs sin zeta, cos vs).
inline CMatrix invariant_matrix(double varsigma, double zeta) {
  CMatrix m(2);
  m(0, 0) = 0.5 * std::cos(varsigma);
  m(1, 1) = -0.5 * std::cos(varsigma);
  m(0, 1) = 0.5 * std::sin(varsigma) * std::exp(cplx(0.0, -zeta));
  m(1, 0) = std::conj(m(0, 1));
  return m;
}

/// Eigenvectors of the invariant: {|+1/2>, |-1/2>}.
inline std::array<CVector, 2> invariant_eigenstates(double varsigma, double zeta) {
  const double c = std::cos(0.5 * varsigma);
  const double s = std::sin(0.5 * varsigma);
  return {CVector{c, std::exp(cplx(0.0, zeta)) * s}, CVector{-std::exp(cplx(0.0, -zeta)) * s, c}};
}

struct InvariantParams {
  std::vector<double> times;
  std::vector<double> varsigma;
  std::vector<double> zeta;  // unwrapped
  std::vector<double> varsigma_rate;
  std::vector<double> zeta_rate;
  double lvn_residual = 0.0;  // max_t || dI/dt - i [I, H] ||_max
};

inline CMatrix invariant_matrix(const InvariantParams& p, std::size_t i) {
  return invariant_matrix(p.varsigma.at(i), p.zeta.at(i));
}

inline std::array<CVector, 2> invariant_eigenstates(const InvariantParams& p, std::size_t i) {
  return invariant_eigenstates(p.varsigma.at(i), p.zeta.at(i));
}

struct AuxiliaryOptions {
  double tolerance = 1e-10;    // local error per accepted step
  double pole_margin = 1e-6;   // reject varsigma within this distance of 0 or pi
};

namespace detail {

// d varsigma/dt = Omega sin(theta) sin(phi - zeta) = 2 Im(V* e^{-i zeta})
// d zeta/dt     = Omega [cos(theta) - sin(theta) cot(varsigma) cos(zeta - phi)]
//               = Delta - 2 cot(varsigma) Re(V* e^{-i zeta})
// which is the Bloch precession ds/dt = Omega h x s of the invariant's axis.
inline std::array<double, 2> auxiliary_rhs(const DriveSample& d, double varsigma, double zeta) {
  const cplx w = std::conj(d.coupling) * std::exp(cplx(0.0, -zeta));
  return {2.0 * std::imag(w), d.delta - 2.0 * std::real(w) * std::cos(varsigma) / std::sin(varsigma)};
}

}  // namespace detail

/// Integrates the auxiliary equations for (varsigma, zeta) on the drive grid
/// with step-doubling RK4 (step never exceeds the grid spacing) and reports
/// the Liouville-von Neumann residual of the result.
inline InvariantParams solve_auxiliary(const TwoLevelDrive& drive, double varsigma0, double zeta0,
                                       const AuxiliaryOptions& opts = {});

/// max over the grid of || dI/dt + (1/i)[I, H] ||_max. dI/dt comes from a
/// five-point stencil on a refined local grid around each sample: the
/// trajectory is continued from the sample by fine RK4 steps of width
/// delta with Omega * delta <= 1e-3, so the stencil error stays near rounding.
/// zeta is tracked as an offset from the sample and the residual is taken in
/// the frame rotated by zeta(t_i); a diagonal phase leaves ||.||_max alone and
/// large |zeta| no longer costs digits in the difference quotient.
inline double lvn_residual(const TwoLevelDrive& drive, const InvariantParams& p) {
  const std::size_t n = p.times.size();
  const auto& t = p.times;
  using State = std::array<double, 2>;
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double zeta0 = p.zeta[i];
    // y = (varsigma, zeta - zeta0)
    auto f = [&](double time, const State& y) { return detail::auxiliary_rhs(drive.at(time), y[0], zeta0 + y[1]); };
    auto rk4 = [&](double time, const State& y, double h) {
      const State k1 = f(time, y);
      const State k2 = f(time + 0.5 * h, {y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]});
      const State k3 = f(time + 0.5 * h, {y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]});
      const State k4 = f(time + h, {y[0] + h * k3[0], y[1] + h * k3[1]});
      return State{y[0] + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                   y[1] + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
    };
    double gap = std::numeric_limits<double>::infinity();
    if (i > 0) gap = std::min(gap, t[i] - t[i - 1]);
    if (i + 1 < n) gap = std::min(gap, t[i + 1] - t[i]);
    const State y0{p.varsigma[i], 0.0};
    const State slope = f(t[i], y0);
    const double rate = std::max({drive.omega(i), std::abs(slope[0]), std::abs(slope[1]), 1e-300});
    const double delta = std::min(gap / 8.0, 1e-3 / rate);
    // stencil offsets in units of delta; one-sided at the ends of the grid
    const int first = i == 0 ? 0 : (i + 1 == n ? -4 : -2);
    std::array<CMatrix, 5> inv;
    std::array<double, 5> nodes{};
    for (int k = 0; k < 5; ++k) {
      const int off = first + k;
      nodes[k] = off * delta;
      State y = y0;
      const double h = (off < 0 ? -delta : delta) / 4.0;
      for (int s = 0; s < 4 * std::abs(off); ++s) y = rk4(t[i] + s * h, y, h);
      inv[k] = invariant_matrix(y[0], y[1]);
    }
    const auto w = numerics::fornberg_weights(0.0, std::span<const double>(nodes), 1);
    CMatrix didt(2);
    for (int k = 0; k < 5; ++k) didt += w[k] * (inv[k] - inv[-first]);
    DriveSample rotated = drive.sample(i);
    rotated.coupling *= std::exp(cplx(0.0, zeta0));
    const CMatrix h = hamiltonian(rotated);
    const CMatrix res = didt + cplx(0.0, -1.0) * commutator(inv[-first], h);
    worst = std::max(worst, res.max_abs());
  }
  return worst;
}

inline InvariantParams solve_auxiliary(const TwoLevelDrive& drive, double varsigma0, double zeta0,
                                       const AuxiliaryOptions& opts) {
  const double lo = opts.pole_margin;
  const double hi = std::numbers::pi - opts.pole_margin;
  require(varsigma0 > lo && varsigma0 < hi,
          "solve_auxiliary: varsigma0 must lie strictly inside (0, pi) away from the poles");
  const auto& t = drive.times();
  const std::size_t n = t.size();

  InvariantParams p;
  p.times = t;
  p.varsigma.resize(n);
  p.zeta.resize(n);
  p.varsigma_rate.resize(n);
  p.zeta_rate.resize(n);

  using State = std::array<double, 2>;
  auto f = [&](double time, const State& y) { return detail::auxiliary_rhs(drive.at(time), y[0], y[1]); };
  auto rk4 = [&](double time, const State& y, double h) {
    const State k1 = f(time, y);
    const State k2 = f(time + 0.5 * h, {y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]});
    const State k3 = f(time + 0.5 * h, {y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]});
    const State k4 = f(time + h, {y[0] + h * k3[0], y[1] + h * k3[1]});
    return State{y[0] + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                 y[1] + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
  };
  auto check_pole = [&](double vs, double time) {
    if (!(vs > lo && vs < hi))
      throw NumericalError("solve_auxiliary: invariant axis reached a pole (varsigma = " + std::to_string(vs) +
                           " at t = " + std::to_string(time) + "); re-seed with a different varsigma0");
  };

  State y{varsigma0, zeta0};
  p.varsigma[0] = y[0];
  p.zeta[0] = y[1];
  double h = t[1] - t[0];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double end = t[i + 1];
    const double spacing = end - t[i];
    h = std::min(h, spacing);
    double time = t[i];
    while (time < end) {
      // A remainder below 1e-9 of the interval is folded into the current step.
      const bool truncated = h >= (end - time) - 1e-9 * spacing;
      const double step = truncated ? end - time : h;
      if (!(time + step > time) || step < 1e-12 * spacing)
        throw NumericalError("solve_auxiliary: integration failure (step size underflow)");
      const State full = rk4(time, y, step);
      const State half = rk4(time, y, 0.5 * step);
      const State two = rk4(time + 0.5 * step, half, 0.5 * step);
      const double err = std::max(std::abs(two[0] - full[0]), std::abs(two[1] - full[1])) / 15.0;
      if (!std::isfinite(err)) throw NumericalError("solve_auxiliary: non-finite state");
      const bool accepted = err <= opts.tolerance;
      if (accepted) {
        y = {two[0] + (two[0] - full[0]) / 15.0, two[1] + (two[1] - full[1]) / 15.0};
        time = truncated ? end : time + step;
        check_pole(y[0], time);
      }
      const double grow = err > 0.0 ? std::clamp(0.9 * std::pow(opts.tolerance / err, 0.2), 0.2, 2.0) : 2.0;
      const double proposal = std::min(step * grow, spacing);
      h = (accepted && truncated) ? std::max(h, proposal) : proposal;
    }
    p.varsigma[i + 1] = y[0];
    p.zeta[i + 1] = y[1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = detail::auxiliary_rhs(drive.sample(i), p.varsigma[i], p.zeta[i]);
    p.varsigma_rate[i] = r[0];
    p.zeta_rate[i] = r[1];
  }
  p.lvn_residual = lvn_residual(drive, p);
  return p;
}

/// Stationary seed: the invariant aligned with H at the first sample.
inline InvariantParams solve_auxiliary(const TwoLevelDrive& drive, const AuxiliaryOptions& opts = {}) {
  return solve_auxiliary(drive, drive.theta(0), drive.phi(0), opts);
}

// ------------------------------------------------------------------ phases

struct PhaseDecomposition {
  double eta = 0.5;
  std::vector<double> times;
  std::vector<double> dynamical;  // units of hbar
  std::vector<double> geometric;
  std::vector<double> total;
};

/// Dynamical and geometric parts of the Lewis-Riesenfeld phase for the
/// invariant eigenvalue eta = +-1/2, by trapezoidal quadrature on the grid:
///   dynamical: eta * integral Omega [cos vs cos theta + sin vs sin theta cos(zeta - phi)]
///   geometric: eta * integral dzeta/dt (1 - cos vs)
inline PhaseDecomposition phases(const TwoLevelDrive& drive, const InvariantParams& params, double eta) {
  require(std::abs(std::abs(eta) - 0.5) < 1e-12, "phases: eta must be +1/2 or -1/2");
  require(params.times.size() == drive.size(), "phases: drive and invariant must share the time grid");
  const std::size_t n = drive.size();
  std::vector<double> fd(n), fg(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double vs = params.varsigma[i];
    const double z = params.zeta[i];
    fd[i] = eta * drive.omega(i) *
            (std::cos(vs) * std::cos(drive.theta(i)) +
             std::sin(vs) * std::sin(drive.theta(i)) * std::cos(z - drive.phi(i)));
    fg[i] = eta * params.zeta_rate[i] * (1.0 - std::cos(vs));
  }
  PhaseDecomposition out;
  out.eta = eta;
  out.times = params.times;
  out.dynamical = numerics::cumulative_trapezoid(out.times, fd);
  out.geometric = numerics::cumulative_trapezoid(out.times, fg);
  out.total.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.total[i] = out.dynamical[i] + out.geometric[i];
  return out;
}

// ------------------------------------------------------------------ states

struct StateTrajectory {
  std::vector<double> times;
  std::vector<std::array<cplx, 2>> amplitudes;  // (c_e, c_g)

  CVector state(std::size_t i) const { return {amplitudes[i][0], amplitudes[i][1]}; }
  double excited_population(std::size_t i) const { return std::norm(amplitudes[i][0]); }
};

/// C_eta = <0; eta | psi0>, the coefficients that match an initial state.
inline std::array<cplx, 2> invariant_coefficients(const InvariantParams& params, std::span<const cplx> psi0) {
  const auto basis = invariant_eigenstates(params, 0);
  return {inner(basis[0], psi0), inner(basis[1], psi0)};
}

/// |Psi(t)> = sum_eta C_eta exp(-i phi_eta(t)) |t; eta>.
inline StateTrajectory lr_solution(const TwoLevelDrive& drive, const InvariantParams& params, cplx c_plus,
                                   cplx c_minus) {
  const double nrm = std::norm(c_plus) + std::norm(c_minus);
  if (std::abs(nrm - 1.0) > 1e-10)
    throw DomainError("lr_solution: coefficients must be normalized (|c+|^2 + |c-|^2 = 1)");
  const auto plus = phases(drive, params, 0.5);
  const auto minus = phases(drive, params, -0.5);
  StateTrajectory out;
  out.times = params.times;
  out.amplitudes.resize(out.times.size());
  for (std::size_t i = 0; i < out.times.size(); ++i) {
    const auto basis = invariant_eigenstates(params, i);
    const cplx ap = c_plus * std::exp(cplx(0.0, -plus.total[i]));
    const cplx am = c_minus * std::exp(cplx(0.0, -minus.total[i]));
    out.amplitudes[i] = {ap * basis[0][0] + am * basis[1][0], ap * basis[0][1] + am * basis[1][1]};
  }
  return out;
}

/// Direct RK4 integration of i d|psi>/dt = H(t)|psi>, evaluating the drive
/// profile at the substep times. Each grid interval is split so that
/// (Omega / 2) dt <= max_step_phase.
inline StateTrajectory evolve_schrodinger(const TwoLevelDrive& drive, std::array<cplx, 2> initial,
                                          double max_step_phase = 2.5e-3) {
  require(std::abs(std::norm(initial[0]) + std::norm(initial[1]) - 1.0) < 1e-10,
          "evolve_schrodinger: initial state must be normalized");
  using State = std::array<cplx, 2>;
  auto f = [&](double time, const State& y) {
    const DriveSample d = drive.at(time);
    const cplx i{0.0, 1.0};
    return State{-i * (0.5 * d.delta * y[0] + d.coupling * y[1]),
                 -i * (std::conj(d.coupling) * y[0] - 0.5 * d.delta * y[1])};
  };
  auto add = [](const State& y, double a, const State& k) { return State{y[0] + a * k[0], y[1] + a * k[1]}; };

  const auto& t = drive.times();
  StateTrajectory out;
  out.times = t;
  out.amplitudes.resize(t.size());
  State y = initial;
  out.amplitudes[0] = y;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double dt = t[i + 1] - t[i];
    const DriveSample mid = drive.at(t[i] + 0.5 * dt);
    const double mid_omega = 2.0 * std::sqrt(0.25 * mid.delta * mid.delta + std::norm(mid.coupling));
    const double rate = 0.5 * std::max({drive.omega(i), drive.omega(i + 1), mid_omega});
    const int steps = std::max(1, static_cast<int>(std::ceil(rate * dt / max_step_phase)));
    const double h = dt / steps;
    if (!(t[i] + h > t[i])) throw NumericalError("evolve_schrodinger: integration failure (step size underflow)");
    for (int k = 0; k < steps; ++k) {
      const double time = t[i] + k * h;
      const State k1 = f(time, y);
      const State k2 = f(time + 0.5 * h, add(y, 0.5 * h, k1));
      const State k3 = f(time + 0.5 * h, add(y, 0.5 * h, k2));
      const State k4 = f(time + h, add(y, h, k3));
      for (int c = 0; c < 2; ++c) y[c] += (h / 6.0) * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    out.amplitudes[i + 1] = y;
  }
  return out;
}

/// Invariant eigenstates evaluated at (theta(t), phi(t)): the instantaneous
/// eigenvectors of H with eigenvalues +-Omega/2.
inline std::array<CVector, 2> adiabatic_eigenstates(const TwoLevelDrive& drive, std::size_t sample_index) {
  require(sample_index < drive.size(), "adiabatic_eigenstates: sample index out of range");
  return invariant_eigenstates(drive.theta(sample_index), drive.phi(sample_index));
}

}  // namespace atomguide::two_level
