#pragma once

// Kinematics and spin evolution of a matter wave whose wave vector follows a
// curved (possibly noncoplanar) guide.
//
// The wave vector is k(t) = k n(t) with the unit direction
// n = (sin(theta) cos(phi), sin(theta) sin(phi), cos(theta)). The coupling to
// the guide curvature is the effective Hamiltonian H = hbar (n x dn/dt) . J,
// whose exact solution for an initial J3 eigenstate |m> (with theta(0) = 0) is
//
//   |m, k(t)> = exp(-i phi_m(t)) V(t) |m>,
//   phi_m(t)  = m * integral dphi (1 - cos theta),
//   V(t)      = exp(beta J+ - conj(beta) J-),  beta = -(theta / 2) exp(-i phi).
//
// Matrices are in units of hbar; time derivatives are per second.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "atomguide/constants.hpp"
#include "atomguide/errors.hpp"
#include "atomguide/linalg.hpp"
#include "atomguide/numerics.hpp"

namespace atomguide::guide {

// ------------------------------------------------------------------ spin rep

/// Spin-j matrices with J+- = (J1 +- i J2) / hbar. Basis index i carries
/// m = j - i (m descending, so |+j> is the first basis vector).
class AngularMomentumRep {
 public:
  /// `j` must be a non-negative integer or half-integer.
  explicit AngularMomentumRep(double j) {
    const double twice = 2.0 * j;
    require(j >= 0.0 && std::abs(twice - std::round(twice)) < 1e-12,
            "AngularMomentumRep: j must be a non-negative half-integer");
    twice_j_ = static_cast<int>(std::lround(twice));
    const std::size_t d = dim();
    j3_ = CMatrix(d);
    jplus_ = CMatrix(d);
    jminus_ = CMatrix(d);
    for (std::size_t i = 0; i < d; ++i) {
      const double m = m_value(i);
      j3_(i, i) = m;
      if (i > 0) {
        // J+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>, and |m+1> has index i-1.
        const double c = std::sqrt(this->j() * (this->j() + 1.0) - m * (m + 1.0));
        jplus_(i - 1, i) = c;
        jminus_(i, i - 1) = c;
      }
    }
  }

  double j() const { return 0.5 * twice_j_; }
  std::size_t dim() const { return static_cast<std::size_t>(twice_j_ + 1); }
  double m_value(std::size_t index) const { return j() - static_cast<double>(index); }

  std::size_t index_of(double m) const {
    const double idx = j() - m;
    require(std::abs(m) <= j() + 1e-12 && std::abs(idx - std::round(idx)) < 1e-12,
            "AngularMomentumRep: m is not a valid projection for this j");
    return static_cast<std::size_t>(std::lround(idx));
  }

  const CMatrix& j3() const { return j3_; }
  const CMatrix& jplus() const { return jplus_; }
  const CMatrix& jminus() const { return jminus_; }
  CMatrix j1() const { return 0.5 * (jplus_ + jminus_); }
  CMatrix j2() const { return cplx(0.0, -0.5) * (jplus_ - jminus_); }

  /// a . J for a real 3-vector a.
  CMatrix dot(const Vec3& a) const {
    CMatrix h = a[2] * j3_;
    h += cplx(0.5 * a[0], -0.5 * a[1]) * jplus_;
    h += cplx(0.5 * a[0], 0.5 * a[1]) * jminus_;
    return h;
  }

  /// Basis vector |m>.
  CVector basis_state(double m) const {
    CVector v(dim());
    v[index_of(m)] = 1.0;
    return v;
  }

 private:
  int twice_j_ = 1;
  CMatrix j3_, jplus_, jminus_;
};

// ------------------------------------------------------------------ path

inline Vec3 direction_from_angles(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

/// Time-sampled propagation direction (theta, phi) of a wave vector with
/// constant modulus.
class WaveVectorPath {
 public:
  WaveVectorPath(std::vector<double> times, std::vector<double> theta, std::vector<double> phi,
                 double k_modulus)
      : times_(std::move(times)), theta_(std::move(theta)), phi_(std::move(phi)), k_(k_modulus) {
    require(times_.size() >= 3, "WaveVectorPath: at least 3 samples are required");
    require(theta_.size() == times_.size() && phi_.size() == times_.size(),
            "WaveVectorPath: times, theta and phi must have equal length");
    require(numerics::strictly_increasing(times_), "WaveVectorPath: times must be strictly increasing");
    require(k_ > 0.0 && std::isfinite(k_), "WaveVectorPath: k_modulus must be positive");
    for (std::size_t i = 0; i < times_.size(); ++i) {
      require(theta_[i] >= 0.0 && theta_[i] <= std::numbers::pi, "WaveVectorPath: theta outside [0, pi]");
      require(std::isfinite(phi_[i]), "WaveVectorPath: phi must be finite");
      if (i > 0)
        require(std::abs(phi_[i] - phi_[i - 1]) <= std::numbers::pi,
                "WaveVectorPath: phi must be unwrapped (jump larger than pi)");
    }
  }

  /// Builds the path from unit (or unnormalized) direction vectors. The
  /// azimuth is taken from atan2 and unwrapped; on the poles it is held at the
  /// neighbouring value (0 for a path that never leaves the pole).
  static WaveVectorPath from_directions(std::vector<double> times, std::span<const Vec3> directions,
                                        double k_modulus) {
    require(directions.size() == times.size(), "WaveVectorPath: direction count mismatch");
    const std::size_t n = directions.size();
    std::vector<double> theta(n), phi(n);
    std::vector<bool> on_pole(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double len = norm(directions[i]);
      require(len > 0.0, "WaveVectorPath: zero direction vector");
      const Vec3 u = (1.0 / len) * directions[i];
      const double rho = std::hypot(u[0], u[1]);
      theta[i] = std::atan2(rho, u[2]);
      on_pole[i] = rho < 1e-14;
      phi[i] = on_pole[i] ? 0.0 : std::atan2(u[1], u[0]);
    }
    std::size_t first = 0;
    while (first < n && on_pole[first]) ++first;
    if (first < n) {
      for (std::size_t i = 0; i < first; ++i) phi[i] = phi[first];
      for (std::size_t i = first + 1; i < n; ++i)
        if (on_pole[i]) phi[i] = phi[i - 1];
    }
    numerics::unwrap(phi);
    return WaveVectorPath(std::move(times), std::move(theta), std::move(phi), k_modulus);
  }

  std::size_t size() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& theta() const { return theta_; }
  const std::vector<double>& phi() const { return phi_; }
  double k_modulus() const { return k_; }
  Vec3 direction(std::size_t i) const { return direction_from_angles(theta_[i], phi_[i]); }

  std::vector<Vec3> directions() const {
    std::vector<Vec3> d(size());
    for (std::size_t i = 0; i < size(); ++i) d[i] = direction(i);
    return d;
  }

 private:
  std::vector<double> times_, theta_, phi_;
  double k_;
};

namespace detail {

inline std::vector<double> cumulative_chord(std::span<const Vec3> points) {
  std::vector<double> s(points.size(), 0.0);
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double d = norm(points[i] - points[i - 1]);
    const double scale = std::max(norm(points[i]), norm(points[i - 1]));
    if (!(d > 1e-14 * scale) || d == 0.0)
      throw DomainError("path_from_centerline: degenerate tangent (coincident consecutive points at index " +
                        std::to_string(i) + ")");
    s[i] = s[i - 1] + d;
  }
  return s;
}

}  // namespace detail

/// Wave-vector path of an atom moving at constant `speed` (m/s) along a
/// sampled guide centerline (m). Times follow from arc length; k = mass speed / hbar.
inline WaveVectorPath path_from_centerline(std::span<const Vec3> points, double speed, double mass) {
  if (points.size() < 4) throw DomainError("path_from_centerline: insufficient data (need at least 4 points)");
  require(speed > 0.0 && mass > 0.0, "path_from_centerline: speed and mass must be positive");
  const auto s = detail::cumulative_chord(points);
  const auto tangents = numerics::derivative<Vec3>(s, points);
  std::vector<double> times(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) times[i] = s[i] / speed;
  return WaveVectorPath::from_directions(std::move(times), tangents, mass * speed / constants::hbar);
}

/// Same as above for a centerline with its own time stamps (CSV input). The
/// constant speed is the total arc length over the total duration.
inline WaveVectorPath path_from_timed_centerline(std::span<const double> times, std::span<const Vec3> points,
                                                 double mass) {
  if (points.size() < 4) throw DomainError("path_from_centerline: insufficient data (need at least 4 points)");
  require(times.size() == points.size(), "path_from_centerline: times and points differ in length");
  require(numerics::strictly_increasing(times), "path_from_centerline: times must be strictly increasing");
  require(mass > 0.0, "path_from_centerline: mass must be positive");
  const auto s = detail::cumulative_chord(points);
  const auto tangents = numerics::derivative<Vec3>(times, points);
  const double speed = s.back() / (times.back() - times.front());
  return WaveVectorPath::from_directions(std::vector<double>(times.begin(), times.end()), tangents,
                                         mass * speed / constants::hbar);
}

/// Helix of constant polar angle `theta` turning at `rate` rad/s, optionally
/// preceded by `lead_in_turns` during which theta rises from 0 along
/// theta u^3 (10 - 15 u + 6 u^2) while phi keeps turning.
inline WaveVectorPath helix_path(double theta, double rate, double k_modulus, double turns, int per_turn,
                                 double lead_in_turns = 0.0) {
  require(theta > 0.0 && theta < std::numbers::pi, "helix_path: theta must lie in (0, pi)");
  require(rate > 0.0 && std::isfinite(rate), "helix_path: rate must be positive");
  require(turns > 0.0 && lead_in_turns >= 0.0, "helix_path: turns must be positive and lead-in non-negative");
  require(per_turn >= 8, "helix_path: need at least 8 samples per turn");
  const double turn_time = 2.0 * std::numbers::pi / rate;
  const double ramp = lead_in_turns * turn_time;
  const double duration = ramp + turns * turn_time;
  const auto n = static_cast<std::size_t>(std::llround((turns + lead_in_turns) * per_turn)) + 1;
  std::vector<double> t(n), th(n), ph(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = duration * static_cast<double>(i) / static_cast<double>(n - 1);
    const double u = ramp > 0.0 ? std::min(t[i] / ramp, 1.0) : 1.0;
    th[i] = theta * u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
    ph[i] = rate * t[i];
  }
  return WaveVectorPath(std::move(t), std::move(th), std::move(ph), k_modulus);
}

/// Rotates the whole path rigidly so that its initial direction is +z. The
/// closed-form evolution requires theta(0) = 0; this fixes the frame.
inline WaveVectorPath rotate_to_initial_z(const WaveVectorPath& path) {
  const Vec3 n0 = path.direction(0);
  const Vec3 z{0.0, 0.0, 1.0};
  const Vec3 axis = cross(n0, z);
  const double s = norm(axis);
  const double c = dot(n0, z);
  auto dirs = path.directions();
  if (s > 1e-15) {
    const Vec3 u = (1.0 / s) * axis;
    for (auto& d : dirs) {
      // Rodrigues rotation taking n0 onto z.
      d = c * d + s * cross(u, d) + ((1.0 - c) * dot(u, d)) * u;
    }
  } else if (c < 0.0) {
    for (auto& d : dirs) d = {d[0], -d[1], -d[2]};  // pi about x
  }
  auto rotated = WaveVectorPath::from_directions(path.times(), dirs, path.k_modulus());
  auto theta = rotated.theta();
  theta[0] = 0.0;
  return WaveVectorPath(rotated.times(), std::move(theta), rotated.phi(), rotated.k_modulus());
}

// ------------------------------------------------------------------ fields

/// dn/dt at every sample by second-order finite differences (centered inside,
/// one-sided at the ends).
inline std::vector<Vec3> direction_rate(const WaveVectorPath& path) {
  const auto dirs = path.directions();
  return numerics::derivative<Vec3>(path.times(), dirs);
}

/// Rotation vector n x dn/dt = (k x dk/dt) / k^2 per sample (rad/s).
inline std::vector<Vec3> precession_vector(const WaveVectorPath& path) {
  const auto rate = direction_rate(path);
  std::vector<Vec3> w(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) w[i] = cross(path.direction(i), rate[i]);
  return w;
}

/// Effective field B_eff = -2 eta (k x dk/dt) / k^2 with eta = 1/2.
inline std::vector<Vec3> effective_field(const WaveVectorPath& path) {
  auto w = precession_vector(path);
  for (auto& v : w) v = -1.0 * v;
  return w;
}

/// max_i |dk/dt + k x (k x dk/dt) / k^2| / |dk/dt| (0 where dk/dt vanishes).
/// The continuum value is exactly zero; what remains is discretization error.
inline double motion_identity_residual(const WaveVectorPath& path) {
  const auto rate = direction_rate(path);
  double worst = 0.0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const Vec3 n = path.direction(i);
    const double r = norm(rate[i]);
    if (r == 0.0) continue;
    const Vec3 res = rate[i] + cross(n, cross(n, rate[i]));
    worst = std::max(worst, norm(res) / r);
  }
  return worst;
}

/// H_eff / hbar at one sample, in rad/s.
inline CMatrix effective_hamiltonian(const WaveVectorPath& path, const AngularMomentumRep& rep,
                                     std::size_t sample_index) {
  require(sample_index < path.size(), "effective_hamiltonian: sample index out of range");
  return rep.dot(precession_vector(path)[sample_index]);
}

/// phi_m(t) = m * integral dphi (1 - cos theta), trapezoidal in phi. For a
/// closed direction loop this is m times the enclosed solid angle.
inline std::vector<double> geometric_phase(const WaveVectorPath& path, double m) {
  const auto& th = path.theta();
  const auto& ph = path.phi();
  std::vector<double> out(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double avg = 0.5 * ((1.0 - std::cos(th[i])) + (1.0 - std::cos(th[i - 1])));
    out[i] = out[i - 1] + m * avg * (ph[i] - ph[i - 1]);
  }
  return out;
}

/// V = exp(beta J+ - conj(beta) J-), beta = -(theta/2) e^{-i phi}: the rotation
/// by theta about (-sin phi, cos phi, 0), taking +z onto n(theta, phi).
inline CMatrix rotation_operator(double theta, double phi, const AngularMomentumRep& rep) {
  const cplx beta = -0.5 * theta * std::exp(cplx(0.0, -phi));
  CMatrix gen = beta * rep.jplus();
  gen -= std::conj(beta) * rep.jminus();
  return expm(gen);
}

// ------------------------------------------------------------------ evolution

struct GuideEvolution {
  std::vector<double> times;
  std::vector<double> phase;       // phi_m per sample (rad); empty for direct integration
  std::vector<CMatrix> operators;  // V(t) per sample; empty for direct integration
  std::vector<CVector> states;
};

/// <psi| n(t).J |psi> / hbar at sample i.
inline double direction_projection(const WaveVectorPath& path, const AngularMomentumRep& rep, std::size_t i,
                                   std::span<const cplx> state) {
  const auto nj = rep.dot(path.direction(i));
  return std::real(inner(state, nj * state));
}

/// Closed-form evolution of the initial J3 eigenstate |m>. Requires
/// theta(0) = 0; use rotate_to_initial_z for other starting directions.
inline GuideEvolution evolve_closed_form(const WaveVectorPath& path, const AngularMomentumRep& rep, double m) {
  if (std::abs(path.theta().front()) > 1e-12)
    throw DomainError(
        "evolve_closed_form: initial polar angle must be 0 (rotate the frame with rotate_to_initial_z first)");
  const CVector ket_m = rep.basis_state(m);
  GuideEvolution ev;
  ev.times = path.times();
  ev.phase = geometric_phase(path, m);
  ev.operators.reserve(path.size());
  ev.states.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    ev.operators.push_back(rotation_operator(path.theta()[i], path.phi()[i], rep));
    CVector psi = ev.operators.back() * ket_m;
    const cplx ph = std::exp(cplx(0.0, -ev.phase[i]));
    for (auto& c : psi) c *= ph;
    ev.states.push_back(std::move(psi));
  }
  return ev;
}

/// Direct RK4 integration of i d|psi>/dt = (n x dn/dt).J |psi> on the path's
/// sample grid. Between samples the rotation vector is interpolated linearly;
/// each interval is split so that |omega| dt <= max_step_angle.
inline GuideEvolution evolve_direct(const WaveVectorPath& path, const AngularMomentumRep& rep,
                                    const CVector& initial_state, double max_step_angle = 1e-2) {
  require(initial_state.size() == rep.dim(), "evolve_direct: state dimension mismatch");
  require(std::abs(norm(initial_state) - 1.0) < 1e-10, "evolve_direct: initial state must be normalized");
  const auto w = precession_vector(path);
  const auto& t = path.times();

  GuideEvolution ev;
  ev.times = t;
  ev.states.reserve(path.size());
  CVector psi = initial_state;
  ev.states.push_back(psi);

  auto rhs = [&](const Vec3& omega, const CVector& y) {
    CVector d = rep.dot(omega) * y;
    for (auto& c : d) c *= cplx(0.0, -1.0);
    return d;
  };
  auto axpy = [](const CVector& y, cplx a, const CVector& x) {
    CVector r = y;
    for (std::size_t k = 0; k < r.size(); ++k) r[k] += a * x[k];
    return r;
  };

  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double dt = t[i + 1] - t[i];
    const double rate = std::max(norm(w[i]), norm(w[i + 1]));
    const int steps = std::max(1, static_cast<int>(std::ceil(rate * dt / max_step_angle)));
    const double h = dt / steps;
    if (!(t[i] + h > t[i])) throw NumericalError("evolve_direct: integration failure (step size underflow)");
    auto omega_at = [&](double s) { return (1.0 - s) * w[i] + s * w[i + 1]; };
    for (int k = 0; k < steps; ++k) {
      const double s0 = static_cast<double>(k) / steps;
      const double s1 = static_cast<double>(k + 1) / steps;
      const double sm = 0.5 * (s0 + s1);
      const CVector k1 = rhs(omega_at(s0), psi);
      const CVector k2 = rhs(omega_at(sm), axpy(psi, 0.5 * h, k1));
      const CVector k3 = rhs(omega_at(sm), axpy(psi, 0.5 * h, k2));
      const CVector k4 = rhs(omega_at(s1), axpy(psi, h, k3));
      for (std::size_t c = 0; c < psi.size(); ++c) psi[c] += (h / 6.0) * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    ev.states.push_back(psi);
  }
  return ev;
}

}  // namespace atomguide::guide
