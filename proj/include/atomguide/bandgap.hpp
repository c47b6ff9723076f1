#pragma once

// Matter-wave bands and transmission in a spatially periodic guiding
// potential, by two independent routes: a plane-wave expansion of the Bloch
// problem and piecewise-constant transfer matrices.
//
// Kernels run in recoil units. With lattice period a and k_L = pi / a,
//   E_r = hbar^2 k_L^2 / (2 mass),
// lengths are measured in 1/k_L and wavenumbers in k_L, so the free
// dispersion reads E = kappa^2 E_r. For an optical lattice with a = lambda/2
// this E_r is the photon recoil energy. Public functions take and return SI.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "atomguide/constants.hpp"
#include "atomguide/dressed.hpp"
#include "atomguide/errors.hpp"
#include "atomguide/linalg.hpp"
#include "atomguide/numerics.hpp"

namespace atomguide::bands {

inline constexpr double pi = std::numbers::pi;

/// Recoil energy hbar^2 (pi/a)^2 / (2 mass) in joules.
inline double recoil_energy(double period, double mass) {
  require(period > 0.0 && mass > 0.0, "recoil_energy: period and mass must be positive");
  const double k = pi / period;
  return constants::hbar * constants::hbar * k * k / (2.0 * mass);
}

// ------------------------------------------------------------ potential

/// One period of a real potential (J), sampled at x_j = j a / M, j = 0..M-1.
class PeriodicPotential {
 public:
  PeriodicPotential(double period, std::vector<double> samples) : period_(period), u_(std::move(samples)) {
    require(period_ > 0.0 && std::isfinite(period_), "PeriodicPotential: period must be positive");
    require(u_.size() >= 4, "PeriodicPotential: need at least 4 samples per period");
    for (double v : u_) require(std::isfinite(v), "PeriodicPotential: samples must be finite");
  }

  static PeriodicPotential from_function(double period, const std::function<double(double)>& f, std::size_t m) {
    std::vector<double> u(m);
    for (std::size_t j = 0; j < m; ++j) u[j] = f(period * static_cast<double>(j) / static_cast<double>(m));
    return PeriodicPotential(period, std::move(u));
  }

  /// depth * cos(2 pi x / a)
  static PeriodicPotential cosine(double period, double depth, std::size_t m = 256) {
    return from_function(period, [=](double x) { return depth * std::cos(2.0 * pi * x / period); }, m);
  }

  /// Samples at explicit positions. The grid must be uniform and cover one
  /// period; a trailing point at x0 + period (closing the cell) is dropped.
  static PeriodicPotential from_samples(std::span<const double> x, std::span<const double> u, double period) {
    require(x.size() == u.size() && x.size() >= 4, "PeriodicPotential: need at least 4 (x, U) samples");
    require(period > 0.0, "PeriodicPotential: period must be positive");
    const double dx = x[1] - x[0];
    require(dx > 0.0, "PeriodicPotential: positions must increase");
    for (std::size_t i = 1; i < x.size(); ++i)
      if (std::abs((x[i] - x[i - 1]) - dx) > 1e-6 * dx)
        throw DomainError("PeriodicPotential: non-uniform grid (spacing changes at index " + std::to_string(i) + ")");
    std::size_t m = x.size();
    if (std::abs(x.back() - x.front() - period) < 1e-6 * dx) --m;
    if (std::abs(static_cast<double>(m) * dx - period) > 1e-6 * period)
      throw DomainError("PeriodicPotential: samples do not span exactly one period");
    return PeriodicPotential(period, std::vector<double>(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(m)));
  }

  double period() const { return period_; }
  std::size_t size() const { return u_.size(); }
  const std::vector<double>& samples() const { return u_; }
  double position(std::size_t j) const { return period_ * static_cast<double>(j) / static_cast<double>(u_.size()); }

  double mean() const {
    double s = 0.0;
    for (double v : u_) s += v;
    return s / static_cast<double>(u_.size());
  }

  PeriodicPotential shifted(double offset) const {
    auto u = u_;
    for (auto& v : u) v += offset;
    return PeriodicPotential(period_, std::move(u));
  }

  PeriodicPotential minus_mean() const { return shifted(-mean()); }

 private:
  double period_;
  std::vector<double> u_;
};

// ------------------------------------------------------------ Fourier

/// Coefficients U_n = (1/a) integral U(x) exp(-2 pi i n x / a) dx for |n| <= n_harm.
struct FourierTable {
  int n_harm = 0;
  std::vector<cplx> coeffs;  // index n + n_harm

  cplx operator[](int n) const {
    if (n < -n_harm || n > n_harm) return {};
    return coeffs[static_cast<std::size_t>(n + n_harm)];
  }

  /// sum |U_n|^2; equals the mean of U^2 for potentials band-limited to n_harm.
  double power() const {
    double s = 0.0;
    for (const auto& c : coeffs) s += std::norm(c);
    return s;
  }
};

/// Trapezoidal quadrature on the uniform periodic grid (a DFT); the real
/// input makes U_{-n} = conj(U_n), which is imposed exactly.
inline FourierTable fourier_coeffs(std::span<const double> samples, int n_harm) {
  const std::size_t m = samples.size();
  require(n_harm >= 0, "fourier_coeffs: n_harm must be non-negative");
  require(m >= 4 * static_cast<std::size_t>(std::max(n_harm, 1)),
          "fourier_coeffs: need at least 4 samples per harmonic");
  FourierTable t;
  t.n_harm = n_harm;
  t.coeffs.assign(2 * static_cast<std::size_t>(n_harm) + 1, cplx{});
  for (int n = 0; n <= n_harm; ++n) {
    cplx s{};
    for (std::size_t j = 0; j < m; ++j) {
      // Reduce the index first so the angle stays small and exact.
      const std::size_t r = (static_cast<std::size_t>(n) * j) % m;
      const double ang = -2.0 * pi * static_cast<double>(r) / static_cast<double>(m);
      s += samples[j] * cplx(std::cos(ang), std::sin(ang));
    }
    s /= static_cast<double>(m);
    if (n == 0) s = std::real(s);
    t.coeffs[static_cast<std::size_t>(n_harm + n)] = s;
    t.coeffs[static_cast<std::size_t>(n_harm - n)] = std::conj(s);
  }
  return t;
}

/// Positions variant: rejects non-uniform grids.
inline FourierTable fourier_coeffs(std::span<const double> x, std::span<const double> u, double period, int n_harm) {
  const auto pot = PeriodicPotential::from_samples(x, u, period);
  return fourier_coeffs(pot.samples(), n_harm);
}

// ------------------------------------------------------------ Bloch bands

struct BlochSpectrum {
  std::vector<double> q;                   // 1/m, in [-pi/a, pi/a]
  std::vector<std::vector<double>> bands;  // [iq][n] in J, ascending in n
  double period = 0.0;
  double recoil_energy = 0.0;  // J
  int plane_waves = 0;
  double cutoff_change = 0.0;  // max change (E_r) of the checked bands when plane_waves grows by 2
  bool converged = true;

  std::size_t band_count() const { return bands.empty() ? 0 : bands.front().size(); }
  double energy(std::size_t iq, std::size_t n) const { return bands[iq][n]; }
};

struct BandOptions {
  bool check_convergence = true;
  double convergence_tolerance = 1e-8;  // E_r
  std::size_t checked_bands = 5;
  unsigned threads = 1;
};

/// q values (1/m) evenly covering [-pi/a, pi/a], endpoints included.
inline std::vector<double> brillouin_grid(double period, std::size_t points) {
  require(points >= 2, "brillouin_grid: need at least 2 points");
  return numerics::linspace(-pi / period, pi / period, points);
}

namespace detail {

// Plane-wave Hamiltonian in E_r at reduced momentum qr = q a / pi.
inline std::vector<double> bloch_energies_reduced(const FourierTable& u_er, double qr, int n_pw) {
  const int half = (n_pw - 1) / 2;
  CMatrix h(static_cast<std::size_t>(n_pw));
  for (int i = 0; i < n_pw; ++i) {
    const double kin = qr + 2.0 * (i - half);
    h(i, i) = kin * kin;
    for (int j = 0; j < n_pw; ++j) h(i, j) += u_er[i - j];
  }
  return jacobi_eigh(std::move(h)).values;
}

inline FourierTable reduced_fourier(const PeriodicPotential& pot, double er, int n_pw_max) {
  const int wanted = n_pw_max - 1;  // largest index difference in the matrix
  const int available = static_cast<int>(pot.size() / 4);
  auto t = fourier_coeffs(pot.samples(), std::min(wanted, available));
  for (auto& c : t.coeffs) c /= er;
  return t;
}

}  // namespace detail

/// Bloch bands from the (n_pw x n_pw) plane-wave Hamiltonian with kinetic
/// diagonal hbar^2 (q + 2 pi n / a)^2 / 2 mass and couplings U_{n-m}.
inline BlochSpectrum bloch_bands(const PeriodicPotential& pot, double mass, std::span<const double> q_grid, int n_pw,
                                 const BandOptions& opts = {}) {
  require(n_pw >= 1 && n_pw % 2 == 1, "bloch_bands: plane-wave count must be odd");
  const double a = pot.period();
  const double er = recoil_energy(a, mass);
  for (double q : q_grid)
    require(std::abs(q) <= pi / a * (1.0 + 1e-12), "bloch_bands: q outside the first Brillouin zone");
  const auto u = detail::reduced_fourier(pot, er, n_pw + 2);

  BlochSpectrum s;
  s.q.assign(q_grid.begin(), q_grid.end());
  s.period = a;
  s.recoil_energy = er;
  s.plane_waves = n_pw;
  s.bands.resize(s.q.size());
  std::vector<double> change(s.q.size(), 0.0);
  const std::size_t checked = std::min<std::size_t>(opts.checked_bands, static_cast<std::size_t>((n_pw + 1) / 2));
  numerics::parallel_for(s.q.size(), opts.threads, [&](std::size_t iq) {
    const double qr = s.q[iq] * a / pi;
    auto e = detail::bloch_energies_reduced(u, qr, n_pw);
    if (opts.check_convergence) {
      const auto wider = detail::bloch_energies_reduced(u, qr, n_pw + 2);
      for (std::size_t n = 0; n < checked; ++n) change[iq] = std::max(change[iq], std::abs(wider[n] - e[n]));
    }
    for (auto& v : e) v *= er;
    s.bands[iq] = std::move(e);
  });
  s.cutoff_change = *std::max_element(change.begin(), change.end());
  s.converged = s.cutoff_change <= opts.convergence_tolerance;
  return s;
}

// ------------------------------------------------------------ gaps

struct Gap {
  int band = 0;         // 1-based index of the band below the gap
  double bottom = 0.0;  // J, max of band `band`
  double top = 0.0;     // J, min of band `band + 1`
  double width() const { return top - bottom; }
};

struct GapReport {
  std::vector<Gap> gaps;
  double recoil_energy = 0.0;
};

/// Gaps between consecutive bands (extrema over the sampled q grid), keeping
/// widths above min_width_er recoil energies. Only the lowest max_bands
/// bands are considered (0 = all).
inline GapReport detect_gaps(const BlochSpectrum& s, std::size_t max_bands = 0, double min_width_er = 1e-9) {
  GapReport r;
  r.recoil_energy = s.recoil_energy;
  const std::size_t nb = max_bands == 0 ? s.band_count() : std::min(max_bands, s.band_count());
  if (s.q.empty() || nb < 2) return r;
  for (std::size_t n = 0; n + 1 < nb; ++n) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (const auto& e : s.bands) {
      lo = std::max(lo, e[n]);
      hi = std::min(hi, e[n + 1]);
    }
    if (hi - lo > min_width_er * s.recoil_energy) r.gaps.push_back({static_cast<int>(n + 1), lo, hi});
  }
  return r;
}

/// Band structure plus gap report with q-grid refinement: the grid is doubled
/// until every gap edge moves by less than edge_tolerance_er.
struct BandReport {
  BlochSpectrum spectrum;
  GapReport gaps;
  int refinements = 0;
};

inline BandReport band_gaps(const PeriodicPotential& pot, double mass, int n_pw, std::size_t max_bands,
                            std::size_t q_points = 65, double edge_tolerance_er = 1e-6, const BandOptions& opts = {},
                            int max_refinements = 5) {
  require(q_points >= 64, "band_gaps: gap detection needs at least 64 q points");
  BandReport out;
  out.spectrum = bloch_bands(pot, mass, brillouin_grid(pot.period(), q_points), n_pw, opts);
  out.gaps = detect_gaps(out.spectrum, max_bands);
  const double er = out.spectrum.recoil_energy;
  BandOptions finer_opts = opts;
  finer_opts.check_convergence = false;
  for (int k = 0; k < max_refinements; ++k) {
    // Doubling keeps every old q point; only the midpoints are new.
    const auto& old = out.spectrum;
    std::vector<double> mids(old.q.size() - 1);
    for (std::size_t i = 0; i + 1 < old.q.size(); ++i) mids[i] = 0.5 * (old.q[i] + old.q[i + 1]);
    auto added = bloch_bands(pot, mass, mids, n_pw, finer_opts);
    BlochSpectrum finer = old;
    finer.q.clear();
    finer.bands.clear();
    for (std::size_t i = 0; i < old.q.size(); ++i) {
      finer.q.push_back(old.q[i]);
      finer.bands.push_back(old.bands[i]);
      if (i < mids.size()) {
        finer.q.push_back(mids[i]);
        finer.bands.push_back(std::move(added.bands[i]));
      }
    }
    auto gaps = detect_gaps(finer, max_bands);
    bool stable = gaps.gaps.size() == out.gaps.gaps.size();
    for (std::size_t g = 0; stable && g < gaps.gaps.size(); ++g) {
      stable = gaps.gaps[g].band == out.gaps.gaps[g].band &&
               std::abs(gaps.gaps[g].bottom - out.gaps.gaps[g].bottom) < edge_tolerance_er * er &&
               std::abs(gaps.gaps[g].top - out.gaps.gaps[g].top) < edge_tolerance_er * er;
    }
    out.spectrum = std::move(finer);
    out.gaps = std::move(gaps);
    out.refinements = k + 1;
    if (stable) break;
  }
  return out;
}

// ------------------------------------------------------------ transfer matrices

struct Matrix2 {
  double a11 = 1.0, a12 = 0.0, a21 = 0.0, a22 = 1.0;
  double trace() const { return a11 + a22; }
  double det() const { return a11 * a22 - a12 * a21; }
  double max_abs() const { return std::max({std::abs(a11), std::abs(a12), std::abs(a21), std::abs(a22)}); }
};

inline Matrix2 operator*(const Matrix2& x, const Matrix2& y) {
  return {x.a11 * y.a11 + x.a12 * y.a21, x.a11 * y.a12 + x.a12 * y.a22, x.a21 * y.a11 + x.a22 * y.a21,
          x.a21 * y.a12 + x.a22 * y.a22};
}

namespace detail {

// Maps (psi, psi') across a slab of constant potential; e_local = E - U in E_r,
// width in 1/k_L.
inline Matrix2 slab_matrix(double e_local, double width) {
  if (e_local > 0.0) {
    const double k = std::sqrt(e_local);
    const double c = std::cos(k * width), s = std::sin(k * width);
    return {c, s / k, -k * s, c};
  }
  if (e_local < 0.0) {
    const double k = std::sqrt(-e_local);
    const double c = std::cosh(k * width), s = std::sinh(k * width);
    return {c, s / k, k * s, c};
  }
  return {1.0, width, 0.0, 1.0};
}

// One period: slab j is centred on sample j with width a / M.
inline Matrix2 period_matrix(const PeriodicPotential& pot, double er, double energy_er) {
  const double width = pi / static_cast<double>(pot.size());
  Matrix2 m;
  for (double u : pot.samples()) m = slab_matrix(energy_er - u / er, width) * m;
  return m;
}

}  // namespace detail

struct TraceResult {
  bool allowed = true;
  double trace = 2.0;
  double decay_constant = 0.0;  // 1/m, zero inside a band
  double determinant = 1.0;
};

/// Single-period transfer matrix M at absolute energy E (J): allowed iff
/// |tr M| <= 2, otherwise Bloch waves decay as exp(-x arccosh(|tr M|/2) / a).
inline TraceResult trace_criterion(const PeriodicPotential& pot, double mass, double energy) {
  require(pot.size() >= 64, "trace_criterion: need at least 64 slices per period");
  const double er = recoil_energy(pot.period(), mass);
  const Matrix2 m = detail::period_matrix(pot, er, energy / er);
  TraceResult r;
  r.trace = m.trace();
  r.determinant = m.det();
  r.allowed = std::abs(r.trace) <= 2.0;
  r.decay_constant = r.allowed ? 0.0 : std::acosh(0.5 * std::abs(r.trace)) / pot.period();
  return r;
}

struct TransmissionSpectrum {
  std::vector<double> energies;  // J, measured from the lead potential
  std::vector<double> transmission;
  std::vector<double> log_transmission;
  int periods = 0;
  double lead_level = 0.0;  // J
};

/// Transmission through n_periods cells between free leads. Energies are
/// kinetic energies in the leads; the lead level defaults to the period
/// average of the potential. Products are renormalized every cell and the
/// scale carried in log form, so deep-gap values do not overflow.
inline TransmissionSpectrum transfer_transmission(const PeriodicPotential& pot, double mass, int n_periods,
                                                  std::span<const double> energies,
                                                  std::optional<double> lead_level = std::nullopt) {
  require(pot.size() >= 64, "transfer_transmission: need at least 64 slices per period");
  require(n_periods >= 1, "transfer_transmission: need at least one period");
  const double er = recoil_energy(pot.period(), mass);
  TransmissionSpectrum out;
  out.periods = n_periods;
  out.lead_level = lead_level.value_or(pot.mean());
  out.energies.assign(energies.begin(), energies.end());
  out.transmission.resize(energies.size());
  out.log_transmission.resize(energies.size());
  const PeriodicPotential rel = pot.shifted(-out.lead_level);
  for (std::size_t i = 0; i < energies.size(); ++i) {
    require(energies[i] > 0.0, "transfer_transmission: energies must be positive");
    const double e = energies[i] / er;
    const Matrix2 cell = detail::period_matrix(rel, er, e);
    Matrix2 p;
    double log_scale = 0.0;
    for (int n = 0; n < n_periods; ++n) {
      p = cell * p;
      const double s = p.max_abs();
      p = {p.a11 / s, p.a12 / s, p.a21 / s, p.a22 / s};
      log_scale += std::log(s);
    }
    const double k = std::sqrt(e);
    const double x = p.a21 / k - k * p.a12;
    const double y = p.a11 + p.a22;
    const double log_t = std::log(4.0) - 2.0 * log_scale - std::log(x * x + y * y);
    out.log_transmission[i] = log_t;
    out.transmission[i] = std::max(0.0, std::exp(log_t));
  }
  return out;
}

// ------------------------------------------------------------ recoil scales

struct RecoilScales {
  double photon_momentum = 0.0;  // kg m/s
  double recoil_energy = 0.0;    // J
  double recoil_temperature = 0.0;  // K
  bool momentum_in_anchor_band = false;   // within [1e-28, 1e-26] kg m/s
  bool temperature_below_anchor = false;  // below 1e-5 K
};

inline RecoilScales recoil_scales(double wavelength, double mass) {
  require(wavelength > 0.0 && mass > 0.0, "recoil_scales: wavelength and mass must be positive");
  RecoilScales r;
  r.photon_momentum = 2.0 * pi * constants::hbar / wavelength;
  r.recoil_energy = r.photon_momentum * r.photon_momentum / (2.0 * mass);
  r.recoil_temperature = r.recoil_energy / constants::boltzmann;
  r.momentum_in_anchor_band = r.photon_momentum >= 1e-28 && r.photon_momentum <= 1e-26;
  r.temperature_below_anchor = r.recoil_temperature < 1e-5;
  return r;
}

// ------------------------------------------------------------ dressed lattices

enum class DressedBranch { u_minus, u_plus, e_minus, e_zero, e_plus };

/// Two-level atom in a standing-wave mode g(x) = g0 cos(2 pi x / a); rad/s.
struct TwoLevelLattice {
  int photons = 0;
  double delta = 0.0;
  double g0 = 0.0;
};

/// Lambda atom: probe coupling g1(x) = g1 cos(2 pi x / a) on |g1>-|e>, and a
/// spatially uniform control coupling g2 on |g2>-|e>; rad/s.
struct LambdaLattice {
  int n1 = 0;
  int n2 = 0;
  double g1 = 0.0;
  double g2 = 0.0;
  double e0 = 0.0;
};

using DressedLatticeInput = std::variant<TwoLevelLattice, LambdaLattice>;

/// The branch potential over one period in joules with its spatial mean
/// removed. Constant offsets such as (m + 1/2) hbar omega are dropped before
/// the conversion so the modulation keeps full precision.
inline PeriodicPotential dressed_lattice_potential(const DressedLatticeInput& input, DressedBranch branch, double period,
                                                   std::size_t samples = 256) {
  std::function<double(double)> f;
  if (const auto* tl = std::get_if<TwoLevelLattice>(&input)) {
    require(branch == DressedBranch::u_minus || branch == DressedBranch::u_plus,
            "dressed_lattice: two-level input supports branches U_minus and U_plus");
    require(tl->photons >= 0, "dressed_lattice: photon number must be non-negative");
    const TwoLevelLattice p = *tl;
    // omega = 0 drops the (m + 1/2) omega offset.
    f = [=](double x) {
      const auto d = dressed::dressed_two_level(p.photons, p.delta, 0.0, p.g0 * std::cos(2.0 * pi * x / period));
      return branch == DressedBranch::u_plus ? d.u_plus : d.u_minus;
    };
  } else {
    const LambdaLattice p = std::get<LambdaLattice>(input);
    require(branch == DressedBranch::e_minus || branch == DressedBranch::e_zero || branch == DressedBranch::e_plus,
            "dressed_lattice: Lambda input supports branches E_minus, E_0 and E_plus");
    require(p.n1 >= 0 && p.n2 >= 0, "dressed_lattice: photon numbers must be non-negative");
    // The block spectrum is always E_- <= 0 <= E_+, so ascending order fixes the branch.
    const std::size_t idx = branch == DressedBranch::e_minus ? 0 : branch == DressedBranch::e_zero ? 1 : 2;
    if (branch == DressedBranch::e_zero) return PeriodicPotential(period, std::vector<double>(samples, 0.0));
    f = [=](double x) {
      const auto h = dressed::lambda_matrix(p.n1, p.n2, p.g1 * std::cos(2.0 * pi * x / period), p.g2, p.e0);
      return jacobi_eigh(h).values[idx];
    };
  }
  auto sampled = PeriodicPotential::from_function(period, [&](double x) { return constants::hbar * f(x); }, samples);
  return sampled.minus_mean();
}

struct DressedLatticeResult {
  PeriodicPotential potential;
  BandReport bands;
};

inline DressedLatticeResult dressed_lattice_bands(const DressedLatticeInput& input, DressedBranch branch, double period,
                                                  double mass, int n_pw, std::size_t max_bands,
                                                  std::size_t q_points = 65, const BandOptions& opts = {}) {
  auto pot = dressed_lattice_potential(input, branch, period);
  auto report = band_gaps(pot, mass, n_pw, max_bands, q_points, 1e-6, opts);
  return {std::move(pot), std::move(report)};
}

struct ControlScanPoint {
  double g2 = 0.0;
  std::optional<Gap> lowest_gap;
  bool converged = true;
};

/// Sweeps the uniform control coupling g2 and records the lowest band gap of
/// the chosen Lambda branch at each value.
inline std::vector<ControlScanPoint> control_scan(LambdaLattice base, DressedBranch branch, std::span<const double> g2_values,
                                                  double period, double mass, int n_pw, std::size_t max_bands,
                                                  std::size_t q_points = 65, const BandOptions& opts = {}) {
  std::vector<ControlScanPoint> out;
  out.reserve(g2_values.size());
  for (double g2 : g2_values) {
    base.g2 = g2;
    const auto res = dressed_lattice_bands(base, branch, period, mass, n_pw, max_bands, q_points, opts);
    ControlScanPoint pt{g2, std::nullopt, res.bands.spectrum.converged};
    if (!res.bands.gaps.gaps.empty()) pt.lowest_gap = res.bands.gaps.gaps.front();
    out.push_back(pt);
  }
  return out;
}

}  // namespace atomguide::bands
