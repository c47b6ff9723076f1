#pragma once

// Command-line front end: argument parsing, dispatch to the numerical
// modules, and file emission. Every output is computed in memory first and
// written only when the whole subcommand has succeeded.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "atomguide/bandgap.hpp"
#include "atomguide/cli/config.hpp"
#include "atomguide/cli/io.hpp"
#include "atomguide/dressed.hpp"
#include "atomguide/errors.hpp"
#include "atomguide/guide_geometry.hpp"
#include "atomguide/linalg.hpp"
#include "atomguide/numerics.hpp"
#include "atomguide/two_level.hpp"

namespace atomguide::cli {

struct Context {
  const RunConfig& cfg;
  std::filesystem::path base_dir;  // relative paths in the config resolve against this
  Format format = Format::csv;
  unsigned threads = 1;

  std::filesystem::path resolve(const std::string& key) const {
    const std::filesystem::path p(cfg.text(key));
    return p.is_absolute() ? p : base_dir / p;
  }
};

struct Artifact {
  std::string name;
  std::string content;
};

struct Result {
  std::vector<Artifact> files;
  std::string summary;
};

namespace detail {

constexpr double pi = std::numbers::pi;

inline Json metadata(const Context& c, Json units) {
  Json m = Json::object();
  m["schema_version"] = c.cfg.schema;
  m["subcommand"] = c.cfg.subcommand;
  m["config_digest"] = config_digest(c.cfg);
  m["units"] = std::move(units);
  m["defaults_applied"] = c.cfg.defaults();
  return m;
}

inline Artifact table_artifact(const Context& c, const std::string& stem, const Table& t, Json units) {
  const Json meta = metadata(c, std::move(units));
  if (c.format == Format::json) return {stem + ".json", render_json_table(t, meta)};
  return {stem + ".csv", render_csv(t, meta)};
}

inline Artifact json_artifact(const Context& c, const std::string& name, Json body, Json units) {
  Json doc = Json::object();
  doc["metadata"] = metadata(c, std::move(units));
  for (auto& [k, v] : body.items()) doc[k] = v;
  return {name, render_json(doc)};
}

inline std::string short_number(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// ------------------------------------------------------------------ guide

inline Result run_guide(const Context& c) {
  const auto& cfg = c.cfg;
  const double j = cfg.number("j");
  const double m = cfg.number("m");
  const guide::AngularMomentumRep rep(j);
  const bool helix = cfg.text("path") == "helix";

  std::optional<guide::WaveVectorPath> built;
  if (helix) {
    built = guide::helix_path(cfg.number("helix_theta"), cfg.number("helix_rate"), 1.0, cfg.number("turns"),
                              static_cast<int>(cfg.integer("samples_per_turn")), cfg.number("lead_in_turns"));
  } else {
    auto cols = read_csv_columns(c.resolve("centerline_csv"), {"t", "x", "y", "z"});
    std::vector<Vec3> pts(cols["t"].size());
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {cols["x"][i], cols["y"][i], cols["z"][i]};
    built = guide::path_from_timed_centerline(cols["t"], pts, cfg.number("mass"));
  }
  guide::WaveVectorPath path = *built;
  const bool rotated = std::abs(path.theta().front()) > 1e-12;
  if (rotated) path = guide::rotate_to_initial_z(path);

  const auto closed = guide::evolve_closed_form(path, rep, m);
  const auto direct = guide::evolve_direct(path, rep, rep.basis_state(m));

  Table t;
  t.columns = {"t", "phase_rad", "theta", "phi"};
  for (std::size_t k = 0; k < rep.dim(); ++k) {
    t.columns.push_back("re_psi_" + std::to_string(k));
    t.columns.push_back("im_psi_" + std::to_string(k));
  }
  double worst_infidelity = 0.0, worst_projection = 0.0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    std::vector<double> row{path.times()[i], closed.phase[i], path.theta()[i], path.phi()[i]};
    for (const cplx& a : closed.states[i]) {
      row.push_back(std::real(a));
      row.push_back(std::imag(a));
    }
    t.add(std::move(row));
    worst_infidelity = std::max(worst_infidelity, 1.0 - fidelity(closed.states[i], direct.states[i]));
    worst_projection =
        std::max(worst_projection, std::abs(guide::direction_projection(path, rep, i, closed.states[i]) - m));
  }

  Json body = Json::object();
  body["j"] = j;
  body["m"] = m;
  body["samples"] = path.size();
  body["duration"] = path.times().back() - path.times().front();
  body["frame"] = rotated ? "rotated_to_initial_direction" : "input";
  body["final_phase_rad"] = closed.phase.back();
  if (helix && !rotated) {
    const std::size_t per_turn = static_cast<std::size_t>(cfg.integer("samples_per_turn"));
    const std::size_t last = path.size() - 1;
    body["phase_per_turn_rad"] = closed.phase[last] - closed.phase[last - per_turn];
    body["expected_phase_per_turn_rad"] = m * 2.0 * pi * (1.0 - std::cos(cfg.number("helix_theta")));
  }
  body["max_infidelity_closed_vs_direct"] = worst_infidelity;
  body["max_projection_error"] = worst_projection;
  body["motion_identity_residual"] = guide::motion_identity_residual(path);

  const Json units = {{"t", "s"}, {"phase_rad", "rad"}, {"theta", "rad"}, {"phi", "rad"}, {"psi", "dimensionless"}};
  Result r;
  r.files.push_back(table_artifact(c, "guide", t, units));
  r.files.push_back(json_artifact(c, "guide_summary.json", body, units));
  r.summary = "guide: " + std::to_string(path.size()) + " samples, closed-form vs direct infidelity " +
              short_number(worst_infidelity);
  if (body.contains("phase_per_turn_rad"))
    r.summary += ", phase per turn " + short_number(body["phase_per_turn_rad"].get<double>()) + " rad";
  return r;
}

// ------------------------------------------------------------------ evolve

inline Table trajectory_table(const two_level::StateTrajectory& s) {
  Table t;
  t.columns = {"t", "re_ce", "im_ce", "re_cg", "im_cg", "P_e"};
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    const auto& a = s.amplitudes[i];
    t.add({s.times[i], std::real(a[0]), std::imag(a[0]), std::real(a[1]), std::imag(a[1]), s.excited_population(i)});
  }
  return t;
}

inline Result run_evolve(const Context& c) {
  using namespace two_level;
  const auto& cfg = c.cfg;
  const std::string profile = cfg.text("profile");
  std::vector<double> times;
  DriveProfile drive_profile;
  if (profile == "csv") {
    auto cols = read_csv_columns(c.resolve("drive_csv"), {"t", "delta", "re_V", "im_V"});
    std::vector<cplx> v(cols["t"].size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = {cols["re_V"][i], cols["im_V"][i]};
    times = cols["t"];
    drive_profile = sampled_profile(cols["t"], cols["delta"], std::move(v));
  } else {
    times = numerics::linspace(cfg.number("t_start"), cfg.number("t_end"), static_cast<std::size_t>(cfg.integer("samples")));
    const cplx v(cfg.number("coupling_re"), cfg.number("coupling_im"));
    const double delta = cfg.number("delta");
    if (profile == "constant")
      drive_profile = constant_profile(delta, v);
    else if (profile == "linear_sweep")
      drive_profile = linear_sweep_profile(delta, cfg.number("delta_rate"), v, cfg.number("center"), cfg.number("width"));
    else
      drive_profile = gaussian_pulse_profile(delta, v, cfg.number("center"), cfg.number("width"));
  }
  const TwoLevelDrive drive(std::move(times), std::move(drive_profile));
  const std::array<cplx, 2> psi0 = cfg.text("initial") == "excited" ? std::array<cplx, 2>{1.0, 0.0}
                                                                    : std::array<cplx, 2>{0.0, 1.0};
  const auto direct = evolve_schrodinger(drive, psi0);

  // Stationary seed unless given; kept off the poles where the zeta equation is singular.
  const bool seeded = cfg.has("varsigma0");
  const double vs0 = seeded ? cfg.number("varsigma0") : std::clamp(drive.theta(0), 0.01, pi - 0.01);
  const double z0 = cfg.has("zeta0") ? cfg.number("zeta0") : drive.phi(0);
  const auto aux = solve_auxiliary(drive, vs0, z0);
  const auto coeff = invariant_coefficients(aux, psi0);
  const auto lr = lr_solution(drive, aux, coeff[0], coeff[1]);

  double worst = 0.0, drift = 0.0;
  for (std::size_t i = 0; i < drive.size(); ++i) {
    worst = std::max(worst, 1.0 - fidelity(lr.state(i), direct.state(i)));
    drift = std::max({drift, std::abs(norm(lr.state(i)) - 1.0), std::abs(norm(direct.state(i)) - 1.0)});
  }

  Json body = Json::object();
  body["samples"] = drive.size();
  body["invariant_seed"] = {{"varsigma0", vs0}, {"zeta0", z0}, {"source", seeded ? "config" : "stationary"}};
  body["lvn_residual"] = aux.lvn_residual;
  body["max_infidelity_lr_vs_direct"] = worst;
  body["max_norm_drift"] = drift;
  body["final_excited_population"] = {{"direct", direct.excited_population(drive.size() - 1)},
                                      {"lr", lr.excited_population(drive.size() - 1)}};

  const Json units = {{"t", "s"}, {"amplitudes", "dimensionless"}, {"delta", "rad/s"}, {"coupling", "rad/s"}};
  Result r;
  r.files.push_back(table_artifact(c, "evolve_direct", trajectory_table(direct), units));
  r.files.push_back(table_artifact(c, "evolve_lr", trajectory_table(lr), units));
  r.files.push_back(json_artifact(c, "evolve_summary.json", body, units));
  r.summary = "evolve: " + std::to_string(drive.size()) + " samples, LR vs direct infidelity " + short_number(worst) +
              ", LvN residual " + short_number(aux.lvn_residual);
  return r;
}

// ------------------------------------------------------------------ dressed

inline double relative_difference(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), std::numeric_limits<double>::min()});
}

inline Result run_dressed(const Context& c) {
  const auto& cfg = c.cfg;
  const std::string model = cfg.text("model");
  const double period = cfg.number("period");
  const auto x = numerics::linspace(0.0, period, static_cast<std::size_t>(cfg.integer("x_points")));
  auto profile = [&](double amplitude, double xi) { return amplitude * std::cos(2.0 * pi * xi / period); };

  Table t;
  Json body = Json::object();
  body["model"] = model;
  if (model == "classical") {
    const double delta = cfg.number("delta");
    std::vector<cplx> v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) v[i] = profile(cfg.number("coupling"), x[i]);
    const auto u = dressed::classical_adiabatic_potential(delta, v);
    t.columns = {"x", "U_minus", "U_plus"};
    double oracle = 0.0, lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      t.add({x[i], u.minus[i], u.plus[i]});
      const auto e = jacobi_eigh(two_level::hamiltonian({delta, v[i]}));
      oracle = std::max({oracle, std::abs(u.minus[i] - e.values[0]), std::abs(u.plus[i] - e.values[1])});
      lo = std::min(lo, u.plus[i] - u.minus[i]);
      hi = std::max(hi, u.plus[i] - u.minus[i]);
    }
    body["min_splitting"] = lo;
    body["max_splitting"] = hi;
    body["max_matrix_oracle_difference"] = oracle;
  } else if (model == "two_level") {
    const int m = static_cast<int>(cfg.integer("photons"));
    const double delta = cfg.number("delta"), omega = cfg.number("omega"), g0 = cfg.number("g0");
    t.columns = {"x", "U_minus", "U_plus"};
    double oracle = 0.0;
    for (double xi : x) {
      const double g = profile(g0, xi);
      const auto d = dressed::dressed_two_level(m, delta, omega, g);
      t.add({xi, d.u_minus, d.u_plus});
      const auto e = jacobi_eigh(dressed::two_level_manifold_block(m, delta, omega, g));
      oracle = std::max({oracle, relative_difference(d.u_minus, e.values[0]), relative_difference(d.u_plus, e.values[1])});
    }
    const auto d0 = dressed::dressed_two_level(m, delta, omega, g0);
    body["manifold_at_x0"] = {{"m", d0.m},           {"delta", d0.delta},     {"omega", d0.omega},
                              {"g", d0.g},           {"u_plus", d0.u_plus},   {"u_minus", d0.u_minus},
                              {"theta_m", d0.theta_m}, {"state_plus", d0.state_plus}, {"state_minus", d0.state_minus}};
    body["max_relative_oracle_difference"] = oracle;
  } else {
    const int n1 = static_cast<int>(cfg.integer("n1")), n2 = static_cast<int>(cfg.integer("n2"));
    const double g1 = cfg.number("g1"), g2 = cfg.number("g2"), e0 = cfg.number("e0");
    t.columns = {"x", "E_minus", "E_0", "E_plus"};
    double closed_vs_exact = 0.0, dark_excited = 0.0;
    for (double xi : x) {
      const double g = profile(g1, xi);
      const auto e = dressed::lambda_exact_eigs(dressed::lambda_matrix(n1, n2, g, g2, e0));
      t.add({xi, e[0].value, e[1].value, e[2].value});
      if (g * g * (n1 + 1.0) + g2 * g2 * (n2 + 1.0) > 0.0) {
        const auto f = dressed::lambda_closed_form(n1, n2, g, g2, e0);
        closed_vs_exact = std::max({closed_vs_exact, relative_difference(f.e_minus, e[0].value),
                                    relative_difference(f.e_plus, e[2].value)});
        dark_excited = std::max(dark_excited, std::abs(f.dark_state[0]));
      }
    }
    if (g1 * g1 * (n1 + 1.0) + g2 * g2 * (n2 + 1.0) > 0.0) {
      const auto f = dressed::lambda_closed_form(n1, n2, g1, g2, e0);
      body["closed_form_at_x0"] = {{"n0", f.n0},
                                   {"n_plus", f.n_plus},
                                   {"n_minus", f.n_minus},
                                   {"k_plus", f.k_plus},
                                   {"k_minus", f.k_minus},
                                   {"e_zero", f.e_zero},
                                   {"e_plus", f.e_plus},
                                   {"e_minus", f.e_minus},
                                   {"dark_state", f.dark_state},
                                   {"plus_state", f.plus_state},
                                   {"minus_state", f.minus_state},
                                   {"dark_residual", f.dark_residual},
                                   {"dark_residual_at_labelled_energy", f.dark_residual_labelled},
                                   {"plus_residual", f.plus_residual},
                                   {"minus_residual", f.minus_residual}};
    }
    body["max_relative_closed_form_difference"] = closed_vs_exact;
    body["max_dark_state_excited_amplitude"] = dark_excited;
  }

  const Json units = {{"x", "m"}, {"energies", "rad/s (E / hbar)"}};
  Result r;
  r.files.push_back(table_artifact(c, "dressed_potential", t, units));
  r.files.push_back(json_artifact(c, "dressed_manifold.json", body, units));
  r.summary = "dressed: " + model + " model on " + std::to_string(x.size()) + " points";
  return r;
}

// ------------------------------------------------------------------ lattices

inline bands::DressedBranch parse_branch(const std::string& s) {
  if (s == "U_minus") return bands::DressedBranch::u_minus;
  if (s == "U_plus") return bands::DressedBranch::u_plus;
  if (s == "E_minus") return bands::DressedBranch::e_minus;
  if (s == "E_zero") return bands::DressedBranch::e_zero;
  return bands::DressedBranch::e_plus;
}

inline bands::PeriodicPotential lattice_potential(const Context& c) {
  const auto& cfg = c.cfg;
  const double period = cfg.number("period");
  const std::string kind = cfg.text("potential");
  if (kind == "csv") {
    auto cols = read_csv_columns(c.resolve("potential_csv"), {"x", "U"});
    return bands::PeriodicPotential::from_samples(cols["x"], cols["U"], period);
  }
  const auto samples = static_cast<std::size_t>(cfg.integer("potential_samples"));
  if (kind == "cosine") {
    const double er = bands::recoil_energy(period, cfg.number("mass"));
    return bands::PeriodicPotential::cosine(period, cfg.number("depth_er") * er, samples);
  }
  if (kind == "dressed_two_level") {
    const bands::TwoLevelLattice in{static_cast<int>(cfg.integer("photons")), cfg.number("delta"), cfg.number("g0")};
    return bands::dressed_lattice_potential(in, parse_branch(cfg.text("branch")), period, samples);
  }
  const bands::LambdaLattice in{static_cast<int>(cfg.integer("n1")), static_cast<int>(cfg.integer("n2")),
                                cfg.number("g1"), cfg.number("g2"), cfg.number("e0")};
  return bands::dressed_lattice_potential(in, parse_branch(cfg.text("branch")), period, samples);
}

inline Result run_bands(const Context& c) {
  const auto& cfg = c.cfg;
  const auto pot = lattice_potential(c);
  const double mass = cfg.number("mass");
  bands::BandOptions opts;
  opts.threads = c.threads;
  const auto max_bands = static_cast<std::size_t>(cfg.integer("max_bands"));
  const auto rep = bands::band_gaps(pot, mass, static_cast<int>(cfg.integer("plane_waves")), max_bands,
                                    static_cast<std::size_t>(cfg.integer("q_points")), 1e-6, opts);
  const auto& s = rep.spectrum;
  if (!s.converged)
    throw NumericalError("bands: energies moved by " + short_number(s.cutoff_change) +
                         " E_r when the plane-wave basis grew; increase plane_waves");
  const double er = s.recoil_energy;
  const std::size_t nb = std::min(max_bands, s.band_count());

  Table si, reduced;
  si.columns = {"q"};
  for (std::size_t n = 1; n <= nb; ++n) si.columns.push_back("E_" + std::to_string(n));
  reduced.columns = si.columns;
  for (std::size_t i = 0; i < s.q.size(); ++i) {
    std::vector<double> a{s.q[i]}, b{s.q[i] * s.period / pi};
    for (std::size_t n = 0; n < nb; ++n) {
      a.push_back(s.bands[i][n]);
      b.push_back(s.bands[i][n] / er);
    }
    si.add(std::move(a));
    reduced.add(std::move(b));
  }

  Json gaps = Json::array();
  for (const auto& g : rep.gaps.gaps)
    gaps.push_back({{"band", g.band},
                    {"bottom_J", g.bottom},
                    {"top_J", g.top},
                    {"width_J", g.width()},
                    {"bottom_er", g.bottom / er},
                    {"top_er", g.top / er},
                    {"width_er", g.width() / er}});
  Json body = Json::object();
  body["recoil_energy_J"] = er;
  body["plane_waves"] = s.plane_waves;
  body["converged"] = s.converged;
  body["cutoff_change_er"] = s.cutoff_change;
  body["q_points"] = s.q.size();
  body["refinements"] = rep.refinements;
  body["gaps"] = std::move(gaps);

  Result r;
  r.files.push_back(table_artifact(c, "bands_SI", si, {{"q", "1/m"}, {"E_n", "J"}}));
  r.files.push_back(table_artifact(c, "bands_recoil", reduced, {{"q", "pi/period"}, {"E_n", "E_r"}}));
  r.files.push_back(json_artifact(c, "gaps.json", body, {{"energies", "J and E_r"}}));
  r.summary = "bands: " + std::to_string(nb) + " bands on " + std::to_string(s.q.size()) + " q points, " +
              std::to_string(rep.gaps.gaps.size()) + " gaps";
  if (!rep.gaps.gaps.empty())
    r.summary += ", lowest gap " + short_number(rep.gaps.gaps.front().width() / er) + " E_r";
  return r;
}

inline Result run_transmit(const Context& c) {
  const auto& cfg = c.cfg;
  const auto pot = lattice_potential(c);
  const double mass = cfg.number("mass");
  const double er = bands::recoil_energy(pot.period(), mass);
  auto energies = numerics::linspace(cfg.number("e_min_er"), cfg.number("e_max_er"),
                                     static_cast<std::size_t>(cfg.integer("energy_points")));
  for (double& e : energies) e *= er;
  std::optional<double> lead;
  if (cfg.has("lead_level_er")) lead = cfg.number("lead_level_er") * er;
  const auto spec = bands::transfer_transmission(pot, mass, static_cast<int>(cfg.integer("periods")), energies, lead);

  Table t;
  t.columns = {"E", "T", "E_over_Er", "log_T", "trace", "decay_constant"};
  double min_t = 1.0;
  std::size_t in_gap = 0;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    const auto tr = bands::trace_criterion(pot, mass, spec.lead_level + energies[i]);
    t.add({energies[i], spec.transmission[i], energies[i] / er, spec.log_transmission[i], tr.trace, tr.decay_constant});
    min_t = std::min(min_t, spec.transmission[i]);
    if (!tr.allowed) ++in_gap;
  }
  Json body = Json::object();
  body["recoil_energy_J"] = er;
  body["lead_level_J"] = spec.lead_level;
  body["lead_level_er"] = spec.lead_level / er;
  body["periods"] = spec.periods;
  body["energies_in_gaps"] = in_gap;
  body["min_transmission"] = min_t;

  const Json units = {{"E", "J above the lead level"}, {"T", "dimensionless"}, {"decay_constant", "1/m"}};
  Result r;
  r.files.push_back(table_artifact(c, "transmission", t, units));
  r.files.push_back(json_artifact(c, "transmission_summary.json", body, units));
  r.summary = "transmit: " + std::to_string(energies.size()) + " energies through " + std::to_string(spec.periods) +
              " periods, " + std::to_string(in_gap) + " inside gaps, min T " + short_number(min_t);
  return r;
}

// ------------------------------------------------------------------ scales

inline Result run_scales(const Context& c) {
  const auto s = bands::recoil_scales(c.cfg.number("wavelength"), c.cfg.number("mass"));
  Json body = Json::object();
  body["wavelength"] = c.cfg.number("wavelength");
  body["mass"] = c.cfg.number("mass");
  body["hbar_k"] = s.photon_momentum;
  body["recoil_energy"] = s.recoil_energy;
  body["recoil_temperature"] = s.recoil_temperature;
  body["momentum_in_anchor_band"] = s.momentum_in_anchor_band;
  body["recoil_temperature_below_1e-5_K"] = s.temperature_below_anchor;
  Result r;
  r.files.push_back(json_artifact(c, "scales.json", body,
                                  {{"wavelength", "m"}, {"mass", "kg"}, {"hbar_k", "kg m/s"},
                                   {"recoil_energy", "J"}, {"recoil_temperature", "K"}}));
  r.summary = "scales: hbar k = " + short_number(s.photon_momentum) + " kg m/s, recoil temperature " +
              short_number(s.recoil_temperature) + " K";
  return r;
}

// ------------------------------------------------------------------ control scan

inline Result run_control_scan(const Context& c) {
  const auto& cfg = c.cfg;
  const double period = cfg.number("period"), mass = cfg.number("mass");
  const bands::LambdaLattice base{static_cast<int>(cfg.integer("n1")), static_cast<int>(cfg.integer("n2")),
                                  cfg.number("g1"), 0.0, cfg.number("e0")};
  const auto g2 = numerics::linspace(cfg.number("g2_min"), cfg.number("g2_max"),
                                     static_cast<std::size_t>(cfg.integer("g2_points")));
  bands::BandOptions opts;
  opts.threads = c.threads;
  const auto points =
      bands::control_scan(base, parse_branch(cfg.text("branch")), g2, period, mass,
                          static_cast<int>(cfg.integer("plane_waves")), static_cast<std::size_t>(cfg.integer("max_bands")),
                          static_cast<std::size_t>(cfg.integer("q_points")), opts);
  const double er = bands::recoil_energy(period, mass);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  Table t;
  t.columns = {"g2", "has_gap", "band", "gap_bottom_er", "gap_top_er", "gap_width_er"};
  std::vector<double> widths;
  for (const auto& p : points) {
    if (!p.converged)
      throw NumericalError("control-scan: band energies not converged at g2 = " + short_number(p.g2) +
                           "; increase plane_waves");
    if (p.lowest_gap) {
      const auto& g = *p.lowest_gap;
      t.add({p.g2, 1.0, static_cast<double>(g.band), g.bottom / er, g.top / er, g.width() / er});
      widths.push_back(g.width());
    } else {
      t.add({p.g2, 0.0, nan, nan, nan, 0.0});
      widths.push_back(0.0);
    }
  }
  bool down = true, up = true;
  for (std::size_t i = 1; i < widths.size(); ++i) {
    down = down && widths[i] < widths[i - 1];
    up = up && widths[i] > widths[i - 1];
  }
  const std::string trend = down ? "decreasing" : up ? "increasing" : "non_monotonic";
  Json body = Json::object();
  body["points"] = points.size();
  body["recoil_energy_J"] = er;
  body["lowest_gap_trend"] = trend;
  body["gap_width_er_first"] = widths.front() / er;
  body["gap_width_er_last"] = widths.back() / er;

  const Json units = {{"g2", "rad/s"}, {"gap", "E_r"}};
  Result r;
  r.files.push_back(table_artifact(c, "control_scan", t, units));
  r.files.push_back(json_artifact(c, "control_scan_summary.json", body, units));
  r.summary = "control-scan: " + std::to_string(points.size()) + " control couplings, lowest gap " + trend +
              " from " + short_number(widths.front() / er) + " to " + short_number(widths.back() / er) + " E_r";
  return r;
}

}  // namespace detail

/// Runs one subcommand on a validated configuration and returns the files it
/// would write. Throws DomainError, NumericalError or IoError.
inline Result execute(const Context& c) {
  const std::string& s = c.cfg.subcommand;
  if (s == "guide") return detail::run_guide(c);
  if (s == "evolve") return detail::run_evolve(c);
  if (s == "dressed") return detail::run_dressed(c);
  if (s == "bands") return detail::run_bands(c);
  if (s == "transmit") return detail::run_transmit(c);
  if (s == "scales") return detail::run_scales(c);
  if (s == "control-scan") return detail::run_control_scan(c);
  throw DomainError("unknown subcommand \"" + s + "\"");
}

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int io_failure = 1;
inline constexpr int config_error = 2;
inline constexpr int numerical_failure = 3;
}  // namespace exit_code

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"atomguide: atom guiding, dressed-state and matter-wave band calculations"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::string output_dir = "out";
  std::string format = "csv";
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());

  const std::vector<std::pair<std::string, std::string>> commands{
      {"guide", "spin evolution along a curved guide: closed form vs direct integration"},
      {"evolve", "two-level dynamics: Lewis-Riesenfeld solution vs direct integration"},
      {"dressed", "dressed-state potentials and manifold reports"},
      {"bands", "Bloch bands and gaps of a periodic potential"},
      {"transmit", "transfer-matrix transmission through a finite lattice"},
      {"scales", "photon recoil momentum, energy and temperature"},
      {"control-scan", "lowest gap of a Lambda lattice versus the control coupling"}};
  for (const auto& [name, description] : commands) {
    auto* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "JSON configuration file")->required();
    sub->add_option("--output", output_dir, "output directory")->capture_default_str();
    sub->add_option("--format", format, "table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return exit_code::config_error;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const std::filesystem::path cfg_path(config_path);
    std::string text;
    try {
      text = read_text(cfg_path);
    } catch (const DomainError& e) {
      err << "config error: " << e.what() << "\n";
      return exit_code::config_error;
    }
    const auto v = validate_config(text, command);
    if (!v.ok()) {
      err << format_errors(v.errors);
      return exit_code::config_error;
    }
    const Context ctx{*v.config, cfg_path.parent_path(), format == "json" ? Format::json : Format::csv, threads};
    const Result r = execute(ctx);

    const std::filesystem::path dir(output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    std::string written;
    for (const auto& f : r.files) {
      atomic_write(dir / f.name, f.content);
      written += (written.empty() ? "" : ", ") + (dir / f.name).string();
    }
    out << r.summary << "; wrote " << written << "\n";
    return exit_code::ok;
  } catch (const DomainError& e) {
    err << command << ": invalid input: " << e.what() << "\n";
    return exit_code::config_error;
  } catch (const NumericalError& e) {
    err << command << ": numerical failure: " << e.what() << "\n";
    return exit_code::numerical_failure;
  } catch (const IoError& e) {
    err << command << ": " << e.what() << "\n";
    return exit_code::io_failure;
  } catch (const std::exception& e) {
    err << command << ": unexpected error: " << e.what() << "\n";
    return exit_code::io_failure;
  }
}

}  // namespace atomguide::cli
