#pragma once

#include <numbers>

// CODATA 2018 exact / recommended values, SI units.
namespace atomguide::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double planck = 6.62607015e-34;           // J s
inline constexpr double hbar = planck / (2.0 * pi);         // J s
inline constexpr double speed_of_light = 299792458.0;       // m/s
inline constexpr double boltzmann = 1.380649e-23;           // J/K
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double bohr_magneton = 9.2740100783e-24;   // J/T
inline constexpr double rubidium87_mass = 1.443160648e-25;  // kg

}  // namespace atomguide::constants
