#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qpump::units {

// CODATA 2018 recommended values (NIST SP 961); u from the same set,
// the 7Li atomic mass from AME2020.
namespace constants {
inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double li7_mass_u = 7.0160034366;
inline constexpr double li7_mass = li7_mass_u * atomic_mass_unit;
}  // namespace constants

/// Physical scales of the quasi-1D condensate: E0 = hbar^2/(4 m d1^2), x0 = 2 d1, t0 = hbar/E0.
struct PhysicalSystem {
    double mass = constants::li7_mass;  // kg
    double d1 = 532e-9;                 // short-lattice period, m
    double a_s = -1.43e-9;              // s-wave scattering length, m
    double omega_perp = 2.0 * std::numbers::pi * 710.0;  // rad/s

    void validate() const {
        if (!(mass > 0.0) || !(d1 > 0.0)) throw std::invalid_argument("PhysicalSystem: mass and d1 must be positive");
        if (!(omega_perp > 0.0)) throw std::invalid_argument("PhysicalSystem: omega_perp must be positive");
    }

    [[nodiscard]] double energy_unit() const { return constants::hbar * constants::hbar / (4.0 * mass * d1 * d1); }
    [[nodiscard]] double length_unit() const { return 2.0 * d1; }
    [[nodiscard]] double time_unit() const { return constants::hbar / energy_unit(); }
};

inline PhysicalSystem lithium7() { return PhysicalSystem{}; }

inline double to_physical_time(double t, const PhysicalSystem& s) { return t * s.time_unit(); }
inline double from_physical_time(double seconds, const PhysicalSystem& s) { return seconds / s.time_unit(); }
inline double to_physical_length(double x, const PhysicalSystem& s) { return x * s.length_unit(); }
inline double from_physical_length(double meters, const PhysicalSystem& s) { return meters / s.length_unit(); }
inline double to_physical_energy(double e, const PhysicalSystem& s) { return e * s.energy_unit(); }
inline double from_physical_energy(double joules, const PhysicalSystem& s) { return joules / s.energy_unit(); }

/// Atom number for dimensionless norm N: N E0 d1 / (hbar omega_perp |a_s|).
inline double atom_number(double N, const PhysicalSystem& s) {
    s.validate();
    if (!(s.a_s < 0.0)) throw std::invalid_argument("atom_number: attractive interactions (a_s < 0) required");
    return N * s.energy_unit() * s.d1 / (constants::hbar * s.omega_perp * std::abs(s.a_s));
}

inline double norm_from_atoms(double atoms, const PhysicalSystem& s) { return atoms / atom_number(1.0, s); }

}  // namespace qpump::units
