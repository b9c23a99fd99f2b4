#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qpump/units/units.hpp"

using namespace qpump::units;

TEST(Units, PumpingPeriodInMilliseconds) {
    // T = pi / v with v = 0.1
    const double T = std::numbers::pi / 0.1;
    const double ms = 1e3 * to_physical_time(T, lithium7());
    EXPECT_NEAR(ms, 3.94, 0.01 * 3.94);
}

TEST(Units, AtomNumberForNormTen) {
    EXPECT_NEAR(atom_number(10.0, lithium7()), 6.69e3, 0.02 * 6.69e3);
}

TEST(Units, ScalesFromConstants) {
    const auto s = lithium7();
    const double E0 = constants::hbar * constants::hbar / (4 * s.mass * s.d1 * s.d1);
    EXPECT_NEAR(s.energy_unit() / E0, 1.0, 1e-14);
    EXPECT_NEAR(s.length_unit(), 1064e-9, 1e-20);
    EXPECT_NEAR(s.time_unit() * s.energy_unit(), constants::hbar, 1e-48);
}

TEST(Units, RoundTrips) {
    const auto s = lithium7();
    EXPECT_NEAR(from_physical_time(to_physical_time(12.5, s), s), 12.5, 1e-12);
    EXPECT_NEAR(from_physical_length(to_physical_length(-3.0, s), s), -3.0, 1e-12);
    EXPECT_NEAR(from_physical_energy(to_physical_energy(25.0, s), s), 25.0, 1e-12);
    EXPECT_NEAR(norm_from_atoms(atom_number(7.0, s), s), 7.0, 1e-12);
}

TEST(Units, RequiresAttractiveInteractions) {
    auto s = lithium7();
    s.a_s = 1e-9;
    EXPECT_THROW(atom_number(1.0, s), std::invalid_argument);
    s = lithium7();
    s.d1 = 0.0;
    EXPECT_THROW(atom_number(1.0, s), std::invalid_argument);
}
