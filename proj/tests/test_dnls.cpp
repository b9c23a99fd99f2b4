#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qpump/dnls/waveguide.hpp"

using namespace qpump::dnls;

namespace {

WaveguideConfig strong() { return WaveguideConfig{}; }

WaveguideConfig weak() {
    WaveguideConfig c;
    c.J = 0.15;
    c.norm_N = 0.2;
    return c;
}

}  // namespace

TEST(Waveguide, Validation) {
    auto c = strong();
    EXPECT_NO_THROW(c.validate());
    c.q = 5;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = strong();
    c.K = 1.5;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = strong();
    c.norm_N = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Waveguide, CouplingProfile) {
    const auto c = strong();
    EXPECT_NEAR(coupling_profile(c, 1, 0.0), 1.01, 1e-15);
    // period p in the bond index, 2 pi / Omega in z
    EXPECT_NEAR(coupling_profile(c, 3, 1.7), coupling_profile(c, 8, 1.7), 1e-15);
    EXPECT_NEAR(coupling_profile(c, 3, 1.7), coupling_profile(c, 3, 1.7 + c.period()), 1e-13);
    EXPECT_THROW(coupling_profile(c, 0, 0.0), std::out_of_range);
    EXPECT_THROW(coupling_profile(c, c.n_sites, 0.0), std::out_of_range);
}

TEST(Waveguide, DistanceInverse) {
    for (double J : {0.15, 1.0, 3.0}) EXPECT_NEAR(coupling_from_distance(distance_from_coupling(J)), J, 1e-12);
    EXPECT_NEAR(coupling_from_distance(0.0), 6.672, 1e-15);
    EXPECT_THROW(distance_from_coupling(0.0), std::invalid_argument);
}

TEST(Waveguide, HamiltonianAndBands) {
    const auto c = strong();
    const auto H = linear_hamiltonian(c, 0.3);
    EXPECT_LT((H - H.transpose()).norm(), 1e-15);
    EXPECT_EQ(H(0, 0), 0.0);
    EXPECT_NEAR(H(4, 5), -coupling_profile(c, 5, 0.3), 1e-15);
    // p = 5 sites per cell: five isolated frozen bands
    const auto bands = frozen_bands(c, 0.0);
    ASSERT_EQ(bands.size(), 5u);
    EXPECT_EQ(isolated_band_count(bands), 5);
    // K = 0 closes the gaps into a single cosine band
    auto flat = c;
    flat.K = 0.0;
    EXPECT_EQ(isolated_band_count(frozen_bands(flat, 0.0)), 1);
}

TEST(Waveguide, SolitonAtNorm) {
    for (const auto& c : {strong(), weak()}) {
        const auto s = dnls_soliton_at_norm(c);
        EXPECT_NEAR(power(s.state.amplitudes), c.norm_N, 1e-10);
        EXPECT_LT(s.residual, 1e-12);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(linear_hamiltonian(c, 0.0));
        EXPECT_LT(s.mu, es.eigenvalues()(0));
    }
    // larger gN / J localizes more strongly
    EXPECT_LT(participation_number(dnls_soliton_at_norm(strong()).state.amplitudes),
              participation_number(dnls_soliton_at_norm(weak()).state.amplitudes));
    EXPECT_THROW(dnls_soliton(strong(), 0.0, 0.0, Eigen::VectorXd::Ones(75)), std::invalid_argument);
}

TEST(Waveguide, PropagationConservesPower) {
    const auto c = strong();
    const auto s = dnls_soliton_at_norm(c);
    const auto tr = dnls_propagate(s.state, c, 0.25 * c.period());
    ASSERT_FALSE(tr.aborted) << tr.diagnostic;
    EXPECT_LT(tr.max_norm_drift, 1e-12);
    EXPECT_EQ(tr.z.size(), 17u);
}

TEST(Waveguide, StationaryWithoutModulation) {
    auto c = strong();
    c.K = 0.0;
    const auto s = dnls_soliton_at_norm(c);
    const auto tr = dnls_propagate(s.state, c, 200.0);
    for (double x : tr.x_c) EXPECT_NEAR(x, tr.x_c.front(), 1e-6);
}

TEST(Waveguide, StrongSolitonMovesHalfACellPerCycle) {
    const auto c = strong();
    const auto s = dnls_soliton_at_norm(c);
    const auto tr = dnls_propagate(s.state, c, 2 * c.period());
    ASSERT_FALSE(tr.aborted) << tr.diagnostic;
    ASSERT_EQ(tr.per_cycle_shift.size(), 2u);
    const double mean = 0.5 * (tr.per_cycle_shift[0] + tr.per_cycle_shift[1]);
    EXPECT_NEAR(std::abs(mean), 0.5, 0.05);
    EXPECT_EQ(tr.densities.size(), 3u);
}

TEST(Waveguide, EdgeAbort) {
    auto c = weak();
    c.n_sites = 12;
    const auto s = dnls_soliton_at_norm(c);
    const auto tr = dnls_propagate(s.state, c, c.period());
    EXPECT_TRUE(tr.aborted);
    EXPECT_NE(tr.diagnostic.find("enlarge"), std::string::npos);
    DNLSState wrong{0.0, std::vector<Complex>(10, Complex(1.0))};
    EXPECT_THROW(dnls_propagate(wrong, c, 1.0), std::invalid_argument);
}

TEST(Waveguide, ShiftStableUnderRefinement) {
    auto c = strong();
    const auto base = dnls_propagate(dnls_soliton_at_norm(c).state, c, c.period());
    const auto fine = dnls_propagate(dnls_soliton_at_norm(c).state, c, c.period(), 0.005);
    auto wide = c;
    wide.n_sites = 150;
    const auto big = dnls_propagate(dnls_soliton_at_norm(wide).state, wide, wide.period());
    ASSERT_EQ(base.per_cycle_shift.size(), 1u);
    EXPECT_LT(std::abs(fine.per_cycle_shift[0] - base.per_cycle_shift[0]), 0.02);
    EXPECT_LT(std::abs(big.per_cycle_shift[0] - base.per_cycle_shift[0]), 0.02);
}

TEST(Waveguide, AntiContinuumLimit) {
    auto c = strong();
    c.J = 0.05;
    c.K = 0.001;
    c.norm_N = 3.0;
    Eigen::VectorXd guess = Eigen::VectorXd::Zero(c.n_sites);
    guess(37) = std::sqrt(c.norm_N);
    const auto s = dnls_soliton(c, 0.0, -c.g * c.norm_N - 0.01, guess);
    EXPECT_LT(s.residual, 1e-10);
    EXPECT_GT(peak_fraction(s.state.amplitudes), 0.9);
}

TEST(Waveguide, LinearDiscreteDiffraction) {
    // single-site input, g = K = 0: |phi_n|^2 = J_n(2 J z)^2, variance 2 J^2 z^2
    auto c = strong();
    c.g = 0.0;
    c.K = 0.0;
    DNLSState s0{0.0, std::vector<Complex>(static_cast<std::size_t>(c.n_sites))};
    s0.amplitudes[37] = 1.0;
    const double z = 10.0;
    const auto tr = dnls_propagate(s0, c, z, 0.001, 64, 1.0);
    ASSERT_NEAR(tr.final_state.z, z, 1e-3);
    const auto& a = tr.final_state.amplitudes;
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(i) - 37.0;
        m1 += d * std::norm(a[i]);
        m2 += d * d * std::norm(a[i]);
    }
    EXPECT_NEAR(power(a), 1.0, 1e-12);
    EXPECT_NEAR(m1, 0.0, 1e-6);  // the even/odd bond split is not mirror symmetric: O(dz^2)
    EXPECT_NEAR(m2, 2.0 * tr.final_state.z * tr.final_state.z, 1e-3 * m2);
    EXPECT_NEAR(std::norm(a[37]), std::pow(std::cyl_bessel_j(0.0, 2.0 * tr.final_state.z), 2), 1e-5);
}
