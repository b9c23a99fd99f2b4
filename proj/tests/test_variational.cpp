#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qpump/variational/effective.hpp"

using namespace qpump;
constexpr double pi = std::numbers::pi;

namespace {

EffectiveParams fig3(double N) { return EffectiveParams{N, 15.0, 15.0, 21.0 / 34.0, 0.1}; }

}  // namespace

TEST(Effective, AmplitudesMatchClosedForm) {
    const EffectiveParams p{7.0, 15.0, 15.0, 0.6, 0.1};
    EXPECT_NEAR(static_amplitude(p), 4 * 15.0 / std::sinh(4 * pi * pi / 7.0), 1e-12);
    EXPECT_NEAR(sliding_amplitude(p), 15.0 / (0.36 * std::sinh(2 * pi * pi / (7.0 * 0.6))), 1e-12);
    EXPECT_NEAR(amplitude_ratio(p), static_amplitude(p) / sliding_amplitude(p), 1e-15);
}

TEST(Effective, ForceIsMinusGradientOfStaticPotential) {
    EffectiveParams p = fig3(7.0);
    p.v = 0.0;
    const double h = 1e-5;
    for (double x : {-0.7, -0.1, 0.13, 0.4, 1.9}) {
        const double grad = (effective_potential_static(p, x + h) - effective_potential_static(p, x - h)) / (2 * h);
        EXPECT_NEAR(effective_force(p, x, 0.0), -grad, 1e-6 * std::max(1.0, std::abs(grad))) << x;
    }
}

TEST(Effective, RestAtLatticeMinimumStaysPut) {
    // both lattices have a minimum at x = 0 when the drive is off
    EffectiveParams s = fig3(7.0);
    s.v = 0.0;
    const auto st = integrate_effective(s, 0.0, 0.0, 50.0);
    for (double x : st.x0) EXPECT_NEAR(x, 0.0, 1e-12);
}

TEST(Effective, EnergyConservedWithoutDrive) {
    EffectiveParams p = fig3(10.0);
    p.v = 0.0;
    const auto tr = integrate_effective(p, 0.11, 0.3, 40.0, 1e-11, 400, 1e-14);
    const double e0 = effective_energy(p, tr.x0.front(), tr.v0.front());
    for (std::size_t i = 0; i < tr.times.size(); ++i) EXPECT_NEAR(effective_energy(p, tr.x0[i], tr.v0[i]), e0, 1e-8 * std::abs(e0));
}

TEST(Effective, RatioGrowsWithNorm) {
    double last = 0.0;
    for (double N : {2.0, 5.0, 7.0, 12.0, 20.0, 40.0}) {
        const double r = amplitude_ratio(fig3(N));
        EXPECT_GT(r, last) << N;
        last = r;
    }
}

TEST(Effective, EqualAmplitudeNorm) {
    EffectiveParams p = fig3(1.0);
    const double Ne = equal_amplitude_norm(p);
    p.N = Ne;
    EXPECT_NEAR(amplitude_ratio(p), 1.0, 1e-9);
    // the ratio condition depends on N through 4 pi^2 / N and 2 pi^2 / (N alpha) only
    EXPECT_GT(Ne, 7.0);
    EXPECT_LT(Ne, 20.0);
    // no crossing when the short lattice is absent
    p.p1 = 0.0;
    EXPECT_THROW(equal_amplitude_norm(p), std::exception);
}

TEST(Effective, WeakSolitonPumpedStrongTrapped) {
    const double a = 21.0 / 34.0, T = pi / 0.1;
    const auto weak = integrate_effective(fig3(7.0), 0.0, 0.0, 3 * T);
    const auto strong = integrate_effective(fig3(20.0), 0.0, 0.0, 3 * T);
    ASSERT_FALSE(weak.aborted);
    ASSERT_FALSE(strong.aborted);
    const double nw = weak.x0.back() - weak.x0.front(), ns = strong.x0.back() - strong.x0.front();
    EXPECT_EQ(classify_transport(nw, a), TransportRegime::pumped) << nw;
    EXPECT_EQ(classify_transport(ns, a), TransportRegime::trapped) << ns;
}

TEST(Effective, Classification) {
    EXPECT_EQ(classify_transport(-1.0, 0.6), TransportRegime::pumped);
    EXPECT_EQ(classify_transport(0.2, 0.6), TransportRegime::trapped);
    EXPECT_EQ(classify_transport(0.4, 0.6), TransportRegime::intermediate);
    EXPECT_STREQ(to_string(TransportRegime::pumped), "pumped");
}

TEST(Effective, Preconditions) {
    EXPECT_THROW(integrate_effective(EffectiveParams{0.0, 1, 1, 0.5, 0.1}, 0, 0, 1), std::invalid_argument);
    EXPECT_THROW(integrate_effective(fig3(7.0), 0, 0, -1), std::invalid_argument);
    const auto z = integrate_effective(fig3(7.0), 0.2, 0.0, 0.0);
    ASSERT_EQ(z.x0.size(), 1u);
    EXPECT_EQ(z.x0[0], 0.2);
}
