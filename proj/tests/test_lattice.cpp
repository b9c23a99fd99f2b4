#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qpump/lattice/alpha.hpp"
#include "qpump/lattice/potential.hpp"

using namespace qpump;
constexpr double pi = std::numbers::pi;

// Continued fraction of a double by the textbook floor recursion; good for
// the first handful of terms.
static std::vector<long long> naive_cf(long double x, int terms) {
    std::vector<long long> a;
    for (int i = 0; i < terms; ++i) {
        const long double f = std::floor(x);
        a.push_back(static_cast<long long>(f));
        x = 1.0L / (x - f);
    }
    return a;
}

TEST(Alpha, ParseForms) {
    EXPECT_EQ(AlphaValue::parse("5/8").exact(), Rational(5, 8));
    EXPECT_EQ(AlphaValue::parse("0.625").exact(), Rational(5, 8));
    EXPECT_EQ(AlphaValue::parse("2").exact(), Rational(2));
    EXPECT_NEAR(AlphaValue::parse("golden").value(), (std::sqrt(5.0) - 1.0) / 2.0, 1e-15);
    EXPECT_NEAR(AlphaValue::parse("sqrt3").value(), std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(AlphaValue::parse("sqrt3/3").value(), std::sqrt(3.0) / 3.0, 1e-15);
    EXPECT_NEAR(AlphaValue::parse("sqrt5/5").value(), std::sqrt(5.0) / 5.0, 1e-15);
    EXPECT_THROW(AlphaValue::parse("pi"), std::invalid_argument);
    EXPECT_THROW(AlphaValue::parse("-1/2"), std::invalid_argument);
    EXPECT_FALSE(AlphaValue::parse("golden").is_rational());
}

TEST(Alpha, PeriodRule) {
    // 2 alpha = p/q, L = p/2
    EXPECT_EQ(AlphaValue::parse("5/8").period(), Rational(5, 2));
    EXPECT_EQ(AlphaValue::parse("2/3").period(), Rational(2));
    EXPECT_EQ(AlphaValue::parse("3/5").period(), Rational(3));
    EXPECT_EQ(AlphaValue::parse("7/4").period(), Rational(7, 2));
    EXPECT_EQ(AlphaValue::parse("21/34").period(), Rational(21, 2));
    // L is q alpha
    for (const char* s : {"5/8", "2/3", "3/5", "13/21", "5/3"}) {
        const auto a = AlphaValue::parse(s);
        EXPECT_EQ(a.period(), a.exact() * a.q());
    }
}

TEST(Alpha, Degenerate) {
    for (const char* s : {"1/2", "1", "3/2", "2"}) EXPECT_TRUE(AlphaValue::parse(s).degenerate()) << s;
    for (const char* s : {"5/8", "2/3", "7/4"}) EXPECT_FALSE(AlphaValue::parse(s).degenerate()) << s;
    EXPECT_FALSE(AlphaValue::golden().degenerate());
}

TEST(ContinuedFraction, MatchesNaiveExpansion) {
    const std::pair<AlphaValue, long double> cases[] = {
        {AlphaValue::golden(), (std::sqrt(5.0L) - 1.0L) / 2.0L},
        {AlphaValue::sqrt3_over_3(), std::sqrt(3.0L) / 3.0L},
        {AlphaValue::sqrt5_over_5(), std::sqrt(5.0L) / 5.0L},
        {AlphaValue::sqrt3(), std::sqrt(3.0L)},
    };
    for (const auto& [a, x] : cases) {
        const auto cf = continued_fraction_expand(a, 8);
        const auto ref = naive_cf(x, 9);
        ASSERT_GE(cf.coefficients.size(), ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_EQ(cf.coefficients[i], ref[i]) << a.label() << " term " << i;
    }
}

TEST(ContinuedFraction, RationalTerminates) {
    const auto cf = continued_fraction_expand(Rational(5, 8));
    EXPECT_EQ(cf.coefficients, (std::vector<long long>{0, 1, 1, 1, 2}));
}

TEST(ContinuedFraction, GoldenConvergentsAreFibonacciRatios) {
    const auto cf = continued_fraction_expand(AlphaValue::golden(), 12);
    long long f0 = 1, f1 = 1;  // F(1), F(2)
    for (int n = 1; n <= 10; ++n) {
        const auto c = convergent(cf.coefficients, n);
        EXPECT_EQ(c.value, Rational(f0, f1)) << "order " << n;
        const long long f2 = f0 + f1;
        f0 = f1;
        f1 = f2;
    }
    EXPECT_EQ(convergent(cf.coefficients, 5).value, Rational(5, 8));
    EXPECT_EQ(convergent(cf.coefficients, 5).period_L, Rational(5, 2));
    EXPECT_EQ(convergent(cf.coefficients, 8).value, Rational(21, 34));
}

TEST(ContinuedFraction, CriticalOrderTargets) {
    const auto c3 = continued_fraction_expand(AlphaValue::sqrt3_over_3(), 8);
    EXPECT_EQ(convergent(c3.coefficients, 3).value, Rational(3, 5));
    EXPECT_EQ(convergent(c3.coefficients, 4).value, Rational(4, 7));
    EXPECT_EQ(convergent(c3.coefficients, 5).value, Rational(11, 19));
    EXPECT_TRUE(convergent(c3.coefficients, 2).degenerate());
    const auto c5 = continued_fraction_expand(AlphaValue::sqrt5_over_5(), 8);
    EXPECT_EQ(convergent(c5.coefficients, 2).value, Rational(4, 9));
    EXPECT_EQ(convergent(c5.coefficients, 3).value, Rational(17, 38));
    EXPECT_TRUE(convergent(c5.coefficients, 1).degenerate());
}

TEST(ContinuedFraction, ConvergentsApproachTarget) {
    const auto a = AlphaValue::sqrt3();
    const auto cf = continued_fraction_expand(a, 14);
    for (int n = 1; n + 1 < static_cast<int>(cf.coefficients.size()); ++n) {
        const auto c = convergent(cf.coefficients, n);
        const double q = static_cast<double>(c.value.denominator());
        // best-approximation bound |alpha - h/k| < 1/k^2
        EXPECT_LT(std::abs(a.value() - to_double(c.value)), 1.0 / (q * q));
    }
    EXPECT_THROW(convergent(cf.coefficients, 100), std::out_of_range);
}

TEST(Potential, DirectFormula) {
    SuperlatticeSpec s;
    s.p1 = 25;
    s.p2 = 20;
    s.alpha = AlphaValue::parse("5/8");
    for (double x : {-1.3, 0.0, 0.4, 2.7}) {
        for (double phi : {0.0, 0.3, 1.9}) {
            const double c1 = std::cos(2 * pi * x), c2 = std::cos(pi * x / 0.625 + phi);
            EXPECT_NEAR(potential_at_phase(s, x, phi), -25 * c1 * c1 - 20 * c2 * c2, 1e-12);
        }
    }
    s.sliding = SlidingTarget::short_lattice;
    const double c1 = std::cos(2 * pi * 0.4 + 0.7), c2 = std::cos(pi * 0.4 / 0.625);
    EXPECT_NEAR(potential_at_phase(s, 0.4, 0.7), -25 * c1 * c1 - 20 * c2 * c2, 1e-12);
}

TEST(Potential, PeriodicityAndDrive) {
    SuperlatticeSpec s;
    s.alpha = AlphaValue::parse("5/8");
    ASSERT_TRUE(s.period());
    EXPECT_DOUBLE_EQ(*s.period(), 2.5);
    for (double x : {-0.77, 0.1, 1.23}) EXPECT_NEAR(potential_at_phase(s, x + 2.5, 0.4), potential_at_phase(s, x, 0.4), 1e-10);
    // one cycle advances phi by pi and restores V
    EXPECT_NEAR(s.drive.period(), 10 * pi, 1e-12);
    EXPECT_NEAR(potential_eval(s, 0.3, s.drive.period()), potential_eval(s, 0.3, 0.0), 1e-10);
    s.alpha = AlphaValue::golden();
    EXPECT_FALSE(s.period());
    s.p1 = 0;
    EXPECT_NEAR(*s.period(), s.alpha.value(), 1e-15);
    s.drive.v = 0;
    EXPECT_TRUE(std::isinf(s.drive.period()));
}

TEST(Potential, HarmonicsReproduceEvaluation) {
    for (auto target : {SlidingTarget::long_lattice, SlidingTarget::short_lattice}) {
        SuperlatticeSpec s;
        s.p1 = 15;
        s.p2 = 25;
        s.alpha = AlphaValue::sqrt3();
        s.sliding = target;
        const std::vector<double> xs{-3.1, -0.2, 0.0, 0.45, 5.5};
        const auto h = phase_harmonics(s, xs);
        for (double phi : {0.0, 0.8, 2.2}) {
            const auto v = h.at_phase(phi);
            for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(v[i], potential_at_phase(s, xs[i], phi), 1e-11);
        }
    }
}

TEST(Potential, SlidingTargetNames) {
    EXPECT_EQ(sliding_from_string("short_lattice"), SlidingTarget::short_lattice);
    EXPECT_STREQ(to_string(SlidingTarget::long_lattice), "long_lattice");
    EXPECT_THROW(sliding_from_string("middle"), std::invalid_argument);
}

TEST(Tilt, LeadingTermOfTheDifference) {
    SuperlatticeSpec s;
    const auto target = AlphaValue::golden();
    const auto cf = continued_fraction_expand(target, 10);
    const auto base = convergent(cf.coefficients, 5);
    const auto w = make_tilt(base, target, s);
    EXPECT_NEAR(w.k_n, pi / 0.625, 1e-14);
    EXPECT_NEAR(w.dk, pi / target.value() - pi / 0.625, 1e-14);
    // for small dk x the tilt is the first-order change of the long lattice
    SuperlatticeSpec sn = s;
    sn.alpha = base.alpha();
    SuperlatticeSpec st = s;
    st.alpha = target;
    for (double x : {0.05, 0.2, -0.3}) {
        for (double phi : {0.0, 0.6}) {
            const double diff = potential_at_phase(st, x, phi) - potential_at_phase(sn, x, phi);
            EXPECT_NEAR(w.at_phase(x, phi), diff, 0.5 * s.p2 * std::pow(2 * w.dk * x, 2) + 1e-12);
        }
    }
    const std::vector<double> xs{-1.2, 0.3, 4.0};
    const auto h = phase_harmonics(w, xs);
    const auto v = h.at_phase(0.9);
    for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(v[i], w.at_phase(xs[i], 0.9), 1e-12);
}

TEST(Tilt, Preconditions) {
    SuperlatticeSpec s;
    const auto target = AlphaValue::golden();
    const auto cf = continued_fraction_expand(target, 10);
    EXPECT_THROW(make_tilt(convergent(cf.coefficients, 1), target, s), std::invalid_argument);
    s.sliding = SlidingTarget::short_lattice;
    EXPECT_THROW(make_tilt(convergent(cf.coefficients, 6), target, s), std::invalid_argument);
}
