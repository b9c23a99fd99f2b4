#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "qpump/lattice/alpha.hpp"
#include "qpump/spectrum/bloch.hpp"
#include "qpump/spectrum/chern.hpp"
#include "qpump/spectrum/wannier.hpp"

using namespace qpump;
constexpr double pi = std::numbers::pi;

namespace {

SuperlatticeSpec lattice(const char* alpha, double p1 = 25, double p2 = 25) {
    SuperlatticeSpec s;
    s.p1 = p1;
    s.p2 = p2;
    s.alpha = AlphaValue::parse(alpha);
    return s;
}

SuperlatticeSpec approximant(const AlphaValue& target, int n) {
    const auto cf = continued_fraction_expand(target, n + 2);
    SuperlatticeSpec s;
    s.alpha = convergent(cf.coefficients, n).alpha();
    return s;
}

// Lattice-gauge Chern number of the lowest band on the (k, t) torus over one
// drive cycle, from plaquette products of Bloch overlaps.
int plaquette_chern(const SuperlatticeSpec& s, std::size_t n_k, std::size_t n_t) {
    const double T = s.drive.period();
    BandOptions bo;
    bo.verify_cutoff = false;
    std::vector<std::vector<Eigen::VectorXcd>> u(n_t, std::vector<Eigen::VectorXcd>(n_k));
    for (std::size_t it = 0; it < n_t; ++it) {
        const auto sp = bloch_bands(s, s.drive.phi(T * static_cast<double>(it) / static_cast<double>(n_t)), 1, n_k, bo);
        for (std::size_t ik = 0; ik < n_k; ++ik) u[it][ik] = sp.states[ik].col(0);
    }
    auto at = [&](std::size_t it, std::size_t ik) -> Eigen::VectorXcd {
        // k wraps by a reciprocal vector, t closes because V(phi + pi) = V(phi)
        const Eigen::VectorXcd& c = u[it % n_t][ik % n_k];
        return ik >= n_k ? shift_by_reciprocal(c) : c;
    };
    auto link = [](const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
        const Complex o = a.dot(b);
        return o / std::abs(o);
    };
    double flux = 0.0;
    for (std::size_t it = 0; it < n_t; ++it) {
        for (std::size_t ik = 0; ik < n_k; ++ik) {
            const auto a = at(it, ik), b = at(it, ik + 1), c = at(it + 1, ik + 1), d = at(it + 1, ik);
            flux += std::arg(link(a, b) * link(b, c) * link(c, d) * link(d, a));
        }
    }
    return static_cast<int>(std::lround(flux / (2.0 * pi)));
}

}  // namespace

TEST(Bloch, EmptyLatticeParabolas) {
    PeriodicCell cell{1.0, 0.0, std::vector<double>(64, 0.0)};
    const auto ks = bloch_momenta(8, 1.0);
    const auto sp = bloch_bands(cell, 4, ks);
    for (std::size_t ik = 0; ik < ks.size(); ++ik) {
        std::vector<double> e;
        for (int j = -3; j <= 3; ++j) e.push_back(0.5 * std::pow(ks[ik] + 2 * pi * j, 2));
        std::sort(e.begin(), e.end());
        for (int b = 0; b < 4; ++b) EXPECT_NEAR(sp.energies(b, static_cast<Eigen::Index>(ik)), e[static_cast<std::size_t>(b)], 1e-10);
    }
}

TEST(Bloch, WeakLatticeGapAtZoneEdge) {
    // V = -p1 cos^2(2 pi x) = -p1/2 - (p1/4)(e^{iGx} + e^{-iGx}), period 1/2;
    // first-order gap 2|V_G| = p1/2.
    const double p1 = 0.1;
    SuperlatticeSpec s = lattice("5/8", p1, 0.0);
    const auto sp = bloch_bands(s, 0.0, 2, 2);  // k[0] = -pi/L
    EXPECT_NEAR(sp.k[0], -2 * pi, 1e-12);
    EXPECT_NEAR(sp.energies(1, 0) - sp.energies(0, 0), p1 / 2, 1e-4);
}

TEST(Bloch, CutoffCheck) {
    const auto s = lattice("5/8");
    BandOptions bo;
    bo.plane_waves = 8;
    EXPECT_THROW(bloch_bands(s, 0.0, 3, 4, bo), std::runtime_error);
    EXPECT_THROW(bloch_bands(lattice("golden"), 0.0, 1, 4), std::invalid_argument);
}

TEST(Chern, SlidingSingleLatticeIsPlusOne) {
    SuperlatticeSpec s = lattice("5/8", 0.0, 25.0);
    const auto r = chern_number(s, 0);
    EXPECT_EQ(r.chern, 1);
    EXPECT_NEAR(r.winding, 1.0, 0.01);
    // the sliding short lattice also advances by one period per cycle
    SuperlatticeSpec t = lattice("5/8", 25.0, 0.0);
    t.sliding = SlidingTarget::short_lattice;
    EXPECT_EQ(chern_number(t, 0).chern, 1);
}

TEST(Chern, ApproximantValues) {
    EXPECT_EQ(chern_number(lattice("5/8"), 0).chern, -1);
    EXPECT_EQ(chern_number(approximant(AlphaValue::sqrt3_over_3(), 3), 0).chern, -1);
    EXPECT_EQ(chern_number(approximant(AlphaValue::sqrt3_over_3(), 4), 0).chern, -1);
    EXPECT_EQ(chern_number(approximant(AlphaValue::sqrt5_over_5(), 2), 0).chern, 1);
}

TEST(Chern, AgreesWithPlaquetteRoute) {
    const SuperlatticeSpec sliding = lattice("5/8", 0.0, 25.0);
    const int sign = plaquette_chern(sliding, 8, 48) * chern_number(sliding, 0).chern;
    ASSERT_EQ(std::abs(sign), 1);
    for (const auto& s : {lattice("5/8"), lattice("2/3"), approximant(AlphaValue::sqrt5_over_5(), 2)}) {
        EXPECT_EQ(sign * plaquette_chern(s, 8, 48), chern_number(s, 0).chern) << s.alpha.label();
    }
}

TEST(Chern, InvariantUnderRefinement) {
    for (const char* a : {"5/8", "3/5"}) {
        const auto s = lattice(a);
        ChernOptions fine;
        fine.n_k = 32;
        fine.n_phi = 128;
        fine.plane_waves = 2 * default_plane_waves(*s.period());
        EXPECT_EQ(chern_number(s, 0).chern, chern_number(s, 0, fine).chern) << a;
    }
}

TEST(Chern, RequiresPeriodicLattice) {
    EXPECT_THROW(chern_number(lattice("golden"), 0), std::invalid_argument);
}

class WannierTest : public ::testing::Test {
protected:
    void SetUp() override {
        s = lattice("5/8");
        g = Grid::centered(40.0, 1280);
        gb = grid_bands(s, 0.0, g, 3);
        wb = wannier_basis(gb, 0);
    }
    SuperlatticeSpec s;
    Grid g;
    GridBands gb;
    WannierBasis wb;
};

TEST_F(WannierTest, Orthonormal) {
    ASSERT_EQ(wb.cell_count, 16u);
    for (std::size_t m : {0u, 1u, 7u}) {
        for (std::size_t n : {0u, 1u, 7u, 15u}) {
            const Complex o = inner(wb.functions[m], wb.functions[n]);
            EXPECT_NEAR(std::abs(o - Complex(m == n ? 1.0 : 0.0)), 0.0, 1e-10);
        }
    }
}

TEST_F(WannierTest, CentersFormALattice) {
    for (std::size_t m = 1; m < wb.centers.size(); ++m) EXPECT_NEAR(wb.centers[m] - wb.centers[m - 1], 2.5, 1e-12);
    // x <-> -x symmetry at phi = 0 puts centers on 0 or L/2 (mod L)
    const double r = std::remainder(wb.centers[0], 1.25);
    EXPECT_NEAR(r, 0.0, 1e-8);
    // the density center agrees with the Berry-phase center
    EXPECT_NEAR(std::remainder(wb.centers[0] - wb.zak_center, 2.5), 0.0, 1e-6);
    EXPECT_NEAR(wb.position_element(0).real(), wb.centers[0], 1e-8);
}

TEST_F(WannierTest, CentersAreProjectedPositionEigenvalues) {
    // eigenphases of P exp(2 pi i x / B) P within the band
    const std::size_t M = wb.cell_count;
    const double B = g.length();
    Eigen::MatrixXcd Z(M, M);
    for (std::size_t a = 0; a < M; ++a) {
        for (std::size_t b = 0; b < M; ++b) {
            Complex acc{};
            for (std::size_t i = 0; i < g.size(); ++i) {
                acc += std::conj(wb.functions[a][i]) * std::polar(1.0, 2 * pi * g.x(i) / B) * wb.functions[b][i];
            }
            Z(a, b) = acc * g.dx();
        }
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(Z);
    std::vector<double> eig, ctr;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        eig.push_back(std::fmod(B * std::arg(es.eigenvalues()(i)) / (2 * pi) + 2 * B, 2.5));
    }
    for (double c : wb.centers) ctr.push_back(std::fmod(c + 2 * B, 2.5));
    for (double e : eig) {
        // every eigenvalue sits on the center lattice modulo L
        EXPECT_NEAR(std::remainder(e - ctr[0], 2.5), 0.0, 1e-4);
    }
}

TEST_F(WannierTest, GaugeIndependentOccupations) {
    const auto f = ComplexField::from_function(g, [](double x) { return std::exp(-0.5 * (x - 0.3) * (x - 0.3)); });
    const auto rho = band_occupations(gb, f);
    GridBands twisted = gb;
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> ph(0.0, 2 * pi);
    for (auto& st : twisted.spectrum.states) {
        for (Eigen::Index b = 0; b < st.cols(); ++b) st.col(b) *= std::polar(1.0, ph(rng));
    }
    const auto rho2 = band_occupations(twisted, f);
    for (std::size_t b = 0; b < rho.size(); ++b) EXPECT_NEAR(rho[b], rho2[b], 1e-12);
    // the same weight from the Wannier coefficients
    const auto occ = band_occupation(f, {wb});
    EXPECT_NEAR(occ.rho[0], rho[0], 1e-10);
    // Bessel
    double sum = 0.0;
    for (double r : rho) sum += r;
    EXPECT_LE(sum, 1.0 + 1e-12);
}

TEST_F(WannierTest, WannierFunctionIsFullyInItsBand) {
    const auto rho = band_occupations(gb, wb.functions[5]);
    EXPECT_NEAR(rho[0], 1.0, 1e-10);
    EXPECT_NEAR(rho[1], 0.0, 1e-10);
}

TEST(Wannier, RejectsIncommensurateBox) {
    const auto s = lattice("5/8");
    EXPECT_THROW(grid_bands(s, 0.0, Grid::centered(41.0, 1312), 1), std::invalid_argument);
}

TEST(Wannier, SubsampledCellMatches) {
    const auto s = lattice("5/8");
    const Grid g = Grid::centered(20.0, 1280);  // 160 points per cell
    const auto full = grid_bands(s, 0.3, g, 2);
    const auto sub = grid_bands(s, 0.3, g, 2, 80);
    EXPECT_EQ(sub.cell_points(), 80u);
    for (Eigen::Index k = 0; k < full.spectrum.energies.cols(); ++k) {
        EXPECT_NEAR(full.spectrum.energies(0, k), sub.spectrum.energies(0, k), 1e-8);
    }
}
