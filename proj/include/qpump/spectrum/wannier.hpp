#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpump/numerics/fft.hpp"
#include "qpump/numerics/grid.hpp"
#include "qpump/spectrum/bloch.hpp"

namespace qpump {

/// Bloch bands commensurate with a simulation grid: the box holds M cells,
/// the grid holds M * n_c points and the momenta are the M allowed by the
/// box. Every Bloch state is then an exact grid function.
struct GridBands {
    Grid grid;
    std::size_t cells = 0;  // M
    BlochSpectrum spectrum;

    [[nodiscard]] std::size_t cell_points() const noexcept { return spectrum.cell.size(); }
    /// Signed box momentum index of sample ik: kappa = ik - floor(M/2).
    [[nodiscard]] long kappa(std::size_t ik) const noexcept {
        return static_cast<long>(ik) - static_cast<long>(cells / 2);
    }
    /// FFT bin of the full grid holding harmonic slot a of momentum ik.
    [[nodiscard]] std::size_t bin(std::size_t ik, std::size_t a) const noexcept {
        return fft::bin_of(kappa(ik) + static_cast<long>(cells) * harmonic_of_slot(a, cell_points()), grid.size());
    }
};

inline std::size_t cells_in_box(const Grid& g, double L) {
    const double m = g.length() / L;
    const auto M = static_cast<std::size_t>(std::llround(m));
    if (M < 1 || std::abs(m - static_cast<double>(M)) > 1e-9 * m) {
        throw std::invalid_argument("grid_bands: box length is not an integer number of periods");
    }
    if (g.size() % M != 0) throw std::invalid_argument("grid_bands: grid points not divisible by cell count");
    return M;
}

/// Cell sampling stride: the largest divisor s of the points per cell with
/// (points per cell)/s >= max_plane_waves. 0 keeps every point.
inline std::size_t cell_stride(std::size_t nc, std::size_t max_plane_waves) {
    if (max_plane_waves == 0 || nc <= max_plane_waves) return 1;
    for (std::size_t s = nc / max_plane_waves; s > 1; --s) {
        if (nc % s == 0) return s;
    }
    return 1;
}

/// Bands of an arbitrary periodic potential sampled on the grid (period L).
/// With max_plane_waves set, the cell potential is subsampled so that the
/// plane-wave basis per momentum stays below that size.
inline GridBands grid_bands(const Grid& g, const std::vector<double>& V_on_grid, double L, int n_bands, double phi = 0.0,
                            std::size_t max_plane_waves = 0) {
    const std::size_t M = cells_in_box(g, L);
    const std::size_t nc = g.size() / M;
    const std::size_t st = cell_stride(nc, max_plane_waves);
    PeriodicCell cell{L, g.x_min(), std::vector<double>(nc / st)};
    for (std::size_t i = 0; i < cell.V.size(); ++i) cell.V[i] = V_on_grid[i * st];
    return GridBands{g, M, bloch_bands(cell, n_bands, bloch_momenta(M, L), phi)};
}

inline GridBands grid_bands(const SuperlatticeSpec& s, double phi, const Grid& g, int n_bands,
                            std::size_t max_plane_waves = 0) {
    const auto L = s.period();
    if (!L) throw std::invalid_argument("grid_bands: potential has no spatial period");
    const std::size_t M = cells_in_box(g, *L);
    const std::size_t nc = g.size() / M;
    const std::size_t st = cell_stride(nc, max_plane_waves);
    PeriodicCell cell{*L, g.x_min(), std::vector<double>(nc / st)};
    for (std::size_t i = 0; i < cell.V.size(); ++i) cell.V[i] = potential_at_phase(s, g.x(i * st), phi);
    return GridBands{g, M, bloch_bands(cell, n_bands, bloch_momenta(M, *L), phi)};
}

/// <psi_{n,k}|f> for every momentum of one band, from the unnormalized FFT of f.
inline Eigen::VectorXcd bloch_projections(const GridBands& gb, int band, const std::vector<Complex>& f_hat) {
    const std::size_t M = gb.cells, nc = gb.cell_points();
    Eigen::VectorXcd out(static_cast<Eigen::Index>(M));
    const double s = gb.grid.dx() / std::sqrt(gb.grid.length());
    for (std::size_t ik = 0; ik < M; ++ik) {
        Complex acc{};
        const auto& c = gb.spectrum.states[ik];
        for (std::size_t a = 0; a < nc; ++a) acc += std::conj(c(static_cast<Eigen::Index>(a), band)) * f_hat[gb.bin(ik, a)];
        out(static_cast<Eigen::Index>(ik)) = s * acc;
    }
    return out;
}

/// rho_n = sum_k |<psi_{n,k}|psi>|^2 / N. Independent of the Bloch gauge.
inline std::vector<double> band_occupations(const GridBands& gb, const ComplexField& psi, int n_bands = -1) {
    if (n_bands < 0) n_bands = gb.spectrum.n_bands;
    const double N = norm(psi);
    const auto fh = fft::forward_copy(psi.values);
    std::vector<double> rho(static_cast<std::size_t>(n_bands));
    for (int b = 0; b < n_bands; ++b) rho[static_cast<std::size_t>(b)] = bloch_projections(gb, b, fh).squaredNorm() / N;
    return rho;
}

struct WannierBasis {
    int band = 0;
    Grid grid;
    std::size_t cell_count = 0;
    double L = 1.0;
    double zak_center = 0.0;             // x0 + L gamma/2pi
    std::vector<double> centers;         // X_m = X_0 + m L
    std::vector<ComplexField> functions; // w_m on the full grid
    std::vector<Eigen::VectorXcd> gauge; // smooth-gauge plane-wave coefficients per momentum
    GridBands bands;                     // owning band data, for projections

    /// <w_m|psi>, all m, from the unnormalized FFT of psi.
    [[nodiscard]] Eigen::VectorXcd coefficients(const std::vector<Complex>& psi_hat) const {
        const std::size_t M = cell_count, nc = bands.cell_points();
        const double s = grid.dx() / std::sqrt(grid.length());
        Eigen::VectorXcd proj(static_cast<Eigen::Index>(M));
        for (std::size_t ik = 0; ik < M; ++ik) {
            Complex acc{};
            for (std::size_t a = 0; a < nc; ++a) acc += std::conj(gauge[ik](static_cast<Eigen::Index>(a))) * psi_hat[bands.bin(ik, a)];
            proj(static_cast<Eigen::Index>(ik)) = s * acc;
        }
        Eigen::VectorXcd out(static_cast<Eigen::Index>(M));
        const auto ks = bands.spectrum.k;
        for (std::size_t m = 0; m < M; ++m) {
            Complex acc{};
            for (std::size_t ik = 0; ik < M; ++ik) {
                acc += std::polar(1.0, ks[ik] * static_cast<double>(m) * L) * proj(static_cast<Eigen::Index>(ik));
            }
            out(static_cast<Eigen::Index>(m)) = acc / std::sqrt(static_cast<double>(M));
        }
        return out;
    }

    /// Position matrix element <w_0|x|w_d> with x unwrapped around X_0.
    [[nodiscard]] Complex position_element(long d) const {
        const auto M = static_cast<long>(cell_count);
        const auto& w0 = functions[0];
        const auto& wd = functions[static_cast<std::size_t>(((d % M) + M) % M)];
        Complex acc{};
        for (std::size_t i = 0; i < grid.size(); ++i) {
            acc += std::conj(w0[i]) * grid.wrap_near(grid.x(i), centers[0]) * wd[i];
        }
        return acc * grid.dx();
    }
};

/// Maximally localized Wannier functions of one isolated band. In one
/// dimension these follow from the parallel-transport gauge with the Berry
/// phase spread uniformly over the momenta; the centers coincide with the
/// eigenvalues of the band-projected periodic position operator.
inline WannierBasis wannier_basis(const GridBands& gb, int band, double isolation_ratio = 0.0) {
    if (band < 0 || band >= gb.spectrum.n_bands) throw std::invalid_argument("wannier_basis: band not computed");
    if (isolation_ratio > 0.0 && gb.spectrum.n_bands > band + 1) {
        const auto iso = band_isolation(gb.spectrum, band);
        if (!iso.isolated(isolation_ratio)) {
            throw std::runtime_error("wannier_basis: band " + std::to_string(band) + " not isolated (bandwidth " +
                                     std::to_string(iso.bandwidth) + ", gap " + std::to_string(iso.min_gap()) + ")");
        }
    }
    const std::size_t M = gb.cells, nc = gb.cell_points(), n = gb.grid.size();
    WannierBasis wb;
    wb.band = band;
    wb.grid = gb.grid;
    wb.cell_count = M;
    wb.L = gb.spectrum.cell.L;
    wb.zak_center = zak_center(gb.spectrum, band);
    wb.gauge.resize(M);
    wb.gauge[0] = gb.spectrum.states[0].col(band);
    fix_sign(wb.gauge[0]);
    for (std::size_t ik = 1; ik < M; ++ik) {
        Eigen::VectorXcd c = gb.spectrum.states[ik].col(band);
        const Complex o = wb.gauge[ik - 1].dot(c);
        if (std::abs(o) < 1e-8) throw std::runtime_error("wannier_basis: vanishing overlap, band crossing suspected");
        wb.gauge[ik] = c * (std::conj(o) / std::abs(o));
    }
    Complex closure = M > 1 ? wb.gauge[M - 1].dot(shift_by_reciprocal(wb.gauge[0])) : Complex(1.0);
    if (M == 1) closure = wb.gauge[0].dot(shift_by_reciprocal(wb.gauge[0]));
    const double theta = std::arg(closure);
    for (std::size_t ik = 1; ik < M; ++ik) {
        wb.gauge[ik] *= std::polar(1.0, theta * static_cast<double>(ik) / static_cast<double>(M));
    }

    const double amp = static_cast<double>(n) / std::sqrt(gb.grid.length() * static_cast<double>(M));
    const auto& ks = gb.spectrum.k;
    wb.functions.reserve(M);
    for (std::size_t m = 0; m < M; ++m) {
        std::vector<Complex> spec(n);
        for (std::size_t ik = 0; ik < M; ++ik) {
            const Complex ph = std::polar(amp, -ks[ik] * static_cast<double>(m) * wb.L);
            for (std::size_t a = 0; a < nc; ++a) spec[gb.bin(ik, a)] = ph * wb.gauge[ik](static_cast<Eigen::Index>(a));
        }
        wb.functions.emplace_back(gb.grid, fft::inverse_copy(spec));
    }
    // center of w_0 from its density, x unwrapped around the density peak
    const auto& w0 = wb.functions[0];
    const double peak = gb.grid.x(argmax_density(w0));
    double xc = 0.0, nw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::norm(w0[i]);
        xc += gb.grid.wrap_near(gb.grid.x(i), peak) * r;
        nw += r;
    }
    const double X0 = xc / nw;
    wb.centers.resize(M);
    for (std::size_t m = 0; m < M; ++m) wb.centers[m] = X0 + static_cast<double>(m) * wb.L;
    wb.bands = gb;
    return wb;
}

struct BandOccupation {
    std::vector<double> rho;                     // per band
    std::vector<Eigen::VectorXcd> coefficients;  // a_{n,m} = <w_{n,m}|psi>/sqrt(N)
};

inline BandOccupation band_occupation(const ComplexField& psi, const std::vector<WannierBasis>& bases) {
    BandOccupation out;
    const double N = norm(psi);
    if (!(N > 0.0)) throw std::invalid_argument("band_occupation: zero field");
    const auto fh = fft::forward_copy(psi.values);
    for (const auto& wb : bases) {
        if (!(wb.grid == psi.grid)) throw std::invalid_argument("band_occupation: basis grid differs from field grid");
        Eigen::VectorXcd a = wb.coefficients(fh) / std::sqrt(N);
        out.rho.push_back(a.squaredNorm());
        out.coefficients.push_back(std::move(a));
    }
    return out;
}

}  // namespace qpump
