#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpump/lattice/potential.hpp"
#include "qpump/numerics/eigensolve.hpp"
#include "qpump/numerics/fft.hpp"

namespace qpump {

/// One period [x0, x0+L) of a periodic potential sampled at n_c points.
struct PeriodicCell {
    double L = 1.0;
    double x0 = 0.0;
    std::vector<double> V;

    [[nodiscard]] std::size_t size() const noexcept { return V.size(); }
    [[nodiscard]] double x(std::size_t i) const noexcept {
        return x0 + L * static_cast<double>(i) / static_cast<double>(V.size());
    }
};

/// Default plane-wave count for a cell of length L: 128, or 24 per unit length if larger.
inline std::size_t default_plane_waves(double L) {
    auto n = static_cast<std::size_t>(std::ceil(24.0 * L));
    n = std::max<std::size_t>(128, n + (n % 2));
    return n;
}

inline PeriodicCell make_cell(const SuperlatticeSpec& s, double phi, std::size_t n_c = 0, double x0 = 0.0) {
    const auto L = s.period();
    if (!L) throw std::invalid_argument("make_cell: potential has no spatial period (irrational alpha)");
    if (n_c == 0) n_c = default_plane_waves(*L);
    PeriodicCell c{*L, x0, std::vector<double>(n_c)};
    for (std::size_t i = 0; i < n_c; ++i) c.V[i] = potential_at_phase(s, c.x(i), phi);
    return c;
}

/// Bloch momenta 2 pi (j - floor(n/2)) / (n L), j = 0..n-1, covering [-pi/L, pi/L).
inline std::vector<double> bloch_momenta(std::size_t n_k, double L) {
    std::vector<double> k(n_k);
    const long half = static_cast<long>(n_k / 2);
    for (std::size_t j = 0; j < n_k; ++j) {
        k[j] = 2.0 * std::numbers::pi * static_cast<double>(static_cast<long>(j) - half) /
               (static_cast<double>(n_k) * L);
    }
    return k;
}

/// Plane-wave harmonic index of coefficient slot a: j = a - n_c/2.
inline long harmonic_of_slot(std::size_t a, std::size_t n_c) noexcept {
    return static_cast<long>(a) - static_cast<long>(n_c / 2);
}

/// H(k)_{ab} = (k + G_a)^2 / 2 delta_ab + Vhat((j_a - j_b) mod n_c), G_a = 2 pi j_a / L.
class BlochHamiltonian {
public:
    explicit BlochHamiltonian(const PeriodicCell& cell) : L_(cell.L), n_(cell.size()) {
        if (n_ < 4) throw std::invalid_argument("BlochHamiltonian: too few cell samples");
        std::vector<Complex> v(cell.V.begin(), cell.V.end());
        vhat_ = fft::forward_copy(v);
        for (auto& z : vhat_) z /= static_cast<double>(n_);
        base_ = Eigen::MatrixXcd(n_, n_);
        for (std::size_t a = 0; a < n_; ++a) {
            for (std::size_t b = 0; b < n_; ++b) {
                base_(a, b) = vhat_[fft::bin_of(harmonic_of_slot(a, n_) - harmonic_of_slot(b, n_), n_)];
            }
        }
        // exact symmetrization; V is real so vhat(-l) = conj(vhat(l))
        base_ = 0.5 * (base_ + base_.adjoint()).eval();
    }

    [[nodiscard]] Eigen::MatrixXcd at(double k) const {
        Eigen::MatrixXcd H = base_;
        for (std::size_t a = 0; a < n_; ++a) {
            const double q = k + 2.0 * std::numbers::pi * static_cast<double>(harmonic_of_slot(a, n_)) / L_;
            H(a, a) += 0.5 * q * q;
        }
        return H;
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }

private:
    double L_;
    std::size_t n_;
    std::vector<Complex> vhat_;
    Eigen::MatrixXcd base_;
};

struct BlochSpectrum {
    PeriodicCell cell;
    double phi = 0.0;
    int n_bands = 0;
    std::vector<double> k;
    Eigen::MatrixXd energies;              // [band][k]
    std::vector<Eigen::MatrixXcd> states;  // per k: n_c x n_bands plane-wave coefficients

    [[nodiscard]] std::size_t n_k() const noexcept { return k.size(); }

    /// Periodic part u_{n,k}(x) on the cell grid, normalized so that int_cell |u|^2 = 1.
    [[nodiscard]] std::vector<Complex> periodic_part(int band, std::size_t ik) const {
        const std::size_t n = cell.size();
        std::vector<Complex> spec(n);
        for (std::size_t a = 0; a < n; ++a) spec[fft::bin_of(harmonic_of_slot(a, n), n)] = states[ik](a, band);
        auto u = fft::inverse_copy(spec);
        const double s = static_cast<double>(n) / std::sqrt(cell.L);
        for (auto& z : u) z *= s;
        return u;
    }
};

inline BlochSpectrum bloch_bands(const PeriodicCell& cell, int n_bands, const std::vector<double>& ks, double phi = 0.0) {
    if (n_bands < 1 || static_cast<std::size_t>(n_bands) > cell.size()) {
        throw std::invalid_argument("bloch_bands: n_bands out of range");
    }
    const BlochHamiltonian H(cell);
    BlochSpectrum out;
    out.cell = cell;
    out.phi = phi;
    out.n_bands = n_bands;
    out.k = ks;
    out.energies.resize(n_bands, static_cast<Eigen::Index>(ks.size()));
    out.states.reserve(ks.size());
    for (std::size_t ik = 0; ik < ks.size(); ++ik) {
        auto es = hermitian_eigensolve(H.at(ks[ik]), n_bands);
        out.energies.col(static_cast<Eigen::Index>(ik)) = es.values;
        out.states.push_back(std::move(es.vectors));
    }
    return out;
}

/// Largest lowest-band-energy shift between n_c and 2 n_c plane waves over a
/// few momenta. Used to certify the cutoff.
inline double cutoff_shift(const SuperlatticeSpec& s, double phi, int n_bands, std::size_t n_c) {
    const auto L = *s.period();
    const auto ks = bloch_momenta(4, L);
    const auto a = bloch_bands(make_cell(s, phi, n_c), n_bands, ks, phi);
    const auto b = bloch_bands(make_cell(s, phi, 2 * n_c), n_bands, ks, phi);
    return (a.energies - b.energies).cwiseAbs().maxCoeff();
}

struct BandOptions {
    std::size_t plane_waves = 0;  // 0: default_plane_waves(L)
    bool verify_cutoff = true;
    double cutoff_tol = 1e-8;
};

/// Bands of a periodic superlattice at phase phi over n_k uniform momenta.
inline BlochSpectrum bloch_bands(const SuperlatticeSpec& s, double phi, int n_bands, std::size_t n_k,
                                 const BandOptions& opt = {}) {
    if (n_k < 1) throw std::invalid_argument("bloch_bands: n_k must be positive");
    const auto L = s.period();
    if (!L) throw std::invalid_argument("bloch_bands: requires a periodic potential (rational alpha)");
    const std::size_t nc = opt.plane_waves ? opt.plane_waves : default_plane_waves(*L);
    if (opt.verify_cutoff) {
        const double shift = cutoff_shift(s, phi, n_bands, nc);
        if (shift > opt.cutoff_tol) {
            throw std::runtime_error("bloch_bands: cutoff not converged, shift " + std::to_string(shift) + " at " +
                                     std::to_string(nc) + " vs " + std::to_string(2 * nc) + " plane waves");
        }
    }
    return bloch_bands(make_cell(s, phi, nc), n_bands, bloch_momenta(n_k, *L), phi);
}

struct BandIsolation {
    double bandwidth = 0.0;
    double gap_below = std::numeric_limits<double>::infinity();
    double gap_above = std::numeric_limits<double>::infinity();

    [[nodiscard]] double min_gap() const noexcept { return std::min(gap_below, gap_above); }
    [[nodiscard]] bool isolated(double ratio) const noexcept { return min_gap() > ratio * bandwidth; }
};

inline BandIsolation band_isolation(const BlochSpectrum& sp, int band) {
    BandIsolation b;
    const auto row = sp.energies.row(band);
    b.bandwidth = row.maxCoeff() - row.minCoeff();
    if (band > 0) b.gap_below = row.minCoeff() - sp.energies.row(band - 1).maxCoeff();
    if (band + 1 < sp.n_bands) b.gap_above = sp.energies.row(band + 1).minCoeff() - row.maxCoeff();
    return b;
}

/// Coefficients of u_{k+G} from those of u_k: c(j) -> c(j+1).
inline Eigen::VectorXcd shift_by_reciprocal(const Eigen::VectorXcd& c) {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(c.size());
    out.head(c.size() - 1) = c.tail(c.size() - 1);
    return out;
}

/// Discrete Berry (Zak) phase of one band over the sampled momenta, in (-pi, pi].
inline double zak_phase(const BlochSpectrum& sp, int band) {
    const std::size_t nk = sp.n_k();
    Complex prod{1.0, 0.0};
    for (std::size_t i = 0; i < nk; ++i) {
        const Eigen::VectorXcd a = sp.states[i].col(band);
        const Eigen::VectorXcd b = (i + 1 < nk) ? Eigen::VectorXcd(sp.states[i + 1].col(band))
                                                : shift_by_reciprocal(sp.states[0].col(band));
        const Complex o = a.dot(b);  // conj(a) . b
        prod *= o / std::abs(o);
    }
    return -std::arg(prod);
}

/// Wannier center x0 + L gamma / 2 pi, defined modulo L.
inline double zak_center(const BlochSpectrum& sp, int band) {
    return sp.cell.x0 + sp.cell.L * zak_phase(sp, band) / (2.0 * std::numbers::pi);
}

}  // namespace qpump
