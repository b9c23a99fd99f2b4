#pragma once

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qpump/numerics/grid.hpp"
#include "qpump/spectrum/bloch.hpp"

namespace qpump {

struct CenterSample {
    double phi = 0.0;
    double X = 0.0;
};

struct ChernResult {
    int band = 0;
    int chern = 0;
    double winding = 0.0;  // (X_end - X_start) / L
    double L = 1.0;
    std::vector<CenterSample> winding_data;
};

struct ChernOptions {
    std::size_t n_k = 16;
    std::size_t n_phi = 64;
    std::size_t max_n_phi = 1024;
    std::size_t plane_waves = 0;
    double integer_tol = 0.01;
    double min_gap = 1e-6;
};

/// Zak-phase Wannier center of one band over one drive cycle, branch matched.
/// Consecutive samples may not jump by more than L/4; n_phi is doubled until
/// that holds or max_n_phi is exceeded.
inline std::vector<CenterSample> wannier_center_trajectory(const SuperlatticeSpec& s, int band,
                                                           const ChernOptions& opt = {}) {
    const auto Lopt = s.period();
    if (!Lopt) throw std::invalid_argument("wannier_center_trajectory: potential has no spatial period");
    const double L = *Lopt;
    const auto ks = bloch_momenta(opt.n_k, L);
    const std::size_t nc = opt.plane_waves ? opt.plane_waves : default_plane_waves(L);
    const double dir = s.drive.v >= 0.0 ? -1.0 : 1.0;  // phi = phi0 - v t
    for (std::size_t n_phi = opt.n_phi; n_phi <= opt.max_n_phi; n_phi *= 2) {
        std::vector<CenterSample> trace;
        trace.reserve(n_phi + 1);
        bool ok = true;
        for (std::size_t i = 0; i <= n_phi; ++i) {
            const double phi = s.drive.phi0 + dir * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_phi);
            const auto sp = bloch_bands(make_cell(s, phi, nc), band + 2, ks, phi);
            const auto iso = band_isolation(sp, band);
            if (iso.min_gap() < opt.min_gap) {
                throw std::runtime_error("wannier_center_trajectory: gap closes (" + std::to_string(iso.min_gap()) +
                                         ") at phi=" + std::to_string(phi));
            }
            double X = zak_center(sp, band);
            if (!trace.empty()) {
                double d = X - trace.back().X;
                d -= L * std::round(d / L);
                if (std::abs(d) > 0.25 * L) {
                    ok = false;
                    break;
                }
                X = trace.back().X + d;
            }
            trace.push_back({phi, X});
        }
        if (ok) return trace;
    }
    throw std::runtime_error("wannier_center_trajectory: branch matching failed up to n_phi=" +
                             std::to_string(opt.max_n_phi));
}

inline ChernResult chern_from_trace(std::vector<CenterSample> trace, int band, double L, double integer_tol) {
    ChernResult r;
    r.band = band;
    r.L = L;
    r.winding = (trace.back().X - trace.front().X) / L;
    r.chern = static_cast<int>(std::lround(r.winding));
    r.winding_data = std::move(trace);
    if (std::abs(r.winding - r.chern) > integer_tol) {
        throw std::runtime_error("chern_number: non-integer winding " + std::to_string(r.winding) +
                                 ", gap closing suspected");
    }
    return r;
}

/// Chern number of a band as the winding of its Wannier center per cycle.
inline ChernResult chern_number(const SuperlatticeSpec& s, int band, const ChernOptions& opt = {}) {
    auto trace = wannier_center_trajectory(s, band, opt);
    return chern_from_trace(std::move(trace), band, *s.period(), opt.integer_tol);
}

struct SelfConsistentOptions {
    double points_per_unit = 32.0;
    std::size_t n_k = 6;
    std::size_t phi_per_cycle = 48;
    int cycles = 0;  // 0: q, so that the center covers one full period
    int iterations = 2;
    double edge_tol = 1e-8;
    double integer_tol = 0.01;
};

/// Linear-band Chern number of H - |psi|^2 on a supercell of s periods, the
/// frozen density being tiled with the supercell and carried along the tracked
/// center. `density` holds |psi|^2 on a grid where the soliton sits well inside.
inline ChernResult selfconsistent_chern(const SuperlatticeSpec& s, const Grid& g, const std::vector<double>& density,
                                        int supercell_periods, const SelfConsistentOptions& opt = {}) {
    const auto Lopt = s.period();
    if (!Lopt || !s.alpha.is_rational()) throw std::invalid_argument("selfconsistent_chern: rational alpha required");
    const double L = *Lopt;
    double peak = 0.0;
    for (double r : density) peak = std::max(peak, r);
    if (peak == 0.0) return chern_number(s, 0);
    if (supercell_periods < 1) throw std::invalid_argument("selfconsistent_chern: supercell_periods < 1");

    // density relative to its center on the source grid
    double xc = 0.0, nn = 0.0;
    std::size_t ipk = 0;
    for (std::size_t i = 0; i < density.size(); ++i) {
        if (density[i] > density[ipk]) ipk = i;
    }
    for (std::size_t i = 0; i < density.size(); ++i) {
        xc += g.wrap_near(g.x(i), g.x(ipk)) * density[i];
        nn += density[i];
    }
    xc /= nn;
    const double S = L * supercell_periods;
    const double B = g.length();
    const double mid = g.x_min() + 0.5 * B;
    for (std::size_t i = 0; i < density.size(); ++i) {
        if (std::abs(g.wrap_near(g.x(i), xc) - xc) >= 0.5 * S && density[i] > opt.edge_tol * peak) {
            throw std::invalid_argument("selfconsistent_chern: density not localized inside the supercell");
        }
    }
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline(density.begin(), density.end(), g.x_min(), g.dx());

    auto n_cells = static_cast<std::size_t>(std::ceil(S * opt.points_per_unit));
    n_cells += n_cells % 2;
    const int cycles = opt.cycles > 0 ? opt.cycles : static_cast<int>(s.alpha.q());
    const auto ks = bloch_momenta(opt.n_k, S);
    const double dir = s.drive.v >= 0.0 ? -1.0 : 1.0;

    auto cell_at = [&](double phi, double X) {
        PeriodicCell c{S, 0.0, std::vector<double>(n_cells)};
        for (std::size_t i = 0; i < n_cells; ++i) {
            const double x = c.x(i);
            double d = x - X;
            d -= S * std::round(d / S);
            const double rho = std::abs(d) < 0.5 * B ? std::max(0.0, spline(g.wrap_near(xc + d, mid))) : 0.0;
            c.V[i] = potential_at_phase(s, x, phi) - rho;
        }
        return c;
    };

    double X = xc;
    // settle the starting center at phi0
    for (int it = 0; it < 2 * opt.iterations; ++it) {
        const auto sp = bloch_bands(cell_at(s.drive.phi0, X), 1, ks, s.drive.phi0);
        double Xn = zak_center(sp, 0);
        double d = Xn - X;
        d -= S * std::round(d / S);
        X += d;
    }
    std::vector<CenterSample> trace{{s.drive.phi0, X}};
    const std::size_t total = static_cast<std::size_t>(cycles) * opt.phi_per_cycle;
    for (std::size_t i = 1; i <= total; ++i) {
        const double phi = s.drive.phi0 + dir * std::numbers::pi * static_cast<double>(i) /
                                              static_cast<double>(opt.phi_per_cycle);
        for (int it = 0; it < opt.iterations; ++it) {
            const auto sp = bloch_bands(cell_at(phi, X), 1, ks, phi);
            double d = zak_center(sp, 0) - X;
            d -= S * std::round(d / S);
            X += d;
        }
        trace.push_back({phi, X});
    }
    return chern_from_trace(std::move(trace), 0, L, opt.integer_tol);
}

}  // namespace qpump
