#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpump/dynamics/propagate.hpp"
#include "qpump/lattice/alpha.hpp"
#include "qpump/lattice/potential.hpp"
#include "qpump/soliton/newton.hpp"
#include "qpump/spectrum/chern.hpp"

namespace qpump {

struct PumpNumerics {
    double box_min = 40.0;
    double points_per_unit = 32.0;
    PropagationOptions propagation{};
    NormSolveOptions solve{};
};

/// Smallest box >= box_min holding an integer number of every period.
inline double commensurate_box(const std::vector<double>& periods, double box_min) {
    if (periods.empty()) return box_min;
    const double big = *std::max_element(periods.begin(), periods.end());
    for (int k = 1; k <= 100000; ++k) {
        const double B = k * big;
        if (B < box_min - 1e-9) continue;
        bool ok = true;
        for (double p : periods) {
            const double r = B / p;
            if (std::abs(r - std::round(r)) > 1e-9 * r) {
                ok = false;
                break;
            }
        }
        if (ok) return B;
    }
    throw std::invalid_argument("commensurate_box: periods have no common multiple in range");
}

/// Centered grid on a box of length B; with a cell period the point count is a
/// multiple of the cell count, so Bloch states of that period live on the grid.
inline Grid pump_grid(double B, double points_per_unit, std::optional<double> cell_period = std::nullopt) {
    std::size_t n = 0;
    if (cell_period) {
        const auto M = static_cast<std::size_t>(std::llround(B / *cell_period));
        auto c = static_cast<std::size_t>(std::ceil(points_per_unit * *cell_period - 1e-9));
        if ((M * c) % 2 == 1) ++c;
        n = M * c;
    } else {
        n = static_cast<std::size_t>(std::ceil(points_per_unit * B - 1e-9));
        n += n % 2;
    }
    return Grid::centered(B, n);
}

/// One adiabatic pumping run: stationary soliton of `spec` (plus the optional
/// tilt) at the initial phase, then propagation under the same drive.
struct PumpCase {
    std::string name;
    SuperlatticeSpec spec;
    std::optional<TiltPerturbation> tilt;
    double norm_N = 0.2;
    int cycles = 1;
    std::optional<AnalysisBasis> basis;
};

struct PumpOutcome {
    std::string name;
    Grid grid;
    SolitonSolution soliton;
    PumpTrajectory trajectory;
    double first_cycle = 0.0;  // x_c(T) - x_c(0)
    double net = 0.0;          // x_c(end) - x_c(0)
};

inline std::vector<double> case_periods(const PumpCase& c) {
    std::vector<double> ps;
    if (auto L = c.spec.period()) ps.push_back(*L);
    if (c.basis) {
        if (auto Lb = c.basis->spec.period()) ps.push_back(*Lb);
    }
    return ps;
}

inline PumpOutcome run_pump_case(const PumpCase& c, const PumpNumerics& num = {}) {
    c.spec.validate();
    const auto periods = case_periods(c);
    const double B = commensurate_box(periods, num.box_min);
    std::optional<double> cell;
    if (c.basis && c.basis->spec.period()) {
        cell = *c.basis->spec.period();
    } else if (c.spec.period()) {
        cell = *c.spec.period();
    }
    const Grid g = pump_grid(B, num.points_per_unit, cell);

    DrivenPotential pot = driven_potential(c.spec, g);
    if (c.tilt) pot.harmonics += phase_harmonics(*c.tilt, g.points());
    const double phi0 = c.spec.drive.phi0;
    StationaryProblem prob{g, pot.harmonics.at_phase(phi0)};
    auto guess = initial_guess(c.spec, phi0, g, c.norm_N);
    PumpOutcome out;
    out.name = c.name;
    out.grid = g;
    if (c.tilt) {
        // W grows linearly in x and is only meaningful near the soliton; relaxing
        // under H + W would slide into the box-edge wells. Continue the H soliton
        // to H + W by Newton alone.
        const StationaryProblem plain{g, driven_potential(c.spec, g).harmonics.at_phase(phi0)};
        guess = solve_at_norm(plain, c.norm_N, std::nullopt, guess, num.solve).psi;
        NormSolveOptions local = num.solve;
        local.relax_steps = 0;
        out.soliton = solve_at_norm(prob, c.norm_N, std::nullopt, guess, local);
    } else {
        out.soliton = solve_at_norm(prob, c.norm_N, std::nullopt, guess, num.solve);
    }
    out.soliton.spec = c.spec;
    out.soliton.phi = phi0;
    const double T = c.spec.drive.period();
    out.trajectory = propagate(out.soliton.psi, pot, c.cycles * T, num.propagation, c.basis);
    out.trajectory.spec = c.spec;
    if (!out.trajectory.per_cycle_displacement.empty()) out.first_cycle = out.trajectory.per_cycle_displacement.front();
    out.net = out.trajectory.x_c.back() - out.trajectory.x_c.front();
    return out;
}

/// n-th convergent of alpha.
inline RationalApproximant approximant_of(const AlphaValue& a, int n) {
    const auto cf = continued_fraction_expand(a, std::max(n, 1));
    return convergent(cf.coefficients, n);
}

/// Lowest-band Chern number, or nullopt if the gap closes along the cycle.
inline std::optional<int> lowest_band_chern(const SuperlatticeSpec& s, const ChernOptions& opt = {}) {
    try {
        return chern_number(s, 0, opt).chern;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

struct ScanEntry {
    int order = 0;
    RationalApproximant approximant;
    std::optional<int> chern;
    double displacement = 0.0;  // over the first cycle
    double net = 0.0;           // over all cycles
    double ratio = 0.0;         // displacement / L_n
    double min_rho1 = 0.0;      // in the critical basis, if measured
    bool quantized = false;
    PumpOutcome outcome;
};

struct ScanResult {
    AlphaValue target;
    std::vector<ScanEntry> entries;
    std::vector<int> skipped_degenerate;
    int n_c = -1;  // highest order up to which every scanned order is quantized
    std::optional<ScanEntry> tilted;  // H_base + W_base^infinity
    int tilt_order = -1;
};

struct ScanOptions {
    std::vector<int> orders;
    double quantization_tol = 0.05;  // |ratio - C|
    std::optional<int> tilt_order;   // also run H_n + W_n^infinity
    std::optional<int> basis_order;  // measure occupations in this approximant's basis
    bool chern_beyond_nc = false;
    ChernOptions chern{};
};

inline SuperlatticeSpec with_alpha(SuperlatticeSpec s, const AlphaValue& a) {
    s.alpha = a;
    return s;
}

inline double min_finite(const std::vector<double>& v) {
    double m = std::numeric_limits<double>::infinity();
    for (double x : v) {
        if (std::isfinite(x)) m = std::min(m, x);
    }
    return m;
}

/// Pumping over successive non-degenerate approximants of `target`.
inline ScanResult approximant_scan(const SuperlatticeSpec& base, const AlphaValue& target, double norm_N, int cycles,
                                   const ScanOptions& opt, const PumpNumerics& num = {}) {
    ScanResult res;
    res.target = target;
    std::optional<AnalysisBasis> basis;
    if (opt.basis_order) {
        AnalysisBasis b;
        b.spec = with_alpha(base, approximant_of(target, *opt.basis_order).alpha());
        b.offset = false;
        basis = b;
    }
    bool still_quantized = true;
    for (int n : opt.orders) {
        const auto ap = approximant_of(target, n);
        if (ap.degenerate()) {
            res.skipped_degenerate.push_back(n);
            continue;
        }
        ScanEntry e;
        e.order = n;
        e.approximant = ap;
        PumpCase pc{"order_" + std::to_string(n), with_alpha(base, ap.alpha()), std::nullopt, norm_N, cycles, basis};
        e.outcome = run_pump_case(pc, num);
        e.displacement = e.outcome.first_cycle;
        e.net = e.outcome.net;
        e.ratio = e.displacement / to_double(ap.period_L);
        if (basis && !e.outcome.trajectory.rho.empty()) e.min_rho1 = min_finite(e.outcome.trajectory.rho[0]);
        if (still_quantized || opt.chern_beyond_nc) e.chern = lowest_band_chern(pc.spec, opt.chern);
        e.quantized = e.chern && *e.chern != 0 && std::abs(e.ratio - *e.chern) < opt.quantization_tol;
        if (still_quantized && e.quantized) {
            res.n_c = n;
        } else {
            still_quantized = false;
        }
        res.entries.push_back(std::move(e));
    }
    if (opt.tilt_order) {
        const auto ap = approximant_of(target, *opt.tilt_order);
        const SuperlatticeSpec sn = with_alpha(base, ap.alpha());
        ScanEntry e;
        e.order = *opt.tilt_order;
        e.approximant = ap;
        PumpCase pc{"tilted_" + std::to_string(*opt.tilt_order), sn, make_tilt(ap, target, base), norm_N, cycles, basis};
        e.outcome = run_pump_case(pc, num);
        e.displacement = e.outcome.first_cycle;
        e.net = e.outcome.net;
        e.ratio = e.displacement / to_double(ap.period_L);
        if (basis && !e.outcome.trajectory.rho.empty()) e.min_rho1 = min_finite(e.outcome.trajectory.rho[0]);
        res.tilted = std::move(e);
        res.tilt_order = *opt.tilt_order;
    }
    return res;
}

/// Basis of the sliding single lattice (the short lattice removed).
inline AnalysisBasis sliding_lattice_basis(const SuperlatticeSpec& s) {
    AnalysisBasis b;
    b.spec = s;
    if (s.sliding == SlidingTarget::long_lattice) {
        b.spec.p1 = 0.0;
    } else {
        b.spec.p2 = 0.0;
    }
    return b;
}

}  // namespace qpump
