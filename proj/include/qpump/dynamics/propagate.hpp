#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qpump/dynamics/observables.hpp"
#include "qpump/lattice/potential.hpp"
#include "qpump/numerics/fft.hpp"
#include "qpump/numerics/grid.hpp"
#include "qpump/numerics/spectral.hpp"
#include "qpump/soliton/newton.hpp"
#include "qpump/spectrum/wannier.hpp"

namespace qpump {

/// V(x_i, t) = harmonics at phase drive.phi(t).
struct DrivenPotential {
    PhaseHarmonics harmonics;
    DriveProtocol drive;
};

inline DrivenPotential driven_potential(const SuperlatticeSpec& s, const Grid& g) {
    return {phase_harmonics(s, g.points()), s.drive};
}

/// Basis in which band occupations and the dynamical offset are measured.
/// `spec` only needs a spatial period commensurate with the grid: the
/// superlattice itself, a critical approximant, or the sliding single lattice.
struct AnalysisBasis {
    SuperlatticeSpec spec;
    int n_bands = 5;
    bool offset = true;
    int radius = 5;
    double occupation_threshold = 0.5;
    std::size_t max_plane_waves = 256;
};

struct PropagationOptions {
    double dt = 1e-3;
    double nonlinear_phase_cap = 0.025;   // dt <= cap / max|psi|^2
    std::size_t samples_per_cycle = 64;
    std::size_t analysis_stride = 0;      // steps between samples; 0 derives it from samples_per_cycle
    double edge_tol = 1e-2;               // |psi| at the box edge relative to the peak
    double norm_abort = 1e-4;
    std::size_t snapshot_every = 0;       // extra snapshot cadence in samples; cycle boundaries always kept
};

struct PumpTrajectory {
    std::vector<double> times, phi_values, x_c, delta, delta_decomposed, norms, edge_ratio, occupation_followed;
    std::vector<std::vector<double>> rho;  // [band][sample]
    std::vector<bool> flagged;
    std::vector<double> per_cycle_displacement;
    std::vector<std::pair<double, ComplexField>> snapshots;
    SuperlatticeSpec spec;
    nlohmann::json provenance = nlohmann::json::object();
    double dt = 0.0;
    double period = std::numeric_limits<double>::infinity();
    std::size_t steps = 0;
    std::size_t stride = 0;
    double max_norm_drift = 0.0;
    double max_edge_ratio = 0.0;
    bool aborted = false;
    std::string diagnostic;
    ComplexField final_state;
};

/// x_c(kT) - x_c((k-1)T) for every completed cycle in the samples.
inline std::vector<double> per_cycle_displacement(const PumpTrajectory& tr) {
    std::vector<double> out;
    if (!std::isfinite(tr.period) || tr.times.empty()) return out;
    const double T = tr.period;
    double prev = tr.x_c.front();
    std::size_t next = 1;
    for (std::size_t i = 1; i < tr.times.size(); ++i) {
        if (std::abs(tr.times[i] - static_cast<double>(next) * T) < 1e-9 * T) {
            out.push_back(tr.x_c[i] - prev);
            prev = tr.x_c[i];
            ++next;
        }
    }
    return out;
}

/// Sample index at t (to 1e-9 relative), if sampled.
inline std::optional<std::size_t> sample_at(const PumpTrajectory& tr, double t) {
    const double tol = 1e-9 * std::max(1.0, std::abs(t));
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        if (std::abs(tr.times[i] - t) < tol) return i;
    }
    return std::nullopt;
}

namespace detail {

class Analyzer {
public:
    Analyzer(const AnalysisBasis& b, const Grid& g) : basis_(b), grid_(g) {}

    void sample(PumpTrajectory& tr, const ComplexField& psi, double phi, double xc) {
        const auto nb = static_cast<std::size_t>(basis_.n_bands);
        if (tr.rho.size() != nb) tr.rho.assign(nb, {});
        try {
            SuperlatticeSpec bs = basis_.spec;
            const auto gb = grid_bands(bs, phi, grid_, basis_.n_bands, basis_.max_plane_waves);
            const auto rho = band_occupations(gb, psi);
            for (std::size_t b = 0; b < nb; ++b) tr.rho[b].push_back(rho[b]);
            bool flag = rho[0] < basis_.occupation_threshold;
            if (basis_.offset) {
                const auto wb = wannier_basis(gb, 0);
                // followed cell: nearest to x_c at the start, then continuous
                const FollowedCell mf = nearest_cell(wb, followed_ ? *followed_ : xc);
                followed_ = mf.X;
                const auto d = dynamical_offset(psi, wb, mf, xc, basis_.radius, basis_.occupation_threshold);
                tr.delta.push_back(d.direct);
                tr.delta_decomposed.push_back(d.decomposed);
                tr.occupation_followed.push_back(d.occupation);
                flag = flag || d.flagged;
            } else {
                tr.delta.push_back(std::nan(""));
                tr.delta_decomposed.push_back(std::nan(""));
                tr.occupation_followed.push_back(rho[0]);
            }
            tr.flagged.push_back(flag);
        } catch (const std::exception&) {
            for (std::size_t b = 0; b < nb; ++b) tr.rho[b].push_back(std::nan(""));
            tr.delta.push_back(std::nan(""));
            tr.delta_decomposed.push_back(std::nan(""));
            tr.occupation_followed.push_back(std::nan(""));
            tr.flagged.push_back(true);
        }
    }

private:
    AnalysisBasis basis_;
    Grid grid_;
    std::optional<double> followed_;
};

inline double edge_ratio(const ComplexField& psi) {
    const double peak = std::abs(psi[argmax_density(psi)]);
    const double edge = std::max(std::abs(psi.values.front()), std::abs(psi.values.back()));
    return peak > 0.0 ? edge / peak : 0.0;
}

}  // namespace detail

/// Strang split-step evolution of i psi_t = -psi_xx/2 + V(x, phi(t)) psi - |psi|^2 psi.
/// Half kinetic steps of consecutive unsampled steps are merged, so each step
/// costs one forward and one inverse FFT. The potential step uses phi at the
/// step midpoint. With a drive, dt is shrunk so that an integer number of
/// steps fills one cycle and cycle boundaries fall on samples.
inline PumpTrajectory propagate(const ComplexField& psi0, const DrivenPotential& pot, double t_end,
                                const PropagationOptions& opt = {},
                                const std::optional<AnalysisBasis>& basis = std::nullopt) {
    const Grid& g = psi0.grid;
    const std::size_t n = g.size();
    if (pot.harmonics.size() != n) throw std::invalid_argument("propagate: potential size does not match grid");
    if (!(opt.dt > 0.0) || opt.dt > 1e-2) throw std::invalid_argument("propagate: dt must lie in (0, 1e-2]");
    if (!(t_end >= 0.0)) throw std::invalid_argument("propagate: t_end must be non-negative");
    if (!all_finite(psi0.values)) throw std::invalid_argument("propagate: non-finite initial state");

    PumpTrajectory tr;
    tr.spec.drive = pot.drive;
    double peak2 = 0.0;
    for (const auto& z : psi0.values) peak2 = std::max(peak2, std::norm(z));
    double dt = opt.dt;
    if (peak2 > 0.0) dt = std::min(dt, opt.nonlinear_phase_cap / peak2);
    const double T = pot.drive.period();
    tr.period = T;
    std::size_t stride = opt.analysis_stride;
    std::size_t steps = 0;
    if (std::isfinite(T)) {
        const std::size_t spc = std::max<std::size_t>(1, opt.samples_per_cycle);
        std::size_t per_cycle = static_cast<std::size_t>(std::ceil(T / dt / static_cast<double>(spc))) * spc;
        if (stride != 0) {
            per_cycle = static_cast<std::size_t>(std::ceil(T / dt / static_cast<double>(stride))) * stride;
        } else {
            stride = per_cycle / spc;
        }
        dt = T / static_cast<double>(per_cycle);
        steps = static_cast<std::size_t>(std::llround(t_end / dt));
    } else {
        steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
        if (steps > 0) dt = t_end / static_cast<double>(steps);
        if (stride == 0) stride = std::max<std::size_t>(1, steps / 64);
    }
    tr.dt = dt;
    tr.stride = stride;

    const auto k = wavenumbers(g);
    std::vector<Complex> half(n), full(n);
    for (std::size_t i = 0; i < n; ++i) {
        half[i] = std::polar(1.0, -0.25 * k[i] * k[i] * dt);
        full[i] = half[i] * half[i];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    auto plan = fft::plan_for(n);
    std::vector<Complex> psi = psi0.values;
    auto kinetic = [&](const std::vector<Complex>& ph) {
        plan->forward(psi);
        for (std::size_t i = 0; i < n; ++i) psi[i] *= ph[i] * inv_n;
        plan->backward(psi);
    };

    std::optional<detail::Analyzer> analyzer;
    if (basis) analyzer.emplace(*basis, g);
    const double N0 = norm(psi0);
    double anchor = g.x(argmax_density(psi0));

    auto record = [&](double t) -> bool {
        ComplexField f(g, psi);
        const double Nt = norm(f);
        const double drift = std::abs(Nt - N0) / N0;
        const double er = detail::edge_ratio(f);
        tr.max_norm_drift = std::max(tr.max_norm_drift, drift);
        tr.max_edge_ratio = std::max(tr.max_edge_ratio, er);
        anchor = g.wrap_near(g.x(argmax_density(f)), anchor);
        const double xc = center_of_mass(f, anchor);
        const double phi = pot.drive.phi(t);
        tr.times.push_back(t);
        tr.phi_values.push_back(phi);
        tr.x_c.push_back(xc);
        tr.norms.push_back(Nt);
        tr.edge_ratio.push_back(er);
        if (analyzer) analyzer->sample(tr, f, phi, xc);
        const std::size_t idx = tr.times.size() - 1;
        const bool boundary = std::isfinite(T) && std::abs(std::remainder(t, T)) < 1e-9 * T;
        if (boundary || (opt.snapshot_every > 0 && idx % opt.snapshot_every == 0)) tr.snapshots.emplace_back(t, f);
        if (!all_finite(psi)) {
            tr.aborted = true;
            tr.diagnostic = "non-finite field at t=" + std::to_string(t);
            return false;
        }
        if (drift > opt.norm_abort) {
            tr.aborted = true;
            tr.diagnostic = "norm drift " + std::to_string(drift) + " exceeds " + std::to_string(opt.norm_abort) +
                            " at t=" + std::to_string(t);
            return false;
        }
        if (er > opt.edge_tol) {
            tr.aborted = true;
            tr.diagnostic = "edge amplitude ratio " + std::to_string(er) + " exceeds " + std::to_string(opt.edge_tol) +
                            " at t=" + std::to_string(t) + "; enlarge the box";
            return false;
        }
        return true;
    };

    bool ok = record(0.0);
    bool at_integer = true;  // state sits at an integer time step
    std::vector<double> V(n);
    for (std::size_t s = 0; ok && s < steps; ++s) {
        if (at_integer) kinetic(half);
        const double phi = pot.drive.phi((static_cast<double>(s) + 0.5) * dt);
        const double c2 = std::cos(2.0 * phi), s2 = std::sin(2.0 * phi);
        const auto& h = pot.harmonics;
        for (std::size_t i = 0; i < n; ++i) {
            const double th = (h.v0[i] + h.vc[i] * c2 + h.vs[i] * s2 - std::norm(psi[i])) * dt;
            psi[i] *= Complex(std::cos(th), -std::sin(th));
        }
        const bool sample = (s + 1) % stride == 0 || s + 1 == steps;
        if (sample) {
            kinetic(half);
            at_integer = true;
            ok = record(static_cast<double>(s + 1) * dt);
        } else {
            kinetic(full);
            at_integer = false;
        }
        tr.steps = s + 1;
    }
    tr.final_state = ComplexField(g, std::move(psi));
    tr.per_cycle_displacement = per_cycle_displacement(tr);
    tr.provenance["dt"] = dt;
    tr.provenance["steps"] = tr.steps;
    tr.provenance["stride"] = stride;
    tr.provenance["max_norm_drift"] = tr.max_norm_drift;
    tr.provenance["max_edge_ratio"] = tr.max_edge_ratio;
    tr.provenance["aborted"] = tr.aborted;
    if (tr.aborted) tr.provenance["diagnostic"] = tr.diagnostic;
    return tr;
}

inline PumpTrajectory propagate(const SolitonSolution& psi0, const SuperlatticeSpec& spec, double t_end,
                                const PropagationOptions& opt = {},
                                const std::optional<AnalysisBasis>& basis = std::nullopt) {
    auto tr = propagate(psi0.psi, driven_potential(spec, psi0.psi.grid), t_end, opt, basis);
    tr.spec = spec;
    return tr;
}

/// rho_n(t) from retained snapshots in a caller-chosen basis.
inline std::vector<std::vector<double>> band_occupation_timeseries(const PumpTrajectory& tr, const AnalysisBasis& basis) {
    std::vector<std::vector<double>> rho(static_cast<std::size_t>(basis.n_bands));
    for (const auto& [t, f] : tr.snapshots) {
        const double phi = tr.spec.drive.phi(t);
        try {
            const auto gb = grid_bands(basis.spec, phi, f.grid, basis.n_bands, basis.max_plane_waves);
            const auto r = band_occupations(gb, f);
            for (std::size_t b = 0; b < rho.size(); ++b) rho[b].push_back(r[b]);
        } catch (const std::exception&) {
            for (auto& row : rho) row.push_back(std::nan(""));
        }
    }
    return rho;
}

}  // namespace qpump
