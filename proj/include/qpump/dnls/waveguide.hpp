#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpump::dnls {

using Complex = std::complex<double>;

/// Waveguide array with couplings J_n(z) = J + K cos(2 pi q (n-1)/p + Omega z).
struct WaveguideConfig {
    double J = 1.0;
    double K = 0.01;
    int p = 5;
    int q = 2;
    double Omega = 0.01;
    double g = 1.0;
    int n_sites = 75;
    double norm_N = 2.1;

    void validate() const {
        if (p < 1 || q < 1) throw std::invalid_argument("WaveguideConfig: p and q must be positive");
        if (std::gcd(p, q) != 1) throw std::invalid_argument("WaveguideConfig: gcd(p, q) must be 1");
        if (!(std::abs(K) < J)) throw std::invalid_argument("WaveguideConfig: require |K| < J");
        if (n_sites < 2) throw std::invalid_argument("WaveguideConfig: need at least two sites");
        if (!(norm_N > 0.0)) throw std::invalid_argument("WaveguideConfig: norm_N must be positive");
    }

    [[nodiscard]] double period() const { return 2.0 * std::numbers::pi / Omega; }
};

/// J_n(z) for the 1-based bond n between sites n and n+1.
inline double coupling_profile(const WaveguideConfig& c, int n, double z) {
    if (n < 1 || n >= c.n_sites) throw std::out_of_range("coupling_profile: bond index out of range");
    return c.J + c.K * std::cos(2.0 * std::numbers::pi * c.q * (n - 1) / c.p + c.Omega * z);
}

/// Empirical coupling of two waveguides at separation d (mm), in 1/mm.
inline double coupling_from_distance(double d) {
    if (!(d >= 0.0)) throw std::invalid_argument("coupling_from_distance: d must be non-negative");
    return 6.672 * std::exp(-234.8 * d);
}

inline double distance_from_coupling(double J) {
    if (!(J > 0.0)) throw std::invalid_argument("distance_from_coupling: J must be positive");
    return std::log(6.672 / J) / 234.8;
}

/// Linear part: H_{n,n+1} = H_{n+1,n} = -J_n(z), open boundaries.
inline Eigen::MatrixXd linear_hamiltonian(const WaveguideConfig& c, double z) {
    const int n = c.n_sites;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    for (int b = 1; b < n; ++b) {
        H(b - 1, b) = H(b, b - 1) = -coupling_profile(c, b, z);
    }
    return H;
}

/// Bulk Bloch bands of the frozen-z chain (p sites per cell): energies[band][k].
inline std::vector<std::vector<double>> frozen_bands(const WaveguideConfig& c, double z, int n_k = 64) {
    const int p = c.p;
    std::vector<std::vector<double>> out(static_cast<std::size_t>(p), std::vector<double>(static_cast<std::size_t>(n_k)));
    for (int ik = 0; ik < n_k; ++ik) {
        const double k = 2.0 * std::numbers::pi * ik / n_k;
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(p, p);
        for (int b = 0; b < p; ++b) {
            const double Jb = c.J + c.K * std::cos(2.0 * std::numbers::pi * c.q * b / c.p + c.Omega * z);
            const int a = b, bb = (b + 1) % p;
            const Complex hop = b == p - 1 ? -Jb * std::polar(1.0, k) : Complex(-Jb);
            if (p == 1) {
                H(0, 0) += 2.0 * (hop).real();
            } else {
                H(a, bb) += hop;
                H(bb, a) += std::conj(hop);
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
        for (int bnd = 0; bnd < p; ++bnd) out[static_cast<std::size_t>(bnd)][static_cast<std::size_t>(ik)] = es.eigenvalues()(bnd);
    }
    return out;
}

/// Number of groups of bands separated by a gap larger than min_gap.
inline int isolated_band_count(const std::vector<std::vector<double>>& bands, double min_gap = 1e-8) {
    int groups = bands.empty() ? 0 : 1;
    for (std::size_t b = 0; b + 1 < bands.size(); ++b) {
        const double top = *std::max_element(bands[b].begin(), bands[b].end());
        const double bottom = *std::min_element(bands[b + 1].begin(), bands[b + 1].end());
        if (bottom - top > min_gap) ++groups;
    }
    return groups;
}

struct DNLSState {
    double z = 0.0;
    std::vector<Complex> amplitudes;
};

inline double power(const std::vector<Complex>& a) {
    double s = 0.0;
    for (const auto& v : a) s += std::norm(v);
    return s;
}

/// x_c = sum n |phi_n|^2 / N with 1-based site index n.
inline double center_of_mass(const std::vector<Complex>& a) {
    double s = 0.0, w = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += static_cast<double>(i + 1) * std::norm(a[i]);
        w += std::norm(a[i]);
    }
    if (!(w > 0.0)) throw std::invalid_argument("dnls center_of_mass: zero power");
    return s / w;
}

inline double participation_number(const std::vector<Complex>& a) {
    double s2 = 0.0, s4 = 0.0;
    for (const auto& v : a) {
        s2 += std::norm(v);
        s4 += std::norm(v) * std::norm(v);
    }
    return s2 * s2 / s4;
}

inline double peak_fraction(const std::vector<Complex>& a) {
    double mx = 0.0;
    for (const auto& v : a) mx = std::max(mx, std::norm(v));
    return mx / power(a);
}

struct DNLSSoliton {
    DNLSState state;
    double mu = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

/// Real stationary solution of H phi - g phi^3 = mu phi by Newton iteration.
inline DNLSSoliton dnls_soliton(const WaveguideConfig& c, double z, double mu, const Eigen::VectorXd& guess,
                                double tol = 1e-12, int max_iter = 100) {
    const Eigen::MatrixXd H = linear_hamiltonian(c, z);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    if (!(mu < es.eigenvalues()(0))) {
        throw std::invalid_argument("dnls_soliton: mu=" + std::to_string(mu) + " not below the linear band minimum " +
                                    std::to_string(es.eigenvalues()(0)));
    }
    Eigen::VectorXd phi = guess;
    DNLSSoliton out;
    for (int it = 0; it <= max_iter; ++it) {
        const Eigen::VectorXd F = H * phi - c.g * phi.array().cube().matrix() - mu * phi;
        out.residual = F.cwiseAbs().maxCoeff();
        out.iterations = it;
        if (!std::isfinite(out.residual)) break;
        if (out.residual < tol) {
            out.mu = mu;
            out.state.z = z;
            out.state.amplitudes.assign(phi.data(), phi.data() + phi.size());
            return out;
        }
        Eigen::MatrixXd Jm = H;
        Jm.diagonal().array() -= 3.0 * c.g * phi.array().square() + mu;
        const Eigen::VectorXd step = Jm.partialPivLu().solve(F);
        // backtrack on the sup-norm residual
        double lambda = 1.0;
        for (int bt = 0; bt < 30; ++bt, lambda *= 0.5) {
            const Eigen::VectorXd trial = phi - lambda * step;
            const Eigen::VectorXd Ft = H * trial - c.g * trial.array().cube().matrix() - mu * trial;
            if (Ft.cwiseAbs().maxCoeff() < out.residual) break;
        }
        phi -= lambda * step;
    }
    throw std::runtime_error("dnls_soliton: Newton diverged (residual " + std::to_string(out.residual) + ")");
}

/// 1-based index of the strongest bond of the unit cell nearest the array center.
inline int central_strong_bond(const WaveguideConfig& c) {
    int best = 1;
    for (int m = 1; m < c.n_sites; m += c.p) {
        if (std::abs(m - 0.5 * c.n_sites) < std::abs(best - 0.5 * c.n_sites)) best = m;
    }
    return best;
}

/// sech profile centered on a bond, scaled to norm N.
inline Eigen::VectorXd dnls_sech_guess(const WaveguideConfig& c, double N, int bond) {
    const double center = bond - 0.5;  // 0-based position between sites bond-1 and bond
    const double w = std::max(4.0 * c.J / (c.g * N), 0.5);
    Eigen::VectorXd phi(c.n_sites);
    for (int i = 0; i < c.n_sites; ++i) phi(i) = 1.0 / std::cosh((i - center) / w);
    phi *= std::sqrt(N / phi.squaredNorm());
    return phi;
}

/// Soliton of power c.norm_N by a secant iteration on mu.
inline DNLSSoliton dnls_soliton_at_norm(const WaveguideConfig& c, double z = 0.0, std::optional<int> bond = std::nullopt,
                                        double norm_tol = 1e-10) {
    c.validate();
    const double N = c.norm_N;
    const int b = bond ? *bond : central_strong_bond(c);
    Eigen::VectorXd guess = dnls_sech_guess(c, N, b);
    const Eigen::MatrixXd H = linear_hamiltonian(c, z);
    const double emin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H, Eigen::EigenvaluesOnly).eigenvalues()(0);
    double mu_a = std::min(emin - 1e-3, -2.0 * c.J - c.g * c.g * N * N / (16.0 * c.J));
    auto solve = [&](double mu, const Eigen::VectorXd& start) {
        auto s = dnls_soliton(c, z, mu, start);
        return std::make_pair(power(s.state.amplitudes), s);
    };
    auto [Na, sa] = solve(mu_a, guess);
    if (std::abs(Na - N) < norm_tol) return sa;
    double mu_b = mu_a + (Na > N ? 0.02 : -0.02) * std::abs(mu_a - emin + 1e-2);
    mu_b = std::min(mu_b, emin - 1e-6);
    auto to_vec = [](const DNLSSoliton& s) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(s.state.amplitudes.size()));
        for (std::size_t i = 0; i < s.state.amplitudes.size(); ++i) v(static_cast<Eigen::Index>(i)) = s.state.amplitudes[i].real();
        return v;
    };
    auto [Nb, sb] = solve(mu_b, to_vec(sa));
    for (int it = 0; it < 80; ++it) {
        if (std::abs(Nb - N) < norm_tol) return sb;
        double mu_c = mu_b - (Nb - N) * (mu_b - mu_a) / (Nb - Na);
        const double cap = 4.0 * std::abs(mu_b - mu_a);
        if (std::abs(mu_c - mu_b) > cap) mu_c = mu_b + std::copysign(cap, mu_c - mu_b);
        mu_c = std::min(mu_c, 0.5 * (mu_b + emin));
        mu_a = mu_b;
        Na = Nb;
        sa = sb;
        std::tie(Nb, sb) = solve(mu_c, to_vec(sa));
        mu_b = mu_c;
    }
    throw std::runtime_error("dnls_soliton_at_norm: power " + std::to_string(N) + " not reached");
}

struct DNLSTrajectory {
    std::vector<double> z, x_c, shift, power;  // shift = (x_c(z) - x_c(0)) / p
    std::vector<double> per_cycle_shift;
    std::vector<std::vector<double>> densities;  // at cycle boundaries
    double dz = 0.0;
    double max_edge_ratio = 0.0;
    double max_norm_drift = 0.0;
    bool aborted = false;
    std::string diagnostic;
    DNLSState final_state;
};

namespace detail {
// exp(i h b sigma_x) on the bond (i, i+1) for every bond of one parity
inline void apply_bonds(std::vector<Complex>& a, const std::vector<double>& b, int parity, double h) {
    for (std::size_t i = static_cast<std::size_t>(parity); i + 1 < a.size(); i += 2) {
        const double cs = std::cos(b[i] * h);
        const Complex sn(0.0, std::sin(b[i] * h));
        const Complex a0 = a[i], a1 = a[i + 1];
        a[i] = cs * a0 + sn * a1;
        a[i + 1] = sn * a0 + cs * a1;
    }
}
inline void apply_kerr(std::vector<Complex>& a, double g, double h) {
    for (auto& v : a) v *= std::polar(1.0, g * std::norm(v) * h);
}
}  // namespace detail

/// Strang integration of i dphi_n/dz = -J_n phi_{n+1} - J_{n-1} phi_{n-1} - g |phi_n|^2 phi_n.
/// Kerr half steps wrap an even/odd/even bond splitting evaluated at the step midpoint;
/// every substep is unitary.
inline DNLSTrajectory dnls_propagate(const DNLSState& s0, const WaveguideConfig& c, double z_end, double dz = 0.0,
                                     int samples_per_cycle = 64, double edge_tol = 1e-6) {
    c.validate();
    if (static_cast<int>(s0.amplitudes.size()) != c.n_sites) throw std::invalid_argument("dnls_propagate: state size mismatch");
    if (dz <= 0.0) dz = 0.01 / std::max(c.J, 1.0);
    const double Z = c.period();
    const auto per_cycle = static_cast<std::size_t>(std::ceil(Z / dz / samples_per_cycle)) * static_cast<std::size_t>(samples_per_cycle);
    dz = Z / static_cast<double>(per_cycle);
    const std::size_t stride = per_cycle / static_cast<std::size_t>(samples_per_cycle);
    const auto steps = static_cast<std::size_t>(std::llround((z_end - s0.z) / dz));

    DNLSTrajectory tr;
    tr.dz = dz;
    std::vector<Complex> a = s0.amplitudes;
    const double N0 = power(a), x0 = center_of_mass(a);
    std::vector<double> b(static_cast<std::size_t>(c.n_sites - 1));
    auto record = [&](double z) {
        double peak = 0.0;
        for (const auto& v : a) peak = std::max(peak, std::norm(v));
        const double edge = std::max(std::norm(a.front()), std::norm(a.back())) / peak;
        const double Nz = power(a);
        tr.max_edge_ratio = std::max(tr.max_edge_ratio, edge);
        tr.max_norm_drift = std::max(tr.max_norm_drift, std::abs(Nz - N0) / N0);
        const double xc = center_of_mass(a);
        tr.z.push_back(z);
        tr.x_c.push_back(xc);
        tr.shift.push_back((xc - x0) / c.p);
        tr.power.push_back(Nz);
        if (std::abs(std::remainder(z - s0.z, Z)) < 1e-9 * Z) {
            std::vector<double> d(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) d[i] = std::norm(a[i]);
            tr.densities.push_back(std::move(d));
            if (tr.z.size() > 1) {
                // previous cycle boundary is samples_per_cycle samples back
                const std::size_t j = tr.z.size() - 1 - static_cast<std::size_t>(samples_per_cycle);
                tr.per_cycle_shift.push_back(tr.shift.back() - tr.shift[j]);
            }
        }
        if (edge > edge_tol) {
            tr.aborted = true;
            tr.diagnostic = "edge density ratio " + std::to_string(edge) + " exceeds " + std::to_string(edge_tol) +
                            " at z=" + std::to_string(z) + "; enlarge the array";
            return false;
        }
        return true;
    };
    bool ok = record(s0.z);
    for (std::size_t st = 0; ok && st < steps; ++st) {
        const double zm = s0.z + (static_cast<double>(st) + 0.5) * dz;
        for (int n = 1; n < c.n_sites; ++n) b[static_cast<std::size_t>(n - 1)] = coupling_profile(c, n, zm);
        detail::apply_kerr(a, c.g, 0.5 * dz);
        detail::apply_bonds(a, b, 0, 0.5 * dz);
        detail::apply_bonds(a, b, 1, dz);
        detail::apply_bonds(a, b, 0, 0.5 * dz);
        detail::apply_kerr(a, c.g, 0.5 * dz);
        if ((st + 1) % stride == 0) ok = record(s0.z + static_cast<double>(st + 1) * dz);
    }
    tr.final_state = {s0.z + static_cast<double>(steps) * dz, std::move(a)};
    return tr;
}

}  // namespace qpump::dnls
