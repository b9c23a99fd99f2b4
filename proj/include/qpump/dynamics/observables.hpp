#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qpump/numerics/fft.hpp"
#include "qpump/numerics/grid.hpp"
#include "qpump/spectrum/wannier.hpp"

namespace qpump {

/// x_c = N^-1 sum x |psi|^2 dx with positions unwrapped around `anchor`
/// (default: the density peak). The result is continuous in the anchor as
/// long as the density near anchor +- L_box/2 is negligible.
inline double center_of_mass(const ComplexField& psi, std::optional<double> anchor = std::nullopt) {
    const auto& g = psi.grid;
    double N = 0.0;
    for (const auto& z : psi.values) N += std::norm(z);
    if (!(N > 0.0)) throw std::invalid_argument("center_of_mass: zero norm");
    const double a = anchor ? *anchor : g.x(argmax_density(psi));
    if (!anchor) {
        // reject densities split across the box boundary
        const double edge = std::max(std::norm(psi.values.front()), std::norm(psi.values.back()));
        if (edge > 0.25 * std::norm(psi[argmax_density(psi)])) {
            throw std::invalid_argument("center_of_mass: density split across the box boundary");
        }
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) acc += g.wrap_near(g.x(i), a) * std::norm(psi[i]);
    return acc / N;
}

struct DynamicalOffset {
    double direct = 0.0;        // x_c - X_{m_f}
    double decomposed = 0.0;    // diagonal cell term + off-diagonal position elements
    double diagonal = 0.0;
    double off_diagonal = 0.0;
    double occupation = 0.0;    // sum_m |a_m|^2 in the followed band
    double followed_center = 0.0;
    bool flagged = false;       // occupation below threshold
};

/// Cell index of the center X (unwrapped) in the basis, and the center itself,
/// chosen as the lattice image of X_0 nearest `target`.
struct FollowedCell {
    long m = 0;          // cell index modulo M
    double X = 0.0;      // unwrapped center
};

inline FollowedCell nearest_cell(const WannierBasis& wb, double target) {
    const double j = std::round((target - wb.centers[0]) / wb.L);
    const auto M = static_cast<long>(wb.cell_count);
    long m = static_cast<long>(j) % M;
    if (m < 0) m += M;
    return {m, wb.centers[0] + j * wb.L};
}

/// Dynamical offset of psi against the Wannier basis of the followed band.
/// Off-diagonal terms are truncated at |m - m'| <= radius.
inline DynamicalOffset dynamical_offset(const ComplexField& psi, const WannierBasis& wb, const FollowedCell& mf,
                                        double x_c, int radius = 5, double occupation_threshold = 0.5) {
    DynamicalOffset out;
    const double N = norm(psi);
    const auto fh = fft::forward_copy(psi.values);
    const Eigen::VectorXcd a = wb.coefficients(fh) / std::sqrt(N);
    const auto M = static_cast<long>(wb.cell_count);
    out.occupation = a.squaredNorm();
    out.flagged = out.occupation < occupation_threshold;
    out.followed_center = mf.X;
    out.direct = x_c - mf.X;
    auto rel = [&](long m) {
        long d = (m - mf.m) % M;
        if (d < 0) d += M;
        if (d > M / 2) d -= M;
        return d;
    };
    for (long m = 0; m < M; ++m) out.diagonal += std::norm(a(m)) * static_cast<double>(rel(m)) * wb.L;
    const long R = std::min<long>(radius, (M - 1) / 2);
    std::vector<Complex> r(static_cast<std::size_t>(2 * R + 1));
    for (long d = -R; d <= R; ++d) r[static_cast<std::size_t>(d + R)] = d == 0 ? Complex{} : wb.position_element(d);
    Complex off{};
    for (long mp = 0; mp < M; ++mp) {
        for (long d = -R; d <= R; ++d) {
            if (d == 0) continue;
            const long m = ((mp + d) % M + M) % M;
            off += std::conj(a(mp)) * a(m) * r[static_cast<std::size_t>(d + R)];
        }
    }
    out.off_diagonal = off.real();
    out.decomposed = out.diagonal + out.off_diagonal;
    return out;
}

}  // namespace qpump
