#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "qpump/numerics/fft.hpp"
#include "qpump/numerics/grid.hpp"

namespace qpump {

/// Angular wavenumbers of the FFT bins, 2*pi*m/L with signed m.
inline std::vector<double> wavenumbers(const Grid& g) {
    std::vector<double> k(g.size());
    const double dk = 2.0 * std::numbers::pi / g.length();
    for (std::size_t m = 0; m < g.size(); ++m) k[m] = dk * static_cast<double>(fft::signed_index(m, g.size()));
    return k;
}

/// d^2 f / dx^2 via FFT. Exact for band-limited periodic f.
inline ComplexField spectral_second_derivative(const ComplexField& f) {
    if (f.grid.size() < 4) throw std::invalid_argument("spectral_second_derivative: n_points < 4");
    if (!all_finite(f.values)) throw std::invalid_argument("spectral_second_derivative: non-finite input");
    const auto k = wavenumbers(f.grid);
    auto spec = fft::forward_copy(f.values);
    for (std::size_t m = 0; m < spec.size(); ++m) spec[m] *= -k[m] * k[m];
    return ComplexField(f.grid, fft::inverse_copy(spec));
}

inline ComplexField spectral_first_derivative(const ComplexField& f) {
    if (!all_finite(f.values)) throw std::invalid_argument("spectral_first_derivative: non-finite input");
    const auto k = wavenumbers(f.grid);
    auto spec = fft::forward_copy(f.values);
    const std::size_t n = spec.size();
    for (std::size_t m = 0; m < n; ++m) {
        // Nyquist bin has no odd partner.
        spec[m] *= (n % 2 == 0 && m == n / 2) ? Complex{} : Complex(0.0, k[m]);
    }
    return ComplexField(f.grid, fft::inverse_copy(spec));
}

/// Sum |psi_hat_m|^2 * dx / n, the Fourier-side statement of norm().
inline double spectral_norm(const ComplexField& f) {
    const auto spec = fft::forward_copy(f.values);
    double acc = 0.0;
    for (const auto& z : spec) acc += std::norm(z);
    return acc * f.grid.dx() / static_cast<double>(f.size());
}

/// Kinetic energy  (1/2) int |psi'|^2 dx.
inline double kinetic_energy(const ComplexField& f) {
    const auto k = wavenumbers(f.grid);
    const auto spec = fft::forward_copy(f.values);
    double acc = 0.0;
    for (std::size_t m = 0; m < spec.size(); ++m) acc += k[m] * k[m] * std::norm(spec[m]);
    return 0.5 * acc * f.grid.dx() / static_cast<double>(f.size());
}

}  // namespace qpump
