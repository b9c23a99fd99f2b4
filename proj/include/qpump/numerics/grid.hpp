#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpump {

using Complex = std::complex<double>;

/// Minimum point count accepted by production runs (see RunConfig validation).
inline constexpr std::size_t kProductionMinPoints = 256;

/// Uniform periodic grid on [x_min, x_max); the point at x_max is identified with x_min.
class Grid {
public:
    Grid() = default;
    Grid(double x_min, double x_max, std::size_t n_points, std::size_t min_points = 4)
        : x_min_(x_min), x_max_(x_max), n_(n_points) {
        if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
            throw std::invalid_argument("Grid: require finite x_min < x_max");
        }
        if (n_points < min_points) {
            throw std::invalid_argument("Grid: n_points=" + std::to_string(n_points) +
                                        " below the resolution guard " + std::to_string(min_points));
        }
    }

    /// Grid centred on the origin with the given length.
    static Grid centered(double length, std::size_t n_points, std::size_t min_points = 4) {
        return Grid(-0.5 * length, 0.5 * length, n_points, min_points);
    }

    [[nodiscard]] double x_min() const noexcept { return x_min_; }
    [[nodiscard]] double x_max() const noexcept { return x_max_; }
    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] double length() const noexcept { return x_max_ - x_min_; }
    [[nodiscard]] double dx() const noexcept { return length() / static_cast<double>(n_); }
    [[nodiscard]] double x(std::size_t i) const noexcept { return x_min_ + static_cast<double>(i) * dx(); }

    [[nodiscard]] std::vector<double> points() const {
        std::vector<double> xs(n_);
        for (std::size_t i = 0; i < n_; ++i) xs[i] = x(i);
        return xs;
    }

    /// Wrap a position into [anchor - L/2, anchor + L/2).
    [[nodiscard]] double wrap_near(double x, double anchor) const noexcept {
        const double L = length();
        return x - L * std::floor((x - anchor + 0.5 * L) / L);
    }

    friend bool operator==(const Grid& a, const Grid& b) noexcept {
        return a.x_min_ == b.x_min_ && a.x_max_ == b.x_max_ && a.n_ == b.n_;
    }

private:
    double x_min_ = 0.0;
    double x_max_ = 1.0;
    std::size_t n_ = 0;
};

/// Complex samples of a wavefunction on a Grid.
struct ComplexField {
    Grid grid;
    std::vector<Complex> values;

    ComplexField() = default;
    explicit ComplexField(Grid g) : grid(g), values(g.size(), Complex{}) {}
    ComplexField(Grid g, std::vector<Complex> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size()) {
            throw std::invalid_argument("ComplexField: value count does not match grid");
        }
    }

    template <class F>
    static ComplexField from_function(const Grid& g, F&& f) {
        ComplexField out(g);
        for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = Complex(f(g.x(i)));
        return out;
    }

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    Complex& operator[](std::size_t i) noexcept { return values[i]; }
    const Complex& operator[](std::size_t i) const noexcept { return values[i]; }

    [[nodiscard]] std::vector<double> density() const {
        std::vector<double> rho(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) rho[i] = std::norm(values[i]);
        return rho;
    }

    ComplexField& operator*=(Complex s) {
        for (auto& v : values) v *= s;
        return *this;
    }
};

/// Sum |psi_i|^2 dx.
inline double norm(const ComplexField& f) {
    double acc = 0.0;
    for (const auto& v : f.values) acc += std::norm(v);
    return acc * f.grid.dx();
}

/// <f|g> = sum conj(f_i) g_i dx.
inline Complex inner(const ComplexField& f, const ComplexField& g) {
    if (!(f.grid == g.grid)) throw std::invalid_argument("inner: grids differ");
    Complex acc{};
    for (std::size_t i = 0; i < f.size(); ++i) acc += std::conj(f.values[i]) * g.values[i];
    return acc * f.grid.dx();
}

inline bool all_finite(std::span<const Complex> v) noexcept {
    for (const auto& z : v) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
    return true;
}

inline std::size_t argmax_density(const ComplexField& f) {
    std::size_t best = 0;
    double best_val = -1.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double r = std::norm(f.values[i]);
        if (r > best_val) {
            best_val = r;
            best = i;
        }
    }
    return best;
}

}  // namespace qpump
