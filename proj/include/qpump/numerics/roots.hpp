#pragma once

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>

namespace qpump {

/// Bracketed root via TOMS 748. Throws if f(lo), f(hi) share a sign.
inline double bracketed_root(const std::function<double(double)>& f, double lo, double hi, double xtol = 1e-12,
                             std::uintmax_t max_iter = 200) {
    const double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw std::domain_error("bracketed_root: interval does not bracket a root");
    auto tol = [xtol](double a, double b) { return std::abs(b - a) <= xtol; };
    auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, max_iter);
    return 0.5 * (r.first + r.second);
}

struct SecantResult {
    double x = 0.0;
    double fx = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Secant iteration from two starting points. f may be stateful (warm starts).
template <class F>
SecantResult secant(F&& f, double x0, double x1, double ftol, int max_iter = 60, double max_step = 0.0) {
    double f0 = f(x0);
    double f1 = f(x1);
    SecantResult out{x1, f1, 0, std::abs(f1) < ftol};
    for (int it = 0; it < max_iter && !out.converged; ++it) {
        if (f1 == f0) break;
        double step = -f1 * (x1 - x0) / (f1 - f0);
        if (max_step > 0.0 && std::abs(step) > max_step) step = std::copysign(max_step, step);
        x0 = x1;
        f0 = f1;
        x1 += step;
        f1 = f(x1);
        out = {x1, f1, it + 1, std::abs(f1) < ftol};
    }
    return out;
}

}  // namespace qpump
