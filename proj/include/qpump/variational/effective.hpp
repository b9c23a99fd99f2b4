#pragma once

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpump {

/// Parameters of the sech-ansatz center-of-mass equation.
struct EffectiveParams {
    double N = 7.0;
    double p1 = 15.0;
    double p2 = 15.0;
    double alpha = 0.0;
    double v = 0.1;
};

struct EffectiveTrajectory {
    std::vector<double> times, x0, v0;
    EffectiveParams params;
    double rtol = 1e-9;
    double atol = 1e-12;
    bool aborted = false;
    std::string diagnostic;
};

inline void check_params(const EffectiveParams& p) {
    if (!(p.N > 0.0)) throw std::invalid_argument("effective: N must be positive");
    if (!(p.alpha > 0.0)) throw std::invalid_argument("effective: alpha must be positive");
}

/// Static-lattice and sliding-lattice force amplitudes (before the 2 pi^3 / N prefactor).
inline double static_amplitude(const EffectiveParams& p) {
    const double pi = std::numbers::pi;
    return 4.0 * p.p1 / std::sinh(4.0 * pi * pi / p.N);
}
inline double sliding_amplitude(const EffectiveParams& p) {
    const double pi = std::numbers::pi;
    return p.p2 / (p.alpha * p.alpha * std::sinh(2.0 * pi * pi / (p.N * p.alpha)));
}

/// d^2 x0 / dt^2.
inline double effective_force(const EffectiveParams& p, double x, double t) {
    const double pi = std::numbers::pi;
    return -(2.0 * pi * pi * pi / p.N) *
           (static_amplitude(p) * std::sin(4.0 * pi * x) +
            sliding_amplitude(p) * std::sin(2.0 * pi * x / p.alpha - 2.0 * p.v * t));
}

/// Potential of the force at v = 0, so that v0^2/2 + U is conserved.
inline double effective_potential_static(const EffectiveParams& p, double x) {
    const double pi = std::numbers::pi;
    return -(2.0 * pi * pi * pi / p.N) *
           (static_amplitude(p) * std::cos(4.0 * pi * x) / (4.0 * pi) +
            sliding_amplitude(p) * p.alpha * std::cos(2.0 * pi * x / p.alpha) / (2.0 * pi));
}

inline double effective_energy(const EffectiveParams& p, double x, double v0) {
    return 0.5 * v0 * v0 + effective_potential_static(p, x);
}

/// [4 p1 / sinh(4 pi^2/N)] / [p2 / (alpha^2 sinh(2 pi^2/(N alpha)))].
inline double amplitude_ratio(const EffectiveParams& p) {
    check_params(p);
    if (p.p1 == 0.0) return 0.0;
    return static_amplitude(p) / sliding_amplitude(p);
}

/// N where the amplitude ratio equals one, by bisection on [lo, hi].
inline double equal_amplitude_norm(EffectiveParams p, double lo = 0.1, double hi = 200.0, double tol = 1e-12) {
    auto f = [&](double N) {
        p.N = N;
        return std::log(amplitude_ratio(p));
    };
    double flo = f(lo), fhi = f(hi);
    if (!(flo * fhi < 0.0)) throw std::runtime_error("equal_amplitude_norm: ratio does not cross one in the bracket");
    while (hi - lo > tol * hi) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Dormand-Prince 5(4) integration of the center equation, sampled at n_samples + 1 uniform times.
inline EffectiveTrajectory integrate_effective(const EffectiveParams& p, double x0_init, double v0_init, double t_end,
                                               double rtol = 1e-9, std::size_t n_samples = 1000, double atol = 1e-12) {
    check_params(p);
    if (!(t_end >= 0.0)) throw std::invalid_argument("integrate_effective: t_end must be non-negative");
    namespace ode = boost::numeric::odeint;
    using State = std::array<double, 2>;
    EffectiveTrajectory tr;
    tr.params = p;
    tr.rtol = rtol;
    tr.atol = atol;
    State y{x0_init, v0_init};
    auto rhs = [&](const State& s, State& d, double t) {
        d[0] = s[1];
        d[1] = effective_force(p, s[0], t);
    };
    std::vector<double> ts(n_samples + 1);
    for (std::size_t i = 0; i <= n_samples; ++i) ts[i] = t_end * static_cast<double>(i) / static_cast<double>(n_samples);
    auto obs = [&](const State& s, double t) {
        tr.times.push_back(t);
        tr.x0.push_back(s[0]);
        tr.v0.push_back(s[1]);
    };
    if (t_end == 0.0) {
        obs(y, 0.0);
        return tr;
    }
    try {
        auto stepper = ode::make_dense_output(atol, rtol, ode::runge_kutta_dopri5<State>());
        ode::integrate_times(stepper, rhs, y, ts.begin(), ts.end(), t_end / static_cast<double>(n_samples) / 10.0, obs);
    } catch (const std::exception& e) {
        tr.aborted = true;
        tr.diagnostic = std::string("step size underflow: ") + e.what();
    }
    return tr;
}

enum class TransportRegime { pumped, trapped, intermediate };

inline const char* to_string(TransportRegime r) {
    switch (r) {
        case TransportRegime::pumped: return "pumped";
        case TransportRegime::trapped: return "trapped";
        default: return "intermediate";
    }
}

/// Pumped if |net displacement| > alpha, trapped if below half the short period.
inline TransportRegime classify_transport(double net_displacement, double alpha, double short_period = 0.5) {
    if (std::abs(net_displacement) > alpha) return TransportRegime::pumped;
    if (std::abs(net_displacement) < 0.5 * short_period) return TransportRegime::trapped;
    return TransportRegime::intermediate;
}

}  // namespace qpump
