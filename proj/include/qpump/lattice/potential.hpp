#pragma once

#include <boost/math/constants/constants.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpump/lattice/alpha.hpp"
#include "qpump/numerics/grid.hpp"

namespace qpump {

/// phi(t) = phi0 - v t; one adiabatic cycle T = pi / v.
struct DriveProtocol {
    double v = 0.1;
    double phi0 = 0.0;

    [[nodiscard]] double phi(double t) const noexcept { return phi0 - v * t; }
    /// Adiabatic period; infinite for a static lattice.
    [[nodiscard]] double period() const noexcept {
        return v == 0.0 ? std::numeric_limits<double>::infinity() : std::numbers::pi / std::abs(v);
    }
};

enum class SlidingTarget { long_lattice, short_lattice };

inline const char* to_string(SlidingTarget s) { return s == SlidingTarget::long_lattice ? "long_lattice" : "short_lattice"; }
inline SlidingTarget sliding_from_string(const std::string& s) {
    if (s == "long_lattice" || s == "long") return SlidingTarget::long_lattice;
    if (s == "short_lattice" || s == "short") return SlidingTarget::short_lattice;
    throw std::invalid_argument("unknown sliding target '" + s + "'");
}

/// V(x,phi) = -p1 cos^2(2 pi x) - p2 cos^2(pi x / alpha + phi), phi on the sliding lattice.
struct SuperlatticeSpec {
    double p1 = 25.0;
    double p2 = 25.0;
    AlphaValue alpha = AlphaValue::rational(5, 8);
    DriveProtocol drive{};
    SlidingTarget sliding = SlidingTarget::long_lattice;

    void validate() const {
        if (!(p1 >= 0.0) || !(p2 >= 0.0)) throw std::invalid_argument("SuperlatticeSpec: depths must be non-negative");
    }

    /// Spatial period of V, if it has one.
    [[nodiscard]] std::optional<double> period() const {
        if (p1 == 0.0 && p2 == 0.0) return std::nullopt;
        if (p2 == 0.0) return 0.5;
        if (p1 == 0.0) return alpha.value();
        if (alpha.is_rational()) return to_double(alpha.period());
        return std::nullopt;
    }
};

/// Evaluate the superlattice at phase phi.
inline double potential_at_phase(const SuperlatticeSpec& s, double x, double phi) {
    const double a = s.alpha.value();
    const double pi = std::numbers::pi;
    if (s.sliding == SlidingTarget::long_lattice) {
        const double c1 = std::cos(2.0 * pi * x);
        const double c2 = std::cos(pi * x / a + phi);
        return -s.p1 * c1 * c1 - s.p2 * c2 * c2;
    }
    const double c1 = std::cos(2.0 * pi * x + phi);
    const double c2 = std::cos(pi * x / a);
    return -s.p1 * c1 * c1 - s.p2 * c2 * c2;
}

inline double potential_eval(const SuperlatticeSpec& s, double x, double t) {
    return potential_at_phase(s, x, s.drive.phi(t));
}

/// Leading tilt term of V_target - V_n for a long-lattice drive:
/// W = p2 sin(2 k_n x + 2 sigma phi) dk x,  dk = k_target - k_n.
/// sigma = +1 follows from expanding the cos^2 difference; sigma = -1 is the alternative sign convention.
struct TiltPerturbation {
    double p2 = 0.0;
    double k_n = 0.0;
    double dk = 0.0;
    int phase_sign = +1;

    [[nodiscard]] double at_phase(double x, double phi) const {
        return p2 * std::sin(2.0 * k_n * x + 2.0 * phase_sign * phi) * dk * x;
    }
};

inline TiltPerturbation make_tilt(const RationalApproximant& base, const AlphaValue& target, const SuperlatticeSpec& s,
                                  double max_separation = 0.05, int phase_sign = +1) {
    const double an = to_double(base.value);
    const double at = target.value();
    if (!(an > 0.0)) throw std::invalid_argument("perturbation_W: base approximant must be positive");
    if (std::abs(at - an) >= max_separation) {
        throw std::invalid_argument("perturbation_W: |alpha_target - alpha_n| = " + std::to_string(std::abs(at - an)) +
                                    " not below " + std::to_string(max_separation));
    }
    if (s.sliding != SlidingTarget::long_lattice) {
        throw std::invalid_argument("perturbation_W: defined for the long-lattice drive only");
    }
    // exact dk from the high-precision target
    const HighPrecision pi_hp = boost::math::constants::pi<HighPrecision>();
    const HighPrecision kt = pi_hp / target.high_precision();
    const HighPrecision kn = pi_hp * HighPrecision(base.value.denominator()) / HighPrecision(base.value.numerator());
    return TiltPerturbation{s.p2, kn.convert_to<double>(), (kt - kn).convert_to<double>(), phase_sign};
}

inline double perturbation_W(const RationalApproximant& base, const AlphaValue& target, const SuperlatticeSpec& s,
                             double x, double t, double max_separation = 0.05) {
    return make_tilt(base, target, s, max_separation).at_phase(x, s.drive.phi(t));
}

/// V_n + W_n^target, with V_n the superlattice at alpha_n.
inline double perturbed_potential(const RationalApproximant& base, const AlphaValue& target,
                                  const SuperlatticeSpec& s, double x, double t, double max_separation = 0.05) {
    SuperlatticeSpec sn = s;
    sn.alpha = base.alpha();
    return potential_eval(sn, x, t) + perturbation_W(base, target, s, x, t, max_separation);
}

/// V(x_i, phi) = v0_i + vc_i cos(2 phi) + vs_i sin(2 phi) on a grid. Every
/// potential used here has this form, which lets the propagator avoid
/// trigonometric work per grid point.
struct PhaseHarmonics {
    std::vector<double> v0, vc, vs;

    explicit PhaseHarmonics(std::size_t n = 0) : v0(n, 0.0), vc(n, 0.0), vs(n, 0.0) {}

    [[nodiscard]] std::size_t size() const noexcept { return v0.size(); }

    [[nodiscard]] std::vector<double> at_phase(double phi) const {
        const double c = std::cos(2.0 * phi), s = std::sin(2.0 * phi);
        std::vector<double> out(v0.size());
        for (std::size_t i = 0; i < v0.size(); ++i) out[i] = v0[i] + vc[i] * c + vs[i] * s;
        return out;
    }

    PhaseHarmonics& operator+=(const PhaseHarmonics& o) {
        if (o.size() != size()) throw std::invalid_argument("PhaseHarmonics: size mismatch");
        for (std::size_t i = 0; i < size(); ++i) {
            v0[i] += o.v0[i];
            vc[i] += o.vc[i];
            vs[i] += o.vs[i];
        }
        return *this;
    }
};

/// Decomposition of the superlattice on the sample points xs.
inline PhaseHarmonics phase_harmonics(const SuperlatticeSpec& s, const std::vector<double>& xs) {
    PhaseHarmonics h(xs.size());
    const double pi = std::numbers::pi;
    const double a = s.alpha.value();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        // cos^2(u + phi) = 1/2 + 1/2 [cos 2u cos 2phi - sin 2u sin 2phi]
        if (s.sliding == SlidingTarget::long_lattice) {
            const double c1 = std::cos(2.0 * pi * x);
            h.v0[i] = -s.p1 * c1 * c1 - 0.5 * s.p2;
            h.vc[i] = -0.5 * s.p2 * std::cos(2.0 * pi * x / a);
            h.vs[i] = 0.5 * s.p2 * std::sin(2.0 * pi * x / a);
        } else {
            const double c2 = std::cos(pi * x / a);
            h.v0[i] = -0.5 * s.p1 - s.p2 * c2 * c2;
            h.vc[i] = -0.5 * s.p1 * std::cos(4.0 * pi * x);
            h.vs[i] = 0.5 * s.p1 * std::sin(4.0 * pi * x);
        }
    }
    return h;
}

inline PhaseHarmonics phase_harmonics(const TiltPerturbation& w, const std::vector<double>& xs) {
    PhaseHarmonics h(xs.size());
    const double sg = static_cast<double>(w.phase_sign);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        const double amp = w.p2 * w.dk * x;
        // sin(u + 2 s phi) = sin u cos 2phi + s cos u sin 2phi
        h.vc[i] = amp * std::sin(2.0 * w.k_n * x);
        h.vs[i] = amp * sg * std::cos(2.0 * w.k_n * x);
    }
    return h;
}

}  // namespace qpump
