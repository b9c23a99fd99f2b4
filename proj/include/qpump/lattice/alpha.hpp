#pragma once

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <boost/rational.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace qpump {

using HighPrecision = boost::multiprecision::cpp_dec_float_50;
using Rational = boost::rational<long long>;

inline double to_double(const Rational& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

inline std::string to_string(const Rational& r) {
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

/// Incommensurability ratio alpha. Rational values are kept exact; irrational
/// ones carry 50 significant digits plus a label for manifests.
class AlphaValue {
public:
    struct Irrational {
        HighPrecision value;
        std::string label;
    };

    AlphaValue() : v_(Rational(1, 2)) {}
    explicit AlphaValue(Rational r) : v_(r) {
        if (r <= 0) throw std::invalid_argument("AlphaValue: alpha must be positive");
    }
    static AlphaValue rational(long long num, long long den) { return AlphaValue(Rational(num, den)); }
    static AlphaValue irrational(HighPrecision value, std::string label) {
        if (value <= 0) throw std::invalid_argument("AlphaValue: alpha must be positive");
        AlphaValue a;
        a.v_ = Irrational{std::move(value), std::move(label)};
        return a;
    }

    static AlphaValue golden() {
        return irrational((boost::multiprecision::sqrt(HighPrecision(5)) - 1) / 2, "golden");
    }
    static AlphaValue sqrt3() { return irrational(boost::multiprecision::sqrt(HighPrecision(3)), "sqrt3"); }
    static AlphaValue sqrt3_over_3() {
        return irrational(boost::multiprecision::sqrt(HighPrecision(3)) / 3, "sqrt3/3");
    }
    static AlphaValue sqrt5_over_5() {
        return irrational(boost::multiprecision::sqrt(HighPrecision(5)) / 5, "sqrt5/5");
    }

    /// Accepts "p/q", integers, finite decimals (read exactly) and the labels
    /// golden, sqrt3, sqrt3/3, sqrt5/5.
    static AlphaValue parse(const std::string& s) {
        if (s == "golden") return golden();
        if (s == "sqrt3") return sqrt3();
        if (s == "sqrt3/3") return sqrt3_over_3();
        if (s == "sqrt5/5") return sqrt5_over_5();
        try {
            if (auto slash = s.find('/'); slash != std::string::npos) {
                return rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
            }
            if (auto dot = s.find('.'); dot != std::string::npos) {
                const std::string frac = s.substr(dot + 1);
                if (frac.size() > 12 || frac.find_first_not_of("0123456789") != std::string::npos) {
                    throw std::invalid_argument("bad decimal");
                }
                long long den = 1;
                for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
                const long long whole = dot == 0 ? 0 : std::stoll(s.substr(0, dot));
                const long long f = frac.empty() ? 0 : std::stoll(frac);
                return rational(whole * den + f, den);
            }
            return rational(std::stoll(s), 1);
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument("AlphaValue: cannot parse '" + s + "'");
        }
    }

    [[nodiscard]] bool is_rational() const noexcept { return std::holds_alternative<Rational>(v_); }
    [[nodiscard]] const Rational& exact() const {
        if (!is_rational()) throw std::logic_error("AlphaValue: irrational value has no exact form");
        return std::get<Rational>(v_);
    }
    [[nodiscard]] HighPrecision high_precision() const {
        if (is_rational()) {
            const auto& r = std::get<Rational>(v_);
            return HighPrecision(r.numerator()) / HighPrecision(r.denominator());
        }
        return std::get<Irrational>(v_).value;
    }
    [[nodiscard]] double value() const {
        if (is_rational()) return to_double(std::get<Rational>(v_));
        return std::get<Irrational>(v_).value.convert_to<double>();
    }
    [[nodiscard]] std::string label() const {
        if (is_rational()) return to_string(std::get<Rational>(v_));
        return std::get<Irrational>(v_).label;
    }

    /// p and q of 2*alpha = p/q in lowest terms.
    [[nodiscard]] long long p() const { return (exact() * 2).numerator(); }
    [[nodiscard]] long long q() const { return (exact() * 2).denominator(); }
    /// Superlattice period L = q*alpha = p/2.
    [[nodiscard]] Rational period() const { return Rational(p(), 2); }
    /// 2*alpha integral: the two lattices share harmonics and the lowest gap can close.
    [[nodiscard]] bool degenerate() const { return is_rational() && q() == 1; }

private:
    std::variant<Rational, Irrational> v_;
};

struct ContinuedFraction {
    std::vector<long long> coefficients;
    bool truncated = false;  // precision ran out before max_order
    std::string warning;
};

/// Simple continued fraction [a0; a1, ...] of an exact rational.
inline ContinuedFraction continued_fraction_expand(Rational x, int max_order = 30) {
    if (x <= 0) throw std::invalid_argument("continued_fraction_expand: x must be positive");
    ContinuedFraction out;
    long long num = x.numerator();
    long long den = x.denominator();
    for (int n = 0; n <= max_order && den != 0; ++n) {
        long long a = num / den;
        out.coefficients.push_back(a);
        const long long r = num - a * den;
        num = den;
        den = r;
    }
    return out;
}

/// Simple continued fraction of a high-precision real. The expansion stops at
/// an exact termination or when the propagated rounding error of the
/// remainder exceeds 1e-6, whichever comes first.
inline ContinuedFraction continued_fraction_expand(const HighPrecision& x, int max_order = 30) {
    if (x <= 0) throw std::invalid_argument("continued_fraction_expand: x must be positive");
    if (max_order > 30) throw std::invalid_argument("continued_fraction_expand: max_order above 30");
    ContinuedFraction out;
    const HighPrecision eps = std::numeric_limits<HighPrecision>::epsilon();
    HighPrecision r = x;
    HighPrecision err = eps * boost::multiprecision::abs(x);
    for (int n = 0; n <= max_order; ++n) {
        const HighPrecision a = boost::multiprecision::floor(r);
        out.coefficients.push_back(a.convert_to<long long>());
        const HighPrecision frac = r - a;
        if (frac <= 10 * err) break;
        if (n == max_order) break;
        r = 1 / frac;
        err = err / (frac * frac) + eps * r;
        if (err > HighPrecision(1e-6)) {
            out.truncated = true;
            out.warning = "precision exhausted after " + std::to_string(n + 1) + " coefficients";
            break;
        }
    }
    return out;
}

inline ContinuedFraction continued_fraction_expand(const AlphaValue& a, int max_order = 30) {
    return a.is_rational() ? continued_fraction_expand(a.exact(), max_order)
                           : continued_fraction_expand(a.high_precision(), max_order);
}

struct RationalApproximant {
    int order = 0;
    Rational value{0};
    Rational period_L{0};  // p/2 for 2*alpha_n = p/q
    double wavenumber_k = 0.0;  // pi / alpha_n

    [[nodiscard]] AlphaValue alpha() const { return AlphaValue(value); }
    [[nodiscard]] bool degenerate() const { return value.denominator() != 0 && (value * 2).denominator() == 1; }
};

/// n-th convergent h_n/k_n from the standard recurrence.
inline RationalApproximant convergent(const std::vector<long long>& a, int n) {
    if (n < 0 || static_cast<std::size_t>(n) >= a.size()) {
        throw std::out_of_range("convergent: order exceeds available coefficients");
    }
    long long h_prev = 1, h = a[0];
    long long k_prev = 0, k = 1;
    for (int i = 1; i <= n; ++i) {
        const long long h_next = a[static_cast<std::size_t>(i)] * h + h_prev;
        const long long k_next = a[static_cast<std::size_t>(i)] * k + k_prev;
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
    }
    RationalApproximant out;
    out.order = n;
    out.value = Rational(h, k);
    if (h > 0) {
        const Rational two = out.value * 2;
        out.period_L = Rational(two.numerator(), 2);
        out.wavenumber_k = std::numbers::pi / to_double(out.value);
    } else {
        out.wavenumber_k = std::numeric_limits<double>::infinity();
    }
    return out;
}

}  // namespace qpump
