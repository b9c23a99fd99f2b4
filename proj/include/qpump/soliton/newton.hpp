#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/IterativeSolvers>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpump/lattice/potential.hpp"
#include "qpump/numerics/fft.hpp"
#include "qpump/numerics/grid.hpp"
#include "qpump/numerics/spectral.hpp"
#include "qpump/spectrum/wannier.hpp"

namespace qpump {

/// -psi''/2 + V psi - |psi|^2 psi = mu psi on a periodic grid.
struct StationaryProblem {
    Grid grid;
    std::vector<double> V;
};

inline StationaryProblem stationary_problem(const SuperlatticeSpec& s, double phi, const Grid& g) {
    StationaryProblem p{g, std::vector<double>(g.size())};
    for (std::size_t i = 0; i < g.size(); ++i) p.V[i] = potential_at_phase(s, g.x(i), phi);
    return p;
}

inline StationaryProblem stationary_problem(const PhaseHarmonics& h, double phi, const Grid& g) {
    if (h.size() != g.size()) throw std::invalid_argument("stationary_problem: harmonics do not match grid");
    return StationaryProblem{g, h.at_phase(phi)};
}

namespace detail {

/// Real-vector spectral kinetic operator  -1/2 d^2/dx^2  and its shifted inverse.
class KineticOperator {
public:
    explicit KineticOperator(const Grid& g) : n_(g.size()), plan_(fft::plan_for(g.size())), k2_(wavenumbers(g)) {
        for (auto& k : k2_) k = 0.5 * k * k;
    }

    void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y, double shift = 0.0, bool inverse = false) const {
        std::vector<Complex> buf(n_);
        for (std::size_t i = 0; i < n_; ++i) buf[i] = x(static_cast<Eigen::Index>(i));
        plan_->forward(buf);
        for (std::size_t m = 0; m < n_; ++m) buf[m] *= inverse ? 1.0 / (k2_[m] + shift) : k2_[m] + shift;
        plan_->backward(buf);
        y.resize(static_cast<Eigen::Index>(n_));
        const double s = 1.0 / static_cast<double>(n_);
        for (std::size_t i = 0; i < n_; ++i) y(static_cast<Eigen::Index>(i)) = buf[i].real() * s;
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }

private:
    std::size_t n_;
    std::shared_ptr<const fft::Plan> plan_;
    std::vector<double> k2_;
};

/// Matrix-free Jacobian  -1/2 d^2/dx^2 + diag(w)  for Eigen's iterative solvers.
class JacobianOperator;

}  // namespace detail
}  // namespace qpump

namespace Eigen::internal {
template <>
struct traits<qpump::detail::JacobianOperator> : public Eigen::internal::traits<Eigen::SparseMatrix<double>> {};
}  // namespace Eigen::internal

namespace qpump::detail {

class JacobianOperator : public Eigen::EigenBase<JacobianOperator> {
public:
    using Scalar = double;
    using RealScalar = double;
    using StorageIndex = int;
    enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

    JacobianOperator(const KineticOperator& kin, const Eigen::VectorXd& w) : kin_(&kin), w_(&w) {}

    [[nodiscard]] Eigen::Index rows() const { return w_->size(); }
    [[nodiscard]] Eigen::Index cols() const { return w_->size(); }

    template <typename Rhs>
    Eigen::Product<JacobianOperator, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const {
        return Eigen::Product<JacobianOperator, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
    }

    void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
        kin_->apply(x, y);
        y.array() += w_->array() * x.array();
    }

    const KineticOperator& kinetic() const { return *kin_; }

private:
    const KineticOperator* kin_;
    const Eigen::VectorXd* w_;
};

/// SPD preconditioner (-1/2 d^2/dx^2 + c)^(-1), applied by FFT.
class FourierPreconditioner {
public:
    using StorageIndex = int;
    enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

    FourierPreconditioner() = default;
    template <typename M>
    FourierPreconditioner& analyzePattern(const M&) { return *this; }
    template <typename M>
    FourierPreconditioner& factorize(const M& m) { return compute(m); }
    FourierPreconditioner& compute(const JacobianOperator& m) {
        kin_ = &m.kinetic();
        return *this;
    }
    void set_shift(double c) { shift_ = c; }

    template <typename Rhs>
    Eigen::VectorXd solve(const Rhs& b) const {
        Eigen::VectorXd y;
        kin_->apply(Eigen::VectorXd(b), y, shift_, true);
        return y;
    }
    [[nodiscard]] Eigen::ComputationInfo info() const { return Eigen::Success; }

private:
    const KineticOperator* kin_ = nullptr;
    double shift_ = 1.0;
};

}  // namespace qpump::detail

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<qpump::detail::JacobianOperator, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<qpump::detail::JacobianOperator, Rhs,
                                generic_product_impl<qpump::detail::JacobianOperator, Rhs>> {
    using Scalar = typename Product<qpump::detail::JacobianOperator, Rhs>::Scalar;
    template <typename Dest>
    static void scaleAndAddTo(Dest& dst, const qpump::detail::JacobianOperator& lhs, const Rhs& rhs,
                              const Scalar& alpha) {
        Eigen::VectorXd y;
        lhs.apply(Eigen::VectorXd(rhs), y);
        dst.noalias() += alpha * y;
    }
};
}  // namespace Eigen::internal

namespace qpump {

struct NewtonOptions {
    double tol = 1e-10;      // sup-norm of the stationary residual
    int max_iter = 200;
    double krylov_tol = 1e-13;
    int krylov_max_iter = 0;  // 0: 4 n
    int min_iter = 0;         // steps taken even if the start already meets tol
};

struct NewtonReport {
    Eigen::VectorXd psi;
    double residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    std::string message;
};

inline Eigen::VectorXd stationary_residual(const detail::KineticOperator& kin, const StationaryProblem& p, double mu,
                                           const Eigen::VectorXd& psi) {
    Eigen::VectorXd F;
    kin.apply(psi, F);
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
        const double u = psi(i);
        F(i) += (p.V[static_cast<std::size_t>(i)] - mu) * u - u * u * u;
    }
    return F;
}

/// Newton iteration for a real stationary state at fixed mu. Linear steps
/// use preconditioned MINRES, which tolerates the symmetric indefinite (and,
/// in free space, singular) Jacobian.
inline NewtonReport newton_iterate(const StationaryProblem& p, double mu, Eigen::VectorXd psi,
                                   const NewtonOptions& opt = {}) {
    const detail::KineticOperator kin(p.grid);
    const auto n = static_cast<Eigen::Index>(p.grid.size());
    if (psi.size() != n) throw std::invalid_argument("newton_solve: guess size does not match grid");
    if (psi.cwiseAbs().maxCoeff() == 0.0) throw std::invalid_argument("newton_solve: zero guess");
    NewtonReport rep;
    Eigen::VectorXd F = stationary_residual(kin, p, mu, psi);
    rep.residual = F.cwiseAbs().maxCoeff();
    Eigen::VectorXd w(n);
    for (int it = 0; it < opt.max_iter; ++it) {
        if (!std::isfinite(rep.residual)) break;
        if (rep.residual < opt.tol && it >= opt.min_iter) {
            rep.converged = true;
            break;
        }
        double wmax = 1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            w(i) = p.V[static_cast<std::size_t>(i)] - mu - 3.0 * psi(i) * psi(i);
            wmax = std::max(wmax, std::abs(w(i)));
        }
        detail::JacobianOperator J(kin, w);
        Eigen::MINRES<detail::JacobianOperator, Eigen::Lower | Eigen::Upper, detail::FourierPreconditioner> solver;
        solver.setTolerance(opt.krylov_tol);
        solver.setMaxIterations(opt.krylov_max_iter > 0 ? opt.krylov_max_iter : static_cast<int>(4 * n));
        solver.preconditioner().set_shift(wmax);
        solver.compute(J);
        const Eigen::VectorXd delta = solver.solve(F);
        if (!delta.allFinite()) {
            rep.message = "singular Jacobian (bifurcation point suspected)";
            break;
        }
        // backtracking on the sup-norm residual
        double lambda = 1.0;
        Eigen::VectorXd trial;
        Eigen::VectorXd Ft;
        double rt = 0.0;
        for (int ls = 0; ls < 8; ++ls) {
            trial = psi - lambda * delta;
            Ft = stationary_residual(kin, p, mu, trial);
            rt = Ft.cwiseAbs().maxCoeff();
            if (rt < rep.residual) break;
            lambda *= 0.5;
        }
        psi = std::move(trial);
        F = std::move(Ft);
        rep.residual = rt;
        rep.iterations = it + 1;
    }
    if (!rep.converged && rep.residual < opt.tol) rep.converged = true;
    if (!rep.converged && rep.message.empty()) {
        rep.message = "Newton did not converge after " + std::to_string(rep.iterations) + " iterations, residual " +
                      std::to_string(rep.residual);
    }
    rep.psi = std::move(psi);
    return rep;
}

struct SolitonSolution {
    ComplexField psi;
    double mu = 0.0;
    double norm_N = 0.0;
    double residual = 0.0;
    int iterations = 0;
    SuperlatticeSpec spec;
    double phi = 0.0;
};

/// Fix the gauge (real, positive at the peak) and fill the solution record.
inline SolitonSolution make_solution(const StationaryProblem& p, const Eigen::VectorXd& psi, double mu,
                                     double residual, int iterations) {
    SolitonSolution s;
    std::vector<Complex> v(p.grid.size());
    Eigen::Index imax = 0;
    psi.cwiseAbs().maxCoeff(&imax);
    const double sign = psi(imax) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = sign * psi(static_cast<Eigen::Index>(i));
    s.psi = ComplexField(p.grid, std::move(v));
    s.mu = mu;
    s.norm_N = norm(s.psi);
    s.residual = residual;
    s.iterations = iterations;
    return s;
}

inline Eigen::VectorXd real_part(const ComplexField& f) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(f.size()));
    // rotate to the gauge where the peak is real
    const Complex ph = f[argmax_density(f)];
    const Complex rot = std::abs(ph) > 0 ? std::conj(ph) / std::abs(ph) : Complex(1.0);
    for (std::size_t i = 0; i < f.size(); ++i) v(static_cast<Eigen::Index>(i)) = (f[i] * rot).real();
    return v;
}

inline SolitonSolution newton_solve(const StationaryProblem& p, double mu, const ComplexField& guess,
                                    const NewtonOptions& opt = {}) {
    auto rep = newton_iterate(p, mu, real_part(guess), opt);
    if (!rep.converged) throw std::runtime_error("newton_solve: " + rep.message);
    return make_solution(p, rep.psi, mu, rep.residual, rep.iterations);
}

inline SolitonSolution newton_solve(const SuperlatticeSpec& s, double phi, double mu, const ComplexField& guess,
                                    const NewtonOptions& opt = {}) {
    auto sol = newton_solve(stationary_problem(s, phi, guess.grid), mu, guess, opt);
    sol.spec = s;
    sol.phi = phi;
    return sol;
}

/// mu = <psi|H_lin - |psi|^2|psi> / N.
inline double chemical_potential_estimate(const StationaryProblem& p, const ComplexField& psi) {
    const double N = norm(psi);
    double pot = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const double r = std::norm(psi[i]);
        pot += (p.V[i] - r) * r;
    }
    return (kinetic_energy(psi) + pot * p.grid.dx()) / N;
}

/// Energy functional  int |psi'|^2/2 + V |psi|^2 - |psi|^4/2.
inline double energy_functional(const StationaryProblem& p, const ComplexField& psi) {
    double pot = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const double r = std::norm(psi[i]);
        pot += (p.V[i] - 0.5 * r) * r;
    }
    return kinetic_energy(psi) + pot * p.grid.dx();
}

/// Normalized imaginary-time relaxation at fixed norm N.
inline ComplexField imaginary_time_relax(const StationaryProblem& p, ComplexField psi, double N, int steps,
                                         double dtau = 1e-3) {
    const auto k = wavenumbers(p.grid);
    const auto plan = fft::plan_for(p.grid.size());
    std::vector<double> half(k.size());
    for (std::size_t m = 0; m < k.size(); ++m) half[m] = std::exp(-0.25 * k[m] * k[m] * dtau) / static_cast<double>(k.size());
    auto renorm = [&] {
        const double s = std::sqrt(N / norm(psi));
        for (auto& z : psi.values) z *= s;
    };
    renorm();
    for (int s = 0; s < steps; ++s) {
        plan->forward(psi.values);
        for (std::size_t m = 0; m < k.size(); ++m) psi.values[m] *= half[m];
        plan->backward(psi.values);
        for (std::size_t i = 0; i < psi.size(); ++i) psi.values[i] *= std::exp(-(p.V[i] - std::norm(psi.values[i])) * dtau);
        plan->forward(psi.values);
        for (std::size_t m = 0; m < k.size(); ++m) psi.values[m] *= half[m];
        plan->backward(psi.values);
        renorm();
    }
    return psi;
}

enum class GuessKind { automatic, wannier, sech };

/// (N/2) sech(N (x - x0) / 2), the free-space soliton of norm N.
inline ComplexField sech_guess(const Grid& g, double N, double x0 = 0.0) {
    return ComplexField::from_function(g, [&](double x) {
        const double d = g.wrap_near(x, x0) - x0;
        return 0.5 * N / std::cosh(0.5 * N * d);
    });
}

/// Lowest-band Wannier function nearest x0, scaled to norm N. Requires a
/// potential whose period divides the box.
inline ComplexField wannier_guess(const SuperlatticeSpec& s, double phi, const Grid& g, double N, double x0 = 0.0) {
    const auto gb = grid_bands(s, phi, g, 1);
    const auto wb = wannier_basis(gb, 0);
    std::size_t best = 0;
    for (std::size_t m = 0; m < wb.centers.size(); ++m) {
        if (std::abs(g.wrap_near(wb.centers[m], x0) - x0) < std::abs(g.wrap_near(wb.centers[best], x0) - x0)) best = m;
    }
    const auto v = real_part(wb.functions[best]);
    ComplexField out(g);
    const double sc = std::sqrt(N);
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = sc * v(static_cast<Eigen::Index>(i));
    return out;
}

inline ComplexField initial_guess(const SuperlatticeSpec& s, double phi, const Grid& g, double N,
                                  GuessKind kind = GuessKind::automatic) {
    if (kind == GuessKind::automatic) {
        bool commensurate = false;
        if (auto L = s.period()) {
            const double m = g.length() / *L;
            commensurate = std::abs(m - std::round(m)) < 1e-9 * m && g.size() % static_cast<std::size_t>(std::llround(m)) == 0;
        }
        kind = (commensurate && N < 1.0 && (s.p1 > 0.0 || s.p2 > 0.0)) ? GuessKind::wannier : GuessKind::sech;
    }
    return kind == GuessKind::wannier ? wannier_guess(s, phi, g, N) : sech_guess(g, N);
}

struct NormSolveOptions {
    NewtonOptions newton{};
    double norm_tol = 1e-10;
    int max_secant = 60;
    int relax_steps = 2000;  // imaginary-time steps applied to the guess; 0 keeps the guess as is
    double relax_dtau = 1e-3;
};

/// Outer secant on mu so that norm(psi(mu)) = target_N, inner Newton at each mu.
inline SolitonSolution solve_at_norm(const StationaryProblem& p, double target_N, std::optional<double> seed_mu,
                                     ComplexField guess, const NormSolveOptions& opt = {}) {
    if (!(target_N > 0.0)) throw std::invalid_argument("solve_at_norm: target_N must be positive");
    if (opt.relax_steps > 0) guess = imaginary_time_relax(p, std::move(guess), target_N, opt.relax_steps, opt.relax_dtau);
    const double mu0 = seed_mu ? *seed_mu : chemical_potential_estimate(p, guess);

    Eigen::VectorXd warm = real_part(guess);
    NewtonReport last;
    double last_mu = mu0;
    // a warm start within tol of a nearby mu would otherwise come back unchanged
    NewtonOptions nopt = opt.newton;
    nopt.min_iter = std::max(nopt.min_iter, 1);
    auto norm_at = [&](double mu, Eigen::VectorXd start) -> std::optional<double> {
        auto rep = newton_iterate(p, mu, std::move(start), nopt);
        if (!rep.converged) return std::nullopt;
        // the trivial branch psi = 0 also solves the equation
        if (rep.psi.squaredNorm() * p.grid.dx() < 1e-3 * target_N) return std::nullopt;
        last = std::move(rep);
        last_mu = mu;
        return last.psi.squaredNorm() * p.grid.dx();
    };

    auto n0 = norm_at(mu0, warm);
    if (!n0) throw std::runtime_error("solve_at_norm: Newton failed at seed mu=" + std::to_string(mu0));
    double m_a = mu0, f_a = *n0 - target_N;
    if (std::abs(f_a) < opt.norm_tol) return make_solution(p, last.psi, last_mu, last.residual, last.iterations);
    // second point: step in the direction of increasing norm (N grows as mu decreases)
    double step = 1e-3 * std::max(1e-2, std::abs(mu0));
    double m_b = f_a < 0.0 ? mu0 - step : mu0 + step;
    Eigen::VectorXd psi_a = last.psi;
    auto nb = norm_at(m_b, psi_a);
    for (int tries = 0; !nb && tries < 6; ++tries) {
        step *= 0.3;
        m_b = f_a < 0.0 ? mu0 - step : mu0 + step;
        nb = norm_at(m_b, psi_a);
    }
    if (!nb) throw std::runtime_error("solve_at_norm: Newton failed near seed mu");
    double f_b = *nb - target_N;
    Eigen::VectorXd psi_b = last.psi;
    for (int it = 0; it < opt.max_secant; ++it) {
        if (std::abs(f_b) < opt.norm_tol) return make_solution(p, psi_b, m_b, last.residual, last.iterations);
        if (f_b == f_a) break;
        double m_c = m_b - f_b * (m_b - m_a) / (f_b - f_a);
        const double max_step = 4.0 * std::abs(m_b - m_a) + 1e-12;
        if (std::abs(m_c - m_b) > max_step) m_c = m_b + std::copysign(max_step, m_c - m_b);
        std::optional<double> nc = norm_at(m_c, psi_b);
        for (int tries = 0; !nc && tries < 6; ++tries) {
            m_c = 0.5 * (m_c + m_b);
            nc = norm_at(m_c, psi_b);
        }
        if (!nc) break;
        m_a = m_b;
        f_a = f_b;
        m_b = m_c;
        f_b = *nc - target_N;
        psi_b = last.psi;
    }
    throw std::runtime_error("solve_at_norm: target N=" + std::to_string(target_N) +
                             " not reached (bracketing failure), last |dN|=" + std::to_string(std::abs(f_b)));
}

inline SolitonSolution solve_at_norm(const SuperlatticeSpec& s, double phi, const Grid& g, double target_N,
                                     std::optional<double> seed_mu = std::nullopt, const NormSolveOptions& opt = {},
                                     GuessKind kind = GuessKind::automatic) {
    auto sol = solve_at_norm(stationary_problem(s, phi, g), target_N, seed_mu, initial_guess(s, phi, g, target_N, kind), opt);
    sol.spec = s;
    sol.phi = phi;
    return sol;
}

inline double density_center(const ComplexField& f) {
    const auto& g = f.grid;
    const double peak = g.x(argmax_density(f));
    double xc = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double r = std::norm(f[i]);
        xc += g.wrap_near(g.x(i), peak) * r;
        nn += r;
    }
    return xc / nn;
}

/// Inverse participation ratio  int |psi|^4 / N^2.
inline double inverse_participation(const ComplexField& f) {
    double acc = 0.0;
    for (const auto& z : f.values) acc += std::norm(z) * std::norm(z);
    const double N = norm(f);
    return acc * f.grid.dx() / (N * N);
}

/// Family of solutions along N_list, each seeding the next.
inline std::vector<SolitonSolution> continuation_in_norm(const StationaryProblem& p, const std::vector<double>& N_list,
                                                         ComplexField guess, double jump_limit,
                                                         const NormSolveOptions& opt = {}) {
    if (!std::is_sorted(N_list.begin(), N_list.end())) throw std::invalid_argument("continuation_in_norm: N_list not sorted");
    std::vector<SolitonSolution> fam;
    std::optional<double> seed;
    NormSolveOptions o = opt;
    for (std::size_t i = 0; i < N_list.size(); ++i) {
        if (i > 0) {
            guess = fam.back().psi;
            guess *= std::sqrt(N_list[i] / fam.back().norm_N);
            o.relax_steps = 0;
            // linear extrapolation in N
            seed = fam.size() >= 2 ? fam.back().mu + (fam.back().mu - fam[fam.size() - 2].mu) /
                                                         (fam.back().norm_N - fam[fam.size() - 2].norm_N) *
                                                         (N_list[i] - fam.back().norm_N)
                                   : std::optional<double>(fam.back().mu);
        }
        auto sol = solve_at_norm(p, N_list[i], seed, guess, o);
        if (!fam.empty()) {
            const auto& prev = fam.back();
            const double shift = std::abs(p.grid.wrap_near(density_center(sol.psi), density_center(prev.psi)) -
                                          density_center(prev.psi));
            if (shift > jump_limit) throw std::runtime_error("continuation_in_norm: branch jump detected");
            if (sol.mu > prev.mu && N_list[i] > prev.norm_N) throw std::runtime_error("continuation_in_norm: fold detected");
        }
        fam.push_back(std::move(sol));
    }
    return fam;
}

}  // namespace qpump
