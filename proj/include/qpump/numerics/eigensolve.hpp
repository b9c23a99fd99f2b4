#pragma once

#include <Eigen/Dense>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qpump {

struct EigenResult {
    Eigen::VectorXd values;    // ascending
    Eigen::MatrixXcd vectors;  // columns, orthonormal
};

/// Multiply a vector by the phase that makes its largest-magnitude entry real
/// and positive. Ties go to the lowest index.
inline void fix_sign(Eigen::Ref<Eigen::VectorXcd> v) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v(i));
        if (a > best_abs * (1.0 + 1e-12)) {
            best_abs = a;
            best = i;
        }
    }
    if (best_abs > 0.0) v *= std::conj(v(best)) / best_abs;
}

/// Lowest k eigenpairs of a dense Hermitian matrix.
///
/// H is symmetrized before the solve; a Hermiticity defect above `herm_tol`
/// (relative to the largest entry) is rejected.
inline EigenResult hermitian_eigensolve(const Eigen::MatrixXcd& H, Eigen::Index k = -1,
                                        double herm_tol = 1e-10) {
    if (H.rows() != H.cols()) throw std::invalid_argument("hermitian_eigensolve: matrix is not square");
    const Eigen::Index n = H.rows();
    if (k < 0 || k > n) k = n;
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    const double defect = (H - H.adjoint()).cwiseAbs().maxCoeff();
    if (defect > herm_tol * scale) {
        throw std::invalid_argument("hermitian_eigensolve: Hermiticity defect " + std::to_string(defect));
    }
    Eigen::MatrixXcd Hs = 0.5 * (H + H.adjoint());
    EigenResult out;
    if (k < n) {
        // partial spectrum through LAPACK's MRRR driver
        out.values.resize(n);
        out.vectors.resize(n, k);
        std::vector<lapack_int> support(2 * static_cast<std::size_t>(k));
        lapack_int found = 0;
        const auto ln = static_cast<lapack_int>(n);
        const lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', ln,
                                               reinterpret_cast<lapack_complex_double*>(Hs.data()), ln, 0.0, 0.0, 1,
                                               static_cast<lapack_int>(k), 0.0, &found, out.values.data(),
                                               reinterpret_cast<lapack_complex_double*>(out.vectors.data()), ln,
                                               support.data());
        if (info != 0 || found != k) throw std::runtime_error("hermitian_eigensolve: zheevr failed");
        out.values.conservativeResize(k);
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Hs);
        if (es.info() != Eigen::Success) throw std::runtime_error("hermitian_eigensolve: solver failed");
        out.values = es.eigenvalues();
        out.vectors = es.eigenvectors();
    }
    for (Eigen::Index j = 0; j < k; ++j) fix_sign(out.vectors.col(j));
    return out;
}

}  // namespace qpump
