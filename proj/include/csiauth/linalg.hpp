#pragma once

#include <string>

#include "csiauth/core.hpp"

namespace csiauth::linalg {

template <typename Derived>
auto hermitian_part(const Eigen::MatrixBase<Derived>& X) {
    using Plain = typename Derived::PlainObject;
    Plain H = (X + X.adjoint()) / 2.0;
    return H;
}

template <typename Derived>
double hermitian_defect(const Eigen::MatrixBase<Derived>& X) {
    return (X - X.adjoint()).norm();
}

/// Cholesky factorization of a Hermitian PD matrix; throws naming `what`
/// when the matrix is not numerically PD.
class HermitianSolver {
public:
    HermitianSolver(const CMatrix& K, const std::string& what) : llt_(K), n_(K.rows()) {
        require(K.rows() == K.cols(), what + " must be square");
        require(llt_.info() == Eigen::Success,
                what + " is singular or not positive definite");
        const auto d = llt_.matrixLLT().diagonal().real();
        require(d.minCoeff() > 0.0 && d.minCoeff() > 1e-12 * d.maxCoeff(),
                what + " is singular or not positive definite");
    }

    template <typename Rhs>
    CMatrix solve(const Eigen::MatrixBase<Rhs>& b) const { return llt_.solve(b); }

    CMatrix inverse() const {
        return hermitian_part(CMatrix(llt_.solve(CMatrix::Identity(n_, n_))));
    }

    double log_det() const {
        return 2.0 * llt_.matrixLLT().diagonal().real().array().log().sum();
    }

private:
    Eigen::LLT<CMatrix> llt_;
    Eigen::Index n_;
};

/// Clamp negative eigenvalues of a Hermitian matrix to zero.
inline CMatrix project_psd(const CMatrix& X) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(X));
    RVector ev = es.eigenvalues().cwiseMax(0.0);
    return hermitian_part(CMatrix(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint()));
}

inline double min_eigenvalue(const CMatrix& X) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(X), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// Singular values at or below rel_tol * sigma_max count as zero.
template <typename Derived>
int numerical_rank(const Eigen::MatrixBase<Derived>& X, double rel_tol = 1e-8) {
    using Plain = typename Derived::PlainObject;
    Eigen::JacobiSVD<Plain> svd(X);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > rel_tol * s[0]) ++r;
    return r;
}

}  // namespace csiauth::linalg
