#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "rsf/errors.hpp"

namespace rsf {

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
    return 0.5 * (m + m.transpose());
}

inline bool is_symmetric(const Eigen::MatrixXd& m, double rel_tol = 1e-10) {
    double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

// Spectral norm (induced 2-norm) of a general matrix.
inline double spectral_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

inline double min_eigenvalue(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(sym), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(sym), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

inline bool is_psd(const Eigen::MatrixXd& sym, double tol = 1e-10) {
    double scale = std::max(1.0, sym.cwiseAbs().maxCoeff());
    return min_eigenvalue(sym) >= -tol * scale;
}

inline bool is_pd(const Eigen::MatrixXd& sym, double tol = 1e-10) {
    if (!is_symmetric(sym)) return false;
    Eigen::LLT<Eigen::MatrixXd> llt(symmetrize(sym));
    if (llt.info() == Eigen::Success) return true;
    // LLT can fail marginally; fall back to eigenvalues with tolerance.
    return min_eigenvalue(sym) > tol;
}

// Inverse of a symmetric PD matrix through its Cholesky factorization.
inline Eigen::MatrixXd pd_inverse(const Eigen::MatrixXd& sym, const char* what = "covariance") {
    Eigen::LLT<Eigen::MatrixXd> llt(symmetrize(sym));
    if (llt.info() != Eigen::Success)
        throw NonPdCovariance(std::string(what) + ": matrix is not positive definite");
    return llt.solve(Eigen::MatrixXd::Identity(sym.rows(), sym.cols()));
}

// Symmetric square root of a PSD matrix; small negative eigenvalues are clamped.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& sym, double tol = 1e-12) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(sym));
    Eigen::VectorXd ev = es.eigenvalues();
    double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (int i = 0; i < ev.size(); ++i) {
        if (ev[i] < -tol * scale)
            throw NonPdCovariance("psd_sqrt: matrix has a significantly negative eigenvalue");
        ev[i] = std::sqrt(std::max(ev[i], 0.0));
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline double condition_number(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    double smin = svd.singularValues().minCoeff();
    double smax = svd.singularValues().maxCoeff();
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return smax / smin;
}

}  // namespace rsf
