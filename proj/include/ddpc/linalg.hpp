#pragma once

#include <Eigen/Dense>

namespace ddpc {

/// Relative singular-value cutoff used for every pseudoinverse / numeric rank
/// decision in the project: values below kPinvRelTol * sigma_max count as zero.
inline constexpr double kPinvRelTol = 1e-10;

inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(kPinvRelTol);
    const auto& sv = svd.singularValues();
    Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
    const double cutoff = kPinvRelTol * (sv.size() > 0 ? sv(0) : 0.0);
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) inv_sv(i) = 1.0 / sv(i);
    return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

/// Least-norm solution of A x = b (minimum ||x|| among least-squares solutions).
inline Eigen::VectorXd least_norm_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(kPinvRelTol);
    return svd.solve(b);
}

inline int numeric_rank(const Eigen::MatrixXd& m) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    const double cutoff = kPinvRelTol * sv(0);
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) ++r;
    return r;
}

/// (M + M^T)/2 followed by an eigenvalue floor at zero.
inline Eigen::MatrixXd symmetrize_psd(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/// Symmetric PSD square root; negative eigenvalues are clipped to zero.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/// True if symmetric with smallest eigenvalue >= -tol.
inline bool is_psd(const Eigen::MatrixXd& m, double tol = 1e-9) {
    if (m.rows() != m.cols()) return false;
    if (m.size() == 0) return true;
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * (1.0 + m.cwiseAbs().maxCoeff()))
        return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol * (1.0 + m.cwiseAbs().maxCoeff());
}

}  // namespace ddpc
