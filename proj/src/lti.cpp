#include "ddpc/lti.hpp"

#include <Eigen/Eigenvalues>

#include "ddpc/errors.hpp"
#include "ddpc/linalg.hpp"

namespace ddpc {

void StateSpaceModel::validate() const {
    if (A.rows() != A.cols()) throw DimensionError("A must be square");
    if (B.rows() != A.rows()) throw DimensionError("B row count must match A");
    if (C.cols() != A.rows()) throw DimensionError("C column count must match A");
    if (D.rows() != C.rows() || D.cols() != B.cols())
        throw DimensionError("D must be n_y x n_u");
    if (E.rows() != A.rows()) throw DimensionError("E row count must match A");

    Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
    double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    // Marginally stable plants (spectral radius exactly 1, e.g. integrators)
    // are admitted; anything beyond 1 + 1e-9 is rejected.
    if (rho > 1.0 + 1e-9)
        throw std::invalid_argument("unstable model: spectral radius " + std::to_string(rho));
}

TrajectoryData simulate(const StateSpaceModel& model, const Eigen::VectorXd& x0,
                        const Eigen::MatrixXd& u, const Eigen::MatrixXd& w,
                        const Eigen::MatrixXd& v) {
    model.validate();
    const int n = static_cast<int>(u.cols());
    if (w.cols() != n || v.cols() != n)
        throw DimensionError("u, w, v must share the same length");
    if (x0.size() != model.nx()) throw DimensionError("x0 dimension mismatch");
    if (u.rows() != model.nu()) throw DimensionError("u dimension mismatch");
    if (w.rows() != model.nw()) throw DimensionError("w dimension mismatch");
    if (v.rows() != model.ny()) throw DimensionError("v dimension mismatch");

    TrajectoryData out;
    out.u = u;
    out.w = w;
    out.y0.resize(model.ny(), n);
    out.y.resize(model.ny(), n);

    Eigen::VectorXd x = x0;
    for (int t = 0; t < n; ++t) {
        out.y0.col(t) = model.C * x + model.D * u.col(t);
        out.y.col(t) = out.y0.col(t) + v.col(t);
        x = model.A * x + model.B * u.col(t) + model.E * w.col(t);
    }
    return out;
}

Eigen::MatrixXd draw_noise_cov(const Eigen::MatrixXd& cov, NoiseKind kind, int count,
                               CounterRng rng) {
    if (count <= 0) throw std::invalid_argument("count must be positive");
    if (!is_psd(cov)) throw std::invalid_argument("covariance must be symmetric PSD");
    const int dim = static_cast<int>(cov.rows());
    Eigen::MatrixXd root = psd_sqrt(cov);
    Eigen::MatrixXd samples(dim, count);
    for (int j = 0; j < count; ++j)
        for (int i = 0; i < dim; ++i)
            samples(i, j) = (kind == NoiseKind::gaussian) ? rng.normal()
                                                          : rng.uniform_unit_variance();
    return root * samples;
}

Eigen::MatrixXd draw_noise(const NoiseSpec& spec, int count, int dim, uint64_t stream) {
    if (spec.sigma2 < 0.0) throw std::invalid_argument("sigma2 must be nonnegative");
    Eigen::MatrixXd cov;
    if (spec.Sigma_w.rows() == dim && spec.Sigma_w.cols() == dim)
        cov = spec.Sigma_w;
    else
        cov = spec.sigma2 * Eigen::MatrixXd::Identity(dim, dim);
    return draw_noise_cov(cov, spec.distribution, count, CounterRng(spec.seed, stream));
}

Eigen::MatrixXd true_gamma(const StateSpaceModel& model, int L0, int Lp) {
    if (L0 < 1 || Lp < 1) throw std::invalid_argument("L0 and Lp must be positive");
    const int ny = model.ny(), nx = model.nx();
    Eigen::MatrixXd past(ny * L0, nx), future(ny * Lp, nx);
    Eigen::MatrixXd Ak = Eigen::MatrixXd::Identity(nx, nx);
    for (int k = 0; k < L0 + Lp; ++k) {
        if (k < L0)
            past.middleRows(k * ny, ny) = model.C * Ak;
        else
            future.middleRows((k - L0) * ny, ny) = model.C * Ak;
        Ak = model.A * Ak;
    }
    if (numeric_rank(past) < nx)
        throw SingularOracleError("observability stack of depth L0 is rank-deficient");
    return future * pseudo_inverse(past);
}

}  // namespace ddpc
