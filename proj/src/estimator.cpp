#include "ddpc/estimator.hpp"

#include <stdexcept>

#include "ddpc/errors.hpp"
#include "ddpc/linalg.hpp"

namespace ddpc {

namespace {

// Symmetrize and clip tiny negative eigenvalues; anything below -1e-10
// (relative) indicates a bug upstream, not roundoff.
Eigen::MatrixXd repair_psd(const Eigen::MatrixXd& p) {
    Eigen::MatrixXd sym = 0.5 * (p + p.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    const double scale = 1.0 + sym.cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
        throw std::runtime_error("filter covariance lost positive semidefiniteness");
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

FilterState filter_init(const Eigen::VectorXd& u_init, const Eigen::VectorXd& y_init_measured,
                        int L0) {
    if (L0 < 1) throw std::invalid_argument("L0 must be positive");
    if (u_init.size() % L0 != 0 || y_init_measured.size() % L0 != 0)
        throw DimensionError("history lengths must be multiples of L0");
    FilterState s;
    s.L0 = L0;
    s.n_u = static_cast<int>(u_init.size()) / L0;
    s.n_y = static_cast<int>(y_init_measured.size()) / L0;
    if (s.n_u < 1 || s.n_y < 1) throw DimensionError("empty history");
    s.u_hist = u_init;
    s.y_hist = y_init_measured;
    s.P = Eigen::MatrixXd::Identity(y_init_measured.size(), y_init_measured.size());
    s.t = 0;
    return s;
}

FilterState predict_step(const FilterState& state, const Eigen::VectorXd& u_applied,
                         const Eigen::VectorXd& y_bar0, const Eigen::MatrixXd& Sigma0) {
    if (u_applied.size() != state.n_u) throw DimensionError("u_applied size mismatch");
    if (y_bar0.size() != state.n_y) throw DimensionError("y_bar0 size mismatch");
    if (Sigma0.rows() != state.n_y || Sigma0.cols() != state.n_y)
        throw DimensionError("Sigma0 must be n_y square");
    if (!is_psd(Sigma0)) throw std::invalid_argument("Sigma0 must be symmetric PSD");

    const int ny = state.n_y, nu = state.n_u, L0 = state.L0;
    FilterState next = state;
    next.t = state.t + 1;

    // Shift up one block; inputs are exact.
    if (L0 > 1) {
        next.u_hist.head(nu * (L0 - 1)) = state.u_hist.tail(nu * (L0 - 1));
        next.y_hist.head(ny * (L0 - 1)) = state.y_hist.tail(ny * (L0 - 1));
    }
    next.u_hist.tail(nu) = u_applied;
    next.y_hist.tail(ny) = y_bar0;

    // P <- Lambda P Lambda' + Sigma0 placed in the newest block.
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(ny * L0, ny * L0);
    if (L0 > 1)
        p.topLeftCorner(ny * (L0 - 1), ny * (L0 - 1)) =
            state.P.bottomRightCorner(ny * (L0 - 1), ny * (L0 - 1));
    p.bottomRightCorner(ny, ny) = Sigma0;
    next.P = repair_psd(p);
    return next;
}

FilterState update_step(const FilterState& state, const Eigen::VectorXd& y_measured,
                        double sigma2, FilterMode mode) {
    if (y_measured.size() != state.n_y) throw DimensionError("y_measured size mismatch");
    if (sigma2 < 0.0) throw std::invalid_argument("sigma2 must be nonnegative");

    const int ny = state.n_y, L0 = state.L0;
    const int newest = ny * (L0 - 1);
    FilterState next = state;

    Eigen::MatrixXd noise = sigma2 * Eigen::MatrixXd::Identity(ny, ny);
    Eigen::MatrixXd innov_cov = state.P.block(newest, newest, ny, ny) + noise;
    Eigen::VectorXd innovation = y_measured - state.y_hist.tail(ny);

    if (mode == FilterMode::paper_literal) {
        // K = Sigma0 (Sigma0 + sigma^2 I)^{-1}; only the newest block moves.
        Eigen::MatrixXd sigma0 = state.P.block(newest, newest, ny, ny);
        Eigen::MatrixXd gain = sigma0 * innov_cov.inverse();
        next.y_hist.tail(ny) += gain * innovation;
        Eigen::MatrixXd p = state.P;
        p.block(newest, newest, ny, ny) =
            (Eigen::MatrixXd::Identity(ny, ny) - gain) * sigma0;
        next.P = repair_psd(p);
    } else {
        // Textbook update with H selecting the newest block.
        Eigen::MatrixXd ph = state.P.rightCols(ny);  // P H'
        Eigen::MatrixXd gain = ph * innov_cov.inverse();
        next.y_hist += gain * innovation;
        next.P = repair_psd(state.P - gain * ph.transpose());
    }
    return next;
}

InitialCondition extract_initial_condition(const FilterState& state) {
    return {state.u_hist, state.y_hist, state.P};
}

}  // namespace ddpc
