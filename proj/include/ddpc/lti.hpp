#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "ddpc/rng.hpp"

namespace ddpc {

/**
 * Ground-truth discrete-time LTI plant
 *
 *   x_{t+1} = A x_t + B u_t + E w_t
 *   y_t     = C x_t + D u_t + v_t
 *
 * Used only to generate data and to evaluate model-based oracles; the
 * data-driven pipeline never reads the matrices.
 */
struct StateSpaceModel {
    Eigen::MatrixXd A, B, C, D, E;

    int nx() const { return static_cast<int>(A.rows()); }
    int nu() const { return static_cast<int>(B.cols()); }
    int ny() const { return static_cast<int>(C.rows()); }
    int nw() const { return static_cast<int>(E.cols()); }

    /// Throws DimensionError on inconsistent dimensions and
    /// std::invalid_argument if the spectral radius exceeds 1 + 1e-9.
    void validate() const;
};

/// Input/disturbance/output record of one simulated run; y = y0 + v.
struct TrajectoryData {
    Eigen::MatrixXd u;   // n_u x N
    Eigen::MatrixXd w;   // n_w x N
    Eigen::MatrixXd y0;  // n_y x N, noise-free
    Eigen::MatrixXd y;   // n_y x N, measured

    int length() const { return static_cast<int>(u.cols()); }
};

enum class NoiseKind { gaussian, uniform_scaled };

/**
 * Stochastic environment description: output-noise variance sigma^2,
 * disturbance window statistics (w_bar, Sigma_w over an n_w*L window) and the
 * sampling distribution. `uniform_scaled` draws bounded samples rescaled to
 * the requested variance, exercising the distribution-free tightening path.
 */
struct NoiseSpec {
    double sigma2 = 0.0;
    Eigen::MatrixXd Sigma_w;  // n_w L x n_w L, PSD
    Eigen::VectorXd w_bar;    // n_w L
    NoiseKind distribution = NoiseKind::gaussian;
    uint64_t seed = 0;
};

/// Simulate the plant from x0 under given input/disturbance/noise sequences.
TrajectoryData simulate(const StateSpaceModel& model, const Eigen::VectorXd& x0,
                        const Eigen::MatrixXd& u, const Eigen::MatrixXd& w,
                        const Eigen::MatrixXd& v);

/**
 * Draw `count` zero-mean i.i.d. vectors of dimension `dim` (one per column).
 * If dim equals the Sigma_w window size the window covariance is used,
 * otherwise sigma2 * I_dim. Deterministic given (spec.seed, stream).
 */
Eigen::MatrixXd draw_noise(const NoiseSpec& spec, int count, int dim, uint64_t stream = 0);

/// Same, with an explicit covariance (PSD, dim x dim).
Eigen::MatrixXd draw_noise_cov(const Eigen::MatrixXd& cov, NoiseKind kind, int count,
                               CounterRng rng);

/**
 * Autonomous output transition map (oracle only):
 *   Gamma = col(C A^{L0}, ..., C A^{L0+Lp-1}) * col(C, ..., C A^{L0-1})^+
 * maps a length-L0 past output window of an unforced trajectory to the next
 * Lp outputs. Throws SingularOracleError if the observability stack is
 * rank-deficient.
 */
Eigen::MatrixXd true_gamma(const StateSpaceModel& model, int L0, int Lp);

}  // namespace ddpc
