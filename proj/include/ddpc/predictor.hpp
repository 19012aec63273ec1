#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>

#include "ddpc/signal_matrix.hpp"

namespace ddpc {

/**
 * Stochastic prediction query: exact input history, estimated output history
 * with covariance P_t, and disturbance window statistics.
 */
struct QueryCondition {
    Eigen::VectorXd u_ini;      // n_u L0
    Eigen::VectorXd y_ini_bar;  // n_y L0
    Eigen::MatrixXd P_t;        // n_y L0 x n_y L0, PSD
    Eigen::VectorXd w_bar;      // n_w L
    Eigen::MatrixXd Sigma_w;    // n_w L x n_w L, PSD
};

enum class DesignKind { subspace, wasserstein, smm, mmse };

/// Resolved regularizer (lambda, S) of the inner quadratic program.
struct RegularizerDesign {
    DesignKind kind = DesignKind::subspace;
    double lambda = 0.0;
    Eigen::MatrixXd S;  // n_y L0 x n_y L0, PSD
};

/**
 * Resolve (lambda, S) for a design:
 *   subspace     S = I, lambda = eps_reg (scale-aware stand-in for 0+)
 *   wasserstein  S = I, lambda = n_y L0 sigma^2
 *   smm          S = I, lambda = n_y (L sigma^2 + Lp sigma^2 / ||g_pinv||^2)
 *   mmse         S = Gbar' Gbar, lambda = n_y Lp sigma^2 + tr(S) sigma^2,
 *                Gbar = last n_y L0 columns of Yf col(Psi, Yp)^+
 * smm requires the squared norm of the current query's pseudoinverse solution.
 */
RegularizerDesign resolve_design(DesignKind kind, const SignalMatrix& sm, double sigma2,
                                 std::optional<double> g_pinv_norm2 = std::nullopt);

/**
 * Precomputed solution maps of the regularized predictor. With
 * F = lambda I + Yp' S Yp:
 *   [R1 R2 R3] = F^{-1} Psi' (Psi F^{-1} Psi')^{-1}
 *   R4 = (F^{-1} - F^{-1} Psi' (Psi F^{-1} Psi')^{-1} Psi F^{-1}) Yp' S
 *   gamma_hat = Yf R4 (Yp R4)^{-1}
 *   gamma_w = (Yf - gamma_hat Yp) R3
 *   T = sigma^2 (gamma_hat gamma_hat' + I)
 */
struct PredictorParams {
    Eigen::MatrixXd R1;         // M x n_u L0
    Eigen::MatrixXd R2;         // M x n_u Lp
    Eigen::MatrixXd R3;         // M x n_w L
    Eigen::MatrixXd R4;         // M x n_y L0
    Eigen::MatrixXd gamma_hat;  // n_y Lp x n_y L0
    Eigen::MatrixXd gamma_w;    // n_y Lp x n_w L
    Eigen::MatrixXd T;          // n_y Lp x n_y Lp, PSD
    Eigen::MatrixXd Yf_residual;  // Yf - gamma_hat Yp (cached)
    RegularizerDesign design;
    double sigma2 = 0.0;
    std::shared_ptr<const SignalMatrix> sm;

    void save(const std::string& path) const;
    static PredictorParams load(const std::string& path,
                                std::shared_ptr<const SignalMatrix> sm = nullptr);
};

/// smm rebuilds per query; every other design precomputes once per data set.
PredictorParams build_predictor(std::shared_ptr<const SignalMatrix> sm,
                                const RegularizerDesign& design, double sigma2);

struct PredictionResult {
    Eigen::VectorXd g;      // M
    Eigen::VectorXd y_bar;  // n_y Lp
    Eigen::MatrixXd Sigma;  // n_y Lp x n_y Lp, symmetric PSD
};

/// Prediction mean and covariance conditioned on the solved g.
PredictionResult predict(const PredictorParams& params, const QueryCondition& q,
                         const Eigen::VectorXd& u_hat);

/// Affine decomposition in u_hat: g = G_u u_hat + g_0, y_bar = Y_u u_hat + y_0.
struct AffineMaps {
    Eigen::MatrixXd G_u;  // M x n_u Lp
    Eigen::VectorXd g_0;  // M
    Eigen::MatrixXd Y_u;  // n_y Lp x n_u Lp
    Eigen::VectorXd y_0;  // n_y Lp
};

AffineMaps predict_affine_maps(const PredictorParams& params, const QueryCondition& q);

/**
 * Reference solve of the inner program through its KKT system; test oracle
 * for the closed-form maps, not used on any control path.
 */
Eigen::VectorXd qp_reference_solve(const SignalMatrix& sm, const RegularizerDesign& design,
                                   const QueryCondition& q, const Eigen::VectorXd& u_hat);

}  // namespace ddpc
