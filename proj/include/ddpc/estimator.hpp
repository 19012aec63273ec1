#pragma once

#include <Eigen/Dense>

namespace ddpc {

enum class FilterMode {
    /// Gain and covariance update touch only the newest output block,
    /// exactly as the printed recursion reads.
    paper_literal,
    /// Full covariance update with cross terms and gain
    /// L = P H' (H P H' + sigma^2 I)^{-1} over the whole history block.
    full_kf
};

/**
 * Filter state over the non-minimal representation col(u-history, y-history):
 * inputs are exact and shift without uncertainty; the output history carries
 * the estimate covariance P (n_y L0 square). Value type; the step functions
 * return updated copies.
 */
struct FilterState {
    Eigen::VectorXd u_hist;  // n_u L0, oldest first
    Eigen::VectorXd y_hist;  // n_y L0, oldest first (filtered means)
    Eigen::MatrixXd P;       // n_y L0 x n_y L0, symmetric PSD
    int n_u = 1;
    int n_y = 1;
    int L0 = 1;
    long t = 0;
};

/// Start from raw warm-up measurements; P = identity.
FilterState filter_init(const Eigen::VectorXd& u_init, const Eigen::VectorXd& y_init_measured,
                        int L0);

/**
 * Time update: shift both histories one block, enter the applied input and
 * the one-step predicted output; the new output slot enters with covariance
 * Sigma0 (the leading n_y block of the controller's prediction covariance).
 */
FilterState predict_step(const FilterState& state, const Eigen::VectorXd& u_applied,
                         const Eigen::VectorXd& y_bar0, const Eigen::MatrixXd& Sigma0);

/// Measurement update of the newest output block with noisy measurement y_t.
FilterState update_step(const FilterState& state, const Eigen::VectorXd& y_measured,
                        double sigma2, FilterMode mode = FilterMode::paper_literal);

struct InitialCondition {
    Eigen::VectorXd u_ini;
    Eigen::VectorXd y_ini_bar;
    Eigen::MatrixXd P_t;
};

/// The triple consumed by the predictor's query.
InitialCondition extract_initial_condition(const FilterState& state);

}  // namespace ddpc
