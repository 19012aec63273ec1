#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "ddpc/estimator.hpp"
#include "ddpc/predictor.hpp"
#include "ddpc/socp.hpp"

namespace ddpc {

enum class Tightening { elementwise, setwise };
enum class DistributionMode { chebyshev, gaussian };
enum class Variant { n_ddpc, kf_ddpc, s_ddpc };

const char* to_string(Variant v);

/// Receding-horizon configuration; horizon cost matrices are I_Lp (x) Q / R.
struct ControlConfig {
    Eigen::MatrixXd Q;  // n_y x n_y PSD
    Eigen::MatrixXd R;  // n_u x n_u PSD
    int L0 = 1;
    int Lp = 1;
    double p = 0.95;  // chance-constraint probability, in (0,1)
    Tightening tightening = Tightening::elementwise;
    DistributionMode distribution_mode = DistributionMode::chebyshev;
    Variant variant = Variant::s_ddpc;
    FilterMode filter_mode = FilterMode::paper_literal;
    int steps = 100;
    int retry_budget = 2;
    double slack_penalty_scale = 1e6;  // per unit slack, times max(Q)
};

/// Per-time output polytope H y <= q, held constant over the run.
struct OutputConstraints {
    Eigen::MatrixXd H;  // n_c x n_y
    Eigen::VectorXd q;  // n_c

    int rows() const { return static_cast<int>(H.rows()); }
    Eigen::MatrixXd Hbar(int Lp) const;  // blkdiag over the horizon
    Eigen::VectorXd qbar(int Lp) const;
};

/// Per-time input polytope Hu u <= qu applied to every step of the horizon;
/// empty means unconstrained.
struct InputConstraints {
    Eigen::MatrixXd Hu;
    Eigen::VectorXd qu;

    bool bounded() const { return Hu.rows() > 0; }
    static InputConstraints box(const Eigen::VectorXd& u_min, const Eigen::VectorXd& u_max);
    static InputConstraints unconstrained() { return {}; }
};

/// mu multiplier of the tightening term for the requested probability level.
double mu_factor(double p, int n_y, Tightening tightening, DistributionMode mode);

/// Quadratic objective J(u) = 0.5 u'P u + f'u + constant.
struct QuadraticCost {
    Eigen::MatrixXd P;
    Eigen::VectorXd f;
    double constant = 0.0;
};

/**
 * Expected-cost assembly: tracking + input cost plus the tr(Qbar T) ||g||^2
 * uncertainty term; the constant carries the g-independent covariance trace
 * so the reported cost is the full expected value.
 */
QuadraticCost assemble_cost(const PredictorParams& params, const AffineMaps& maps,
                            const QueryCondition& q, const Eigen::VectorXd& r,
                            const ControlConfig& cfg);

/// Nominal tracking + input cost only (no uncertainty terms).
QuadraticCost assemble_nominal_cost(const AffineMaps& maps, const Eigen::VectorXd& r,
                                    const ControlConfig& cfg);

/// Tightening coefficients: row-wise q_i - H_i ybar >= mu (c1_i + c2_i ||g||).
struct TighteningTerms {
    Eigen::VectorXd c1;
    Eigen::VectorXd c2;
    double mu = 0.0;
    int floored_rows = 0;  // diagonal entries clipped at 0 before sqrt
};

TighteningTerms assemble_tightening(const PredictorParams& params, const OutputConstraints& oc,
                                    const QueryCondition& q, double mu);

struct StepResult {
    Eigen::VectorXd u_hat;      // n_u Lp planned input sequence
    Eigen::VectorXd u_applied;  // first block
    Eigen::VectorXd g;
    Eigen::VectorXd y_bar;
    Eigen::MatrixXd Sigma;
    double expected_cost = 0.0;
    double slack = 0.0;
    SolveStatus solver_status = SolveStatus::optimal;
};

/**
 * One receding-horizon step: assemble the variant's cost and constraints,
 * solve the cone program (with slack fallback on the output constraints),
 * and evaluate the prediction at the optimizer.
 */
StepResult solve_step(const PredictorParams& params, const QueryCondition& q,
                      const OutputConstraints& oc, const InputConstraints& ic,
                      const Eigen::VectorXd& r, const ControlConfig& cfg);

struct ClosedLoopLog {
    Eigen::MatrixXd u;        // n_u x steps applied inputs
    Eigen::MatrixXd y;        // measured outputs
    Eigen::MatrixXd y0;       // true noise-free outputs
    Eigen::MatrixXd ybar0;    // one-step-ahead predictions
    Eigen::MatrixXd y_filt;   // newest filtered history entry (raw y for n_ddpc)
    Eigen::MatrixXd r;        // reference
    Eigen::VectorXd expected_cost;
    Eigen::VectorXd slack;
    std::vector<SolveStatus> status;
    Eigen::MatrixXd filter_var;  // newest-block variance diag per step
    bool aborted = false;
    int solver_failures = 0;
};

/**
 * Closed-loop run of the receding-horizon loop against the true plant.
 * Warm-up: the first L0 plant steps apply zero input while the measurement
 * history fills; the logged horizon covers the `steps` controlled steps.
 * Online noise and disturbances are drawn from the two supplied streams.
 */
ClosedLoopLog run_closed_loop(const StateSpaceModel& model, const PredictorParams& params,
                              const ControlConfig& cfg, const OutputConstraints& oc,
                              const InputConstraints& ic, const Eigen::MatrixXd& reference,
                              const NoiseSpec& noise, int steps, CounterRng w_stream,
                              CounterRng v_stream);

struct Metrics {
    double true_total_cost = 0.0;
    double total_violation = 0.0;
    double per_step_violation_freq = 0.0;
    double filter_rmse = 0.0;
    double measured_rmse = 0.0;
    double total_slack = 0.0;
};

Metrics metrics(const ClosedLoopLog& log, const OutputConstraints& oc, const ControlConfig& cfg);

}  // namespace ddpc
