#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace ddpc {

/// One second-order cone constraint ||Cmat z + d||_2 <= a' z + b.
struct SocConstraint {
    Eigen::MatrixXd Cmat;  // k x n
    Eigen::VectorXd d;     // k
    Eigen::VectorXd a;     // n
    double b = 0.0;
};

/**
 * Convex program
 *
 *   min  0.5 z' P z + f' z + c0
 *   s.t. Aeq z = beq
 *        G z <= h
 *        ||Cmat_j z + d_j|| <= a_j' z + b_j   for each SOC block j
 *
 * with P symmetric PSD. Empty blocks are allowed (0-row matrices).
 */
struct ConeProgram {
    Eigen::MatrixXd P;
    Eigen::VectorXd f;
    double c0 = 0.0;
    Eigen::MatrixXd Aeq;
    Eigen::VectorXd beq;
    Eigen::MatrixXd G;
    Eigen::VectorXd h;
    std::vector<SocConstraint> socs;

    int n() const { return static_cast<int>(f.size()); }
    void validate() const;

    /// Plain-text dump (dimensions header followed by dense row-major blocks,
    /// %.17g floats) for external cross-checking.
    std::string dump() const;
};

enum class SolveStatus { optimal, infeasible, unbounded, max_iter, numerical };

const char* to_string(SolveStatus s);

/// Solver-internal normalized measures (optimal implies all <= tol).
struct Residuals {
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
};

struct Duals {
    Eigen::VectorXd y_eq;                // equality multipliers
    Eigen::VectorXd z_ineq;              // orthant multipliers, >= 0
    std::vector<Eigen::VectorXd> z_soc;  // one per SOC block, in the dual cone
};

struct Solution {
    Eigen::VectorXd z;
    SolveStatus status = SolveStatus::numerical;
    double objective = 0.0;
    int iterations = 0;
    Residuals residuals;
    Duals duals;
};

/**
 * Primal-dual interior-point solve on the homogeneous self-dual embedding
 * with Nesterov-Todd scaling; the quadratic objective enters the embedding
 * directly. Deterministic. Infeasible and unbounded programs are reported
 * via status, never via exceptions.
 */
Solution solve(const ConeProgram& prog, double tol = 1e-8, int max_iter = 200);

/**
 * Raw infinity-norm KKT residuals of a candidate primal/dual pair:
 * primal feasibility violation, dual (stationarity + dual-cone) violation,
 * and absolute complementarity gap. Pure function, usable as an external
 * optimality certificate check.
 */
Residuals kkt_residuals(const ConeProgram& prog, const Eigen::VectorXd& z, const Duals& duals);

}  // namespace ddpc
