#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ddpc/lti.hpp"

namespace ddpc {

enum class Construction { hankel, page, columns };

/**
 * Partitioned offline data matrix
 *
 *   Z = col(U, W, Yp, Yf),   Psi = col(U, W)
 *
 * where each column stacks one length-L window of the offline trajectory:
 * all L inputs, all L disturbances, the first L0 measured outputs (past
 * block) and the remaining Lp outputs (future block). Immutable once built.
 */
class SignalMatrix {
public:
    /// Overlapping windows, shift 1 (M = N - L + 1 columns).
    static SignalMatrix hankel(const TrajectoryData& data, int L0, int Lp);

    /// Non-overlapping windows, shift L (M = floor(N / L) columns).
    static SignalMatrix page(const TrajectoryData& data, int L0, int Lp);

    /// One column per pre-segmented independent trajectory of length exactly L.
    static SignalMatrix columns(const std::vector<TrajectoryData>& segments, int L0, int Lp);

    const Eigen::MatrixXd& U() const { return U_; }
    const Eigen::MatrixXd& W() const { return W_; }
    const Eigen::MatrixXd& Yp() const { return Yp_; }
    const Eigen::MatrixXd& Yf() const { return Yf_; }

    /// col(U, W): the augmented-input block, (n_u + n_w) L x M.
    Eigen::MatrixXd Psi() const;
    /// col(U, W, Yp, Yf).
    Eigen::MatrixXd Z() const;
    /// col(Psi, Yp): the conditioning stack of the deterministic predictor.
    Eigen::MatrixXd PsiYp() const;

    int n_u() const { return n_u_; }
    int n_w() const { return n_w_; }
    int n_y() const { return n_y_; }
    int L0() const { return L0_; }
    int Lp() const { return Lp_; }
    int L() const { return L0_ + Lp_; }
    int M() const { return M_; }
    Construction construction() const { return construction_; }

    /// Binary cache (magic "DDPCSM01", little-endian int64 dims, column-major doubles).
    void save(const std::string& path) const;
    static SignalMatrix load(const std::string& path);

private:
    SignalMatrix() = default;
    static SignalMatrix from_windows(const TrajectoryData& data, int L0, int Lp, int shift,
                                     Construction tag);

    Eigen::MatrixXd U_, W_, Yp_, Yf_;
    int n_u_ = 0, n_w_ = 0, n_y_ = 0, L0_ = 0, Lp_ = 0, M_ = 0;
    Construction construction_ = Construction::hankel;
};

/// Persistency-of-excitation report against the rank requirement
/// rank(Z) >= (n_u + n_w) L + n_x. singular_values are those of col(Psi, Yp).
struct RankReport {
    int numeric_rank = 0;
    int required_rank = 0;
    Eigen::VectorXd singular_values;
    bool ok = false;
};

RankReport check_excitation(const SignalMatrix& sm, int n_x);

struct PinvPrediction {
    Eigen::VectorXd g;      // least-norm coefficient vector, length M
    Eigen::VectorXd y_hat;  // n_y Lp predicted future outputs
};

/**
 * Deterministic pseudoinverse predictor:
 *   g = col(Psi, Yp)^+ col(u_ini, u_hat, w, y_ini),  y_hat = Yf g.
 * Exact on noise-free, persistently exciting data.
 */
PinvPrediction pinv_predict(const SignalMatrix& sm, const Eigen::VectorXd& u_ini,
                            const Eigen::VectorXd& u_hat, const Eigen::VectorXd& w,
                            const Eigen::VectorXd& y_ini);

}  // namespace ddpc
