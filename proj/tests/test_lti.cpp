#include <doctest.h>

#include <Eigen/Dense>

#include "ddpc/errors.hpp"
#include "ddpc/linalg.hpp"
#include "ddpc/lti.hpp"
#include "test_models.hpp"

using namespace ddpc;

namespace {

// Independent step-by-step oracle of the plant recursion, kept deliberately
// separate from simulate().
Eigen::MatrixXd recursion_oracle(const StateSpaceModel& m, Eigen::VectorXd x,
                                 const Eigen::MatrixXd& u, const Eigen::MatrixXd& w) {
    Eigen::MatrixXd y0(m.ny(), u.cols());
    for (int t = 0; t < u.cols(); ++t) {
        y0.col(t) = m.C * x + m.D * u.col(t);
        x = (m.A * x + m.B * u.col(t) + m.E * w.col(t)).eval();
    }
    return y0;
}

}  // namespace

TEST_CASE("scalar recursion example") {
    StateSpaceModel m = test_models::scalar(0.5);
    Eigen::MatrixXd u(1, 2);
    u << 1.0, 0.0;
    Eigen::MatrixXd zw = Eigen::MatrixXd::Zero(1, 2);
    TrajectoryData traj = simulate(m, Eigen::VectorXd::Zero(1), u, zw, zw);
    CHECK(traj.y0(0, 0) == doctest::Approx(0.0));
    CHECK(traj.y0(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("zero equilibrium stays zero") {
    StateSpaceModel m = test_models::paper_sec5();
    Eigen::MatrixXd zu = Eigen::MatrixXd::Zero(1, 20);
    TrajectoryData traj = simulate(m, Eigen::VectorXd::Zero(4), zu, zu, zu);
    CHECK(traj.y0.cwiseAbs().maxCoeff() == 0.0);
    CHECK(traj.y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("benchmark impulse response matches the independent recursion oracle") {
    StateSpaceModel m = test_models::paper_sec5();
    const int N = 60;
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(1, N);
    u(0, 0) = 1.0;
    Eigen::MatrixXd zw = Eigen::MatrixXd::Zero(1, N);
    TrajectoryData traj = simulate(m, Eigen::VectorXd::Zero(4), u, zw, zw);
    Eigen::MatrixXd oracle = recursion_oracle(m, Eigen::VectorXd::Zero(4), u, zw);
    CHECK((traj.y0 - oracle).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("superposition of noise-free responses") {
    StateSpaceModel m = test_models::paper_sec5();
    const int N = 40;
    CounterRng rng(7, 0);
    Eigen::MatrixXd u1(1, N), u2(1, N);
    for (int t = 0; t < N; ++t) {
        u1(0, t) = rng.normal();
        u2(0, t) = rng.normal();
    }
    Eigen::MatrixXd zw = Eigen::MatrixXd::Zero(1, N);
    Eigen::VectorXd x0(4);
    x0 << 0.3, -0.2, 1.0, 0.5;
    auto ya = simulate(m, x0, u1, zw, zw).y0;
    auto yb = simulate(m, x0, u2, zw, zw).y0;
    auto yab = simulate(m, x0, u1 + u2, zw, zw).y0;
    auto y0free = simulate(m, x0, zw, zw, zw).y0;
    CHECK((yab - (ya + yb - y0free)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("strictly stable plant decays geometrically") {
    StateSpaceModel m = test_models::stable_second_order();
    Eigen::MatrixXd zu = Eigen::MatrixXd::Zero(1, 80);
    Eigen::VectorXd x0(2);
    x0 << 1.0, -1.0;
    Eigen::VectorXd x = x0;
    double prev = x.norm();
    for (int t = 0; t < 80; ++t) {
        x = (m.A * x).eval();
        if (t % 10 == 9) {
            CHECK(x.norm() < 0.7 * prev);
            prev = x.norm();
        }
    }
    CHECK(x.norm() < 1e-6);
}

TEST_CASE("dimension mismatches are rejected") {
    StateSpaceModel m = test_models::scalar(0.5);
    Eigen::MatrixXd u(1, 3), w(1, 2), v(1, 3);
    u.setZero();
    w.setZero();
    v.setZero();
    CHECK_THROWS_AS(simulate(m, Eigen::VectorXd::Zero(1), u, w, v), DimensionError);
    Eigen::MatrixXd u2(2, 3);
    u2.setZero();
    Eigen::MatrixXd w3 = Eigen::MatrixXd::Zero(1, 3);
    CHECK_THROWS_AS(simulate(m, Eigen::VectorXd::Zero(1), u2, w3, v), DimensionError);
}

TEST_CASE("unstable model is rejected, marginal integrator admitted") {
    StateSpaceModel bad = test_models::scalar(1.1);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    StateSpaceModel marginal = test_models::paper_sec5();  // spectral radius exactly 1
    CHECK_NOTHROW(marginal.validate());
}

TEST_CASE("true_gamma scalar cases") {
    StateSpaceModel m = test_models::scalar(0.5);
    Eigen::MatrixXd g1 = true_gamma(m, 1, 1);
    CHECK(g1(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    Eigen::MatrixXd g2 = true_gamma(m, 1, 2);
    CHECK(g2(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g2(1, 0) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("true_gamma matches a least-squares observability oracle on the benchmark") {
    StateSpaceModel m = test_models::paper_sec5();
    const int L0 = 4, Lp = 10;
    Eigen::MatrixXd gamma = true_gamma(m, L0, Lp);
    CHECK(gamma.rows() == Lp);
    CHECK(gamma.cols() == L0);

    // Independent oracle: solve O_past' X' = O_future' column-by-column via
    // dense least squares on the observability stacks.
    Eigen::MatrixXd past(L0, 4), future(Lp, 4);
    Eigen::MatrixXd Ak = Eigen::MatrixXd::Identity(4, 4);
    for (int k = 0; k < L0 + Lp; ++k) {
        if (k < L0)
            past.row(k) = m.C * Ak;
        else
            future.row(k - L0) = m.C * Ak;
        Ak = (m.A * Ak).eval();
    }
    Eigen::MatrixXd oracle =
        (past.transpose().colPivHouseholderQr().solve(future.transpose())).transpose();
    CHECK((gamma - oracle).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("autonomous prediction identity on an unforced trajectory") {
    StateSpaceModel m = test_models::paper_sec5();
    const int L0 = 4, Lp = 10;
    Eigen::MatrixXd gamma = true_gamma(m, L0, Lp);
    Eigen::MatrixXd zu = Eigen::MatrixXd::Zero(1, L0 + Lp);
    Eigen::VectorXd x0(4);
    x0 << 0.7, -0.4, 2.0, -1.0;
    TrajectoryData traj = simulate(m, x0, zu, zu, zu);
    Eigen::VectorXd y_past(L0), y_future(Lp);
    for (int k = 0; k < L0; ++k) y_past(k) = traj.y0(0, k);
    for (int k = 0; k < Lp; ++k) y_future(k) = traj.y0(0, L0 + k);
    CHECK((gamma * y_past - y_future).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("rank-deficient observability stack raises the oracle error") {
    StateSpaceModel m;
    m.A = Eigen::MatrixXd::Identity(2, 2) * 0.5;
    m.B = Eigen::MatrixXd::Zero(2, 1);
    m.C = Eigen::MatrixXd::Zero(1, 2);  // observes nothing
    m.D = Eigen::MatrixXd::Zero(1, 1);
    m.E = Eigen::MatrixXd::Zero(2, 1);
    CHECK_THROWS_AS(true_gamma(m, 2, 2), SingularOracleError);
}
