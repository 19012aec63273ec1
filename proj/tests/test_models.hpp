#pragma once

#include <Eigen/Dense>

#include "ddpc/lti.hpp"

// Shared plant definitions for the test suites.
namespace test_models {

inline ddpc::StateSpaceModel scalar(double a, double b = 1.0, double c = 1.0, double e = 0.0) {
    ddpc::StateSpaceModel m;
    m.A = Eigen::MatrixXd::Constant(1, 1, a);
    m.B = Eigen::MatrixXd::Constant(1, 1, b);
    m.C = Eigen::MatrixXd::Constant(1, 1, c);
    m.D = Eigen::MatrixXd::Zero(1, 1);
    m.E = Eigen::MatrixXd::Constant(1, 1, e);
    return m;
}

/// Fourth-order benchmark plant with an exact integrator mode.
inline ddpc::StateSpaceModel paper_sec5() {
    ddpc::StateSpaceModel m;
    m.A.resize(4, 4);
    m.A << 0.36, 0.64, 0.07, 0.02,
           0.42, 0.58, 0.02, 0.07,
          -9.34, 9.34, 0.23, 0.58,
           5.88, -5.88, 0.39, -0.39;
    m.B.resize(4, 1);
    m.B << 0.29, 0.03, 4.90, 1.07;
    m.E.resize(4, 1);
    m.E << 0.03, 0.20, 1.07, 3.48;
    m.C.resize(1, 4);
    m.C << 1, 0, 0, 0;
    m.D = Eigen::MatrixXd::Zero(1, 1);
    return m;
}

inline ddpc::StateSpaceModel stable_second_order() {
    ddpc::StateSpaceModel m;
    m.A.resize(2, 2);
    m.A << 0.6, 0.2,
          -0.1, 0.5;
    m.B.resize(2, 1);
    m.B << 1.0, 0.5;
    m.C.resize(1, 2);
    m.C << 1.0, 0.0;
    m.D = Eigen::MatrixXd::Zero(1, 1);
    m.E.resize(2, 1);
    m.E << 0.2, 0.4;
    return m;
}

}  // namespace test_models
