#include <doctest.h>

#include <cmath>

#include "ddpc/lti.hpp"
#include "ddpc/rng.hpp"

using namespace ddpc;

TEST_CASE("philox4x32-10 known-answer vectors") {
    // Reference vectors from the Random123 test suite.
    auto zero = CounterRng::block(0, 0, 0);
    CHECK(zero[0] == 0x6627e8d5u);
    CHECK(zero[1] == 0xe169c58du);
    CHECK(zero[2] == 0xbc57ac4cu);
    CHECK(zero[3] == 0x9b00dbd8u);

    auto ones = CounterRng::block(0xffffffffffffffffull, 0xffffffffffffffffull,
                                  0xffffffffffffffffull);
    CHECK(ones[0] == 0x408f276du);
    CHECK(ones[1] == 0x41c83b0eu);
    CHECK(ones[2] == 0xa20bc7c6u);
    CHECK(ones[3] == 0x6d5451fdu);

    auto pi = CounterRng::block(0x299f31d0a4093822ull, 0x85a308d3243f6a88ull,
                                0x0370734413198a2eull);
    CHECK(pi[0] == 0xd16cfe09u);
    CHECK(pi[1] == 0x94fdccebu);
    CHECK(pi[2] == 0x5001e420u);
    CHECK(pi[3] == 0x24126ea1u);
}

TEST_CASE("same seed and stream reproduce the sequence") {
    CounterRng a(42, 7), b(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.uniform01() == b.uniform01());
}

TEST_CASE("distinct streams differ") {
    CounterRng a(42, 0), b(42, 1);
    int equal = 0;
    for (int i = 0; i < 64; ++i)
        if (a.uniform01() == b.uniform01()) ++equal;
    CHECK(equal == 0);
}

TEST_CASE("substream derivation is deterministic and distinct") {
    CounterRng root(9, 3);
    CounterRng s1 = root.substream(0);
    CounterRng s2 = root.substream(0);
    CounterRng s3 = root.substream(1);
    CHECK(s1.stream() == s2.stream());
    CHECK(s1.stream() != s3.stream());
    CHECK(s1.stream() != root.stream());
}

TEST_CASE("uniform01 lies in [0,1) and has roughly uniform moments") {
    CounterRng rng(123, 0);
    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sum2 += u * u;
    }
    CHECK(std::abs(sum / n - 0.5) < 5e-3);
    CHECK(std::abs(sum2 / n - 1.0 / 3.0) < 5e-3);
}

TEST_CASE("gaussian draw_noise sample variance within 1%") {
    NoiseSpec spec;
    spec.sigma2 = 0.01;
    spec.seed = 2024;
    Eigen::MatrixXd samples = draw_noise(spec, 1000000, 1);
    const double mean = samples.mean();
    const double var = (samples.array() - mean).square().mean();
    CHECK(std::abs(var - 0.01) < 0.0001);
    CHECK(std::abs(mean) < 5e-4);
}

TEST_CASE("zero variance gives all-zero sequence") {
    NoiseSpec spec;
    spec.sigma2 = 0.0;
    spec.seed = 5;
    Eigen::MatrixXd samples = draw_noise(spec, 1000, 3);
    CHECK(samples.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("same seed twice gives identical noise sequences") {
    NoiseSpec spec;
    spec.sigma2 = 1.0;
    spec.seed = 99;
    Eigen::MatrixXd a = draw_noise(spec, 500, 2);
    Eigen::MatrixXd b = draw_noise(spec, 500, 2);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uniform-scaled distribution is bounded with the requested variance") {
    NoiseSpec spec;
    spec.sigma2 = 0.04;
    spec.distribution = NoiseKind::uniform_scaled;
    spec.seed = 31;
    Eigen::MatrixXd samples = draw_noise(spec, 400000, 1);
    CHECK(samples.cwiseAbs().maxCoeff() <= std::sqrt(3.0 * 0.04) + 1e-12);
    const double var = (samples.array() - samples.mean()).square().mean();
    CHECK(std::abs(var - 0.04) < 0.001);
}

TEST_CASE("window covariance draws match the requested covariance") {
    Eigen::MatrixXd cov(2, 2);
    cov << 1.0, 0.6, 0.6, 1.0;
    Eigen::MatrixXd samples = draw_noise_cov(cov, NoiseKind::gaussian, 400000, CounterRng(4, 0));
    Eigen::MatrixXd centered = samples.colwise() - samples.rowwise().mean();
    Eigen::MatrixXd emp = centered * centered.transpose() / samples.cols();
    CHECK((emp - cov).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("non-PSD covariance is rejected") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
    CHECK_THROWS_AS(draw_noise_cov(bad, NoiseKind::gaussian, 10, CounterRng(1, 0)),
                    std::invalid_argument);
}
