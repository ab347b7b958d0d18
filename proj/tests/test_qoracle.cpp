#include <gtest/gtest.h>

#include "tunnel/observables.hpp"
#include "tunnel/qoracle.hpp"

using namespace tunnel;

TEST(QOracle, GroundStateCouplingClosedForm) {
    // <0|(1/l) exp(-l y^2/2)|0> for an oscillator of frequency w is (1/l)(1 + l/(2w))^{-1/2}
    for (double l : {0.1, 0.2}) {
        ChannelBasis b;
        b.lambda = l;
        b.n_channels = 6;
        EXPECT_NEAR(coupling_matrix(0.0, b)(0, 0), 1 / l / std::sqrt(1 + l / (2 * b.omega)), 1e-10);
    }
}

TEST(QOracle, CouplingSymmetricAndDecaying) {
    ChannelBasis b;
    b.n_channels = 20;
    auto V = coupling_matrix(1.3, b);
    EXPECT_LT((V - V.transpose()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT(coupling_matrix(60.0, b).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT(coupling_matrix(-60.0, b).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(QOracle, QuadratureConverged) {
    ChannelBasis b;
    b.n_channels = 30;
    EXPECT_LT(coupling_quadrature_error(b, {-6, -2, 0, 1, 4}), 1e-12);
}

// single channel with V0 / cosh^2(a x): exact transmission
TEST(QOracle, SechSquaredClosedForm) {
    const double V0 = 2.0, a = 1.0;
    ChannelBasis b;
    b.n_channels = 1;
    b.thresholds = {0.0};
    b.custom = [&](double x) {
        Eigen::MatrixXd m(1, 1);
        m(0, 0) = V0 / std::pow(std::cosh(a * x), 2);
        return m;
    };
    TransmissionOptions to;
    to.L = 25;
    to.h = 0.004;
    for (double E : {1.0, 1.8, 2.5}) {
        double k = std::sqrt(2 * E);
        double s = std::pow(std::sinh(std::numbers::pi * k / a), 2);
        double c = std::pow(std::cosh(0.5 * std::numbers::pi * std::sqrt(8 * V0 / (a * a) - 1)), 2);
        double T = transmission(E, 0, b, to).T_total;
        EXPECT_NEAR(T / (s / (s + c)) - 1, 0, 1e-8) << "E = " << E;
    }
}

TEST(QOracle, UnitarityAndMonotonicity) {
    ChannelBasis b;
    b.lambda = 0.2;
    b.n_channels = 24;
    double prev = 0;
    for (double E : {4.0, 4.5, 5.0, 5.5}) {
        auto r = transmission(E, 1, b);
        EXPECT_LT(r.unitarity_error, 1e-8);
        EXPECT_GT(r.T_total, prev);
        prev = r.T_total;
    }
}

TEST(QOracle, ChannelTruncationStable) {
    ChannelBasis b;
    b.lambda = 0.2;
    b.n_channels = 26;
    double T1 = transmission(5.0, 1, b).T_total;
    b.n_channels = 30;
    double T2 = transmission(5.0, 1, b).T_total;
    EXPECT_LT(std::abs(T1 - T2), 1e-6);
}

TEST(QOracle, GridHalvingStable) {
    ChannelBasis b;
    b.lambda = 0.2;
    b.n_channels = 24;
    TransmissionOptions to;
    double l1 = std::log(transmission(5.0, 1, b, to).T_total);
    to.h *= 0.5;
    double l2 = std::log(transmission(5.0, 1, b, to).T_total);
    EXPECT_LT(std::abs(l1 - l2), 1e-4);
}

TEST(QOracle, ErrorCases) {
    ChannelBasis b;
    b.n_channels = 8;
    EXPECT_THROW(transmission(0.1, 0, b), ClosedChannelOnly);
    EXPECT_THROW(transmission(1.0, 5, b), DomainError);  // incoming channel closed
    EXPECT_THROW(transmission(1.0, 9, b), DomainError);
    EXPECT_THROW(f_exact(0.8, 0.1, {0.1}), DomainError);
}

TEST(QOracle, AllowedRegionUnsuppressed) {
    // far above the over-barrier boundary the probability stays O(1), so F_lambda = -lambda ln P -> 0 linearly
    auto r = f_exact(2.0, 0.1, {0.2, 0.15, 0.1}, 0.5);
    for (std::size_t i = 0; i < r.lambdas.size(); ++i) {
        EXPECT_GT(std::exp(-r.F_lambda[i] / r.lambdas[i]), 0.3) << "lambda " << r.lambdas[i];
        if (i) EXPECT_LT(r.F_lambda[i], r.F_lambda[i - 1]);
    }
}

// deep forbidden point against the semiclassical solver
TEST(QOracle, DeepForbiddenAgreesWithSemiclassics) {
    auto s = move_to(start_solution({0.5, 0.0}), 0.8, 0.1, 0.0);
    FExactOptions fo;
    fo.degree = 2;
    auto q = f_exact(0.8, 0.1, {0.2, 0.15, 0.1}, 0.5, fo);
    EXPECT_NEAR(q.F0 / s.F - 1, 0, 0.05);
}
