#include <gtest/gtest.h>

#include "tunnel/contour.hpp"

using namespace tunnel;

TEST(Contour, GeometryAndCorners) {
    auto c = default_contour(3.0, 0.05, -25, 25);
    EXPECT_EQ(c.size(), c.n_ab + c.n_bc + c.n_cd + 1);
    EXPECT_NEAR(std::abs(c.nodes.front() - cplx(-25, 1.5)), 0, 1e-14);
    EXPECT_NEAR(std::abs(c.nodes[c.iB()] - cplx(0, 1.5)), 0, 1e-14);
    EXPECT_NEAR(std::abs(c.nodes[c.iC()]), 0, 1e-14);
    EXPECT_NEAR(std::abs(c.nodes.back() - cplx(25, 0)), 0, 1e-14);
    EXPECT_NEAR(c.h_ab(), 0.05, 1e-14);
}

TEST(Contour, ZeroHeightHasNoVerticalSegment) {
    auto c = default_contour(0.0);
    EXPECT_EQ(c.n_bc, 0);
    EXPECT_EQ(c.iB(), c.iC());
    auto d = c.with_T(1.0);
    EXPECT_GT(d.n_bc, 0);
}

TEST(Contour, InvalidInput) {
    EXPECT_THROW(build_contour(-1, -25, 25, 10, 5, 10), DomainError);
    EXPECT_THROW(build_contour(1, 5, 25, 10, 5, 10), DomainError);
    EXPECT_THROW(build_contour(1, -25, 25, 10, 0, 10), DomainError);
}

// an analytic integrand integrates path-independently: int t^3 dt = (D^4 - A^4)/4
TEST(Contour, SimpsonExactForCubics) {
    for (int nbc : {7, 8}) {  // odd and even interval counts on BC
        auto c = build_contour(2.4, -10, 10, 101, nbc, 100);
        std::vector<cplx> f(c.size());
        for (int k = 0; k < c.size(); ++k) f[k] = c.nodes[k] * c.nodes[k] * c.nodes[k];
        cplx a = c.nodes.front(), d = c.nodes.back();
        cplx exact = (std::pow(d, 4) - std::pow(a, 4)) / 4.0;
        EXPECT_NEAR(std::abs(contour_integral(c, f) - exact), 0, 1e-9 * std::abs(exact));
        // the trapezoid rule is only second order
        EXPECT_GT(std::abs(contour_integral(c, f, Quadrature::Trapezoid) - exact), 1e-6);
    }
}

TEST(Contour, SecondDerivativeOfQuadratic) {
    auto c = default_contour(2.0, 0.1, -5, 5);
    std::vector<cplx> f(c.size());
    for (int k = 0; k < c.size(); ++k) f[k] = c.nodes[k] * c.nodes[k];
    auto d2 = second_derivative(c, f);
    for (int k = 1; k + 1 < c.size(); ++k) EXPECT_NEAR(std::abs(d2[k] - 2.0), 0, 1e-9);
}
