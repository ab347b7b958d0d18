#include <gtest/gtest.h>

#include "tunnel/model.hpp"

using namespace tunnel;

TEST(Model, SaddleHeightIsOne) {
    ModelParams p;
    EXPECT_DOUBLE_EQ(potential_2d(0.0, 0.0, p).real(), 1.0);
    EXPECT_DOUBLE_EQ(potential_2d(0.0, 0.0, p).imag(), 0.0);
    auto [fX, fy] = force_2d(0.0, 0.0, p);
    EXPECT_EQ(std::abs(fX), 0.0);
    EXPECT_EQ(std::abs(fy), 0.0);
}

TEST(Model, EpsilonRange) {
    EXPECT_THROW((ModelParams{0.5, 0.1}).validate(), DomainError);
    EXPECT_THROW((ModelParams{0.5, -1e-3}).validate(), DomainError);
    EXPECT_THROW((ModelParams{0.0, 0.0}).validate(), DomainError);
    EXPECT_NO_THROW((ModelParams{0.5, 0.099}).validate());
}

// closed form of the Hessian spectrum at the saddle: -1 + w^2/2 +- sqrt(1 + w^4/4)
TEST(Model, SphaleronEigenvaluesMatchClosedForm) {
    for (double w : {0.3, 0.5, 1.0}) {
        auto m = sphaleron_modes(w);
        double r = std::sqrt(1 + w * w * w * w / 4);
        EXPECT_NEAR(m.omega_plus_sq, -1 + w * w / 2 + r, 1e-13);
        EXPECT_NEAR(-m.omega_minus_sq, -1 + w * w / 2 - r, 1e-13);
        // det = -w^2, trace = w^2 - 2
        EXPECT_NEAR(-m.omega_plus_sq * m.omega_minus_sq, -w * w, 1e-13);
        EXPECT_NEAR(m.omega_plus_sq - m.omega_minus_sq, w * w - 2, 1e-13);
    }
    auto m = sphaleron_modes(0.5);
    EXPECT_NEAR(m.omega_plus_sq, 0.132782, 1e-6);
    EXPECT_NEAR(-m.omega_minus_sq, -1.882782, 1e-6);
}

TEST(Model, ModesOrthonormalAndOriented) {
    auto m = sphaleron_modes(0.5);
    EXPECT_NEAR(m.e_plus.dot(m.e_minus), 0.0, 1e-14);
    EXPECT_NEAR(m.e_plus.norm(), 1.0, 1e-14);
    EXPECT_GT(m.e_minus(0), 0.0);
    EXPECT_GT(m.e_plus(1), 0.0);
    cplx X{0.3, -0.2}, y{-1.1, 0.05};
    auto [cp, cm] = project_to_modes(X, y, m);
    auto [X2, y2] = modes_to_xy(cp, cm, m);
    EXPECT_NEAR(std::abs(X2 - X), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(y2 - y), 0.0, 1e-15);
}

// force = -grad V, checked by complex-step free central differences
TEST(Model, ForceAndJacobianAgainstFiniteDifferences) {
    ModelParams p{0.5, 0.01};
    cplx X{0.4, 0.3}, y{-0.7, 0.1};
    const double h = 1e-6;
    auto V = [&](cplx a, cplx b) { return potential_2d(a, b, p); };
    auto [fX, fy] = force_2d(X, y, p);
    EXPECT_NEAR(std::abs(fX + (V(X + h, y) - V(X - h, y)) / (2 * h)), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(fy + (V(X, y + h) - V(X, y - h)) / (2 * h)), 0.0, 1e-9);
    auto J = force_jacobian_2d(X, y, p);
    auto fp = force_2d(X + h, y, p), fm = force_2d(X - h, y, p);
    EXPECT_NEAR(std::abs(J(0, 0) - (fp.first - fm.first) / (2 * h)), 0.0, 1e-8);
    EXPECT_NEAR(std::abs(J(1, 0) - (fp.second - fm.second) / (2 * h)), 0.0, 1e-8);
    auto gp = force_2d(X, y + h, p), gm = force_2d(X, y - h, p);
    EXPECT_NEAR(std::abs(J(1, 1) - (gp.second - gm.second) / (2 * h)), 0.0, 1e-8);
}

TEST(Model, OneDimensionalForce) {
    const double h = 1e-6;
    cplx X{0.6, -0.4};
    EXPECT_NEAR(std::abs(force_1d(X, 0.01) + (potential_1d(X + h, 0.01) - potential_1d(X - h, 0.01)) / (2 * h)), 0, 1e-9);
    EXPECT_NEAR(std::abs(dforce_1d(X, 0.0) - (force_1d(X + h, 0.0) - force_1d(X - h, 0.0)) / (2 * h)), 0, 1e-8);
}
