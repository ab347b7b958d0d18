#include <gtest/gtest.h>

#include <set>

#include "tunnel/analytic1d.hpp"

using namespace tunnel;

TEST(Analytic1D, TunnelingBranchPeriod) {
    for (double E : {0.1, 0.3, 0.5, 0.9})
        EXPECT_NEAR(exact_T_of_E(E, 0.0), 2 * std::numbers::pi / std::sqrt(2 * E), 1e-13);
}

TEST(Analytic1D, AboveBarrierUnregularizedIsZero) {
    EXPECT_NEAR(exact_T_of_E(1.3, 0.0), 0.0, 1e-14);
}

TEST(Analytic1D, RegularizedRelationIsSmoothAcrossBarrierTop) {
    double prev = exact_T_of_E(0.8, 0.01);
    // slope near E = 1 is about sqrt(2)/eps
    for (double E = 0.801; E <= 1.2; E += 0.001) {
        double t = exact_T_of_E(E, 0.01);
        EXPECT_LT(t, prev);
        EXPECT_LT(prev - t, 0.2);
        prev = t;
    }
}

TEST(Analytic1D, DomainErrors) {
    EXPECT_THROW(exact_T_of_E(0.0, 0.0), DomainError);
    EXPECT_THROW(exact_T_of_E(0.5, -0.1), DomainError);
}

// the WKB integral of the sech^2 barrier has the closed form 2 sqrt2 pi (1 - sqrt E)
TEST(Analytic1D, WkbQuadratureMatchesClosedForm) {
    for (double E : {0.05, 0.3, 0.5, 0.7, 0.95})
        EXPECT_NEAR(wkb_exponent(E), 2 * std::sqrt(2.0) * std::numbers::pi * (1 - std::sqrt(E)), 1e-11);
}

// the exact solution satisfies X'' = -V'(X) (complex time, second differences)
TEST(Analytic1D, ExactSolutionSolvesEquationOfMotion) {
    double E = 0.5, eps = 0.01;
    cplx t0 = exact_t0(E, eps);
    for (cplx t : {cplx(-3.0, 0.7), cplx(0.5, 0.2), cplx(4.0, 0.0)}) {
        const double h = 1e-3;
        cplx xm = exact_solution_1d(E, eps, t - h, t0), x0 = exact_solution_1d(E, eps, t, t0),
             xp = exact_solution_1d(E, eps, t + h, t0);
        cplx acc = (xp - 2.0 * x0 + xm) / (h * h);
        EXPECT_NEAR(std::abs(acc - force_1d(x0, eps)), 0.0, 1e-5);
    }
}

TEST(Analytic1D, BranchDiagramHasFiveBranches) {
    auto b = branch_diagram(0.2, 2.0, 40);
    std::set<Branch1DLabel> labels;
    for (auto& x : b) labels.insert(x.label);
    EXPECT_EQ(labels.size(), 5u);
    EXPECT_THROW(branch_diagram(1.0, 0.5, 10), DomainError);
}
