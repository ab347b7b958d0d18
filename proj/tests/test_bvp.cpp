#include <gtest/gtest.h>

#include "tunnel/bvp1d.hpp"
#include "tunnel/observables.hpp"

using namespace tunnel;

namespace {
// forbidden-region eps = 0 solution at (E, N) = (1.0, 0.44) walked from the periodic instanton
const SaddleSolution& branch_point() {
    static SaddleSolution s = move_to(start_solution({0.5, 0.0}), 1.0, 0.44, 0.0);
    return s;
}
} // namespace

// exact sech^2 tunneling solution as the oracle: T = 2 pi / sqrt(2E), F = WKB integral
TEST(Bvp1D, ReproducesExactTunnelingSolution) {
    for (double E : {0.3, 0.6}) {
        double T_exact = exact_T_of_E(E, 0.0);
        Contour c = default_contour(1.01 * T_exact);
        Bvp1D b(0.0, BvpOptions{}, true, E);
        auto s = b.solve(exact_seed_1d(E, 0.0, c), c);
        EXPECT_NEAR(s.T / T_exact - 1, 0, 1e-6);
        EXPECT_NEAR(s.F / wkb_exponent(E) - 1, 0, 1e-6);
        EXPECT_LT(s.residual_norm, 1e-10);
    }
}

TEST(Bvp1D, RegularizedPeriod) {
    for (double E : {0.9, 1.1}) {
        double T_exact = exact_T_of_E(E, 0.01);
        Contour c = default_contour(T_exact * 1.02);
        auto s = solve_from_exact_seed(E, 0.01, c);
        EXPECT_NEAR(s.T / T_exact - 1, 0, 1e-5);
    }
}

// analytic Jacobian against central differences of the residual
TEST(Bvp, JacobianMatchesFiniteDifferences) {
    const auto& s = branch_point();
    ModelParams p{0.5, 0.004};
    BvpOptions o = s.options;
    for (SolveMode mode : {SolveMode::FixedTTheta, SolveMode::FixedEN}) {
        BvpSystem sys(p, o, mode, 1.0, 0.44);
        auto c = s.contour;
        auto J = Eigen::MatrixXd(sys.jacobian(c, s.traj, s.T, s.theta));
        const double h = 1e-6;
        // a sample of columns: first nodes, around B and C, last nodes
        std::vector<int> cols = {0, 1, 2, 3, 4 * c.iB() + 1, 4 * c.iC() + 2, 4 * (c.size() - 1) + 3};
        for (int col : cols) {
            Trajectory zp = s.traj, zm = s.traj;
            Eigen::VectorXd e = Eigen::VectorXd::Zero(4 * c.size());
            e[col] = 1;
            detail::unpack_add(zp, e, h);
            detail::unpack_add(zm, e, -h);
            Eigen::VectorXd fd = (sys.residual(c, zp, s.T, s.theta) - sys.residual(c, zm, s.T, s.theta)) / (2 * h);
            EXPECT_LT((J.col(col) - fd).cwiseAbs().maxCoeff(), 1e-6) << "column " << col;
        }
    }
}

TEST(Bvp, PeriodicInstantonIsRealOnTheEuclideanSegment) {
    auto s = periodic_instanton_solution(5.0, {0.5, 0.0});
    EXPECT_LT(s.residual_norm, 1e-10);
    EXPECT_EQ(s.theta, 0.0);
    double im = 0;
    for (int k = s.contour.iB(); k <= s.contour.iC(); ++k)
        im = std::max({im, std::abs(s.traj.X[k].imag()), std::abs(s.traj.y[k].imag())});
    EXPECT_LT(im, 1e-5);  // discretization level
    EXPECT_GT(s.E, 0.0);
    EXPECT_LT(s.E, 1.0);
    EXPECT_EQ(s.topology, Topology::Transmission);
}

TEST(Bvp, EnModeHitsTargets) {
    const auto& s = branch_point();
    EXPECT_NEAR(s.E, 1.0, 1e-9);
    EXPECT_NEAR(s.N, 0.44, 1e-9);
    EXPECT_EQ(s.topology, Topology::Transmission);
    EXPECT_GT(s.F, 0.0);
    // final reality: Im X and Im y vanish on the last nodes
    int M = s.contour.size();
    EXPECT_LT(std::abs(s.traj.X[M - 1].imag()), 1e-9);
    EXPECT_LT(std::abs(s.traj.y[M - 2].imag()), 1e-9);
}

// solving in (T, theta) mode at the EN solution's (T, theta) returns the same point
TEST(Bvp, FixedTThetaReproducesEnSolution) {
    const auto& s = branch_point();
    auto r = newton_solve(s.traj, s.contour, s.T, s.theta, s.params(), s.options);
    EXPECT_NEAR(r.E, s.E, 1e-8);
    EXPECT_NEAR(r.N, s.N, 1e-8);
    EXPECT_NEAR(r.F, s.F, 1e-8);
}

TEST(Bvp, ContourHeightMismatchRejected) {
    const auto& s = branch_point();
    EXPECT_THROW(newton_solve(s.traj, s.contour, s.T + 0.1, s.theta, s.params(), s.options), DomainError);
}

TEST(Bvp, WalkRecordsGridPointsAndSteps) {
    const auto& s = branch_point();
    auto path = walk(s, 0.01, 0.0, 0.0, 3);
    ASSERT_EQ(path.solutions.size(), 3u);
    EXPECT_NEAR(path.solutions.back().T, s.T + 0.03, 1e-12);
    for (auto& st : path.step_log) EXPECT_NEAR(st[0], 0.01, 1e-12);
}

TEST(Bvp, WalkRejectsEmptyPath) {
    EXPECT_THROW(walk(branch_point(), 0.01, 0, 0, 0), DomainError);
}

TEST(Bvp, TopologyChangeStopsWalk) {
    WalkOptions wo;
    wo.stop_on_topology_change = true;
    auto path = walk_en(branch_point(), 0.002, 0, 0, 25, wo);
    EXPECT_TRUE(path.stopped_on_topology);
    EXPECT_EQ(path.solutions.back().topology, Topology::Reflection);
}
