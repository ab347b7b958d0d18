#include <gtest/gtest.h>

#include <numbers>

#include "tunnel/classical.hpp"

using namespace tunnel;

TEST(Classical, EnergyConserved) {
    ModelParams p;
    for (double phi : {0.0, 1.0, 2.5}) {
        auto r = shoot({1.2, 0.3, phi}, p);
        EXPECT_LT(r.energy_drift, 1e-8);
        EXPECT_NE(r.outcome, Outcome::Undecided);
    }
}

TEST(Classical, BelowSaddleAlwaysReflects) {
    // E < U(0,0) = 1: no phase can pass
    ModelParams p;
    for (int i = 0; i < 16; ++i) EXPECT_EQ(shoot({0.95, 0.2, i * 0.4}, p).outcome, Outcome::Reflected);
}

TEST(Classical, FastParticleTransmits) {
    ModelParams p;
    EXPECT_EQ(shoot({3.0, 0.0, 0.0}, p).outcome, Outcome::Transmitted);
}

TEST(Classical, SpecValidation) {
    ModelParams p;
    EXPECT_THROW(shoot({0.4, 1.0, 0.0}, p), DomainError);   // E < w N
    EXPECT_THROW(shoot({1.0, -0.1, 0.0}, p), DomainError);  // N < 0
    EXPECT_THROW(shoot({1.0, 0.1, 0.0, -4}, p), DomainError);
}

// T_int integrated along the shot agrees with Simpson on the recorded path
TEST(Classical, InteractionTimeIntegral) {
    ModelParams p;
    ShootOptions so;
    so.record = true;
    so.sample_dt = 0.01;
    auto r = shoot({1.5, 0.2, 0.7}, p, so);
    double s = 0;
    const auto& P = r.path;
    std::size_t n = P.size() - (P.size() - 1) % 2;
    auto U = [](const std::array<double, 5>& q) { return std::exp(-0.5 * (q[1] + q[2]) * (q[1] + q[2])); };
    for (std::size_t i = 0; i + 2 < n; i += 2) s += so.sample_dt / 3 * (U(P[i]) + 4 * U(P[i + 1]) + U(P[i + 2]));
    EXPECT_NEAR(s, r.T_int, 1e-3);
}

TEST(Classical, FindE0BracketsTheThreshold) {
    ModelParams p;
    double E0 = find_E0(0.1, p, 64, 1e-3);
    EXPECT_GT(E0, 1.0);
    EXPECT_FALSE(any_transmitting_phase(E0 - 0.01, 0.1, p, 64).transmitted);
    EXPECT_TRUE(any_transmitting_phase(E0 + 0.01, 0.1, p, 64).transmitted);
}

// next to the phase that separates transmission from reflection the shot lingers near an unstable
// orbit, so residence grows like ln(1/dphi): roughly constant increments per decade
TEST(Classical, ResidenceGrowsLogarithmicallyAtPhaseEdge) {
    ModelParams p;
    const double E = 1.3, N = 0.2;
    auto sc = tint_phase_scan(E, N, p, 90);
    int n = int(sc.phi.size()), i = 0;
    while (i < n && !(sc.outcome[i] == Outcome::Transmitted && sc.outcome[(i + 1) % n] == Outcome::Reflected)) ++i;
    ASSERT_LT(i, n);
    double lo = sc.phi[i], hi = lo + 2 * std::numbers::pi / n;
    while (hi - lo > 1e-13) {
        double m = 0.5 * (lo + hi);
        (shoot({E, N, m}, p).outcome == Outcome::Transmitted ? lo : hi) = m;
    }
    std::vector<double> res;
    for (double d : {1e-3, 1e-4, 1e-5, 1e-6, 1e-7}) res.push_back(shoot({E, N, hi + d}, p).residence);
    for (std::size_t k = 1; k < res.size(); ++k) EXPECT_GT(res[k], res[k - 1]);
    double inc0 = res[2] - res[1], inc2 = res[4] - res[3];
    EXPECT_GT(inc2, 0.5 * inc0);
    EXPECT_LT(inc2, 2.0 * inc0);
}

TEST(Classical, PhaseScanFindsSingleMinimum) {
    ModelParams p;
    auto sc = tint_phase_scan(1.3, 0.2, p, 90);
    EXPECT_EQ(sc.phi.size(), 90u);
    EXPECT_GE(sc.local_minima, 1);
    double m = 1e300;
    for (std::size_t i = 0; i < sc.phi.size(); ++i)
        if (sc.outcome[i] == Outcome::Transmitted) m = std::min(m, sc.T_int[i]);
    EXPECT_LE(sc.T_int_min, m + 1e-12);
}
