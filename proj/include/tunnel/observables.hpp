#pragma once
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bvp.hpp"
#include "classical.hpp"

namespace tunnel {

// --- duality checks

enum class LegendreKind { EnergyVsT, NumberVsTheta, EpsVsTint };

struct LegendreReport {
    LegendreKind kind = LegendreKind::EnergyVsT;
    std::vector<double> at, derivative, expected, rel_error;
    double max_rel_error = 0;
    double fd_error_estimate = 0;  // relative spread between one-sided differences
    bool inconclusive = false;
};

// Central differences along a branch. The varying coordinate is picked from the data:
// eps (fixed E, N) -> dF/deps vs 2 T_int; E (fixed N) -> -dF/dE vs T; N (fixed E) -> -dF/dN vs theta.
inline LegendreReport legendre_check(const BranchPath& branch) {
    const auto& s = branch.solutions;
    if (s.size() < 3) throw DomainError("legendre_check: need at least 3 solutions");
    auto span = [&](auto get) {
        double lo = get(s[0]), hi = lo;
        for (const auto& x : s) lo = std::min(lo, get(x)), hi = std::max(hi, get(x));
        return hi - lo;
    };
    double dE = span([](const SaddleSolution& x) { return x.E; });
    double dN = span([](const SaddleSolution& x) { return x.N; });
    double de = span([](const SaddleSolution& x) { return x.eps; });
    LegendreReport rep;
    std::function<double(const SaddleSolution&)> coord, target;
    if (de > 0 && de >= 1e-3 * std::max(dE, dN)) {
        rep.kind = LegendreKind::EpsVsTint;
        coord = [](const SaddleSolution& x) { return x.eps; };
        target = [](const SaddleSolution& x) { return 2 * x.T_int; };
    } else if (dE >= dN) {
        rep.kind = LegendreKind::EnergyVsT;
        coord = [](const SaddleSolution& x) { return x.E; };
        target = [](const SaddleSolution& x) { return -x.T; };
    } else {
        rep.kind = LegendreKind::NumberVsTheta;
        coord = [](const SaddleSolution& x) { return x.N; };
        target = [](const SaddleSolution& x) { return -x.theta; };
    }
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        double x0 = coord(s[i - 1]), x1 = coord(s[i]), x2 = coord(s[i + 1]);
        double d = (s[i + 1].F - s[i - 1].F) / (x2 - x0);
        double fw = (s[i + 1].F - s[i].F) / (x2 - x1), bw = (s[i].F - s[i - 1].F) / (x1 - x0);
        double ex = target(s[i]);
        rep.at.push_back(x1);
        rep.derivative.push_back(d);
        rep.expected.push_back(ex);
        double re = std::abs(d - ex) / std::max(std::abs(ex), 1e-300);
        rep.rel_error.push_back(re);
        rep.max_rel_error = std::max(rep.max_rel_error, re);
        rep.fd_error_estimate = std::max(rep.fd_error_estimate, std::abs(fw - bw) / std::max(std::abs(d), 1e-300));
    }
    rep.inconclusive = rep.fd_error_estimate > 0.1;
    return rep;
}

// --- eps -> 0

struct EpsFamily {
    std::vector<double> eps_values;
    std::vector<SaddleSolution> solutions;
    // filled by extrapolate_eps
    double E0 = NAN, N0 = NAN, F0 = NAN, error = NAN;
    int degree = 1;
    double slope_vs_2Tint = NAN;  // (dF/deps at smallest eps) / (2 T_int there)
};

struct Extrapolated {
    double E = NAN, N = NAN, F = NAN;
    double error = NAN;
    int degree = 1;
    double slope_vs_2Tint = NAN;
    double F_integral = NAN;  // F(eps_min) - eps_min 2 T_int(eps_min)
};

namespace detail {
// least squares polynomial in x; returns coefficients and rms residual
inline Eigen::VectorXd polyfit(const std::vector<double>& x, const std::vector<double>& y, int deg, double* rms) {
    Eigen::MatrixXd A(x.size(), deg + 1);
    Eigen::VectorXd b(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (int j = 0; j <= deg; ++j) A(i, j) = std::pow(x[i], j);
        b[i] = y[i];
    }
    Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    if (rms) *rms = std::sqrt((A * c - b).squaredNorm() / x.size());
    return c;
}
} // namespace detail

inline Extrapolated extrapolate_series(const std::vector<double>& eps, const std::vector<double>& E,
                                       const std::vector<double>& N, const std::vector<double>& F,
                                       const std::vector<double>& Tint = {}) {
    const std::size_t n = eps.size();
    if (n < 3) throw ExtrapolationError("extrapolate_eps: need at least 3 eps values");
    for (std::size_t i = 1; i < n; ++i)
        if (!(eps[i] < eps[i - 1])) throw ExtrapolationError("extrapolate_eps: eps values must decrease");
    if (!(eps.front() >= 4 * eps.back())) throw ExtrapolationError("extrapolate_eps: eps span below a factor 4");
    Extrapolated out;
    double r1 = 0, r2 = 0;
    auto c1 = detail::polyfit(eps, F, 1, &r1);
    auto c2 = detail::polyfit(eps, F, 2, &r2);
    out.error = std::abs(c1[0] - c2[0]);
    double scale = 0;
    for (double f : F) scale = std::max(scale, std::abs(f));
    const double floor_ = 1e-12 * std::max(1.0, scale);
    if (n >= 4 && r2 > 10 * std::max(out.error, floor_))
        throw ExtrapolationError("extrapolate_eps: family is not smooth in eps");
    // degree 2 only when a fourth point can confirm the curvature
    out.degree = n >= 4 && r1 > 3 * std::max(r2, floor_) ? 2 : 1;
    auto at0 = [&](const std::vector<double>& y) {
        return detail::polyfit(eps, y, out.degree, nullptr)[0];
    };
    out.F = out.degree == 1 ? c1[0] : c2[0];
    out.E = at0(E);
    out.N = at0(N);
    if (!Tint.empty()) {
        double slope = out.degree == 1 ? c1[1] : c2[1] + 2 * c2[2] * eps.back();
        out.slope_vs_2Tint = slope / (2 * Tint.back());
        out.F_integral = F.back() - eps.back() * 2 * Tint.back();
    }
    return out;
}

inline Extrapolated extrapolate_eps(EpsFamily& fam) {
    std::vector<double> e, E, N, F, Ti;
    for (const auto& s : fam.solutions) {
        e.push_back(s.eps);
        E.push_back(s.E);
        N.push_back(s.N);
        F.push_back(s.F);
        Ti.push_back(s.T_int);
    }
    auto x = extrapolate_series(e, E, N, F, Ti);
    fam.E0 = x.E;
    fam.N0 = x.N;
    fam.F0 = x.F;
    fam.error = x.error;
    fam.degree = x.degree;
    fam.slope_vs_2Tint = x.slope_vs_2Tint;
    return x;
}

// --- phase of a solution at the launch point of the classical shots

inline double solution_phase(const SaddleSolution& sol, double x_start = -20) {
    const auto& c = sol.contour;
    const auto& z = sol.traj;
    int k = -1;
    for (int j = 0; j < c.iB(); ++j)
        if (z.X[j].real() <= x_start && z.X[j + 1].real() > x_start) {
            k = j;
            break;
        }
    if (k < 0) throw DomainError("solution_phase: Re X never crosses x_start on AB");
    double t0 = c.nodes[k].real(), t1 = c.nodes[k + 1].real();
    double f = (x_start - z.X[k].real()) / (z.X[k + 1].real() - z.X[k].real());
    double s = t0 + f * (t1 - t0) - c.t_left;
    double wh = discrete_phase(sol.omega, c.h_ab()) / c.h_ab();
    cplx em = std::exp(-I * wh * s), ep = std::exp(I * wh * s);
    double r = std::sqrt(2 * sol.omega);
    cplx y = (z.u * em + z.v * ep) / r;
    cplx yd = (-I * sol.omega * z.u * em + I * sol.omega * z.v * ep) / r;
    double phi = std::atan2(-yd.real() / sol.omega, y.real());
    return phi < 0 ? phi + 2 * std::numbers::pi : phi;
}

// --- solution pipelines

struct PipelineOptions {
    double h = 0.05;
    double T_pi = 5.0;        // period of the starting periodic instanton
    double eps_reg = 0.01;    // regularization used to cross E1(N)
    int n_eps_steps = 10;
    int n_en_steps = 20;
    WalkOptions walk;
};

inline SaddleSolution start_solution(const ModelParams& p, const PipelineOptions& po = {}) {
    return periodic_instanton_solution(po.T_pi, {p.omega, 0.0}, po.h);
}

// moves a solution to (E, N, eps): eps first, then (E, N)
inline SaddleSolution move_to(const SaddleSolution& from, double E, double N, double eps, const PipelineOptions& po = {}) {
    SaddleSolution cur = from;
    if (eps != cur.eps) {
        int n = std::max(1, int(std::ceil(po.n_eps_steps * std::abs(eps - cur.eps) / std::max(po.eps_reg, 1e-12))));
        cur = walk_en(cur, 0, 0, (eps - cur.eps) / n, n, po.walk).solutions.back();
    }
    if (E != cur.E || N != cur.N) cur = walk_en(cur, (E - cur.E) / po.n_en_steps, (N - cur.N) / po.n_en_steps, 0, po.n_en_steps, po.walk).solutions.back();
    return cur;
}

// regularized solution at (E, N, eps) reached from the periodic instanton through eps_reg
inline SaddleSolution regularized_solution(double E, double N, double eps, const ModelParams& p,
                                           const PipelineOptions& po = {}) {
    auto s = start_solution(p, po);
    s = move_to(s, s.E, s.N, po.eps_reg, po);
    s = move_to(s, E, N, po.eps_reg, po);
    if (eps != po.eps_reg) s = move_to(s, E, N, eps, po);
    return s;
}

// eps = 0 solution with sphaleron-bound final conditions at the (E, N) of a regularized one
inline SaddleSolution sphaleron_bound_limit(const SaddleSolution& reg, double window = 8.0) {
    Trajectory z = sphaleron_bound_seed(reg, window);
    BvpOptions o = reg.options;
    o.final_bc = FinalBC::SphaleronBound;
    auto s = newton_solve_en(z, reg.contour, reg.T, reg.theta, reg.E, reg.N, {reg.omega, reg.eps}, o);
    if (reg.eps > 0) s = newton_solve_en(s.traj, s.contour, s.T, s.theta, reg.E, reg.N, {reg.omega, 0.0}, o);
    return s;
}

// eps -> 0 limit of a forbidden-region point: transmitting eps = 0 solution when it exists, otherwise sphaleron-bound
inline SaddleSolution forbidden_limit(const SaddleSolution& small_eps) {
    BvpOptions o = small_eps.options;
    o.max_iters = 30;
    try {
        auto s = newton_solve_en(small_eps.traj, small_eps.contour, small_eps.T, small_eps.theta, small_eps.E,
                                 small_eps.N, {small_eps.omega, 0.0}, o);
        if (s.topology == Topology::Transmission) return s;
    } catch (const Error&) {
    }
    return sphaleron_bound_limit(small_eps);
}

// --- allowed region: T = eps tau, theta = eps vartheta

struct AllowedLimit {
    EpsFamily family;
    Extrapolated limit;
    double T_int0 = NAN;          // T_int extrapolated to eps = 0
    double dTint_dtau = NAN;      // 2 dT_int/dtau at the smallest eps
    double dTint_dvartheta = NAN; // 2 dT_int/dvartheta at the smallest eps
    double phi = NAN;             // launch phase of the smallest-eps solution
};

// start: a converged solution at (eps0 tau, eps0 vartheta, eps0); eps_seq: decreasing eps values to record
inline AllowedLimit allowed_region_limit(const SaddleSolution& start, double tau, double vartheta,
                                         const std::vector<double>& eps_seq, int substeps = 4,
                                         const WalkOptions& wo = {}, bool verify_derivatives = false) {
    if (eps_seq.size() < 3) throw DomainError("allowed_region_limit: need at least 3 eps values");
    AllowedLimit out;
    SaddleSolution cur = start;
    if (cur.options.gauge != Gauge::Pin) cur.options = with_pin_gauge(cur);
    for (double e : eps_seq) {
        if (std::abs(e - cur.eps) > 0) cur = walk_tau(cur, tau, vartheta, e, substeps, wo).solutions.back();
        out.family.eps_values.push_back(e);
        out.family.solutions.push_back(cur);
    }
    out.limit = extrapolate_eps(out.family);
    std::vector<double> e, Ti, dummy;
    for (const auto& s : out.family.solutions) {
        e.push_back(s.eps);
        Ti.push_back(s.T_int);
    }
    out.T_int0 = extrapolate_series(e, Ti, Ti, Ti).F;
    out.phi = solution_phase(cur);
    if (verify_derivatives) {
        double d = 0.01 * std::abs(tau);
        auto at = [&](double ta, double vt) {
            return walk(cur, cur.eps * (ta - tau), cur.eps * (vt - vartheta), 0, 1, wo).solutions.back().T_int;
        };
        out.dTint_dtau = 2 * (at(tau + d, vartheta) - at(tau - d, vartheta)) / (2 * d);
        double dv = 0.01 * std::max(1.0, std::abs(vartheta));
        out.dTint_dvartheta = 2 * (at(tau, vartheta + dv) - at(tau, vartheta - dv)) / (2 * dv);
    }
    return out;
}

// solution at (T, theta) = eps (tau, vartheta) reached through the forbidden-region point (E_via, N_via) at eps_reg
inline SaddleSolution allowed_region_seed(const ModelParams& p, double tau = 380, double vartheta = 130, double eps = 0.001,
                                          const PipelineOptions& po = {}, double E_via = 1.05, double N_via = 0.43,
                                          int n_steps = 20) {
    auto r = regularized_solution(E_via, N_via, po.eps_reg, p, po);
    const double e0 = po.eps_reg;
    auto a = walk(r, (e0 * tau - r.T) / n_steps, (e0 * vartheta - r.theta) / n_steps, 0, n_steps, po.walk).solutions.back();
    a.options = with_pin_gauge(a);
    if (eps == e0) return a;
    int n = std::max(2, int(std::ceil(12 * std::abs(std::log(eps / e0)) / std::log(10.0))));
    return walk_tau(a, tau, vartheta, eps, n, po.walk).solutions.back();
}

struct BoundaryPoint {
    double E0 = NAN, N = NAN;
    std::vector<double> taus, Es, Ns;
    bool stable = true;
};

// (E, N)(tau, tau / ratio) on a tau ladder at fixed small eps, extrapolated linearly in 1/tau
inline BoundaryPoint boundary_from_tau_limit(const SaddleSolution& start, double tau_over_vartheta,
                                             const std::vector<double>& taus, int substeps = 8,
                                             const WalkOptions& wo = {}) {
    if (taus.size() < 2) throw DomainError("boundary_from_tau_limit: need at least two tau values");
    if (tau_over_vartheta == 0) throw DomainError("boundary_from_tau_limit: ratio must be nonzero");
    BoundaryPoint bp;
    SaddleSolution cur = start;
    if (cur.options.gauge != Gauge::Pin) cur.options = with_pin_gauge(cur);
    const double e = cur.eps;
    for (double tau : taus) {
        double vt = tau / tau_over_vartheta;
        cur = walk(cur, (e * tau - cur.T) / substeps, (e * vt - cur.theta) / substeps, 0, substeps, wo).solutions.back();
        bp.taus.push_back(tau);
        bp.Es.push_back(cur.E);
        bp.Ns.push_back(cur.N);
    }
    std::vector<double> x;
    for (double t : bp.taus) x.push_back(1.0 / t);
    int deg = std::min<int>(1, int(x.size()) - 1);
    double r = 0;
    bp.E0 = detail::polyfit(x, bp.Es, deg, &r)[0];
    bp.N = detail::polyfit(x, bp.Ns, deg, nullptr)[0];
    // unstable if the extrapolated shift exceeds the spread of the raw sequence
    double spread = std::abs(bp.Es.back() - bp.Es.front());
    bp.stable = std::abs(bp.E0 - bp.Es.back()) <= 2 * spread + 1e-3;
    if (!bp.stable) {
        std::string msg = "boundary_from_tau_limit: unstable extrapolation; raw E:";
        for (double v : bp.Es) msg += " " + std::to_string(v);
        throw ExtrapolationError(msg);
    }
    return bp;
}

} // namespace tunnel
