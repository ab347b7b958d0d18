#pragma once
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <boost/numeric/odeint.hpp>

#include "asymptotics.hpp"

namespace tunnel {

enum class Topology { Transmission, Reflection, SphaleronBound, Unclassified };
enum class FinalBC { Transmission, SphaleronBound };
enum class Gauge { Velocity, Pin };
enum class SolveMode { FixedTTheta, FixedEN };

inline const char* to_string(Topology t) {
    switch (t) {
    case Topology::Transmission: return "transmission";
    case Topology::Reflection: return "reflection";
    case Topology::SphaleronBound: return "sphaleron_bound";
    case Topology::Unclassified: return "unclassified";
    }
    return "?";
}

struct BvpOptions {
    double tol = 1e-10;
    int max_iters = 50;
    int max_backtracks = 8;
    FinalBC final_bc = FinalBC::Transmission;
    Gauge gauge = Gauge::Velocity;
    double pin_time = -8.0;   // Re t' of the pinned AB node
    double pin_value = 0.0;   // Re X there
    double x_far = 8.0;
    double reality_tol = 1e-7;
    double free_tol = 1e-6;
};

struct SaddleSolution {
    Trajectory traj;
    Contour contour;
    double T = 0, theta = 0, eps = 0;
    double omega = 0.5;
    double E = 0, N = 0, F = 0, T_int = 0;
    Topology topology = Topology::Unclassified;
    double residual_norm = 0;
    int newton_iters = 0;
    BvpOptions options;
    Observables obs;

    ModelParams params() const { return {omega, eps}; }
};

struct BranchPath {
    std::vector<SaddleSolution> solutions;
    std::vector<std::array<double, 3>> step_log;  // (dT, dtheta, deps) between consecutive solutions
    bool stopped_on_topology = false;
};

namespace detail {

struct Triplets {
    std::vector<Eigen::Triplet<double>> t;
    void add(int r, int c, double v) {
        if (v != 0.0) t.emplace_back(r, c, v);
    }
    // complex coefficient acting on (Re, Im) of an unknown, rows (Re, Im) of an equation
    void cblock(int r0, int c0, cplx m) {
        add(r0, c0, m.real());
        add(r0, c0 + 1, -m.imag());
        add(r0 + 1, c0, m.imag());
        add(r0 + 1, c0 + 1, m.real());
    }
    // row = Re(m * z)
    void re_row(int r, int c0, cplx m) {
        add(r, c0, m.real());
        add(r, c0 + 1, -m.imag());
    }
};

// fourth-order compact weights for z'' = f on a non-uniform (complex) 3-point stencil
inline void compact_weights(cplx hp, cplx hm, cplx& a, cplx& b, cplx& c) {
    cplx S = (hp * hp - hp * hm + hm * hm) / 6.0;
    a = (S - hp * (hp - hm) / 3.0) / (hm * (hm + hp));
    c = (a * hm + (hp - hm) / 3.0) / hp;
    b = 1.0 - a - c;
}

inline Eigen::SparseMatrix<double> assemble(int n, Triplets& tr) {
    Eigen::SparseMatrix<double> J(n, n);
    J.setFromTriplets(tr.t.begin(), tr.t.end());
    J.makeCompressed();
    return J;
}

inline Eigen::VectorXd sparse_solve(const Eigen::SparseMatrix<double>& J, const Eigen::VectorXd& rhs) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(J);
    lu.factorize(J);
    if (lu.info() != Eigen::Success) throw SingularJacobian("sparse LU failed: " + lu.lastErrorMessage());
    Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite()) throw SingularJacobian("sparse LU solve failed");
    return x;
}

} // namespace detail

// Discretized T/theta problem. Unknowns per node: (Re X, Im X, Re y, Im y); EN mode appends (T, theta).
class BvpSystem {
public:
    BvpSystem(ModelParams p, BvpOptions o, SolveMode m = SolveMode::FixedTTheta, double E_target = 0,
              double N_target = 0)
        : params_(p), opt_(o), mode_(m), E_t_(E_target), N_t_(N_target), modes_(sphaleron_modes(p.omega)) {
        params_.validate();
    }

    const ModelParams& params() const { return params_; }
    const BvpOptions& options() const { return opt_; }
    SolveMode mode() const { return mode_; }
    const SphaleronModes& modes() const { return modes_; }

    int n_unknowns(const Contour& c) const { return 4 * c.size() + (mode_ == SolveMode::FixedEN ? 2 : 0); }

    int pin_index(const Contour& c) const {
        int k = int(std::lround((opt_.pin_time - c.t_left) / c.h_ab()));
        return std::clamp(k, 2, c.n_ab - 1);
    }

    Eigen::VectorXd residual(const Contour& c, const Trajectory& z, double T, double theta) const {
        (void)T;
        const int M = c.size();
        if (z.size() != M) throw DomainError("residual: trajectory does not match contour");
        Eigen::VectorXd r(n_unknowns(c));
        std::vector<cplx> fX(M), fy(M);
        for (int k = 0; k < M; ++k) std::tie(fX[k], fy[k]) = force_2d(z.X[k], z.y[k], params_);

        auto as = extract_asymptotics(z.X, z.y, c, params_.omega);
        cplx R = as.v - std::exp(theta) * std::conj(as.u);
        r[0] = z.X[0].imag();
        r[1] = R.real();
        r[2] = R.imag();
        if (opt_.gauge == Gauge::Velocity) {
            int k = c.iC();
            double h = c.h_cd();
            r[3] = ((z.X[k + 1] - z.X[k]) / h - h * (2.0 * fX[k] + fX[k + 1]) / 6.0).real();
        } else {
            r[3] = z.X[pin_index(c)].real() - opt_.pin_value;
        }
        for (int k = 1; k + 1 < M; ++k) {
            cplx hp = c.nodes[k + 1] - c.nodes[k], hm = c.nodes[k] - c.nodes[k - 1];
            cplx a, b, cc;
            detail::compact_weights(hp, hm, a, b, cc);
            cplx s = 2.0 / (hp + hm);
            double sc = std::abs(hp) * std::abs(hm);
            cplx rX = s * ((z.X[k + 1] - z.X[k]) / hp - (z.X[k] - z.X[k - 1]) / hm) -
                      (a * fX[k - 1] + b * fX[k] + cc * fX[k + 1]);
            cplx ry = s * ((z.y[k + 1] - z.y[k]) / hp - (z.y[k] - z.y[k - 1]) / hm) -
                      (a * fy[k - 1] + b * fy[k] + cc * fy[k + 1]);
            int row = 4 + 4 * (k - 1);
            r[row] = sc * rX.real();
            r[row + 1] = sc * rX.imag();
            r[row + 2] = sc * ry.real();
            r[row + 3] = sc * ry.imag();
        }
        int r0 = 4 * M - 4;
        if (opt_.final_bc == FinalBC::Transmission) {
            r[r0] = z.X[M - 1].imag();
            r[r0 + 1] = z.X[M - 2].imag();
            r[r0 + 2] = z.y[M - 1].imag();
            r[r0 + 3] = z.y[M - 2].imag();
        } else {
            auto [cp1, cm1] = project_to_modes(z.X[M - 1], z.y[M - 1], modes_);
            auto [cp0, cm0] = project_to_modes(z.X[M - 2], z.y[M - 2], modes_);
            double rho = discrete_decay(modes_.omega_minus_sq, c.h_cd());
            cplx g = cm1 - rho * cm0;
            r[r0] = cp1.imag();
            r[r0 + 1] = cp0.imag();
            r[r0 + 2] = g.real();
            r[r0 + 3] = g.imag();
        }
        if (mode_ == SolveMode::FixedEN) {
            cplx N = as.u * as.v;
            cplx E = 0.5 * as.p0 * as.p0 + params_.omega * N;
            r[4 * M] = E.real() - E_t_;
            r[4 * M + 1] = N.real() - N_t_;
        }
        return r;
    }

    Eigen::SparseMatrix<double> jacobian(const Contour& c, const Trajectory& z, double T, double theta) const {
        const int M = c.size();
        const int n = n_unknowns(c);
        detail::Triplets tr;
        tr.t.reserve(64 * M);
        std::vector<Eigen::Matrix2cd> Jf(M);
        for (int k = 0; k < M; ++k) Jf[k] = force_jacobian_2d(z.X[k], z.y[k], params_);
        auto as = extract_asymptotics(z.X, z.y, c, params_.omega);
        double et = std::exp(theta);

        tr.add(0, 1, 1.0);
        for (int j = 0; j < 2; ++j) {
            // R = v - e^theta conj(u)
            cplx dre = as.dv[j] - et * std::conj(as.du[j]);
            cplx dim = I * as.dv[j] + I * et * std::conj(as.du[j]);
            tr.add(1, 4 * j + 2, dre.real());
            tr.add(2, 4 * j + 2, dre.imag());
            tr.add(1, 4 * j + 3, dim.real());
            tr.add(2, 4 * j + 3, dim.imag());
        }
        if (opt_.gauge == Gauge::Velocity) {
            int k = c.iC();
            double h = c.h_cd();
            Eigen::RowVector2cd m0 = -h * 2.0 * Jf[k].row(0) / 6.0;
            Eigen::RowVector2cd m1 = -h * Jf[k + 1].row(0) / 6.0;
            m0(0) += -1.0 / h;
            m1(0) += 1.0 / h;
            for (int q = 0; q < 2; ++q) {
                tr.re_row(3, 4 * k + 2 * q, m0(q));
                tr.re_row(3, 4 * (k + 1) + 2 * q, m1(q));
            }
        } else {
            tr.add(3, 4 * pin_index(c), 1.0);
        }
        const Eigen::Matrix2cd Id = Eigen::Matrix2cd::Identity();
        for (int k = 1; k + 1 < M; ++k) {
            cplx hp = c.nodes[k + 1] - c.nodes[k], hm = c.nodes[k] - c.nodes[k - 1];
            cplx a, b, cc;
            detail::compact_weights(hp, hm, a, b, cc);
            cplx s = 2.0 / (hp + hm);
            double sc = std::abs(hp) * std::abs(hm);
            Eigen::Matrix2cd B[3] = {s / hm * Id - a * Jf[k - 1], -s * (1.0 / hp + 1.0 / hm) * Id - b * Jf[k],
                                     s / hp * Id - cc * Jf[k + 1]};
            int row = 4 + 4 * (k - 1);
            for (int j = 0; j < 3; ++j)
                for (int p = 0; p < 2; ++p)
                    for (int q = 0; q < 2; ++q)
                        if (B[j](p, q) != 0.0) tr.cblock(row + 2 * p, 4 * (k - 1 + j) + 2 * q, sc * B[j](p, q));
        }
        int r0 = 4 * M - 4;
        if (opt_.final_bc == FinalBC::Transmission) {
            tr.add(r0, 4 * (M - 1) + 1, 1.0);
            tr.add(r0 + 1, 4 * (M - 2) + 1, 1.0);
            tr.add(r0 + 2, 4 * (M - 1) + 3, 1.0);
            tr.add(r0 + 3, 4 * (M - 2) + 3, 1.0);
        } else {
            double rho = discrete_decay(modes_.omega_minus_sq, c.h_cd());
            for (int q = 0; q < 2; ++q) {
                tr.add(r0, 4 * (M - 1) + 2 * q + 1, modes_.e_plus(q));
                tr.add(r0 + 1, 4 * (M - 2) + 2 * q + 1, modes_.e_plus(q));
                tr.cblock(r0 + 2, 4 * (M - 1) + 2 * q, modes_.e_minus(q));
                tr.cblock(r0 + 2, 4 * (M - 2) + 2 * q, -rho * modes_.e_minus(q));
            }
        }
        if (mode_ == SolveMode::FixedEN) {
            int re = 4 * M, rn = 4 * M + 1;
            double h = c.h_ab();
            tr.re_row(re, 0, -as.p0 / h);
            tr.re_row(re, 4, as.p0 / h);
            for (int j = 0; j < 2; ++j) {
                cplx dN = as.du[j] * as.v + as.u * as.dv[j];
                tr.re_row(re, 4 * j + 2, params_.omega * dN);
                tr.re_row(rn, 4 * j + 2, dN);
            }
            // theta column
            cplx dth = -et * std::conj(as.u);
            tr.add(1, n - 1, dth.real());
            tr.add(2, n - 1, dth.imag());
            // T column by central differences through the contour
            double d = 1e-6 * std::max(1.0, T);
            Eigen::VectorXd col;
            if (T - d > 0) {
                col = (residual(c.with_T(T + d), z, T + d, theta) - residual(c.with_T(T - d), z, T - d, theta)) /
                      (2 * d);
            } else {
                col = (residual(c.with_T(T + d), z, T + d, theta) - residual(c, z, T, theta)) / d;
            }
            for (int i = 0; i < col.size(); ++i)
                if (col[i] != 0.0) tr.add(i, n - 2, col[i]);
        }
        return detail::assemble(n, tr);
    }

private:
    ModelParams params_;
    BvpOptions opt_;
    SolveMode mode_;
    double E_t_, N_t_;
    SphaleronModes modes_;
};

namespace detail {

inline Eigen::VectorXd pack(const Trajectory& z) {
    Eigen::VectorXd x(4 * z.size());
    for (int k = 0; k < z.size(); ++k) {
        x[4 * k] = z.X[k].real();
        x[4 * k + 1] = z.X[k].imag();
        x[4 * k + 2] = z.y[k].real();
        x[4 * k + 3] = z.y[k].imag();
    }
    return x;
}

inline void unpack_add(Trajectory& z, const Eigen::VectorXd& dx, double lam) {
    for (int k = 0; k < z.size(); ++k) {
        z.X[k] += lam * cplx(dx[4 * k], dx[4 * k + 1]);
        z.y[k] += lam * cplx(dx[4 * k + 2], dx[4 * k + 3]);
    }
}

} // namespace detail

struct NewtonState {
    Trajectory z;
    Contour contour;
    double T = 0, theta = 0;
    int iters = 0;
    double norm = 0;
};

inline NewtonState newton_iterate(const BvpSystem& sys, Trajectory z, Contour c, double T, double theta) {
    const auto& opt = sys.options();
    const bool en = sys.mode() == SolveMode::FixedEN;
    double nr = 0;
    for (int it = 0; it <= opt.max_iters; ++it) {
        Eigen::VectorXd r = sys.residual(c, z, T, theta);
        nr = r.norm();
        if (!std::isfinite(nr)) throw MaxItersExceeded("newton: residual is not finite");
        if (nr < opt.tol) return {std::move(z), std::move(c), T, theta, it, nr};
        if (it == opt.max_iters) break;
        Eigen::VectorXd dx = detail::sparse_solve(sys.jacobian(c, z, T, theta), -r);
        const int n4 = 4 * c.size();
        double lam = 1.0;
        for (int k = 0; k <= opt.max_backtracks; ++k) {
            Trajectory zn = z;
            detail::unpack_add(zn, dx, lam);
            double Tn = T, thn = theta;
            if (en) {
                Tn = T + lam * dx[n4];
                thn = theta + lam * dx[n4 + 1];
            }
            if (Tn < 0) {
                lam *= 0.5;
                continue;
            }
            Contour cn = Tn != T ? c.with_T(Tn) : c;
            double nn = sys.residual(cn, zn, Tn, thn).norm();
            if ((std::isfinite(nn) && nn < nr) || k == opt.max_backtracks) {
                z = std::move(zn);
                c = std::move(cn);
                T = Tn;
                theta = thn;
                break;
            }
            lam *= 0.5;
        }
    }
    throw MaxItersExceeded("newton: no convergence in " + std::to_string(opt.max_iters) +
                           " iterations (residual " + std::to_string(nr) + ")");
}

inline Topology classify_topology(const SaddleSolution& sol, bool throw_if_unclassifiable = true) {
    const auto& z = sol.traj;
    const auto& c = sol.contour;
    const int M = c.size();
    const double xf = sol.options.x_far;
    double Xe = z.X[M - 1].real();
    double Xd = ((z.X[M - 1] - z.X[M - 2]) / c.h_cd()).real();
    if (Xe > xf && Xd > 0) return Topology::Transmission;
    if (Xe < -xf) return Topology::Reflection;
    // bound: stays in the interaction region and Im c_- dies out over the last half of CD
    auto modes = sphaleron_modes(sol.omega);
    int half = c.iC() + c.n_cd / 2, quarter = c.iC() + 3 * c.n_cd / 4;
    bool inside = true;
    double early = 0, late = 0;
    for (int k = half; k < M; ++k) {
        if (std::abs(z.X[k].real()) > xf || std::abs(z.y[k].real()) > xf) inside = false;
        double im = std::abs(project_to_modes(z.X[k], z.y[k], modes).second.imag());
        (k < quarter ? early : late) = std::max(k < quarter ? early : late, im);
    }
    bool decays = late < 1e-9 || late < 0.1 * early;
    if (inside && decays) return Topology::SphaleronBound;
    if (throw_if_unclassifiable)
        throw Unclassifiable("final state neither transmitted, reflected nor bound; increase t_right");
    return Topology::Unclassified;
}

inline SaddleSolution make_solution(const BvpSystem& sys, NewtonState st) {
    SaddleSolution sol;
    sol.traj = std::move(st.z);
    sol.contour = std::move(st.contour);
    sol.T = st.T;
    sol.theta = st.theta;
    sol.eps = sys.params().epsilon;
    sol.omega = sys.params().omega;
    sol.residual_norm = st.norm;
    sol.newton_iters = st.iters;
    sol.options = sys.options();
    fill_asymptotics(sol.traj, sol.contour, sol.omega);
    sol.obs = compute_observables(sol.traj, sol.contour, sol.T, sol.theta, sys.params(), sol.options.free_tol);
    sol.E = sol.obs.E;
    sol.N = sol.obs.N;
    sol.F = sol.obs.F;
    sol.T_int = sol.obs.T_int;
    sol.topology = classify_topology(sol, false);
    return sol;
}

// fixed (T, theta)
inline SaddleSolution newton_solve(const Trajectory& guess, const Contour& contour, double T, double theta,
                                   const ModelParams& params, const BvpOptions& opt = {}) {
    if (std::abs(contour.T - T) > 1e-14 * std::max(1.0, T)) throw DomainError("newton_solve: contour built for another T");
    BvpSystem sys(params, opt);
    return make_solution(sys, newton_iterate(sys, guess, contour, T, theta));
}

// fixed (E, N); T and theta are unknowns started from the given values
inline SaddleSolution newton_solve_en(const Trajectory& guess, const Contour& contour, double T, double theta,
                                      double E, double N, const ModelParams& params, const BvpOptions& opt = {}) {
    BvpSystem sys(params, opt, SolveMode::FixedEN, E, N);
    Contour c = std::abs(contour.T - T) > 0 ? contour.with_T(T) : contour;
    return make_solution(sys, newton_iterate(sys, guess, c, T, theta));
}

// --- periodic instanton seed

namespace detail {

using state4 = std::array<double, 4>;

struct EuclideanRhs {
    double w2;
    void operator()(const state4& x, state4& d, double) const {
        double s = x[0] + x[1], U = std::exp(-0.5 * s * s);
        d[0] = x[2];
        d[1] = x[3];
        d[2] = -s * U;             // +dV/dX
        d[3] = w2 * x[1] - s * U;  // +dV/dy
    }
};

struct RealRhs {
    double w2;
    void operator()(const state4& x, state4& d, double) const {
        double s = x[0] + x[1], U = std::exp(-0.5 * s * s);
        d[0] = x[2];
        d[1] = x[3];
        d[2] = s * U;
        d[3] = -w2 * x[1] + s * U;
    }
};

template <class Rhs>
state4 evolve(const Rhs& rhs, state4 x, double t_end) {
    namespace ode = boost::numeric::odeint;
    if (t_end <= 0) return x;
    auto stepper = ode::make_controlled(1e-13, 1e-12, ode::runge_kutta_dopri5<state4>());
    ode::integrate_adaptive(stepper, rhs, x, 0.0, t_end, 1e-3);
    return x;
}

// samples at increasing times ts (ts[0] >= 0), starting from x at t = 0
template <class Rhs>
std::vector<state4> sample(const Rhs& rhs, state4 x, const std::vector<double>& ts) {
    namespace ode = boost::numeric::odeint;
    std::vector<state4> out;
    out.reserve(ts.size());
    std::vector<double> times;
    times.push_back(0.0);
    for (double t : ts)
        if (t > times.back()) times.push_back(t);
    auto stepper = ode::make_dense_output(1e-13, 1e-12, ode::runge_kutta_dopri5<state4>());
    std::vector<state4> at;
    ode::integrate_times(stepper, rhs, x, times.begin(), times.end(), 1e-3,
                         [&](const state4& s, double) { at.push_back(s); });
    std::size_t j = 0;
    for (double t : ts) {
        while (j + 1 < times.size() && times[j] < t) ++j;
        out.push_back(at[j]);
    }
    return out;
}

// 2x2 Newton with a forward-difference Jacobian
template <class G>
bool newton2(G&& g, Eigen::Vector2d& p, double tol, int maxit = 40) {
    for (int it = 0; it < maxit; ++it) {
        Eigen::Vector2d r = g(p);
        if (!r.allFinite()) return false;
        if (r.norm() < tol) return true;
        Eigen::Matrix2d J;
        for (int j = 0; j < 2; ++j) {
            Eigen::Vector2d q = p;
            double d = 1e-7 * std::max(1.0, std::abs(p[j]));
            q[j] += d;
            J.col(j) = (g(q) - r) / d;
        }
        Eigen::Vector2d dp = J.fullPivLu().solve(-r);
        double lam = 1;
        for (int k = 0; k < 10; ++k) {
            Eigen::Vector2d q = p + lam * dp;
            if (g(q).norm() < r.norm()) break;
            lam *= 0.5;
        }
        p += lam * dp;
    }
    return g(p).norm() < tol;
}

} // namespace detail

// turning point x_B of the real Euclidean periodic orbit of period T (x(T/4) on the X + y = 0 line... shooting
// on the symmetric orbit: starts at rest at B, crosses the origin at tau = T/4)
inline Eigen::Vector2d periodic_instanton_turning_point(double T, double omega) {
    auto m = sphaleron_modes(omega);
    const double Tmin = 2 * std::numbers::pi / m.omega_minus();
    if (!(T > Tmin)) throw MinimizationFailed("periodic instanton needs T > 2 pi / omega_minus");
    detail::EuclideanRhs rhs{omega * omega};
    auto hit = [&](const Eigen::Vector2d& xB, double tq) {
        auto x = detail::evolve(rhs, {xB[0], xB[1], 0.0, 0.0}, tq);
        return Eigen::Vector2d(x[0], x[1]);
    };
    double a = 0.02;
    Eigen::Vector2d p(0.0, Tmin * 1.0005);  // (b, period)
    for (int guard = 0;; ++guard) {
        if (guard > 400) throw MinimizationFailed("periodic instanton: amplitude continuation did not reach T");
        auto g = [&](const Eigen::Vector2d& q) {
            return hit(a * m.e_minus + q[0] * m.e_plus, q[1] / 4);
        };
        if (!detail::newton2(g, p, 1e-13)) throw MinimizationFailed("periodic instanton: shooting failed");
        if (p[1] >= T) break;
        a *= 1.1;
    }
    Eigen::Vector2d xB = a * m.e_minus + p[0] * m.e_plus;
    auto g = [&](const Eigen::Vector2d& q) { return hit(q, T / 4); };
    if (!detail::newton2(g, xB, 1e-13)) throw MinimizationFailed("periodic instanton: fixed-T shooting failed");
    if (xB[0] + xB[1] > 0) xB = -xB;
    return xB;
}

inline Trajectory periodic_instanton_seed(double T, const Contour& c, const ModelParams& params) {
    if (std::abs(c.T - T) > 1e-12 * std::max(1.0, T)) throw DomainError("periodic_instanton_seed: contour T mismatch");
    Eigen::Vector2d xB = periodic_instanton_turning_point(T, params.omega);
    const double w2 = params.omega * params.omega;
    Trajectory z;
    z.X.resize(c.size());
    z.y.resize(c.size());
    // AB: real evolution from rest at B, time-reversal symmetric
    std::vector<double> ts;
    for (int k = c.iB(); k >= 0; --k) ts.push_back(-c.nodes[k].real());
    auto ab = detail::sample(detail::RealRhs{w2}, {xB[0], xB[1], 0, 0}, ts);
    for (int k = c.iB(), j = 0; k >= 0; --k, ++j) {
        z.X[k] = ab[j][0];
        z.y[k] = ab[j][1];
    }
    // BC: Euclidean time tau = T/2 - Im t
    ts.clear();
    for (int k = c.iB(); k <= c.iC(); ++k) ts.push_back(0.5 * T - c.nodes[k].imag());
    auto bc = detail::sample(detail::EuclideanRhs{w2}, {xB[0], xB[1], 0, 0}, ts);
    for (int k = c.iB(), j = 0; k <= c.iC(); ++k, ++j) {
        z.X[k] = bc[j][0];
        z.y[k] = bc[j][1];
    }
    // CD: real evolution from rest at C
    auto xC = bc.back();
    ts.clear();
    for (int k = c.iC(); k < c.size(); ++k) ts.push_back(c.nodes[k].real());
    auto cd = detail::sample(detail::RealRhs{w2}, {xC[0], xC[1], 0, 0}, ts);
    for (int k = c.iC(), j = 0; k < c.size(); ++k, ++j) {
        z.X[k] = cd[j][0];
        z.y[k] = cd[j][1];
    }
    fill_asymptotics(z, c, params.omega);
    return z;
}

// theta = 0, eps = 0 solution from the periodic instanton of period T
inline SaddleSolution periodic_instanton_solution(double T, const ModelParams& params, double h = 0.05,
                                                  const BvpOptions& opt = {}) {
    Contour c = default_contour(T, h);
    Trajectory z = periodic_instanton_seed(T, c, params);
    return newton_solve(z, c, T, 0.0, params, opt);
}

// Replace the CD tail after the closest approach to the saddle by the linearized decaying solution.
// Seeds the sphaleron-bound final conditions from a transmitting/regularized solution.
inline Trajectory sphaleron_bound_seed(const SaddleSolution& sol, double window = 8.0) {
    auto m = sphaleron_modes(sol.omega);
    const auto& c = sol.contour;
    Trajectory z = sol.traj;
    int M = c.size();
    std::vector<cplx> cp(M), cm(M);
    for (int k = 0; k < M; ++k) std::tie(cp[k], cm[k]) = project_to_modes(z.X[k], z.y[k], m);
    int kend = std::min(M - 2, c.iC() + int(window / c.h_cd()));
    int k0 = c.iC() + 1;
    for (int k = c.iC() + 1; k <= kend; ++k)
        if (std::abs(cm[k]) < std::abs(cm[k0])) k0 = k;
    double h = c.h_cd(), wm = m.omega_minus(), wp = m.omega_plus();
    cplx dcp = (cp[k0 + 1] - cp[k0 - 1]) / (2 * h);
    for (int k = k0; k < M; ++k) {
        double s = (c.nodes[k] - c.nodes[k0]).real();
        cplx a = cm[k0] * std::exp(-wm * s);
        cplx b = cp[k0] * std::cos(wp * s) + dcp * std::sin(wp * s) / wp;
        std::tie(z.X[k], z.y[k]) = modes_to_xy(b, a, m);
    }
    return z;
}

inline BvpOptions with_pin_gauge(const SaddleSolution& sol, double pin_time = -8.0) {
    BvpOptions o = sol.options;
    o.gauge = Gauge::Pin;
    o.pin_time = pin_time;
    BvpSystem sys(sol.params(), o);
    o.pin_value = sol.traj.X[sys.pin_index(sol.contour)].real();
    return o;
}

// --- continuation ("walking")

struct WalkTarget {
    SolveMode mode = SolveMode::FixedTTheta;
    double T = 0, theta = 0;  // FixedTTheta
    double E = 0, N = 0;      // FixedEN
    double eps = 0;
};

struct WalkOptions {
    int max_halvings = 8;
    int newton_max_iters = 20;
    double growth = 1.5;
    int fast_iters = 3;
    double max_step = 1.0;  // in units of the nominal step
    bool stop_on_topology_change = false;
    std::function<void(const SaddleSolution&)> on_point;
};

// Walks s from 0 to 1 through n_steps grid points of target(s); solutions recorded at grid points.
// Each step is seeded by secant extrapolation of the last two accepted solutions.
inline BranchPath continue_path(const SaddleSolution& start, const std::function<WalkTarget(double)>& target,
                                int n_steps, const WalkOptions& wo = {}, std::optional<BvpOptions> bvp = {}) {
    if (n_steps < 1) throw DomainError("walk: n_steps must be >= 1");
    BvpOptions opt = bvp ? *bvp : start.options;
    opt.max_iters = wo.newton_max_iters;
    BranchPath path;
    struct Hist {
        double s;
        Trajectory z;
        double T, theta;
    };
    std::vector<Hist> hist{{0.0, start.traj, start.T, start.theta}};
    SaddleSolution cur = start;
    const double ds0 = 1.0 / n_steps;
    double ds = ds0, s = 0.0;
    int next = 1;
    SaddleSolution last_recorded = start;
    while (next <= n_steps) {
        double s1 = std::min(s + ds, double(next) / n_steps);
        bool grid = std::abs(s1 - double(next) / n_steps) < 1e-14;
        WalkTarget tg = target(s1);
        Trajectory zg = cur.traj;
        double Tg = cur.T, thg = cur.theta;
        if (hist.size() >= 2) {
            const auto& a = hist[hist.size() - 2];
            const auto& b = hist.back();
            double r = (s1 - b.s) / (b.s - a.s);
            for (int k = 0; k < zg.size(); ++k) {
                zg.X[k] = b.z.X[k] + r * (b.z.X[k] - a.z.X[k]);
                zg.y[k] = b.z.y[k] + r * (b.z.y[k] - a.z.y[k]);
            }
            Tg = b.T + r * (b.T - a.T);
            thg = b.theta + r * (b.theta - a.theta);
        }
        ModelParams mp{start.omega, tg.eps};
        std::optional<SaddleSolution> next_sol;
        std::string why;
        try {
            if (tg.mode == SolveMode::FixedTTheta) {
                BvpSystem sys(mp, opt);
                next_sol = make_solution(sys, newton_iterate(sys, zg, cur.contour.with_T(tg.T), tg.T, tg.theta));
            } else {
                BvpSystem sys(mp, opt, SolveMode::FixedEN, tg.E, tg.N);
                if (Tg <= 0) Tg = cur.T;
                next_sol = make_solution(sys, newton_iterate(sys, zg, cur.contour.with_T(Tg), Tg, thg));
            }
        } catch (const MaxItersExceeded& e) {
            why = e.what();
        } catch (const SingularJacobian& e) {
            why = e.what();
        } catch (const AsymptoticsNotFree& e) {
            why = e.what();
        }
        if (!next_sol) {
            ds *= 0.5;
            if (ds < ds0 / std::pow(2.0, wo.max_halvings))
                throw StepCollapse("walk: step collapsed at s = " + std::to_string(s) + " (" + why + ")");
            continue;
        }
        cur = std::move(*next_sol);
        if (hist.size() >= 2) hist.erase(hist.begin());
        hist.push_back({s1, cur.traj, cur.T, cur.theta});
        s = s1;
        if (cur.newton_iters <= wo.fast_iters) ds = std::min(ds * wo.growth, wo.max_step * ds0);
        if (grid) {
            path.step_log.push_back({cur.T - last_recorded.T, cur.theta - last_recorded.theta,
                                     cur.eps - last_recorded.eps});
            path.solutions.push_back(cur);
            last_recorded = cur;
            if (wo.on_point) wo.on_point(cur);
            ++next;
            if (wo.stop_on_topology_change && cur.topology != start.topology) {
                path.stopped_on_topology = true;
                break;
            }
        }
    }
    return path;
}

inline BranchPath walk(const SaddleSolution& start, double dT, double dTheta, double dEps, int n_steps,
                       const WalkOptions& wo = {}) {
    auto tgt = [&](double s) {
        WalkTarget t;
        t.mode = SolveMode::FixedTTheta;
        t.T = start.T + s * n_steps * dT;
        t.theta = start.theta + s * n_steps * dTheta;
        t.eps = start.eps + s * n_steps * dEps;
        return t;
    };
    return continue_path(start, tgt, n_steps, wo);
}

inline BranchPath walk_en(const SaddleSolution& start, double dE, double dN, double dEps, int n_steps,
                          const WalkOptions& wo = {}, std::optional<BvpOptions> bvp = {}) {
    auto tgt = [&](double s) {
        WalkTarget t;
        t.mode = SolveMode::FixedEN;
        t.E = start.E + s * n_steps * dE;
        t.N = start.N + s * n_steps * dN;
        t.eps = start.eps + s * n_steps * dEps;
        return t;
    };
    return continue_path(start, tgt, n_steps, wo, bvp);
}

// (T, theta) = eps (tau, vartheta), eps moved linearly from the start value to eps_end
inline BranchPath walk_tau(const SaddleSolution& start, double tau, double vartheta, double eps_end, int n_steps,
                           const WalkOptions& wo = {}) {
    auto tgt = [&](double s) {
        WalkTarget t;
        t.eps = start.eps + s * (eps_end - start.eps);
        t.T = t.eps * tau;
        t.theta = t.eps * vartheta;
        return t;
    };
    return continue_path(start, tgt, n_steps, wo);
}

} // namespace tunnel
