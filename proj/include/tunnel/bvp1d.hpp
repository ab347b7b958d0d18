#pragma once
#include <cmath>
#include <vector>

#include "analytic1d.hpp"
#include "bvp.hpp"

namespace tunnel {

// 1D specialization of the boundary value problem for V = e^{-i eps}/cosh^2 X.
// Unknowns per node (Re X, Im X); with fixed E the contour height T is appended.
struct Solution1D {
    std::vector<cplx> X;
    Contour contour;
    double T = 0, E = 0, F = 0, eps = 0;
    cplx S0 = 0, p0 = 0;
    double residual_norm = 0;
    int newton_iters = 0;
};

class Bvp1D {
public:
    Bvp1D(double eps, BvpOptions opt, bool fixed_E = false, double E_target = 0)
        : eps_(eps), opt_(opt), fixed_E_(fixed_E), E_t_(E_target) {}

    int n_unknowns(const Contour& c) const { return 2 * c.size() + (fixed_E_ ? 1 : 0); }
    int pin_index(const Contour& c) const {
        int k = int(std::lround((opt_.pin_time - c.t_left) / c.h_ab()));
        return std::clamp(k, 2, c.n_ab - 1);
    }

    Eigen::VectorXd residual(const Contour& c, const std::vector<cplx>& X) const {
        const int M = c.size();
        if (static_cast<int>(X.size()) != M) throw DomainError("residual_1d: length mismatch");
        Eigen::VectorXd r(n_unknowns(c));
        std::vector<cplx> f(M);
        for (int k = 0; k < M; ++k) f[k] = force_1d(X[k], eps_);
        r[0] = X[0].imag();
        if (opt_.gauge == Gauge::Velocity) {
            int k = c.iC();
            double h = c.h_cd();
            r[1] = ((X[k + 1] - X[k]) / h - h * (2.0 * f[k] + f[k + 1]) / 6.0).real();
        } else {
            r[1] = X[pin_index(c)].real() - opt_.pin_value;
        }
        for (int k = 1; k + 1 < M; ++k) {
            cplx hp = c.nodes[k + 1] - c.nodes[k], hm = c.nodes[k] - c.nodes[k - 1];
            cplx a, b, cc;
            detail::compact_weights(hp, hm, a, b, cc);
            cplx e = 2.0 / (hp + hm) * ((X[k + 1] - X[k]) / hp - (X[k] - X[k - 1]) / hm) -
                     (a * f[k - 1] + b * f[k] + cc * f[k + 1]);
            e *= std::abs(hp) * std::abs(hm);
            r[2 * k] = e.real();
            r[2 * k + 1] = e.imag();
        }
        r[2 * M - 2] = X[M - 1].imag();
        r[2 * M - 1] = X[M - 2].imag();
        if (fixed_E_) {
            cplx p0 = (X[1] - X[0]) / c.h_ab();
            r[2 * M] = (0.5 * p0 * p0).real() - E_t_;
        }
        return r;
    }

    Eigen::SparseMatrix<double> jacobian(const Contour& c, const std::vector<cplx>& X, double T) const {
        const int M = c.size();
        const int n = n_unknowns(c);
        detail::Triplets tr;
        tr.t.reserve(16 * M);
        std::vector<cplx> df(M);
        for (int k = 0; k < M; ++k) df[k] = dforce_1d(X[k], eps_);
        tr.add(0, 1, 1.0);
        if (opt_.gauge == Gauge::Velocity) {
            int k = c.iC();
            double h = c.h_cd();
            tr.re_row(1, 2 * k, -1.0 / h - h * 2.0 * df[k] / 6.0);
            tr.re_row(1, 2 * (k + 1), 1.0 / h - h * df[k + 1] / 6.0);
        } else {
            tr.add(1, 2 * pin_index(c), 1.0);
        }
        for (int k = 1; k + 1 < M; ++k) {
            cplx hp = c.nodes[k + 1] - c.nodes[k], hm = c.nodes[k] - c.nodes[k - 1];
            cplx a, b, cc;
            detail::compact_weights(hp, hm, a, b, cc);
            cplx s = 2.0 / (hp + hm);
            double sc = std::abs(hp) * std::abs(hm);
            tr.cblock(2 * k, 2 * (k - 1), sc * (s / hm - a * df[k - 1]));
            tr.cblock(2 * k, 2 * k, sc * (-s * (1.0 / hp + 1.0 / hm) - b * df[k]));
            tr.cblock(2 * k, 2 * (k + 1), sc * (s / hp - cc * df[k + 1]));
        }
        tr.add(2 * M - 2, 2 * (M - 1) + 1, 1.0);
        tr.add(2 * M - 1, 2 * (M - 2) + 1, 1.0);
        if (fixed_E_) {
            double h = c.h_ab();
            cplx p0 = (X[1] - X[0]) / h;
            tr.re_row(2 * M, 0, -p0 / h);
            tr.re_row(2 * M, 2, p0 / h);
            double d = 1e-6 * std::max(1.0, T);
            Eigen::VectorXd col;
            if (T - d > 0)
                col = (residual(c.with_T(T + d), X) - residual(c.with_T(T - d), X)) / (2 * d);
            else
                col = (residual(c.with_T(T + d), X) - residual(c, X)) / d;
            for (int i = 0; i < col.size(); ++i)
                if (col[i] != 0.0) tr.add(i, n - 1, col[i]);
        }
        return detail::assemble(n, tr);
    }

    Solution1D solve(std::vector<cplx> X, Contour c) const {
        double T = c.T, nr = 0;
        const int M = c.size();
        for (int it = 0; it <= opt_.max_iters; ++it) {
            Eigen::VectorXd r = residual(c, X);
            nr = r.norm();
            if (!std::isfinite(nr)) throw MaxItersExceeded("newton_1d: residual is not finite");
            if (nr < opt_.tol) return finish(std::move(X), std::move(c), it, nr);
            if (it == opt_.max_iters) break;
            Eigen::VectorXd dx = detail::sparse_solve(jacobian(c, X, T), -r);
            double lam = 1;
            for (int k = 0; k <= opt_.max_backtracks; ++k) {
                std::vector<cplx> Xn = X;
                for (int j = 0; j < M; ++j) Xn[j] += lam * cplx(dx[2 * j], dx[2 * j + 1]);
                double Tn = fixed_E_ ? T + lam * dx[2 * M] : T;
                if (Tn < 0) {
                    lam *= 0.5;
                    continue;
                }
                Contour cn = Tn != T ? c.with_T(Tn) : c;
                double nn = residual(cn, Xn).norm();
                if ((std::isfinite(nn) && nn < nr) || k == opt_.max_backtracks) {
                    X = std::move(Xn);
                    c = std::move(cn);
                    T = Tn;
                    break;
                }
                lam *= 0.5;
            }
        }
        throw MaxItersExceeded("newton_1d: no convergence (residual " + std::to_string(nr) + ")");
    }

private:
    Solution1D finish(std::vector<cplx> X, Contour c, int it, double nr) const {
        Solution1D s;
        s.p0 = (X[1] - X[0]) / c.h_ab();
        s.E = (0.5 * s.p0 * s.p0).real();
        s.S0 = contour_action_1d(X, c, eps_);
        s.T = c.T;
        s.F = 2 * s.S0.imag() - s.E * s.T;
        s.eps = eps_;
        s.X = std::move(X);
        s.contour = std::move(c);
        s.residual_norm = nr;
        s.newton_iters = it;
        return s;
    }

    double eps_;
    BvpOptions opt_;
    bool fixed_E_;
    double E_t_;
};

// exact regularized solution sampled on a contour of matching height
inline std::vector<cplx> exact_seed_1d(double E, double eps, const Contour& c) {
    return exact_solution_1d_path(E, eps, c.nodes, exact_t0(E, eps));
}

// fixed-E solve from the exact seed; the time shift is fixed by pinning Re X to the seed,
// which also works above the barrier where C is no turning point
inline Solution1D solve_from_exact_seed(double E, double eps, const Contour& c, BvpOptions opt = {}) {
    auto X = exact_seed_1d(E, eps, c);
    opt.gauge = Gauge::Pin;
    Bvp1D probe(eps, opt, true, E);
    opt.pin_value = X[probe.pin_index(c)].real();
    return Bvp1D(eps, opt, true, E).solve(std::move(X), c);
}

inline Contour contour_1d(double E, double eps, double h = 0.05, double t_left = -25, double t_right = 25) {
    return default_contour(exact_T_of_E(E, eps), h, t_left, t_right);
}

} // namespace tunnel
