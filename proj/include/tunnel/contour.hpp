#pragma once
#include <cmath>
#include <complex>
#include <vector>

#include "model.hpp"

namespace tunnel {

// A = t_left + iT/2 -> B = iT/2 -> C = 0 -> D = t_right; corners shared
struct Contour {
    double T = 0;
    double t_left = -25, t_right = 25;
    int n_ab = 0, n_bc = 0, n_cd = 0;
    std::vector<cplx> nodes;
    std::vector<cplx> weights;  // trapezoid

    int size() const { return static_cast<int>(nodes.size()); }
    int iB() const { return n_ab; }
    int iC() const { return n_ab + n_bc; }
    double h_ab() const { return -t_left / n_ab; }
    double h_cd() const { return t_right / n_cd; }
    cplx h_bc() const { return n_bc > 0 ? cplx(0, -0.5 * T / n_bc) : cplx(0); }
    Contour with_T(double newT) const;
};

inline Contour build_contour(double T, double t_left, double t_right, int n_ab, int n_bc, int n_cd) {
    if (!(T >= 0)) throw DomainError("build_contour: T must be >= 0");
    if (!(t_left < 0 && t_right > 0)) throw DomainError("build_contour: need t_left < 0 < t_right");
    if (n_ab < 1 || n_cd < 1 || n_bc < 0) throw DomainError("build_contour: bad node counts");
    if (T > 0 && n_bc < 1) throw DomainError("build_contour: n_bc must be positive when T > 0");
    Contour c;
    c.T = T;
    c.t_left = t_left;
    c.t_right = t_right;
    c.n_ab = n_ab;
    c.n_bc = T > 0 ? n_bc : 0;
    c.n_cd = n_cd;
    c.nodes.reserve(n_ab + c.n_bc + n_cd + 1);
    for (int k = 0; k <= n_ab; ++k)
        c.nodes.emplace_back(t_left * (1.0 - double(k) / n_ab), 0.5 * T);
    for (int k = 1; k <= c.n_bc; ++k)
        c.nodes.emplace_back(0.0, 0.5 * T * (1.0 - double(k) / c.n_bc));
    for (int k = 1; k <= n_cd; ++k)
        c.nodes.emplace_back(t_right * double(k) / n_cd, 0.0);
    c.weights.assign(c.nodes.size(), cplx(0));
    for (std::size_t k = 0; k + 1 < c.nodes.size(); ++k) {
        cplx h = c.nodes[k + 1] - c.nodes[k];
        c.weights[k] += 0.5 * h;
        c.weights[k + 1] += 0.5 * h;
    }
    return c;
}

inline Contour Contour::with_T(double newT) const {
    int nbc = n_bc;
    if (newT > 0 && nbc == 0) nbc = 16;
    return build_contour(newT, t_left, t_right, n_ab, nbc, n_cd);
}

// node counts from a target step h
inline Contour default_contour(double T, double h = 0.05, double t_left = -25, double t_right = 25) {
    int n_ab = std::max(64, int(std::lround(-t_left / h)));
    int n_cd = std::max(64, int(std::lround(t_right / h)));
    int n_bc = T > 0 ? std::max(16, int(std::ceil(0.5 * T / h))) : 0;
    return build_contour(T, t_left, t_right, n_ab, n_bc, n_cd);
}

namespace detail {
// Simpson on a uniform run, 3/8 rule on the last three intervals if the count is odd
inline cplx simpson_run(const cplx* f, int n, cplx h) {
    if (n <= 0) return 0;
    if (n == 1) return 0.5 * h * (f[0] + f[1]);
    if (n % 2 == 1) {
        cplx tail = 3.0 * h / 8.0 * (f[n - 3] + 3.0 * f[n - 2] + 3.0 * f[n - 1] + f[n]);
        return simpson_run(f, n - 3, h) + tail;
    }
    cplx s = f[0] + f[n];
    for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f[k];
    return h / 3.0 * s;
}
} // namespace detail

enum class Quadrature { Simpson, Trapezoid };

inline cplx contour_integral(const Contour& c, const std::vector<cplx>& f, Quadrature q = Quadrature::Simpson) {
    if (static_cast<int>(f.size()) != c.size()) throw DomainError("contour_integral: length mismatch");
    if (q == Quadrature::Trapezoid) {
        cplx s = 0;
        for (int k = 0; k < c.size(); ++k) s += c.weights[k] * f[k];
        return s;
    }
    cplx s = 0;
    int a = 0;
    for (int b : {c.iB(), c.iC(), c.size() - 1}) {
        if (b > a) s += detail::simpson_run(&f[a], b - a, (c.nodes[b] - c.nodes[a]) / double(b - a));
        a = std::max(a, b);
    }
    return s;
}

// 3-point second derivative on non-uniform complex steps; end nodes copy their neighbour
inline std::vector<cplx> second_derivative(const Contour& c, const std::vector<cplx>& f) {
    int M = c.size();
    std::vector<cplx> d(M, 0.0);
    for (int k = 1; k + 1 < M; ++k) {
        cplx hp = c.nodes[k + 1] - c.nodes[k], hm = c.nodes[k] - c.nodes[k - 1];
        d[k] = 2.0 / (hp + hm) * ((f[k + 1] - f[k]) / hp - (f[k] - f[k - 1]) / hm);
    }
    if (M >= 3) {
        d[0] = d[1];
        d[M - 1] = d[M - 2];
    }
    return d;
}

struct Trajectory {
    std::vector<cplx> X, y;
    cplx u = 0, v = 0, p0 = 0, X0 = 0;

    int size() const { return static_cast<int>(X.size()); }
};

enum class ActionForm {
    Force,   // X'' and y'' replaced through the equations of motion
    Stencil  // X'' and y'' by finite differences on the nodes
};

inline cplx contour_action(const Trajectory& tr, const Contour& c, const ModelParams& p,
                           ActionForm form = ActionForm::Force) {
    int M = c.size();
    if (tr.size() != M || static_cast<int>(tr.y.size()) != M)
        throw DomainError("contour_action: trajectory does not match contour");
    std::vector<cplx> g(M);
    if (form == ActionForm::Force) {
        cplx ph = p.phase();
        for (int k = 0; k < M; ++k) {
            cplx s = tr.X[k] + tr.y[k];
            g[k] = -ph * barrier(tr.X[k], tr.y[k]) * (1.0 + 0.5 * s * s);
        }
    } else {
        auto Xdd = second_derivative(c, tr.X);
        auto ydd = second_derivative(c, tr.y);
        double w2 = p.omega * p.omega;
        for (int k = 0; k < M; ++k)
            g[k] = -0.5 * tr.X[k] * Xdd[k] - 0.5 * tr.y[k] * ydd[k] - 0.5 * w2 * tr.y[k] * tr.y[k] -
                   p.phase() * barrier(tr.X[k], tr.y[k]);
    }
    return contour_integral(c, g);
}

// 1D: S0 = int (-X X''/2 - V)
inline cplx contour_action_1d(const std::vector<cplx>& X, const Contour& c, double eps,
                              ActionForm form = ActionForm::Force) {
    int M = c.size();
    if (static_cast<int>(X.size()) != M) throw DomainError("contour_action_1d: length mismatch");
    std::vector<cplx> g(M);
    std::vector<cplx> Xdd;
    if (form == ActionForm::Stencil) Xdd = second_derivative(c, X);
    for (int k = 0; k < M; ++k) {
        cplx acc = form == ActionForm::Force ? force_1d(X[k], eps) : Xdd[k];
        g[k] = -0.5 * X[k] * acc - potential_1d(X[k], eps);
    }
    return contour_integral(c, g);
}

} // namespace tunnel
