#pragma once
#include <algorithm>
#include <cmath>
#include <vector>

#include "contour.hpp"

namespace tunnel {

// discrete phase per AB step of a free oscillator under the compact scheme
inline double discrete_phase(double omega, double h) {
    double w2h2 = omega * omega * h * h;
    return std::acos((1 - 5 * w2h2 / 12) / (1 + w2h2 / 12));
}

// decay factor per step of the unstable mode exp(-k s), compact scheme
inline double discrete_decay(double omega_minus_sq, double h) {
    double a = omega_minus_sq * h * h;
    return std::exp(-std::acosh((1 + 5 * a / 12) / (1 - a / 12)));
}

struct Asymptotics {
    cplx u = 0, v = 0, p0 = 0, X0 = 0;
    // du/dy_j and dv/dy_j for j = 0, 1 (complex-analytic)
    cplx du[2] = {0, 0}, dv[2] = {0, 0};
};

// y = (u e^{-iw s} + v e^{iw s})/sqrt(2w), s = t' - t_left, from the first two AB nodes
inline Asymptotics extract_asymptotics(const std::vector<cplx>& X, const std::vector<cplx>& y,
                                       const Contour& c, double omega) {
    Asymptotics a;
    double h = c.h_ab();
    double phi = discrete_phase(omega, h);
    double r = std::sqrt(2 * omega);
    cplx e = std::exp(I * phi);
    cplx den = -2.0 * I * std::sin(phi);
    cplx Y0 = r * y[0], Y1 = r * y[1];
    a.u = (Y1 - Y0 * e) / den;
    a.v = Y0 - a.u;
    a.du[0] = r * (-e) / den;
    a.du[1] = r / den;
    a.dv[0] = r - a.du[0];
    a.dv[1] = -a.du[1];
    a.p0 = (X[1] - X[0]) / h;
    a.X0 = X[0];
    return a;
}

inline void fill_asymptotics(Trajectory& tr, const Contour& c, double omega) {
    auto a = extract_asymptotics(tr.X, tr.y, c, omega);
    tr.u = a.u;
    tr.v = a.v;
    tr.p0 = a.p0;
    tr.X0 = a.X0;
}

// relative defect of the free-motion recurrences over the first 20% of AB
inline double free_motion_defect(const Trajectory& tr, const Contour& c, double omega) {
    int n = std::max(3, c.n_ab / 5);
    double cphi = std::cos(discrete_phase(omega, c.h_ab()));
    double scaleX = 0, scaleY = 0, dX = 0, dY = 0;
    for (int k = 1; k < n; ++k) {
        scaleX = std::max(scaleX, std::abs(tr.X[k + 1] - tr.X[k]));
        scaleY = std::max(scaleY, std::abs(tr.y[k]));
        dX = std::max(dX, std::abs(tr.X[k + 1] - 2.0 * tr.X[k] + tr.X[k - 1]));
        dY = std::max(dY, std::abs(tr.y[k + 1] - 2.0 * cphi * tr.y[k] + tr.y[k - 1]));
    }
    double rX = scaleX > 0 ? dX / scaleX : dX;
    double rY = scaleY > 1e-12 ? dY / scaleY : dY;
    return std::max(rX, rY);
}

struct Observables {
    double E = 0, N = 0, F = 0, T_int = 0;
    cplx S0 = 0;
    cplx E_complex = 0, N_complex = 0;

    double oscillator_energy(double omega) const { return omega * N; }
    // the alternative normalization N' = w u v
    double N_omega_uv(double omega) const { return omega * N; }
};

inline Observables compute_observables(const Trajectory& tr, const Contour& c, double T, double theta,
                                       const ModelParams& p, double free_tol = 1e-6) {
    if (tr.size() != c.size()) throw DomainError("compute_observables: trajectory does not match contour");
    double defect = free_motion_defect(tr, c, p.omega);
    if (defect > free_tol)
        throw AsymptoticsNotFree("asymptotic region not free (defect " + std::to_string(defect) +
                                 "); enlarge |t_left|");
    auto a = extract_asymptotics(tr.X, tr.y, c, p.omega);
    Observables o;
    o.N_complex = a.u * a.v;
    o.E_complex = 0.5 * a.p0 * a.p0 + p.omega * o.N_complex;
    o.E = o.E_complex.real();
    o.N = o.N_complex.real();
    o.S0 = contour_action(tr, c, p);
    o.F = 2 * o.S0.imag() - o.E * T - o.N * theta;
    std::vector<cplx> U(c.size());
    for (int k = 0; k < c.size(); ++k) U[k] = barrier(tr.X[k], tr.y[k]);
    o.T_int = contour_integral(c, U).real();
    return o;
}

// H along the contour with 5-point velocities inside each segment; NaN where not available
inline std::vector<cplx> energy_profile(const Trajectory& tr, const Contour& c, const ModelParams& p) {
    int M = c.size();
    std::vector<cplx> H(M, cplx(NAN, NAN));
    int a = 0;
    for (int b : {c.iB(), c.iC(), M - 1}) {
        if (b - a >= 4) {
            cplx h = (c.nodes[b] - c.nodes[a]) / double(b - a);
            for (int k = a + 2; k <= b - 2; ++k) {
                auto d = [&](const std::vector<cplx>& f) {
                    return (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h);
                };
                H[k] = energy_2d(tr.X[k], tr.y[k], d(tr.X), d(tr.y), p);
            }
        }
        a = std::max(a, b);
    }
    return H;
}

} // namespace tunnel
