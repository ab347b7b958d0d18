#pragma once
#include <cmath>
#include <complex>
#include <utility>

#include <Eigen/Dense>

#include "errors.hpp"

namespace tunnel {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};

struct ModelParams {
    double omega = 0.5;
    double epsilon = 0.0;

    void validate() const {
        if (!(omega > 0.0)) throw DomainError("omega must be positive");
        if (!(epsilon >= 0.0) || !(epsilon < 0.1))
            throw DomainError("epsilon must lie in [0, 0.1)");
    }
    cplx phase() const { return std::exp(-I * epsilon); }
};

// interaction U = exp(-(X+y)^2/2), without the e^{-i eps} factor
inline cplx barrier(cplx X, cplx y) {
    cplx s = X + y;
    return std::exp(-0.5 * s * s);
}

inline cplx potential_2d(cplx X, cplx y, const ModelParams& p) {
    return 0.5 * p.omega * p.omega * y * y + p.phase() * barrier(X, y);
}

inline std::pair<cplx, cplx> force_2d(cplx X, cplx y, const ModelParams& p) {
    cplx s = X + y;
    cplx g = s * p.phase() * std::exp(-0.5 * s * s);
    return {g, -p.omega * p.omega * y + g};
}

// d(force)/d(X,y); symmetric
inline Eigen::Matrix2cd force_jacobian_2d(cplx X, cplx y, const ModelParams& p) {
    cplx s = X + y;
    cplx q = p.phase() * (1.0 - s * s) * std::exp(-0.5 * s * s);
    Eigen::Matrix2cd J;
    J << q, q, q, -p.omega * p.omega + q;
    return J;
}

inline cplx energy_2d(cplx X, cplx y, cplx Xd, cplx yd, const ModelParams& p) {
    return 0.5 * (Xd * Xd + yd * yd) + potential_2d(X, y, p);
}

// --- 1D sech^2 model: V = e^{-i eps}/cosh^2 X
inline cplx potential_1d(cplx X, double eps) {
    cplx c = std::cosh(X);
    return std::exp(-I * eps) / (c * c);
}
inline cplx force_1d(cplx X, double eps) {
    cplx c = std::cosh(X);
    return std::exp(-I * eps) * 2.0 * std::sinh(X) / (c * c * c);
}
inline cplx dforce_1d(cplx X, double eps) {
    cplx c = std::cosh(X), s = std::sinh(X);
    cplx c2 = c * c;
    return std::exp(-I * eps) * (2.0 * c2 - 6.0 * s * s) / (c2 * c2);
}

struct SphaleronModes {
    double alpha = 0;          // angle of the c_+ axis from the X axis
    double omega_plus_sq = 0;
    double omega_minus_sq = 0;
    Eigen::Vector2d e_plus, e_minus;  // unit vectors in (X, y)

    double omega_plus() const { return std::sqrt(omega_plus_sq); }
    double omega_minus() const { return std::sqrt(omega_minus_sq); }
};

// Hessian of V at the saddle is [[-1,-1],[-1,w^2-1]]
inline SphaleronModes sphaleron_modes(double omega) {
    if (!(omega > 0.0)) throw DomainError("omega must be positive");
    Eigen::Matrix2d H;
    H << -1.0, -1.0, -1.0, omega * omega - 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(H);
    SphaleronModes m;
    m.omega_minus_sq = -es.eigenvalues()(0);
    m.omega_plus_sq = es.eigenvalues()(1);
    m.e_minus = es.eigenvectors().col(0);
    m.e_plus = es.eigenvectors().col(1);
    // fix orientation: e_minus points toward +X, e_plus has positive y
    if (m.e_minus(0) < 0) m.e_minus = -m.e_minus;
    if (m.e_plus(1) < 0) m.e_plus = -m.e_plus;
    m.alpha = std::atan2(m.e_plus(1), m.e_plus(0));
    return m;
}

inline std::pair<cplx, cplx> project_to_modes(cplx X, cplx y, const SphaleronModes& m) {
    return {m.e_plus(0) * X + m.e_plus(1) * y, m.e_minus(0) * X + m.e_minus(1) * y};
}

inline std::pair<cplx, cplx> modes_to_xy(cplx cp, cplx cm, const SphaleronModes& m) {
    return {m.e_plus(0) * cp + m.e_minus(0) * cm, m.e_plus(1) * cp + m.e_minus(1) * cm};
}

} // namespace tunnel
