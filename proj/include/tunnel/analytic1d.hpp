#pragma once
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "model.hpp"

namespace tunnel {

// Exact solutions of the 1D model V = e^{-i eps}/cosh^2 X (unit mass, barrier height 1)

enum class Branch1DLabel {
    TunnelingForbidden,
    AllowedTransmission,
    ReflectionAllowed,
    ReflectionForbidden,
    SphaleronFamily
};

inline const char* to_string(Branch1DLabel b) {
    switch (b) {
    case Branch1DLabel::TunnelingForbidden: return "tunneling_forbidden";
    case Branch1DLabel::AllowedTransmission: return "allowed_transmission";
    case Branch1DLabel::ReflectionAllowed: return "reflection_allowed";
    case Branch1DLabel::ReflectionForbidden: return "reflection_forbidden";
    case Branch1DLabel::SphaleronFamily: return "sphaleron_family";
    }
    return "?";
}

struct Branch1D {
    Branch1DLabel label;
    double T_half;
    double E;
};

inline double exact_T_of_E(double E, double eps) {
    if (!(E > 0)) throw DomainError("exact_T_of_E: E must be positive");
    if (eps < 0) throw DomainError("exact_T_of_E: eps must be >= 0");
    cplx z = std::exp(-I * eps) - E;
    double a = std::arg(z);
    // at eps=0, E>1 the arg sits exactly on the cut; take the limit from eps -> 0+
    if (eps == 0.0 && E > 1.0) a = -std::numbers::pi;
    return 2.0 / std::sqrt(2.0 * E) * (std::numbers::pi + a);
}

// t0 such that the regularized transmitting solution is real at both ends of ABCD
inline cplx exact_t0(double E, double eps, double re_t0 = 0.0) {
    if (!(E > 0)) throw DomainError("exact_t0: E must be positive");
    double k = std::sqrt(2.0 * E);
    double argA = 0.5 * std::arg(std::exp(-I * eps) - E);
    if (eps == 0.0 && E > 1.0) argA = -0.5 * std::numbers::pi;
    return {re_t0, (argA + std::numbers::pi) / k};
}

// pins Re t*_- at -c
inline double re_t0_pinned(double E, double c) {
    return std::log((1 + std::sqrt(E)) / std::sqrt(std::abs(1 - E))) / std::sqrt(2 * E) - c;
}

inline std::pair<cplx, cplx> branch_points(double E, cplx t0) {
    if (!(E > 0 && E < 1)) throw DomainError("branch_points: need 0 < E < 1");
    double k = std::sqrt(2.0 * E);
    double L = std::log((1 + std::sqrt(E)) / std::sqrt(1 - E));
    cplx ip = I * (std::numbers::pi / 2);
    return {t0 + (L + ip) / k, t0 + (-L + ip) / k};
}

inline double wkb_exponent(double E) {
    if (!(E > 0)) throw DomainError("wkb_exponent: E must be positive");
    if (E >= 1) return 0.0;
    double a = std::acosh(1.0 / std::sqrt(E));
    // X = a(1-s^2) removes the sqrt singularity at the turning point
    auto f = [&](double s) {
        double X = a * (1 - s * s);
        double c = std::cosh(X);
        double d = 1.0 / (c * c) - E;
        return d > 0 ? std::sqrt(2 * d) * 2 * a * s : 0.0;
    };
    double err = 0;
    double half = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 15, 1e-14, &err);
    return 4.0 * half;
}

inline cplx exact_solution_1d(double E, double eps, cplx t, cplx t0) {
    if (!(E > 0)) throw DomainError("exact_solution_1d: E must be positive");
    double k = std::sqrt(2.0 * E);
    cplx A = std::sqrt((std::exp(-I * eps) - E) / E);
    cplx w = -A * std::cosh(k * (t - t0));
    cplx d = 1.0 + w * w;
    if (std::abs(d) < 1e-300) throw DomainError("exact_solution_1d: evaluated at a branch point");
    return std::asinh(w);
}

// continuation of the arcsinh along the ordered path ts
inline std::vector<cplx> exact_solution_1d_path(double E, double eps, const std::vector<cplx>& ts, cplx t0) {
    std::vector<cplx> out;
    out.reserve(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        cplx x = exact_solution_1d(E, eps, ts[i], t0);
        if (i == 0) {
            out.push_back(x);
            continue;
        }
        cplx prev = out.back();
        // other sheets: (-1)^n asinh + i pi n
        cplx best = x;
        double bd = 1e300;
        for (int n = -4; n <= 4; ++n) {
            cplx c = (n % 2 == 0 ? x : -x) + I * (std::numbers::pi * n);
            double d = std::abs(c - prev);
            if (d < bd) { bd = d; best = c; }
        }
        out.push_back(best);
    }
    return out;
}

// eps = 0 family at E = 1: sinh X = -exp(-sqrt2 (t - iT/2 + c))
inline cplx sphaleron_family_1d(double T, double c, cplx t) {
    return std::asinh(-std::exp(-std::sqrt(2.0) * (t - I * (T / 2) + c)));
}

// polylines of the five branches of T(E) on an E grid
inline std::vector<Branch1D> branch_diagram(double E_min, double E_max, int n) {
    if (!(E_min > 0) || !(E_max > E_min) || n < 2) throw DomainError("branch_diagram: bad grid");
    std::vector<Branch1D> out;
    for (int i = 0; i < n; ++i) {
        double E = E_min + (E_max - E_min) * i / (n - 1);
        double th = std::numbers::pi / std::sqrt(2 * E);
        if (E < 1) {
            out.push_back({Branch1DLabel::TunnelingForbidden, th, E});
            out.push_back({Branch1DLabel::ReflectionForbidden, 0.0, E});
        } else if (E > 1) {
            out.push_back({Branch1DLabel::AllowedTransmission, 0.0, E});
            out.push_back({Branch1DLabel::ReflectionAllowed, th, E});
        }
    }
    double top = std::numbers::pi / std::sqrt(2.0);
    for (int i = 0; i < n; ++i)
        out.push_back({Branch1DLabel::SphaleronFamily, top * i / (n - 1), 1.0});
    return out;
}

} // namespace tunnel
