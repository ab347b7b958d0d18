#pragma once
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>

#include "model.hpp"
#include "parallel.hpp"

namespace tunnel {

enum class Outcome { Transmitted, Reflected, Undecided };

inline const char* to_string(Outcome o) {
    switch (o) {
    case Outcome::Transmitted: return "transmitted";
    case Outcome::Reflected: return "reflected";
    case Outcome::Undecided: return "undecided";
    }
    return "?";
}

struct ShotSpec {
    double E = 1, N = 0, phi = 0, x_start = -20;

    void validate(double omega) const {
        if (!(N >= 0)) throw DomainError("ShotSpec: N must be >= 0");
        if (!(E > omega * N)) throw DomainError("ShotSpec: need E > omega N");
        if (!(std::abs(x_start) >= 8 && x_start < 0)) throw DomainError("ShotSpec: x_start must be <= -8");
    }
};

struct ShootOptions {
    double t_max = 400;
    double rtol = 1e-10, atol = 1e-12;
    double x_far = 8;
    double sample_dt = 0.02;  // residence bookkeeping and recorded path
    bool record = false;
    double residence_level = 0.01;
};

struct ShotResult {
    Outcome outcome = Outcome::Undecided;
    double T_int = 0;
    double residence = 0;  // time with U > residence_level
    double energy_drift = 0;
    double t_end = 0;
    double max_X = -1e300;
    std::vector<std::array<double, 5>> path;  // t, X, y, Xdot, ydot
};

namespace detail {
using state5 = std::array<double, 5>;  // X, y, Xd, yd, int U
}

inline ShotResult shoot(const ShotSpec& spec, const ModelParams& params, const ShootOptions& so = {}) {
    namespace ode = boost::numeric::odeint;
    spec.validate(params.omega);
    const double w = params.omega, w2 = w * w;
    auto rhs = [w2](const detail::state5& x, detail::state5& d, double) {
        double s = x[0] + x[1], U = std::exp(-0.5 * s * s);
        d[0] = x[2];
        d[1] = x[3];
        d[2] = s * U;
        d[3] = -w2 * x[1] + s * U;
        d[4] = U;
    };
    auto H = [w2](const detail::state5& x) {
        double s = x[0] + x[1];
        return 0.5 * (x[2] * x[2] + x[3] * x[3]) + 0.5 * w2 * x[1] * x[1] + std::exp(-0.5 * s * s);
    };
    double A = std::sqrt(2 * spec.N / w);
    detail::state5 x{spec.x_start, A * std::cos(spec.phi), std::sqrt(2 * (spec.E - w * spec.N)),
                     -std::sqrt(2 * spec.N * w) * std::sin(spec.phi), 0.0};
    const double H0 = H(x);
    const double thr = so.x_far + std::sqrt(2 * spec.E) / w;
    auto st = ode::make_dense_output(so.atol, so.rtol, ode::runge_kutta_dopri5<detail::state5>());
    st.initialize(x, 0.0, 0.01);
    ShotResult res;
    bool was_inside = std::abs(x[0]) < thr;
    double tsamp = 0;
    detail::state5 xs;
    auto visit = [&](const detail::state5& s, double t) {
        double u = std::exp(-0.5 * (s[0] + s[1]) * (s[0] + s[1]));
        if (u > so.residence_level) res.residence += so.sample_dt;
        res.energy_drift = std::max(res.energy_drift, std::abs(H(s) - H0));
        if (so.record) res.path.push_back({t, s[0], s[1], s[2], s[3]});
    };
    while (st.current_time() < so.t_max) {
        st.do_step(rhs);
        double t1 = st.current_time();
        while (tsamp + so.sample_dt <= t1) {
            tsamp += so.sample_dt;
            st.calc_state(tsamp, xs);
            visit(xs, tsamp);
        }
        const auto& cur = st.current_state();
        res.max_X = std::max(res.max_X, cur[0]);
        res.energy_drift = std::max(res.energy_drift, std::abs(H(cur) - H0));
        bool inside = std::abs(cur[0]) < thr;
        if (inside) was_inside = true;
        if (was_inside && !inside) {
            res.outcome = cur[0] > 0 ? Outcome::Transmitted : Outcome::Reflected;
            break;
        }
    }
    res.t_end = st.current_time();
    res.T_int = st.current_state()[4];
    return res;
}

inline ShotResult shoot(const ShotSpec& spec, const ModelParams& params, double t_max) {
    ShootOptions so;
    so.t_max = t_max;
    return shoot(spec, params, so);
}

struct PhaseProbe {
    bool transmitted = false;
    double phi = 0;     // best phase found
    double T_int = 0;
};

// does some phase transmit at (E, N)? grid of phases, then a Brent refinement of the most lingering one
inline PhaseProbe any_transmitting_phase(double E, double N, const ModelParams& p, int phi_samples, int workers = 1,
                                         double x_start = -20) {
    std::vector<ShotResult> r(phi_samples);
    const double dphi = 2 * std::numbers::pi / phi_samples;
    parallel_for(phi_samples, workers, [&](int i) { r[i] = shoot({E, N, i * dphi, x_start}, p); });
    PhaseProbe out;
    int best = 0;
    for (int i = 0; i < phi_samples; ++i) {
        if (r[i].outcome == Outcome::Transmitted) {
            out.transmitted = true;
            out.phi = i * dphi;
            out.T_int = r[i].T_int;
            return out;
        }
        if (r[i].T_int > r[best].T_int) best = i;
    }
    // golden/Brent search around the most lingering phase
    bool hit = false;
    double hit_phi = 0, hit_T = 0;
    auto f = [&](double phi) {
        auto s = shoot({E, N, phi, x_start}, p);
        if (s.outcome == Outcome::Transmitted && !hit) {
            hit = true;
            hit_phi = phi;
            hit_T = s.T_int;
        }
        return -s.T_int;
    };
    std::uintmax_t it = 40;
    auto m = boost::math::tools::brent_find_minima(f, (best - 1) * dphi, (best + 1) * dphi, 30, it);
    out.phi = m.first;
    out.T_int = -m.second;
    if (hit) {
        out.transmitted = true;
        out.phi = hit_phi;
        out.T_int = hit_T;
    }
    return out;
}

inline double find_E0(double N, const ModelParams& p, int phi_samples = 64, double tol = 1e-4, int workers = 1,
                      double E_lo = 1.0, double E_hi = 0) {
    if (!(N >= 0)) throw DomainError("find_E0: N must be >= 0");
    E_lo = std::max(E_lo, p.omega * N + 1e-6);
    if (any_transmitting_phase(E_lo, N, p, phi_samples, workers).transmitted)
        throw BracketFailure("find_E0: lower energy already transmits");
    if (E_hi <= E_lo) E_hi = E_lo + 1.0;
    for (int k = 0; !any_transmitting_phase(E_hi, N, p, phi_samples, workers).transmitted; ++k) {
        if (k > 6) throw BracketFailure("find_E0: no transmitting energy found");
        E_lo = E_hi;
        E_hi += 1.0;
    }
    while (E_hi - E_lo > tol) {
        double m = 0.5 * (E_lo + E_hi);
        (any_transmitting_phase(m, N, p, phi_samples, workers).transmitted ? E_hi : E_lo) = m;
    }
    return 0.5 * (E_lo + E_hi);
}

// near-critical shot at (E, N): the phase that lingers longest
inline ShotResult excited_sphaleron_probe(double E, double N, const ModelParams& p, int phi_samples = 64,
                                          int workers = 1, double x_start = -20) {
    auto pr = any_transmitting_phase(E, N, p, phi_samples, workers, x_start);
    ShootOptions so;
    so.record = true;
    return shoot({E, N, pr.phi, x_start}, p, so);
}

// closest approach to the boundary along phase: maximize residence
inline ShotResult lingering_shot(double E, double N, const ModelParams& p, int phi_samples = 256, int workers = 1,
                                 double x_start = -20) {
    std::vector<ShotResult> r(phi_samples);
    const double dphi = 2 * std::numbers::pi / phi_samples;
    parallel_for(phi_samples, workers, [&](int i) { r[i] = shoot({E, N, i * dphi, x_start}, p); });
    int best = 0;
    for (int i = 1; i < phi_samples; ++i)
        if (r[i].residence > r[best].residence) best = i;
    auto f = [&](double phi) { return -shoot({E, N, phi, x_start}, p).residence; };
    std::uintmax_t it = 60;
    auto m = boost::math::tools::brent_find_minima(f, (best - 1) * dphi, (best + 1) * dphi, 40, it);
    ShootOptions so;
    so.record = true;
    return shoot({E, N, m.first, x_start}, p, so);
}

struct PhaseScan {
    std::vector<double> phi, T_int;
    std::vector<Outcome> outcome;
    double phi_star = NAN, T_int_min = NAN;
    int local_minima = 0;
};

inline PhaseScan tint_phase_scan(double E, double N, const ModelParams& p, int n_phi = 360, int workers = 1,
                                 double x_start = -20) {
    PhaseScan sc;
    sc.phi.resize(n_phi);
    sc.T_int.resize(n_phi);
    sc.outcome.resize(n_phi);
    const double dphi = 2 * std::numbers::pi / n_phi;
    parallel_for(n_phi, workers, [&](int i) {
        auto r = shoot({E, N, i * dphi, x_start}, p);
        sc.phi[i] = i * dphi;
        sc.T_int[i] = r.T_int;
        sc.outcome[i] = r.outcome;
    });
    auto tr = [&](int i) { return sc.outcome[((i % n_phi) + n_phi) % n_phi] == Outcome::Transmitted; };
    int best = -1;
    for (int i = 0; i < n_phi; ++i) {
        if (!tr(i)) continue;
        if (best < 0 || sc.T_int[i] < sc.T_int[best]) best = i;
        // interior local minimum among transmitting neighbours
        int a = (i + n_phi - 1) % n_phi, b = (i + 1) % n_phi;
        if (tr(a) && tr(b) && sc.T_int[i] < sc.T_int[a] && sc.T_int[i] < sc.T_int[b]) ++sc.local_minima;
    }
    if (best < 0) throw DomainError("tint_phase_scan: no transmitting phase; (E, N) outside the allowed region");
    auto f = [&](double phi) {
        auto r = shoot({E, N, phi, x_start}, p);
        return r.outcome == Outcome::Transmitted ? r.T_int : 1e6;
    };
    std::uintmax_t it = 60;
    auto m = boost::math::tools::brent_find_minima(f, (best - 1) * dphi, (best + 1) * dphi, 40, it);
    sc.phi_star = std::fmod(m.first + 2 * std::numbers::pi, 2 * std::numbers::pi);
    sc.T_int_min = m.second;
    return sc;
}

} // namespace tunnel
