#pragma once
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "model.hpp"
#include "parallel.hpp"

namespace tunnel {

// Gauss-Hermite nodes with scaled weights w_k e^{u_k^2} (Golub-Welsch)
struct GaussHermite {
    Eigen::VectorXd u, w_scaled;
};

// orthonormal Hermite functions h_n(u), n < nmax, rows = n
inline Eigen::MatrixXd hermite_functions(int nmax, const Eigen::VectorXd& u) {
    Eigen::MatrixXd H(nmax, u.size());
    for (int k = 0; k < u.size(); ++k) {
        H(0, k) = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * u[k] * u[k]);
        if (nmax > 1) H(1, k) = std::sqrt(2.0) * u[k] * H(0, k);
        for (int n = 2; n < nmax; ++n)
            H(n, k) = std::sqrt(2.0 / n) * u[k] * H(n - 1, k) - std::sqrt((n - 1.0) / n) * H(n - 2, k);
    }
    return H;
}

inline const GaussHermite& gauss_hermite(int K) {
    static std::map<int, GaussHermite> cache;
    static std::mutex m;
    std::lock_guard<std::mutex> g(m);
    auto it = cache.find(K);
    if (it != cache.end()) return it->second;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(K, K);
    for (int n = 1; n < K; ++n) J(n, n - 1) = J(n - 1, n) = std::sqrt(n / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
    GaussHermite gh;
    gh.u = es.eigenvalues();
    // w e^{u^2} = 1 / sum_n h_n(u)^2, avoids the underflowing weights
    Eigen::MatrixXd H = hermite_functions(K, gh.u);
    gh.w_scaled = H.colwise().squaredNorm().cwiseInverse().transpose();
    return cache.emplace(K, std::move(gh)).first->second;
}

struct ChannelBasis {
    int n_channels = 32;
    double omega = 0.5;
    double lambda = 0.1;
    int quad_nodes = 200;
    // optional override of the coupling (thresholds then come from `thresholds`)
    std::function<Eigen::MatrixXd(double)> custom;
    std::vector<double> thresholds;

    double threshold(int n) const {
        return custom ? thresholds.at(n) : omega * (n + 0.5);
    }
};

// V_nm(X) = <n| (1/lambda) exp(-lambda (X+y)^2/2) |m>
inline Eigen::MatrixXd coupling_matrix(double X, const ChannelBasis& b) {
    if (b.custom) return b.custom(X);
    const auto& gh = gauss_hermite(b.quad_nodes);
    Eigen::MatrixXd H = hermite_functions(b.n_channels, gh.u);
    const double sw = std::sqrt(b.omega);
    Eigen::VectorXd g(gh.u.size());
    for (int k = 0; k < gh.u.size(); ++k) {
        double s = X + gh.u[k] / sw;
        g[k] = gh.w_scaled[k] * std::exp(-0.5 * b.lambda * s * s) / b.lambda;
    }
    return H * g.asDiagonal() * H.transpose();
}

// largest change of V over the grid of X when the quadrature order grows by 40
inline double coupling_quadrature_error(const ChannelBasis& b, const std::vector<double>& xs) {
    ChannelBasis b2 = b;
    b2.quad_nodes = b.quad_nodes + 40;
    double err = 0;
    for (double x : xs) err = std::max(err, (coupling_matrix(x, b) - coupling_matrix(x, b2)).cwiseAbs().maxCoeff());
    return err;
}

struct TransmissionOptions {
    double h = 0.05;
    double L = 0;  // 0: 12/sqrt(lambda) + sqrt(2 n_channels / omega)
    double unitarity_tol = 1e-8;
};

struct TransmissionResult {
    double T_total = 0, R_total = 0;
    std::vector<double> T_channel, R_channel;
    double unitarity_error = 0;
    int n_open = 0, grid_points = 0;
};

// Coupled-channel chi'' = Q(X) chi with Q = 2(V + eps_n - E), Numerov discretization solved by
// block-tridiagonal elimination (matrix-ratio recursion). Boundary rows are the exact discrete plane waves.
inline TransmissionResult transmission(double E, int n_in, const ChannelBasis& b, const TransmissionOptions& to = {}) {
    using Mat = Eigen::MatrixXcd;
    using Vec = Eigen::VectorXcd;
    const int nc = b.n_channels;
    if (n_in < 0 || n_in >= nc) throw DomainError("transmission: incoming channel outside the basis");
    std::vector<double> q(nc);
    int n_open = 0;
    for (int n = 0; n < nc; ++n) {
        q[n] = 2 * (b.threshold(n) - E);
        if (q[n] < 0) ++n_open;
    }
    if (n_open == 0) throw ClosedChannelOnly("transmission: no open channels");
    if (q[n_in] >= 0) throw DomainError("transmission: incoming channel is closed");
    double kmax = std::sqrt(-*std::min_element(q.begin(), q.end()));
    double h = std::min(to.h, 2 * std::numbers::pi / (12 * kmax));
    double L = to.L > 0 ? to.L : 12 / std::sqrt(b.lambda) + std::sqrt(2.0 * nc / b.omega);
    const int M = int(std::ceil(2 * L / h)) + 1;
    std::vector<double> xs(M);
    for (int j = 0; j < M; ++j) xs[j] = -L + j * h;

    // discrete dispersion: cos(k h) = (1 + 5 h^2 q / 12) / (1 - h^2 q / 12)
    std::vector<cplx> rho(nc), rhoL(nc);
    std::vector<double> kh(nc, 0);
    for (int n = 0; n < nc; ++n) {
        double cv = (1 + 5 * h * h * q[n] / 12) / (1 - h * h * q[n] / 12);
        if (q[n] < 0) {
            kh[n] = std::acos(std::clamp(cv, -1.0, 1.0));
            rho[n] = std::exp(I * kh[n]);
            rhoL[n] = std::conj(rho[n]);
        } else {
            rho[n] = std::exp(-std::acosh(std::max(cv, 1.0)));
            rhoL[n] = 1.0 / rho[n];
        }
    }
    const Mat Id = Mat::Identity(nc, nc);
    auto Qm = [&](int j) {
        Eigen::MatrixXd V = coupling_matrix(xs[j], b);
        Mat Q = 2.0 * V.cast<cplx>();
        for (int n = 0; n < nc; ++n) Q(n, n) += q[n];
        return Q;
    };
    std::vector<Mat> A(M);
    Mat Bcur;
    // forward elimination; row 0: chi_1 - diag(rhoL) chi_0 = incident term
    Vec b0 = Vec::Zero(nc);
    b0[n_in] = std::exp(I * kh[n_in] * xs[0] / h) * (std::exp(I * kh[n_in]) - std::exp(-I * kh[n_in]));
    std::vector<Mat> G(M - 1);
    std::vector<Vec> g(M - 1);
    Mat D = Mat::Zero(nc, nc);
    for (int n = 0; n < nc; ++n) D(n, n) = -rhoL[n];
    G[0] = D.inverse();  // times U = I
    g[0] = G[0] * b0;
    A[0] = Id - h * h * Qm(0) / 12.0;
    A[1] = Id - h * h * Qm(1) / 12.0;
    for (int j = 1; j < M - 1; ++j) {
        Mat Q1 = (Id - A[j]) * (12.0 / (h * h));
        Mat Bj = -2.0 * (Id + 5 * h * h * Q1 / 12.0);
        A[j + 1] = Id - h * h * Qm(j + 1) / 12.0;
        Mat Dj = Bj - A[j - 1] * G[j - 1];
        Eigen::PartialPivLU<Mat> lu(Dj);
        G[j] = lu.solve(A[j + 1]);
        g[j] = lu.solve(-(A[j - 1] * g[j - 1]));
    }
    // last row: chi_{M-1} - diag(rho) chi_{M-2} = 0
    Mat Lm = Mat::Zero(nc, nc);
    for (int n = 0; n < nc; ++n) Lm(n, n) = -rho[n];
    std::vector<Vec> chi(M);
    chi[M - 1] = (Id - Lm * G[M - 2]).partialPivLu().solve(-(Lm * g[M - 2]));
    for (int j = M - 2; j >= 0; --j) chi[j] = g[j] - G[j] * chi[j + 1];

    auto flux = [&](int j) {
        Vec p0 = A[j] * chi[j], p1 = A[j + 1] * chi[j + 1];
        Eigen::VectorXd f(nc);
        for (int n = 0; n < nc; ++n) f[n] = std::imag(std::conj(p0[n]) * p1[n]);
        return f;
    };
    double a = 1 - h * h * q[n_in] / 12;
    double Jin = a * a * std::sin(kh[n_in]);
    Eigen::VectorXd Jt = flux(M - 2), Jl = flux(0);
    TransmissionResult r;
    r.n_open = n_open;
    r.grid_points = M;
    r.T_channel.assign(nc, 0);
    r.R_channel.assign(nc, 0);
    for (int n = 0; n < nc; ++n) {
        if (q[n] >= 0) continue;
        r.T_channel[n] = Jt[n] / Jin;
        // left flux = incident - reflected; reflected part is outgoing to the left
        r.R_channel[n] = (n == n_in ? Jin - Jl[n] : -Jl[n]) / Jin;
        r.T_total += r.T_channel[n];
        r.R_total += r.R_channel[n];
    }
    r.unitarity_error = std::abs(r.T_total + r.R_total - 1);
    if (r.unitarity_error > to.unitarity_tol)
        throw UnitarityViolation("transmission: |T + R - 1| = " + std::to_string(r.unitarity_error));
    return r;
}

struct FExactOptions {
    int extra_channels = 16;
    int degree = 1;  // polynomial degree of the lambda -> 0 extrapolation
    TransmissionOptions transmission;
    int workers = 1;
};

struct FExactResult {
    std::vector<double> lambdas, F_lambda;
    double F0 = NAN;
    double F0_linear = NAN, F0_quadratic = NAN;
};

// F_lambda = -lambda ln T at E = E_resc / lambda, n = N_resc / lambda - 1/2 (cubic interpolation in n)
inline double f_lambda(double E_resc, double N_resc, double lambda, double omega, const FExactOptions& fo = {}) {
    const double E = E_resc / lambda, n = N_resc / lambda - 0.5;
    if (n < -0.5) throw DomainError("f_exact: N_resc must be >= 0");
    int n_open = int(std::floor(E / omega - 0.5)) + 1;
    ChannelBasis b;
    b.omega = omega;
    b.lambda = lambda;
    b.n_channels = n_open + fo.extra_channels;
    int n0 = std::max(0, int(std::floor(n)) - 1);
    std::vector<int> ns;
    for (int k = n0; k < n0 + 4; ++k)
        if (k < n_open) ns.push_back(k);
    if (ns.empty()) throw DomainError("f_exact: no open incoming channel");
    std::vector<double> Fs(ns.size());
    parallel_for(int(ns.size()), fo.workers, [&](int i) {
        double T = transmission(E, ns[i], b, fo.transmission).T_total;
        if (!(T > 0)) throw Error("f_exact: transmission underflow; raise the lambda floor");
        Fs[i] = -lambda * std::log(T);
    });
    double out = 0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        double l = 1;
        for (std::size_t j = 0; j < ns.size(); ++j)
            if (j != i) l *= (n - ns[j]) / double(ns[i] - ns[j]);
        out += l * Fs[i];
    }
    return out;
}

inline FExactResult f_exact(double E_resc, double N_resc, const std::vector<double>& lambdas, double omega = 0.5,
                            const FExactOptions& fo = {}) {
    if (lambdas.size() < 2) throw DomainError("f_exact: need at least two lambdas");
    FExactResult r;
    r.lambdas = lambdas;
    for (double l : lambdas) r.F_lambda.push_back(f_lambda(E_resc, N_resc, l, omega, fo));
    auto fit = [&](int deg) {
        Eigen::MatrixXd A(lambdas.size(), deg + 1);
        Eigen::VectorXd y(lambdas.size());
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            for (int j = 0; j <= deg; ++j) A(i, j) = std::pow(lambdas[i], j);
            y[i] = r.F_lambda[i];
        }
        return A.colPivHouseholderQr().solve(y)[0];
    };
    r.F0_linear = fit(1);
    if (lambdas.size() >= 3) r.F0_quadratic = fit(2);
    r.F0 = fo.degree >= 2 && lambdas.size() >= 3 ? r.F0_quadratic : r.F0_linear;
    return r;
}

} // namespace tunnel
