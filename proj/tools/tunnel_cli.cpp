#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "runner.hpp"
#include "tunnel/bvp1d.hpp"
#include "tunnel/qoracle.hpp"

using namespace tunnel;
using namespace tunnel::cli;

namespace {

enum Exit { Ok = 0, ConfigFail = 2, SolverFail = 3, Partial = 4 };

RunConfig load_config(const std::string& path) {
    if (path.empty()) return RunConfig{};
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return RunConfig::from_json(j);
}

// writes to --out, or stdout when empty
void emit(const std::string& out, const std::string& text) {
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out);
    if (!f) throw ConfigError("output: cannot write " + out);
    f << text;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    for (std::string x; std::getline(ss, x, ',');) v.push_back(std::stod(x));
    if (v.empty()) throw ConfigError("empty list '" + s + "'");
    return v;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Complex-time boundary value solver for tunneling with an oscillator degree of freedom"};
    app.require_subcommand(0, 1);
    app.fallthrough();
    std::string config_path, out;
    int workers = 1;
    bool resume = false, print_default = false;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out, "output path (stdout if omitted, except sweep)");
    app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--resume", resume, "keep rows already present in the sweep output");
    app.add_flag("--print-default-config", print_default, "print the default configuration and exit");

    auto* solve = app.add_subcommand("solve", "single solve at (T, theta, eps) or (E, N, eps)");
    double sT = NAN, sth = NAN, sE = NAN, sN = NAN, seps = 0;
    solve->add_option("--T", sT);
    solve->add_option("--theta", sth);
    solve->add_option("--E", sE);
    solve->add_option("--N", sN);
    solve->add_option("--eps", seps);

    auto* sweep = app.add_subcommand("sweep", "grid sweep described by the config");

    auto* walkc = app.add_subcommand("walk", "walk from the seed to a target, one row per step");
    double wT = NAN, wth = NAN, wE = NAN, wN = NAN, weps = 0;
    int wsteps = 10;
    walkc->add_option("--T", wT);
    walkc->add_option("--theta", wth);
    walkc->add_option("--E", wE);
    walkc->add_option("--N", wN);
    walkc->add_option("--eps", weps);
    walkc->add_option("--steps", wsteps)->check(CLI::PositiveNumber);

    auto* boundary = app.add_subcommand("boundary", "over-barrier boundary E0(N): classical shooting and tau-limit");
    std::string bN = "3.72";
    double ratio = 0;
    int phi_samples = 64;
    boundary->add_option("--N", bN, "comma-separated N values");
    boundary->add_option("--tau-ratio", ratio, "also run the tau -> infinity limit at this tau/vartheta");
    boundary->add_option("--phi-samples", phi_samples);

    auto* oracle = app.add_subcommand("oracle-1d", "1D sech^2 model: exact, WKB and numerical T(E), F(E)");
    std::string oE = "0.3,0.5,0.7";
    double oeps = 0;
    oracle->add_option("--E", oE);
    oracle->add_option("--eps", oeps);

    auto* schr = app.add_subcommand("schrodinger", "coupled-channel F_exact with lambda -> 0 extrapolation");
    double qE = 1.05, qN = 0.43;
    std::string qlam = "0.2,0.15,0.1";
    int qdeg = 2;
    schr->add_option("--E", qE);
    schr->add_option("--N", qN);
    schr->add_option("--lambdas", qlam);
    schr->add_option("--degree", qdeg)->check(CLI::Range(1, 2));

    auto* expo = app.add_subcommand("export", "figure data (TSV) from a results table");
    std::string in_path, fig;
    expo->add_option("--in", in_path, "results CSV");
    expo->add_option("--figure", fig, "fig6 fig10 fig11 fig12 fig13 fig15a fig17 fig20")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return e.get_exit_code() == 0 ? app.exit(e) : (app.exit(e), ConfigFail);
    }

    try {
        if (print_default) {
            std::cout << RunConfig{}.to_json().dump(2) << '\n';
            return Ok;
        }
        RunConfig cfg = load_config(config_path);
        ModelParams p = cfg.model;
        p.validate();

        if (*sweep) {
            if (!out.empty()) cfg.output = out;
            auto rep = run_sweep(cfg, workers, resume);
            std::fprintf(stderr, "sweep: %d rows (%d computed, %d failed) -> %s\n", rep.rows_total, rep.rows_computed,
                         rep.rows_failed, cfg.output.c_str());
            return rep.rows_failed ? Partial : Ok;
        }
        if (*solve || *walkc) {
            bool is_walk = bool(*walkc);
            double T = is_walk ? wT : sT, th = is_walk ? wth : sth, E = is_walk ? wE : sE, N = is_walk ? wN : sN;
            double eps = is_walk ? weps : seps;
            WalkTarget t;
            t.eps = eps;
            if (!std::isnan(T) && !std::isnan(th)) {
                t.mode = SolveMode::FixedTTheta;
                t.T = T;
                t.theta = th;
            } else if (!std::isnan(E) && !std::isnan(N)) {
                t.mode = SolveMode::FixedEN;
                t.E = E;
                t.N = N;
            } else {
                throw ConfigError("give either --T and --theta, or --E and --N");
            }
            SaddleSolution seed = sweep_seed(cfg, 0.0);
            std::ostringstream o;
            o << csv_header() << '\n';
            if (is_walk) {
                // eps first, at the seed's (E, N), then the straight path to the target
                if (eps != seed.eps) seed = walk_to(seed, {SolveMode::FixedEN, 0, 0, seed.E, seed.N, eps});
                auto tg = [&](double s) {
                    WalkTarget w = t;
                    if (t.mode == SolveMode::FixedTTheta) {
                        w.T = seed.T + s * (t.T - seed.T);
                        w.theta = seed.theta + s * (t.theta - seed.theta);
                    } else {
                        w.E = seed.E + s * (t.E - seed.E);
                        w.N = seed.N + s * (t.N - seed.N);
                    }
                    return w;
                };
                for (auto& s : continue_path(seed, tg, wsteps).solutions) o << to_csv(row_from(s, 0)) << '\n';
            } else {
                auto t0 = std::chrono::steady_clock::now();
                SaddleSolution s = walk_to(seed, t);
                double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                o << to_csv(row_from(s, cfg.record_wall_time ? wall : 0)) << '\n';
            }
            emit(out, o.str());
            return Ok;
        }
        if (*boundary) {
            std::ostringstream o;
            o << "# N\tE0_classical\n";
            for (double N : parse_list(bN)) o << fmt(N) << '\t' << fmt(find_E0(N, p, phi_samples, 1e-4, workers)) << '\n';
            if (ratio != 0) {
                auto start = allowed_region_seed(p);
                double vt = 380 / ratio;
                int n = std::max(4, int(std::ceil(std::abs(vt * start.eps - start.theta) / 0.01)));
                start = walk(start, 0, (vt * start.eps - start.theta) / n, 0, n).solutions.back();
                auto bp = boundary_from_tau_limit(start, ratio, {380, 570, 760, 1140});
                o << "# tau\tE\tN\t(tau/vartheta = " << fmt(ratio) << ")\n";
                for (std::size_t i = 0; i < bp.taus.size(); ++i)
                    o << fmt(bp.taus[i]) << '\t' << fmt(bp.Es[i]) << '\t' << fmt(bp.Ns[i]) << '\n';
                o << "# limit\tE0=" << fmt(bp.E0) << "\tN=" << fmt(bp.N) << "\tE0_classical(N)="
                  << fmt(find_E0(bp.N, p, phi_samples, 1e-4, workers)) << '\n';
            }
            emit(out, o.str());
            return Ok;
        }
        if (*oracle) {
            std::ostringstream o;
            o << "# E\teps\tT_exact\tT_numerical\tF_wkb\tF_numerical\n";
            for (double E : parse_list(oE)) {
                Contour c = contour_1d(E, oeps, cfg.h, cfg.t_left, cfg.t_right);
                auto s = solve_from_exact_seed(E, oeps, c, bvp_options(cfg));
                o << fmt(E) << '\t' << fmt(oeps) << '\t' << fmt(exact_T_of_E(E, oeps)) << '\t' << fmt(s.T) << '\t'
                  << (oeps == 0 && E < 1 ? fmt(wkb_exponent(E)) : "nan") << '\t' << fmt(s.F) << '\n';
            }
            emit(out, o.str());
            return Ok;
        }
        if (*schr) {
            FExactOptions fo;
            fo.degree = qdeg;
            fo.workers = workers;
            auto r = f_exact(qE, qN, parse_list(qlam), p.omega, fo);
            std::ostringstream o;
            o << "# lambda\tF_lambda\t| E=" << fmt(qE) << " N=" << fmt(qN) << "\n";
            for (std::size_t i = 0; i < r.lambdas.size(); ++i) o << fmt(r.lambdas[i]) << '\t' << fmt(r.F_lambda[i]) << '\n';
            o << "# F0\t" << fmt(r.F0) << "\tlinear=" << fmt(r.F0_linear) << "\tquadratic=" << fmt(r.F0_quadratic) << '\n';
            emit(out, o.str());
            return Ok;
        }
        if (*expo) {
            std::vector<ResultRow> rows;
            if (fig != "fig6") {
                if (in_path.empty()) throw ConfigError("export: --in is required for " + fig);
                rows = read_results(in_path);
            }
            emit(out, export_figure_data(rows, fig, p, workers));
            return Ok;
        }
        std::cout << app.help();
        return Ok;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return ConfigFail;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return SolverFail;
    }
}
