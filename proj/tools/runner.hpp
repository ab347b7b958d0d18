#pragma once
// Sweep driver, result tables and figure export behind the tunnel CLI.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "tunnel/analytic1d.hpp"
#include "tunnel/classical.hpp"
#include "tunnel/observables.hpp"

namespace tunnel::cli {

using json = nlohmann::json;

struct SeedFailure : Error {
    using Error::Error;
};

struct Range {
    double start = 0, stop = 0;
    int steps = 1;  // number of points, endpoints included
    std::vector<double> values() const {
        std::vector<double> v;
        for (int i = 0; i < steps; ++i) v.push_back(steps == 1 ? start : start + (stop - start) * i / (steps - 1));
        return v;
    }
};

enum class SweepKind { TTheta, EN, Eps };

struct SweepSpec {
    SweepKind kind = SweepKind::TTheta;
    double eps = 0.002;  // TTheta and EN
    Range a{3.0, 4.0, 6}, b{0.6, 1.2, 7};  // (T, theta) or (E, N)
    double E = 1.05, N = 0.43;             // Eps sweep point
    std::vector<double> eps_values{0.01, 0.005, 0.002, 0.001};
};

struct RunConfig {
    ModelParams model;
    double h = 0.05, t_left = -25, t_right = 25;
    double tol = 1e-10;
    int max_iters = 50;
    double x_far = 8;
    double seed_T = 5.0;        // periodic instanton period
    std::string seed_results;   // optional prior results file; the seed is walked to its first converged row
    SweepSpec sweep;
    std::string output = "results.csv";
    bool record_wall_time = true;

    void validate() const;
    json to_json() const;
    static RunConfig from_json(const json& j);
};

inline const char* to_string(SweepKind k) {
    switch (k) {
    case SweepKind::TTheta: return "T_theta";
    case SweepKind::EN: return "E_N";
    case SweepKind::Eps: return "eps";
    }
    return "?";
}

inline void RunConfig::validate() const {
    auto bad = [](const std::string& m) { throw ConfigError("config: " + m); };
    if (!(model.omega > 0)) bad("model.omega must be positive");
    if (model.epsilon < 0 || model.epsilon >= 0.1) bad("model.epsilon must lie in [0, 0.1)");
    if (!(h > 0 && h <= 0.5)) bad("contour.h must lie in (0, 0.5]");
    if (!(t_left < -5 && t_right > 5)) bad("contour.t_left < -5 and contour.t_right > 5 required");
    if (!(tol > 0) || max_iters < 1) bad("solver.tol > 0 and solver.max_iters >= 1 required");
    if (!(seed_T > 0)) bad("seed.periodic_instanton_T must be positive");
    if (sweep.kind == SweepKind::Eps) {
        if (sweep.eps_values.empty()) bad("sweep.eps_values is empty");
        for (double e : sweep.eps_values)
            if (e < 0 || e >= 0.1) bad("sweep.eps_values must lie in [0, 0.1)");
    } else {
        if (sweep.a.steps < 1 || sweep.b.steps < 1) bad("sweep ranges must have steps >= 1");
        if (sweep.eps < 0 || sweep.eps >= 0.1) bad("sweep.eps must lie in [0, 0.1)");
    }
    if (output.empty()) bad("output path is empty");
}

inline json range_json(const Range& r) { return {{"start", r.start}, {"stop", r.stop}, {"steps", r.steps}}; }

inline Range range_from(const json& j) {
    Range r;
    r.start = j.at("start").get<double>();
    r.stop = j.value("stop", r.start);
    r.steps = j.value("steps", 1);
    return r;
}

inline json RunConfig::to_json() const {
    json s = {{"kind", to_string(sweep.kind)}};
    if (sweep.kind == SweepKind::TTheta) {
        s["eps"] = sweep.eps;
        s["T"] = range_json(sweep.a);
        s["theta"] = range_json(sweep.b);
    } else if (sweep.kind == SweepKind::EN) {
        s["eps"] = sweep.eps;
        s["E"] = range_json(sweep.a);
        s["N"] = range_json(sweep.b);
    } else {
        s["E"] = sweep.E;
        s["N"] = sweep.N;
        s["eps_values"] = sweep.eps_values;
    }
    return {{"model", {{"omega", model.omega}, {"epsilon", model.epsilon}}},
            {"contour", {{"h", h}, {"t_left", t_left}, {"t_right", t_right}}},
            {"solver", {{"tol", tol}, {"max_iters", max_iters}, {"x_far", x_far}}},
            {"seed", {{"periodic_instanton_T", seed_T}, {"results_file", seed_results}}},
            {"sweep", s},
            {"output", output},
            {"record_wall_time", record_wall_time}};
}

inline RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    try {
        if (j.contains("model")) {
            c.model.omega = j["model"].value("omega", c.model.omega);
            c.model.epsilon = j["model"].value("epsilon", c.model.epsilon);
        }
        if (j.contains("contour")) {
            c.h = j["contour"].value("h", c.h);
            c.t_left = j["contour"].value("t_left", c.t_left);
            c.t_right = j["contour"].value("t_right", c.t_right);
        }
        if (j.contains("solver")) {
            c.tol = j["solver"].value("tol", c.tol);
            c.max_iters = j["solver"].value("max_iters", c.max_iters);
            c.x_far = j["solver"].value("x_far", c.x_far);
        }
        if (j.contains("seed")) {
            c.seed_T = j["seed"].value("periodic_instanton_T", c.seed_T);
            c.seed_results = j["seed"].value("results_file", c.seed_results);
        }
        if (j.contains("sweep")) {
            const auto& s = j["sweep"];
            std::string k = s.value("kind", std::string("T_theta"));
            if (k == "T_theta") {
                c.sweep.kind = SweepKind::TTheta;
                if (s.contains("T")) c.sweep.a = range_from(s["T"]);
                if (s.contains("theta")) c.sweep.b = range_from(s["theta"]);
            } else if (k == "E_N") {
                c.sweep.kind = SweepKind::EN;
                if (s.contains("E")) c.sweep.a = range_from(s["E"]);
                if (s.contains("N")) c.sweep.b = range_from(s["N"]);
            } else if (k == "eps") {
                c.sweep.kind = SweepKind::Eps;
                c.sweep.E = s.value("E", c.sweep.E);
                c.sweep.N = s.value("N", c.sweep.N);
                if (s.contains("eps_values")) c.sweep.eps_values = s["eps_values"].get<std::vector<double>>();
            } else {
                throw ConfigError("config: unknown sweep.kind '" + k + "'");
            }
            c.sweep.eps = s.value("eps", c.sweep.eps);
        }
        c.output = j.value("output", c.output);
        c.record_wall_time = j.value("record_wall_time", c.record_wall_time);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

// --- result rows

struct ResultRow {
    double T = NAN, theta = NAN, eps = NAN, E = NAN, N = NAN, F = NAN, T_int = NAN;
    std::string topology;  // "error:<kind>" for failed solves
    double residual_norm = NAN;
    int newton_iters = 0;
    double wall_time_s = 0;

    bool failed() const { return topology.rfind("error:", 0) == 0; }
};

inline const char* csv_header() { return "T,theta,eps,E,N,F,T_int,topology,residual_norm,newton_iters,wall_time_s"; }

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

inline std::string to_csv(const ResultRow& r) {
    std::ostringstream o;
    o << fmt(r.T) << ',' << fmt(r.theta) << ',' << fmt(r.eps) << ',' << fmt(r.E) << ',' << fmt(r.N) << ','
      << fmt(r.F) << ',' << fmt(r.T_int) << ',' << r.topology << ',' << fmt(r.residual_norm) << ','
      << r.newton_iters << ',' << fmt(r.wall_time_s);
    return o.str();
}

inline ResultRow parse_row(const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    if (f.size() != 11) throw ConfigError("results: malformed row '" + line + "'");
    auto d = [](const std::string& s) { return s == "nan" ? NAN : std::stod(s); };
    ResultRow r;
    r.T = d(f[0]);
    r.theta = d(f[1]);
    r.eps = d(f[2]);
    r.E = d(f[3]);
    r.N = d(f[4]);
    r.F = d(f[5]);
    r.T_int = d(f[6]);
    r.topology = f[7];
    r.residual_norm = d(f[8]);
    r.newton_iters = std::stoi(f[9]);
    r.wall_time_s = d(f[10]);
    return r;
}

inline std::vector<ResultRow> read_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("results: cannot open " + path);
    std::vector<ResultRow> rows;
    std::string line;
    if (!std::getline(in, line) || line != csv_header()) throw ConfigError("results: bad header in " + path);
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(parse_row(line));
    return rows;
}

inline ResultRow row_from(const SaddleSolution& s, double wall) {
    return {s.T, s.theta, s.eps, s.E, s.N, s.F, s.T_int, to_string(s.topology), s.residual_norm, s.newton_iters, wall};
}

inline std::string error_code(const std::exception& e) {
    if (dynamic_cast<const MaxItersExceeded*>(&e)) return "error:max_iters";
    if (dynamic_cast<const SingularJacobian*>(&e)) return "error:singular_jacobian";
    if (dynamic_cast<const StepCollapse*>(&e)) return "error:step_collapse";
    if (dynamic_cast<const AsymptoticsNotFree*>(&e)) return "error:asymptotics_not_free";
    if (dynamic_cast<const Unclassifiable*>(&e)) return "error:unclassifiable";
    if (dynamic_cast<const DomainError*>(&e)) return "error:domain";
    return "error:other";
}

// sweep coordinates that identify a row
using RowKey = std::array<double, 3>;

inline RowKey row_key(const ResultRow& r, SweepKind k) {
    switch (k) {
    case SweepKind::TTheta: return {r.T, r.theta, r.eps};
    case SweepKind::EN: return {r.E, r.N, r.eps};
    case SweepKind::Eps: return {r.eps, 0, 0};
    }
    return {};
}

// --- sweeps

inline BvpOptions bvp_options(const RunConfig& c) {
    BvpOptions o;
    o.tol = c.tol;
    o.max_iters = c.max_iters;
    o.x_far = c.x_far;
    return o;
}

// starting solution at the sweep's eps (EN-mode eps walk from the periodic instanton)
inline SaddleSolution sweep_seed(const RunConfig& c, double eps) {
    try {
        Contour k = default_contour(c.seed_T, c.h, c.t_left, c.t_right);
        const ModelParams p0{c.model.omega, 0.0};
        auto s = newton_solve(periodic_instanton_seed(c.seed_T, k, p0), k, c.seed_T, 0.0, p0, bvp_options(c));
        if (eps > 0) {
            int n = std::max(1, int(std::ceil(eps / 0.001)));
            s = walk_en(s, 0, 0, eps / n, n).solutions.back();
        }
        if (!c.seed_results.empty()) {
            auto rows = read_results(c.seed_results);
            auto it = std::find_if(rows.begin(), rows.end(), [](const ResultRow& r) { return !r.failed(); });
            if (it == rows.end()) throw SeedFailure("seed: no converged row in " + c.seed_results);
            int n = std::max(4, int(std::ceil(10 * std::hypot(it->T - s.T, it->theta - s.theta))));
            s = walk(s, (it->T - s.T) / n, (it->theta - s.theta) / n, (it->eps - s.eps) / n, n).solutions.back();
            if (eps != s.eps) {
                int m = std::max(1, int(std::ceil(std::abs(eps - s.eps) / 0.001)));
                s = walk_en(s, 0, 0, (eps - s.eps) / m, m).solutions.back();
            }
        }
        return s;
    } catch (const SeedFailure&) {
        throw;
    } catch (const Error& e) {
        throw SeedFailure(std::string("seed: ") + e.what());
    }
}

// one line of the sweep: a target sequence walked in order from the seed
struct SweepLine {
    std::vector<WalkTarget> targets;
};

inline std::vector<SweepLine> sweep_lines(const RunConfig& c) {
    std::vector<SweepLine> lines;
    const auto& s = c.sweep;
    if (s.kind == SweepKind::Eps) {
        SweepLine l;
        for (double e : s.eps_values) {
            WalkTarget t;
            t.mode = SolveMode::FixedEN;
            t.E = s.E;
            t.N = s.N;
            t.eps = e;
            l.targets.push_back(t);
        }
        lines.push_back(l);
        return lines;
    }
    for (double a : s.a.values()) {
        SweepLine l;
        for (double b : s.b.values()) {
            WalkTarget t;
            t.eps = s.eps;
            if (s.kind == SweepKind::TTheta) {
                t.mode = SolveMode::FixedTTheta;
                t.T = a;
                t.theta = b;
            } else {
                t.mode = SolveMode::FixedEN;
                t.E = a;
                t.N = b;
            }
            l.targets.push_back(t);
        }
        lines.push_back(l);
    }
    return lines;
}

inline ResultRow target_row(const WalkTarget& t) {
    ResultRow r;
    r.eps = t.eps;
    if (t.mode == SolveMode::FixedTTheta) {
        r.T = t.T;
        r.theta = t.theta;
    } else {
        r.E = t.E;
        r.N = t.N;
    }
    return r;
}

// straight walk from `from` to the target; the step count follows the distance
inline SaddleSolution walk_to(const SaddleSolution& from, const WalkTarget& t, double unit = 0.1) {
    if (t.mode == SolveMode::FixedTTheta) {
        double d = std::hypot(t.T - from.T, t.theta - from.theta) / unit + std::abs(t.eps - from.eps) / 0.001;
        int n = std::max(1, int(std::ceil(d)));
        return walk(from, (t.T - from.T) / n, (t.theta - from.theta) / n, (t.eps - from.eps) / n, n).solutions.back();
    }
    double d = std::hypot(t.E - from.E, t.N - from.N) / (0.2 * unit) + std::abs(t.eps - from.eps) / 0.001;
    int n = std::max(1, int(std::ceil(d)));
    return walk_en(from, (t.E - from.E) / n, (t.N - from.N) / n, (t.eps - from.eps) / n, n).solutions.back();
}

struct SweepReport {
    int rows_total = 0, rows_failed = 0, rows_computed = 0;
};

// Runs the sweep into cfg.output. Lines are independent given the seed, so the table does not depend on the
// worker count. With resume, rows already in the file are kept and complete lines are skipped.
inline SweepReport run_sweep(const RunConfig& cfg, int workers = 1, bool resume = false) {
    cfg.validate();
    const SweepKind kind = cfg.sweep.kind;
    std::map<RowKey, ResultRow> done;
    if (resume) {
        std::ifstream probe(cfg.output);
        if (probe) {
            for (auto& r : read_results(cfg.output)) done[row_key(r, kind)] = r;
        }
    }
    auto lines = sweep_lines(cfg);
    std::vector<int> todo;
    for (int i = 0; i < int(lines.size()); ++i) {
        bool complete = true;
        for (auto& t : lines[i].targets) complete = complete && done.count(row_key(target_row(t), kind));
        if (!complete) todo.push_back(i);
    }
    SweepReport rep;
    std::mutex m;
    if (!todo.empty()) {
        const double seed_eps = kind == SweepKind::Eps ? cfg.sweep.eps_values.front() : cfg.sweep.eps;
        SaddleSolution seed = sweep_seed(cfg, kind == SweepKind::Eps ? 0.0 : seed_eps);
        std::ofstream app(cfg.output, resume ? std::ios::app : std::ios::trunc);
        if (!app) throw ConfigError("output: cannot write " + cfg.output);
        if (!resume || done.empty()) app << csv_header() << '\n';
        app.flush();
        parallel_for(int(todo.size()), workers, [&](int li) {
            const auto& line = lines[todo[li]];
            std::optional<SaddleSolution> cur = seed;
            for (const auto& t : line.targets) {
                auto t0 = std::chrono::steady_clock::now();
                ResultRow row;
                try {
                    auto s = walk_to(*cur, t);
                    cur = s;
                    row = row_from(s, 0);
                    if (t.mode == SolveMode::FixedEN) {
                        row.E = t.E;  // exact targets keep the keys stable
                        row.N = t.N;
                    } else {
                        row.T = t.T;
                        row.theta = t.theta;
                    }
                    row.eps = t.eps;
                } catch (const Error& e) {
                    row = target_row(t);
                    row.topology = error_code(e);
                }
                if (cfg.record_wall_time)
                    row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                std::lock_guard<std::mutex> g(m);
                RowKey k = row_key(row, kind);
                if (!done.count(k)) {
                    done[k] = row;
                    app << to_csv(row) << '\n';
                    app.flush();
                    ++rep.rows_computed;
                }
            }
        });
    }
    // sort on finalize
    std::ofstream out(cfg.output, std::ios::trunc);
    out << csv_header() << '\n';
    for (auto& [k, r] : done) {
        out << to_csv(r) << '\n';
        ++rep.rows_total;
        if (r.failed()) ++rep.rows_failed;
    }
    return rep;
}

// --- figure export

inline std::string tsv_header(const std::vector<std::string>& axes, const std::string& fixed) {
    std::string h = "#";
    for (std::size_t i = 0; i < axes.size(); ++i) h += (i ? "\t" : " ") + axes[i];
    if (!fixed.empty()) h += "\t| " + fixed;
    return h + "\n";
}

inline std::string export_figure_data(const std::vector<ResultRow>& rows, const std::string& fig,
                                      const ModelParams& p = {}, int workers = 1) {
    std::ostringstream o;
    std::vector<ResultRow> ok;
    for (auto& r : rows)
        if (!r.failed()) ok.push_back(r);
    auto need = [&](bool c, const std::string& what) {
        if (!c) throw DomainError("export " + fig + ": insufficient coverage, missing " + what);
    };
    char fixed[128];
    std::snprintf(fixed, sizeof fixed, "omega=%g", p.omega);
    if (fig == "fig6") {
        o << tsv_header({"branch", "E", "T"}, "1D sech^2 model");
        for (auto& b : branch_diagram(0.2, 2.0, 91))
            o << to_string(b.label) << '\t' << fmt(b.E) << '\t' << fmt(2 * b.T_half) << '\n';
    } else if (fig == "fig10") {
        need(!ok.empty(), "rows");
        auto s = ok;
        std::stable_sort(s.begin(), s.end(), [](auto& a, auto& b) { return a.T != b.T ? a.T < b.T : a.theta < b.theta; });
        o << tsv_header({"T", "theta", "E", "N"}, std::string(fixed) + " eps=" + fmt(s.front().eps));
        double last = s.front().T;
        for (auto& r : s) {
            if (r.T != last) o << '\n';  // gnuplot-style break between T = const lines
            last = r.T;
            o << fmt(r.T) << '\t' << fmt(r.theta) << '\t' << fmt(r.E) << '\t' << fmt(r.N) << '\n';
        }
    } else if (fig == "fig11" || fig == "fig12" || fig == "fig13") {
        need(!ok.empty(), "rows");
        const char* col = fig == "fig11" ? "T" : fig == "fig12" ? "theta" : "F";
        o << tsv_header({"E", "N", col, "eps", "topology"}, fixed);
        for (auto& r : ok) {
            double v = fig == "fig11" ? r.T : fig == "fig12" ? r.theta : r.F;
            o << fmt(r.E) << '\t' << fmt(r.N) << '\t' << fmt(v) << '\t' << fmt(r.eps) << '\t' << r.topology << '\n';
        }
    } else if (fig == "fig15a") {
        std::vector<ResultRow> s;
        for (auto& r : ok)
            if (std::abs(r.N - 0.1) < 1e-9) s.push_back(r);
        need(!s.empty(), "rows at N = 0.1");
        std::stable_sort(s.begin(), s.end(), [](auto& a, auto& b) { return a.E < b.E; });
        o << tsv_header({"E", "T"}, std::string(fixed) + " N=0.1");
        for (auto& r : s) o << fmt(r.E) << '\t' << fmt(r.T) << '\n';
    } else if (fig == "fig17") {
        need(!ok.empty(), "rows");
        o << tsv_header({"T", "theta", "eps", "E", "N", "F"}, fixed);
        for (auto& r : ok)
            o << fmt(r.T) << '\t' << fmt(r.theta) << '\t' << fmt(r.eps) << '\t' << fmt(r.E) << '\t' << fmt(r.N) << '\t'
              << fmt(r.F) << '\n';
    } else if (fig == "fig20") {
        need(!ok.empty(), "rows (the scan point is the smallest-eps row)");
        auto it = std::min_element(ok.begin(), ok.end(), [](auto& a, auto& b) { return a.eps < b.eps; });
        auto sc = tint_phase_scan(it->E, it->N, p, 360, workers);
        o << tsv_header({"phi", "T_int", "outcome"}, std::string(fixed) + " E=" + fmt(it->E) + " N=" + fmt(it->N));
        for (std::size_t i = 0; i < sc.phi.size(); ++i)
            o << fmt(sc.phi[i]) << '\t' << fmt(sc.T_int[i]) << '\t' << to_string(sc.outcome[i]) << '\n';
    } else {
        throw ConfigError("export: unknown figure '" + fig + "' (fig6 fig10 fig11 fig12 fig13 fig15a fig17 fig20)");
    }
    return o.str();
}

} // namespace tunnel::cli
