#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "runner.hpp"

using namespace tunnel;
using namespace tunnel::cli;
namespace fs = std::filesystem;

namespace {
std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

RunConfig small_sweep(const fs::path& out) {
    RunConfig c;
    c.sweep.kind = SweepKind::TTheta;
    c.sweep.eps = 0.002;
    c.sweep.a = {3.8, 3.9, 2};
    c.sweep.b = {0.9, 1.0, 2};
    c.output = out.string();
    c.record_wall_time = false;
    return c;
}

int run_cli(const std::string& args) {
    int rc = std::system((std::string(TUNNEL_CLI) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path tmpdir() {
    auto d = fs::temp_directory_path() / ("tunnel_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
}
} // namespace

TEST(Cli, ConfigRoundTrip) {
    RunConfig c = small_sweep("x.csv");
    auto j = c.to_json();
    auto d = RunConfig::from_json(j);
    EXPECT_EQ(d.to_json(), j);
}

TEST(Cli, EmptySweepRangeRejected) {
    auto j = small_sweep("x.csv").to_json();
    j["sweep"]["theta"]["steps"] = 0;
    EXPECT_THROW(RunConfig::from_json(j), ConfigError);
    j = small_sweep("x.csv").to_json();
    j["sweep"]["kind"] = "nonsense";
    EXPECT_THROW(RunConfig::from_json(j), ConfigError);
    j = small_sweep("x.csv").to_json();
    j["model"]["epsilon"] = 0.2;
    EXPECT_THROW(RunConfig::from_json(j), ConfigError);
}

TEST(Cli, RowRoundTripKeepsFullPrecision) {
    ResultRow r{0.1 + 0.2, 1.0 / 3, 0.002, 1.0000000000000002, 0.44, 0.22076543210987654, 5.5,
                "transmission", 3.2e-12, 4, 0.0};
    auto back = parse_row(to_csv(r));
    EXPECT_EQ(back.T, r.T);
    EXPECT_EQ(back.theta, r.theta);
    EXPECT_EQ(back.E, r.E);
    EXPECT_EQ(back.F, r.F);
    EXPECT_EQ(back.topology, r.topology);
    EXPECT_EQ(back.newton_iters, 4);
}

TEST(Cli, SweepIsDeterministicAndResumable) {
    auto d = tmpdir();
    auto c = small_sweep(d / "a.csv");
    auto rep = run_sweep(c, 1, false);
    EXPECT_EQ(rep.rows_total, 4);
    EXPECT_EQ(rep.rows_failed, 0);
    std::string first = slurp(d / "a.csv");
    // one row per grid point, sorted by (T, theta)
    auto rows = read_results((d / "a.csv").string());
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0].T, 3.8);
    EXPECT_EQ(rows[1].theta, 1.0);
    // re-running a completed sweep with resume is a byte-identical no-op
    auto rep2 = run_sweep(c, 1, true);
    EXPECT_EQ(rep2.rows_computed, 0);
    EXPECT_EQ(slurp(d / "a.csv"), first);
    // a fresh run with two workers gives the same table
    auto c2 = small_sweep(d / "b.csv");
    run_sweep(c2, 2, false);
    EXPECT_EQ(slurp(d / "b.csv"), first);
    // drop a row and resume: only that row is recomputed
    {
        std::ofstream f(d / "a.csv");
        std::istringstream in(first);
        std::string line;
        int n = 0;
        while (std::getline(in, line))
            if (n++ != 2) f << line << '\n';
    }
    auto rep3 = run_sweep(c, 1, true);
    EXPECT_EQ(rep3.rows_computed, 1);
    EXPECT_EQ(slurp(d / "a.csv"), first);
    fs::remove_all(d);
}

TEST(Cli, ExportFig6HasFiveBranches) {
    auto tsv = export_figure_data({}, "fig6");
    std::set<std::string> labels;
    std::istringstream in(tsv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line[0], '#');
    while (std::getline(in, line)) labels.insert(line.substr(0, line.find('\t')));
    EXPECT_EQ(labels.size(), 5u);
}

TEST(Cli, ExportFig15aCoverage) {
    std::vector<ResultRow> rows{{3.5, 1.0, 0.0, 0.9, 0.1, 0.5, 1.0, "transmission", 0, 3, 0},
                                {3.4, 1.0, 0.0, 0.95, 0.1, 0.4, 1.0, "transmission", 0, 3, 0},
                                {3.0, 1.0, 0.0, 0.95, 0.2, 0.4, 1.0, "transmission", 0, 3, 0}};
    auto tsv = export_figure_data(rows, "fig15a");
    EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 3);  // header + two rows at N = 0.1
    rows.erase(rows.begin(), rows.begin() + 2);
    EXPECT_THROW(export_figure_data(rows, "fig15a"), DomainError);
    EXPECT_THROW(export_figure_data(rows, "fig99"), ConfigError);
}

TEST(Cli, ExitCodes) {
    auto d = tmpdir();
    EXPECT_EQ(run_cli("--print-default-config"), 0);
    {
        std::ofstream f(d / "bad.json");
        f << "{\"sweep\": {\"kind\": \"T_theta\", \"T\": {\"start\": 3, \"stop\": 4, \"steps\": 0}}}";
    }
    EXPECT_EQ(run_cli("--config " + (d / "bad.json").string() + " sweep"), 2);
    {
        std::ofstream f(d / "broken.json");
        f << "{ not json";
    }
    EXPECT_EQ(run_cli("--config " + (d / "broken.json").string() + " sweep"), 2);
    EXPECT_EQ(run_cli("oracle-1d --E 0.5 --out " + (d / "o.tsv").string()), 0);
    EXPECT_NE(slurp(d / "o.tsv").find("0.5"), std::string::npos);
    fs::remove_all(d);
}
