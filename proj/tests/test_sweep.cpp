#include "gonora/sweep.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

using namespace gonora;

namespace {

std::string write_temp_config(const std::string& name, const std::string& text)
{
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << text;
    return path.string();
}

std::string small_config_text()
{
    return "prp.omega = 8\nprp.beta = 128\nprp.ru_payload_bits = 16\ntraffic.m_count = 8\nsim.horizon = 60\n"
           "sim.replications = 3\n";
}

RunPlan parse(std::vector<std::string> args, const EnvLookup& env = [](const std::string&) {
    return std::optional<std::string>{};
})
{
    args.insert(args.begin(), "gonora");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    return parse_cli(static_cast<int>(argv.size()), argv.data(), env);
}

int usage_code(const std::vector<std::string>& args)
{
    try {
        parse(args);
    } catch (const UsageError& e) {
        return e.exit_code();
    }
    return -1;
}

ResultRow row(const std::string& id, double overload, int rrh, double p, double bler, double ci, double thr,
              double thr_ci)
{
    ResultRow r;
    r.scenario_id = id;
    r.overload_factor = overload;
    r.rrh_count = rrh;
    r.p = p;
    r.attempts = 1000;
    r.bler = bler;
    r.bler_ci95 = ci;
    r.norm_throughput = thr;
    r.thr_ci95 = thr_ci;
    r.drop_rate = 0.0;
    r.mean_delay_prps = 1.5;
    r.seed = 1;
    return r;
}

// A well-ordered 15-point grid: BLER rises with overload, falls with RRHs.
ResultTable ordered_grid()
{
    ResultTable t;
    int n = 0;
    for (int rrh : {1, 2, 4})
        for (double f : {0.5, 1.0, 2.0, 4.0, 8.0}) {
            const double b = std::min(1.0, 0.01 * f / rrh);
            t.rows.push_back(row("P" + std::to_string(++n), f, rrh, 0.3, b, 0.001, 0.1 * rrh, 0.001));
        }
    return t;
}

} // namespace

TEST_CASE("parse_sweep: five overload values give five points")
{
    const auto s = parse_sweep("overload_factor=0.5,1,2,4,8");
    CHECK(s.axis == Axis::OverloadFactor);
    CHECK(s.values == std::vector<double>{0.5, 1, 2, 4, 8});
    RunPlan plan;
    plan.sweeps = {s};
    const auto pts = sweep_points(plan);
    REQUIRE(pts.size() == 5);
    CHECK(pts[0].id == "P01");
    CHECK(pts[4].id == "P05");
    CHECK(pts[0].config.traffic.m_count == 32);
    CHECK(pts[4].config.traffic.m_count == 512);
}

TEST_CASE("parse_sweep rejects malformed input")
{
    CHECK_THROWS_AS(parse_sweep("overload_factor"), std::invalid_argument);
    CHECK_THROWS_AS(parse_sweep("colour=1,2"), std::invalid_argument);
    CHECK_THROWS_AS(parse_sweep("p=0.1,abc"), std::invalid_argument);
    CHECK_THROWS_AS(parse_sweep("p="), std::invalid_argument);
    for (auto a : {Axis::OverloadFactor, Axis::RrhCount, Axis::P, Axis::W0, Axis::VMax})
        CHECK(parse_axis(to_string(a)) == a);
}

TEST_CASE("apply_axis maps values onto config fields")
{
    ScenarioConfig c;
    apply_axis(c, Axis::RrhCount, 4);
    CHECK(c.deployment.rrh_count == 4);
    apply_axis(c, Axis::P, 0.6);
    CHECK(c.gonora.p == 0.6);
    CHECK(c.gonora.p_mode == SelectionMode::Fixed);
    apply_axis(c, Axis::W0, 8);
    CHECK(c.gonora.w0 == 8);
    apply_axis(c, Axis::VMax, 5);
    CHECK(c.gonora.v_max == 5);
    CHECK_THROWS_AS(apply_axis(c, Axis::RrhCount, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(apply_axis(c, Axis::OverloadFactor, 0.01), std::invalid_argument); // 0.64 devices
    CHECK_THROWS_AS(apply_axis(c, Axis::OverloadFactor, -1), std::invalid_argument);
}

TEST_CASE("sweep points: cartesian product with the last axis fastest")
{
    RunPlan plan;
    plan.sweeps = {parse_sweep("rrh_count=1,2"), parse_sweep("p=0.1,0.3,0.6")};
    const auto pts = sweep_points(plan);
    REQUIRE(pts.size() == 6);
    const std::vector<std::pair<int, double>> expected{{1, 0.1}, {1, 0.3}, {1, 0.6}, {2, 0.1}, {2, 0.3}, {2, 0.6}};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(pts[i].config.deployment.rrh_count == expected[i].first);
        CHECK(pts[i].config.gonora.p == expected[i].second);
    }
    RunPlan none;
    CHECK(sweep_points(none).size() == 1);
}

TEST_CASE("sweep points that fail validation are usage errors")
{
    RunPlan plan;
    plan.sweeps = {parse_sweep("p=0.5,1.5")};
    try {
        sweep_points(plan);
        FAIL("expected a usage error");
    } catch (const UsageError& e) {
        CHECK(e.exit_code() == 2);
    }
}

TEST_CASE("parse_cli: flag errors exit with code 2")
{
    const auto cfg = write_temp_config("gonora_test_cli.cfg", small_config_text());
    CHECK(usage_code({}) == 2);
    CHECK(usage_code({"--sweep", "p=0.1"}) == 2);
    CHECK(usage_code({"--config", cfg, "--bogus"}) == 2);
    CHECK(usage_code({"--config", "/nonexistent/gonora.cfg"}) == 2);
    CHECK(usage_code({"--config", cfg, "--replications", "0"}) == 2);
    CHECK(usage_code({"--config", cfg, "--mode", "guess"}) == 2);
    CHECK(usage_code({"--config", cfg, "--sweep", "colour=1"}) == 2);
    CHECK(usage_code({"--config", cfg, "--set", "prp.omega"}) == 2);
    CHECK(usage_code({"--config", cfg, "--set", "prp.omega=-3"}) == 2);
    CHECK(usage_code({"--help"}) == 0);
}

TEST_CASE("parse_cli: values, overrides and output directory")
{
    const auto cfg = write_temp_config("gonora_test_cli2.cfg", small_config_text());
    const auto plan = parse({"--config", cfg, "--sweep", "overload_factor=1,2", "--set", "gonora.w0=8", "--mode",
                             "compare", "--seed", "17", "--output", "out.csv", "--jobs", "3", "--per-replication"},
                            [](const std::string& name) {
                                return name == "GONORA_OUTPUT_DIR" ? std::optional<std::string>("/tmp/res")
                                                                   : std::nullopt;
                            });
    CHECK(plan.base.prp.omega == 8);
    CHECK(plan.base.gonora.w0 == 8);
    CHECK(plan.replications == 3);
    CHECK(plan.seed == 17);
    CHECK(plan.mode == RunMode::Compare);
    CHECK(plan.jobs == 3);
    CHECK(plan.per_replication);
    CHECK(std::filesystem::path(plan.output) == std::filesystem::path("/tmp/res/out.csv"));
    REQUIRE(plan.sweeps.size() == 1);
    CHECK(plan.sweeps[0].values.size() == 2);

    const auto abs = parse({"--config", cfg, "--output", "/var/x.csv"}, [](const std::string&) {
        return std::optional<std::string>("/tmp/res");
    });
    CHECK(abs.output == "/var/x.csv");
}

TEST_CASE("parse_cli: --report needs no config")
{
    const auto plan = parse({"--report", "results.csv"});
    REQUIRE(plan.report_input.has_value());
    CHECK(*plan.report_input == "results.csv");
}

TEST_CASE("number formatting round-trips exactly")
{
    for (double v : {0.1, 1.0 / 3, 2.5e-300, 123456789.125, 0.0, 1e21, std::numeric_limits<double>::denorm_min()}) {
        const auto s = format_number(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(8) == "8");
}

TEST_CASE("CSV round-trip is bit-exact, absent values included")
{
    ResultTable t;
    t.analytic = true;
    auto a = row("P01", 0.5, 2, 0.3, 1.0 / 3, 0.017, 0.0123456789012345, 2e-5);
    a.analytic_bler = 0.1 / 3;
    a.analytic_throughput = 7e-9;
    a.analytic_drop_rate = 0;
    a.seed = 0xFFFFFFFFFFFFFFFFull;
    auto b = row("P02", 1, 2, 0.3, 0, 0, 0, 0);
    b.bler.reset();
    b.mean_delay_prps.reset();
    b.analytic_bler = 0.5;
    ResultRow err;
    err.scenario_id = "P03";
    err.overload_factor = 2;
    err.rrh_count = 2;
    err.p = 0.3;
    t.rows = {a, b, err};

    std::ostringstream out;
    write_csv(out, t);
    std::istringstream in(out.str());
    const auto back = read_csv(in);
    CHECK(back == t);
    CHECK(back.rows[2].is_error());
    CHECK_FALSE(back.rows[0].is_error());

    std::ostringstream again;
    write_csv(again, back);
    CHECK(again.str() == out.str());
}

TEST_CASE("CSV header lists the fixed columns, then the analytic ones")
{
    ResultTable t;
    std::ostringstream plain;
    write_csv(plain, t);
    CHECK(plain.str() == "scenario_id,overload_factor,rrh_count,p,attempts,bler,bler_ci95,norm_throughput,"
                         "thr_ci95,drop_rate,mean_delay_prps,seed\n");
    t.analytic = true;
    std::ostringstream with;
    write_csv(with, t);
    CHECK(with.str().find("seed,analytic_bler,analytic_throughput,analytic_drop_rate\n") != std::string::npos);
    CHECK(fixed_columns().size() == 12);
    CHECK(analytic_columns().size() == 3);
}

TEST_CASE("malformed CSV input is rejected")
{
    auto bad = [](const std::string& text) {
        std::istringstream in(text);
        CHECK_THROWS_AS(read_csv(in), CsvError);
    };
    const std::string header = "scenario_id,overload_factor,rrh_count,p,attempts,bler,bler_ci95,norm_throughput,"
                               "thr_ci95,drop_rate,mean_delay_prps,seed\n";
    bad("");
    bad("a,b,c\n");
    bad(header + "P01,1,2\n");
    bad(header + "P01,x,2,0.3,1,0,0,0,0,0,0,1\n");
    bad(header + ",1,2,0.3,1,0,0,0,0,0,0,1\n");
    std::istringstream ok(header + "P01,1,2,0.3,,,,,,,,1\n");
    CHECK(read_csv(ok).rows.size() == 1);
}

TEST_CASE("replication rows are recognized")
{
    ResultRow r;
    r.scenario_id = "P04/r12";
    CHECK(r.is_replication());
    r.scenario_id = "P04";
    CHECK_FALSE(r.is_replication());
}

TEST_CASE("report: an empty sweep says so")
{
    CHECK(emit_report({}).find("empty sweep") != std::string::npos);
}

TEST_CASE("report: a 15-point grid renders three curves without violations")
{
    const auto text = emit_report(ordered_grid());
    CHECK(text.find("15 sweep point(s) in 3 curve(s)") != std::string::npos);
    CHECK(text.find("curve rrh_count=1 p=0.3") != std::string::npos);
    CHECK(text.find("curve rrh_count=4 p=0.3") != std::string::npos);
    CHECK(text.find("trend violations: none") != std::string::npos);
    CHECK(text.find("delta") == std::string::npos);
}

TEST_CASE("report: planted violations are flagged")
{
    auto t = ordered_grid();
    t.rows[13].bler = 0.0; // rrh 4, overload 4 below overload 2
    const auto text = emit_report(t);
    CHECK(text.find("trend violations: 1") != std::string::npos);
    CHECK(text.find("BLER falls") != std::string::npos);

    auto u = ordered_grid();
    u.rows[14].norm_throughput = 0.01; // rrh 4 at overload 8 below rrh 2
    CHECK(emit_report(u).find("throughput with 4 RRHs") != std::string::npos);

    ResultTable v;
    v.rows = {row("P01", 0.5, 2, 0.1, 0.01, 0.001, 0.1, 0.01), row("P02", 0.5, 2, 0.6, 0.2, 0.001, 0.1, 0.01)};
    CHECK(emit_report(v).find("BLER rises") != std::string::npos);
}

TEST_CASE("report: overlapping intervals are not violations")
{
    auto t = ordered_grid();
    t.rows[3].bler = 0.035;
    t.rows[3].bler_ci95 = 0.01;
    CHECK(emit_report(t).find("trend violations: none") != std::string::npos);
}

TEST_CASE("report: compare tables add a delta column and list failed points")
{
    auto t = ordered_grid();
    t.analytic = true;
    t.rows[0].analytic_bler = 0.004;
    ResultRow err;
    err.scenario_id = "P16";
    err.overload_factor = 16;
    err.rrh_count = 1;
    err.p = 0.3;
    t.rows.push_back(err);
    ResultRow rep = t.rows[0];
    rep.scenario_id = "P01/r0";
    t.rows.push_back(rep);
    const auto text = emit_report(t);
    CHECK(text.find("delta") != std::string::npos);
    CHECK(text.find("0.001") != std::string::npos);
    CHECK(text.find("1 failed") != std::string::npos);
    CHECK(text.find("P16 (overload=16") != std::string::npos);
    CHECK(text.find("P01/r0") == std::string::npos);
}

TEST_CASE("run_sweep: compare mode fills simulated and analytic columns")
{
    RunPlan plan;
    plan.base = parse_config_text(small_config_text());
    plan.sweeps = {parse_sweep("overload_factor=0.5,1")};
    plan.replications = 2;
    plan.mode = RunMode::Compare;
    plan.per_replication = true;
    const auto res = run_sweep(plan);
    CHECK(res.errors.empty());
    CHECK_FALSE(res.numerical_failure);
    CHECK(exit_code(plan, res) == 0);
    CHECK(res.table.analytic);
    REQUIRE(res.table.rows.size() == 6);
    CHECK(res.table.rows[0].scenario_id == "P01/r0");
    CHECK(res.table.rows[1].scenario_id == "P01/r1");
    const auto& agg = res.table.rows[2];
    CHECK(agg.scenario_id == "P01");
    CHECK(agg.overload_factor == 0.5);
    CHECK(agg.bler.has_value());
    CHECK(agg.analytic_bler.has_value());
    CHECK(*agg.analytic_bler >= 0);
    CHECK(*agg.analytic_bler <= 1);
    CHECK(*agg.analytic_drop_rate <= *agg.analytic_bler + 1e-12);
}

TEST_CASE("run_sweep: analyze mode leaves simulated columns empty")
{
    RunPlan plan;
    plan.base = parse_config_text(small_config_text());
    plan.mode = RunMode::Analyze;
    const auto res = run_sweep(plan);
    REQUIRE(res.table.rows.size() == 1);
    const auto& r = res.table.rows[0];
    CHECK_FALSE(r.bler.has_value());
    CHECK_FALSE(r.attempts.has_value());
    CHECK(r.analytic_throughput.has_value());
    CHECK_FALSE(r.is_error());
}

TEST_CASE("exit code 3 only for analysis failures")
{
    RunPlan plan;
    SweepResult res;
    res.numerical_failure = true;
    CHECK(exit_code(plan, res) == 0);
    plan.mode = RunMode::Analyze;
    CHECK(exit_code(plan, res) == 3);
    res.numerical_failure = false;
    CHECK(exit_code(plan, res) == 0);
}
