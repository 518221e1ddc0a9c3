#include "gonora/sweep.hpp"

#include "gonora/chain.hpp"
#include "gonora/reception.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace gonora {

namespace {

constexpr std::pair<Axis, const char*> kAxisNames[] = {
    {Axis::OverloadFactor, "overload_factor"},
    {Axis::RrhCount, "rrh_count"},
    {Axis::P, "p"},
    {Axis::W0, "w0"},
    {Axis::VMax, "v_max"},
};

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(text);
    while (std::getline(in, field, sep))
        out.push_back(field);
    if (!text.empty() && text.back() == sep)
        out.emplace_back();
    return out;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

int whole_number(double value, const char* what)
{
    const double r = std::round(value);
    if (std::abs(value - r) > 1e-9 * std::max(1.0, std::abs(value)))
        throw std::invalid_argument(std::string(what) + " must be a whole number, got " + format_number(value));
    return static_cast<int>(r);
}

std::string join_issues(const std::vector<ConfigIssue>& issues)
{
    std::string out;
    for (const auto& i : issues) {
        if (!out.empty())
            out += "; ";
        out += i.field + ": " + i.message;
    }
    return out;
}

} // namespace

std::string to_string(Axis axis)
{
    for (const auto& [a, name] : kAxisNames)
        if (a == axis)
            return name;
    return "?";
}

std::optional<Axis> parse_axis(const std::string& name)
{
    for (const auto& [a, n] : kAxisNames)
        if (name == n)
            return a;
    return std::nullopt;
}

SweepAxis parse_sweep(const std::string& text)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("expected axis=v1,v2,... but got '" + text + "'");
    const std::string name = trim(text.substr(0, eq));
    const auto axis = parse_axis(name);
    if (!axis)
        throw std::invalid_argument("unknown sweep axis '" + name +
                                    "' (expected overload_factor, rrh_count, p, w0 or v_max)");
    SweepAxis out{*axis, {}};
    for (const auto& raw : split(text.substr(eq + 1), ',')) {
        const std::string v = trim(raw);
        double x = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
            throw std::invalid_argument("sweep value '" + v + "' of " + name + " is not a number");
        out.values.push_back(x);
    }
    if (out.values.empty())
        throw std::invalid_argument("sweep axis " + name + " has no values");
    return out;
}

void apply_axis(ScenarioConfig& config, Axis axis, double value)
{
    switch (axis) {
    case Axis::OverloadFactor: {
        if (!(value > 0))
            throw std::invalid_argument("overload_factor must be positive");
        config.traffic.m_count = whole_number(value * config.prp.omega, "overload_factor x omega");
        break;
    }
    case Axis::RrhCount:
        config.deployment.rrh_count = whole_number(value, "rrh_count");
        break;
    case Axis::P:
        config.gonora.p = value;
        config.gonora.p_mode = SelectionMode::Fixed;
        break;
    case Axis::W0:
        config.gonora.w0 = whole_number(value, "w0");
        break;
    case Axis::VMax:
        config.gonora.v_max = whole_number(value, "v_max");
        break;
    }
}

std::string to_string(RunMode mode)
{
    switch (mode) {
    case RunMode::Simulate: return "simulate";
    case RunMode::Analyze: return "analyze";
    case RunMode::Compare: return "compare";
    }
    return "?";
}

std::optional<std::string> process_env(const std::string& name)
{
    if (const char* v = std::getenv(name.c_str()))
        return std::string(v);
    return std::nullopt;
}

RunPlan parse_cli(int argc, const char* const* argv, const EnvLookup& env)
{
    RunPlan plan;
    std::vector<std::string> sweeps, sets;
    std::optional<int> replications;
    std::optional<std::uint64_t> seed;
    std::string report;
    std::string output = "gonora_results.csv";
    std::string mode = "simulate";
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    CLI::App app{"GONORA grant-free random access simulator"};
    app.add_option("--config", plan.config_path, "scenario file (key = value lines)");
    app.add_option("--sweep", sweeps, "axis=v1,v2,... over overload_factor, rrh_count, p, w0, v_max")
        ->allow_extra_args(false);
    app.add_option("--replications", replications, "replications per point")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "master seed");
    app.add_option("--output", output, "CSV path");
    app.add_option("--mode", mode, "simulate | analyze | compare")
        ->check(CLI::IsMember({"simulate", "analyze", "compare"}));
    app.add_option("--jobs", jobs, "worker threads for replications")->check(CLI::PositiveNumber);
    app.add_option("--set", sets, "override one config entry, key=value")->allow_extra_args(false);
    app.add_flag("--per-replication", plan.per_replication, "also write one row per replication");
    app.add_option("--report", report, "summarize an existing CSV and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        throw UsageError(0, app.help());
    } catch (const CLI::ParseError& e) {
        throw UsageError(2, e.what());
    }

    plan.jobs = jobs;
    if (!report.empty()) {
        plan.report_input = report;
        return plan;
    }
    if (plan.config_path.empty())
        throw UsageError(2, "--config is required");

    try {
        plan.base = load_config(plan.config_path);
    } catch (const ConfigError& e) {
        throw UsageError(2, "--config " + plan.config_path + ": " + e.what());
    }
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw UsageError(2, "--set expects key=value, got '" + s + "'");
        try {
            set_config_value(plan.base, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw UsageError(2, "--set " + s + ": " + e.what());
        }
    }
    if (auto issues = validate(plan.base).issues; !issues.empty())
        throw UsageError(2, "--config " + plan.config_path + ": " + join_issues(issues));

    for (const auto& s : sweeps) {
        try {
            plan.sweeps.push_back(parse_sweep(s));
        } catch (const std::invalid_argument& e) {
            throw UsageError(2, std::string("--sweep: ") + e.what());
        }
    }
    plan.replications = replications.value_or(plan.base.replications);
    plan.seed = seed.value_or(plan.base.seed);
    plan.mode = mode == "analyze" ? RunMode::Analyze : mode == "compare" ? RunMode::Compare : RunMode::Simulate;

    std::filesystem::path out(output);
    if (out.is_relative())
        if (auto dir = env("GONORA_OUTPUT_DIR"); dir && !dir->empty())
            out = std::filesystem::path(*dir) / out;
    plan.output = out.string();

    sweep_points(plan); // reject bad axis values before any work starts
    return plan;
}

std::vector<SweepPoint> sweep_points(const RunPlan& plan)
{
    std::size_t total = 1;
    for (const auto& s : plan.sweeps)
        total *= s.values.size();

    std::vector<SweepPoint> points;
    points.reserve(total);
    const int width = std::max<int>(2, static_cast<int>(std::to_string(total).size()));
    for (std::size_t n = 0; n < total; ++n) {
        ScenarioConfig c = plan.base;
        c.replications = plan.replications;
        c.seed = plan.seed;
        std::size_t rest = n;
        std::vector<std::size_t> index(plan.sweeps.size());
        for (std::size_t a = plan.sweeps.size(); a-- > 0;) {
            index[a] = rest % plan.sweeps[a].values.size();
            rest /= plan.sweeps[a].values.size();
        }
        for (std::size_t a = 0; a < plan.sweeps.size(); ++a) {
            const auto& s = plan.sweeps[a];
            const double v = s.values[index[a]];
            try {
                apply_axis(c, s.axis, v);
            } catch (const std::invalid_argument& e) {
                throw UsageError(2, "--sweep " + to_string(s.axis) + "=" + format_number(v) + ": " + e.what());
            }
        }
        if (auto issues = validate(c).issues; !issues.empty())
            throw UsageError(2, "--sweep point " + std::to_string(n + 1) + ": " + join_issues(issues));
        std::string id = std::to_string(n + 1);
        id = "P" + std::string(width - std::min<int>(width, static_cast<int>(id.size())), '0') + id;
        points.push_back({std::move(id), std::move(c)});
    }
    return points;
}

// ---------------------------------------------------------------------------
// CSV

bool ResultRow::is_error() const
{
    return !attempts && !bler && !norm_throughput && !drop_rate && !mean_delay_prps && !analytic_bler &&
           !analytic_throughput && !analytic_drop_rate;
}

bool ResultRow::is_replication() const
{
    return scenario_id.find("/r") != std::string::npos;
}

const std::vector<std::string>& fixed_columns()
{
    static const std::vector<std::string> cols{"scenario_id",  "overload_factor", "rrh_count", "p",
                                               "attempts",     "bler",            "bler_ci95", "norm_throughput",
                                               "thr_ci95",     "drop_rate",       "mean_delay_prps", "seed"};
    return cols;
}

const std::vector<std::string>& analytic_columns()
{
    static const std::vector<std::string> cols{"analytic_bler", "analytic_throughput", "analytic_drop_rate"};
    return cols;
}

std::string format_number(double value)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc())
        throw std::runtime_error("cannot format number");
    return std::string(buf, ptr);
}

namespace {

std::string opt(const std::optional<double>& v)
{
    return v ? format_number(*v) : std::string();
}

template <typename T>
T parse_field(const std::string& text, int line, const std::string& column)
{
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        throw CsvError("line " + std::to_string(line) + ": bad " + column + " value '" + text + "'");
    return value;
}

template <typename T>
std::optional<T> parse_optional(const std::string& text, int line, const std::string& column)
{
    if (text.empty())
        return std::nullopt;
    return parse_field<T>(text, line, column);
}

} // namespace

void write_csv(std::ostream& out, const ResultTable& table)
{
    auto header = fixed_columns();
    if (table.analytic)
        header.insert(header.end(), analytic_columns().begin(), analytic_columns().end());
    for (std::size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << '\n';

    for (const auto& r : table.rows) {
        out << r.scenario_id << ',' << format_number(r.overload_factor) << ',' << r.rrh_count << ','
            << format_number(r.p) << ',' << (r.attempts ? std::to_string(*r.attempts) : std::string()) << ','
            << opt(r.bler) << ',' << opt(r.bler_ci95) << ',' << opt(r.norm_throughput) << ',' << opt(r.thr_ci95)
            << ',' << opt(r.drop_rate) << ',' << opt(r.mean_delay_prps) << ',' << r.seed;
        if (table.analytic)
            out << ',' << opt(r.analytic_bler) << ',' << opt(r.analytic_throughput) << ','
                << opt(r.analytic_drop_rate);
        out << '\n';
    }
}

ResultTable read_csv(std::istream& in)
{
    auto chomp = [](std::string& s) {
        if (!s.empty() && s.back() == '\r')
            s.pop_back();
    };
    std::string line;
    if (!std::getline(in, line))
        throw CsvError("empty input: missing header");
    chomp(line);

    ResultTable table;
    const auto header = split(line, ',');
    auto with_analytic = fixed_columns();
    with_analytic.insert(with_analytic.end(), analytic_columns().begin(), analytic_columns().end());
    if (header == with_analytic)
        table.analytic = true;
    else if (header != fixed_columns())
        throw CsvError("line 1: unexpected header '" + line + "'");

    int number = 1;
    while (std::getline(in, line)) {
        ++number;
        chomp(line);
        if (line.empty())
            continue;
        const auto f = split(line, ',');
        if (f.size() != header.size())
            throw CsvError("line " + std::to_string(number) + ": expected " + std::to_string(header.size()) +
                           " fields, found " + std::to_string(f.size()));
        if (f[0].empty())
            throw CsvError("line " + std::to_string(number) + ": empty scenario_id");
        ResultRow r;
        r.scenario_id = f[0];
        r.overload_factor = parse_field<double>(f[1], number, header[1]);
        r.rrh_count = parse_field<int>(f[2], number, header[2]);
        r.p = parse_field<double>(f[3], number, header[3]);
        r.attempts = parse_optional<std::uint64_t>(f[4], number, header[4]);
        r.bler = parse_optional<double>(f[5], number, header[5]);
        r.bler_ci95 = parse_optional<double>(f[6], number, header[6]);
        r.norm_throughput = parse_optional<double>(f[7], number, header[7]);
        r.thr_ci95 = parse_optional<double>(f[8], number, header[8]);
        r.drop_rate = parse_optional<double>(f[9], number, header[9]);
        r.mean_delay_prps = parse_optional<double>(f[10], number, header[10]);
        r.seed = parse_field<std::uint64_t>(f[11], number, header[11]);
        if (table.analytic) {
            r.analytic_bler = parse_optional<double>(f[12], number, header[12]);
            r.analytic_throughput = parse_optional<double>(f[13], number, header[13]);
            r.analytic_drop_rate = parse_optional<double>(f[14], number, header[14]);
        }
        table.rows.push_back(std::move(r));
    }
    return table;
}

// ---------------------------------------------------------------------------
// Rows

namespace {

ResultRow point_row(const std::string& id, const ScenarioConfig& config, std::uint64_t seed)
{
    ResultRow r;
    r.scenario_id = id;
    r.overload_factor = overload_factor(config);
    r.rrh_count = config.deployment.rrh_count;
    r.p = effective_selection_probability(config);
    r.seed = seed;
    return r;
}

std::optional<double> value_if(const Estimate& e)
{
    return e.defined() ? std::optional<double>(e.mean) : std::nullopt;
}

std::optional<double> ci_if(const Estimate& e)
{
    return e.defined() ? std::optional<double>(e.ci95) : std::nullopt;
}

} // namespace

ResultRow aggregate_row(const std::string& id, const ScenarioConfig& config, const Aggregate& agg)
{
    ResultRow r = point_row(id, config, agg.master_seed);
    r.attempts = agg.attempts;
    r.bler = value_if(agg.bler);
    r.bler_ci95 = ci_if(agg.bler);
    r.norm_throughput = value_if(agg.norm_throughput);
    r.thr_ci95 = ci_if(agg.norm_throughput);
    r.drop_rate = value_if(agg.drop_rate);
    r.mean_delay_prps = value_if(agg.mean_delay);
    return r;
}

std::vector<ResultRow> replication_rows(const std::string& id, const ScenarioConfig& config, const Aggregate& agg)
{
    std::vector<ResultRow> rows;
    for (std::size_t i = 0; i < agg.replications.size(); ++i) {
        const Metrics& m = agg.replications[i];
        ResultRow r = point_row(id + "/r" + std::to_string(i), config, agg.seeds[i]);
        r.attempts = m.attempts;
        r.bler = bler(m);
        r.norm_throughput = normalized_throughput(m, config.prp);
        r.drop_rate = drop_rate(m);
        r.mean_delay_prps = mean_delay(m);
        rows.push_back(std::move(r));
    }
    return rows;
}

AnalyticPoint analyze(const ScenarioConfig& config)
{
    double q = 1.0;
    if (!config.traffic.saturated) {
        double lambda = 0;
        for (int m = 0; m < config.traffic.m_count; ++m)
            lambda += config.traffic.lambda_of(m);
        q = arrival_probability(lambda / config.traffic.m_count, config.prp.tau);
    }
    OutcomeAbstraction model(config);
    AnalyticPoint out{fixed_point_solve(config.gonora, q, [&](double a) { return model(a); })};

    const auto& pi = out.solution.pi;
    const auto& o = out.solution.outcomes;
    double tx = 0, fail = 0, success = 0;
    for (int v = 0; v < o.stages(); ++v) {
        const double t = pi[ChainState::transmit(v)];
        tx += t;
        fail += t * o.p_error[v];
        success += t * o.p_success[v];
    }
    out.bler = tx > 0 ? fail / tx : o.p_error.front();
    out.norm_throughput = config.traffic.m_count * success / config.prp.omega;
    out.drop_rate = drop_probability(o);
    return out;
}

SweepResult run_sweep(const RunPlan& plan)
{
    SweepResult result;
    result.table.analytic = plan.mode != RunMode::Simulate;
    for (const SweepPoint& point : sweep_points(plan)) {
        const auto valid = validate(point.config);
        ResultRow row = point_row(point.id, point.config, plan.seed);
        std::vector<ResultRow> reps;
        if (plan.mode != RunMode::Analyze) {
            try {
                const Aggregate agg = run_replications(valid.value(), plan.replications, plan.seed, plan.jobs);
                row = aggregate_row(point.id, point.config, agg);
                if (plan.per_replication)
                    reps = replication_rows(point.id, point.config, agg);
            } catch (const std::exception& e) {
                result.errors.push_back(point.id + ": simulation failed: " + e.what());
            }
        }
        if (plan.mode != RunMode::Simulate) {
            try {
                const AnalyticPoint a = analyze(point.config);
                row.analytic_bler = a.bler;
                row.analytic_throughput = a.norm_throughput;
                row.analytic_drop_rate = a.drop_rate;
            } catch (const NumericalFailure& e) {
                result.numerical_failure = true;
                result.errors.push_back(point.id + ": analysis did not converge: " + e.what());
            } catch (const std::exception& e) {
                result.errors.push_back(point.id + ": analysis failed: " + e.what());
            }
        }
        result.table.rows.insert(result.table.rows.end(), reps.begin(), reps.end());
        result.table.rows.push_back(std::move(row));
    }
    return result;
}

int exit_code(const RunPlan& plan, const SweepResult& result)
{
    return plan.mode != RunMode::Simulate && result.numerical_failure ? 3 : 0;
}

} // namespace gonora
