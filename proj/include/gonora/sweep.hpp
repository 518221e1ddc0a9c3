#pragma once

#include "gonora/config.hpp"
#include "gonora/simulator.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gonora {

enum class Axis { OverloadFactor, RrhCount, P, W0, VMax };

std::string to_string(Axis axis);
std::optional<Axis> parse_axis(const std::string& name);

struct SweepAxis {
    Axis axis = Axis::OverloadFactor;
    std::vector<double> values;
};

/// Parses "name=v1,v2,...". Throws std::invalid_argument.
SweepAxis parse_sweep(const std::string& text);

/// Sets one axis value on a scenario. The overload factor changes the device
/// count with omega fixed. Throws std::invalid_argument when the value does
/// not map onto the field (non-integral counts, M not a whole number).
void apply_axis(ScenarioConfig& config, Axis axis, double value);

enum class RunMode { Simulate, Analyze, Compare };

std::string to_string(RunMode mode);

struct RunPlan {
    std::string config_path;
    ScenarioConfig base;
    std::vector<SweepAxis> sweeps; // cartesian product, last axis fastest
    int replications = 20;
    std::uint64_t seed = 1;
    std::string output;
    RunMode mode = RunMode::Simulate;
    int jobs = 1;
    bool per_replication = false;
    std::optional<std::string> report_input; // render an existing CSV instead of running
};

/// Raised for flag and config problems; `exit_code` is what the process
/// should return (0 for --help).
class UsageError : public std::runtime_error {
public:
    UsageError(int exit_code, const std::string& message)
        : std::runtime_error(message), exit_code_(exit_code)
    {
    }
    int exit_code() const { return exit_code_; }

private:
    int exit_code_;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> process_env(const std::string& name);

/// Flags: --config (required unless --report), --sweep axis=values
/// (repeatable), --replications, --seed, --output, --mode, --jobs,
/// --set key=value (repeatable), --per-replication, --report FILE.
/// GONORA_OUTPUT_DIR, when set, prefixes a relative output path.
RunPlan parse_cli(int argc, const char* const* argv, const EnvLookup& env = process_env);

struct SweepPoint {
    std::string id;
    ScenarioConfig config;
};

/// Expands the plan into validated scenario points, in sweep order.
/// Throws UsageError (exit 2) naming the offending axis value.
std::vector<SweepPoint> sweep_points(const RunPlan& plan);

/// One CSV row. The fixed columns come first; the analytic columns exist only
/// in analyze and compare output. Absent values are written as empty fields.
struct ResultRow {
    std::string scenario_id;
    double overload_factor = 0;
    int rrh_count = 0;
    double p = 0;
    std::optional<std::uint64_t> attempts;
    std::optional<double> bler;
    std::optional<double> bler_ci95;
    std::optional<double> norm_throughput;
    std::optional<double> thr_ci95;
    std::optional<double> drop_rate;
    std::optional<double> mean_delay_prps;
    std::uint64_t seed = 0;
    std::optional<double> analytic_bler;
    std::optional<double> analytic_throughput;
    std::optional<double> analytic_drop_rate;

    /// A point that failed: every metric, simulated and analytic, is absent.
    bool is_error() const;
    /// Per-replication rows carry ids of the form "<point>/r<index>".
    bool is_replication() const;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ResultTable {
    bool analytic = false;
    std::vector<ResultRow> rows;

    friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

const std::vector<std::string>& fixed_columns();
const std::vector<std::string>& analytic_columns();

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form of a double.
std::string format_number(double value);

void write_csv(std::ostream& out, const ResultTable& table);
ResultTable read_csv(std::istream& in);

ResultRow aggregate_row(const std::string& id, const ScenarioConfig& config, const Aggregate& agg);
std::vector<ResultRow> replication_rows(const std::string& id, const ScenarioConfig& config, const Aggregate& agg);

struct AnalyticPoint {
    FixedPoint solution;
    double bler = 0;
    double norm_throughput = 0;
    double drop_rate = 0;
};

/// Couples the chain with the Monte Carlo outcome abstraction and reads off
/// BLER, throughput and drop rate. Throws NumericalFailure on
/// non-convergence.
AnalyticPoint analyze(const ScenarioConfig& config);

struct SweepResult {
    ResultTable table;
    std::vector<std::string> errors; // one message per error row
    bool numerical_failure = false;
};

SweepResult run_sweep(const RunPlan& plan);

/// Human-readable summary: one table per (rrh_count, p) curve along the
/// overload factor, followed by any trend violations.
std::string emit_report(const ResultTable& table);

/// Exit code of a finished run: 3 when analysis failed to converge, else 0.
int exit_code(const RunPlan& plan, const SweepResult& result);

} // namespace gonora
