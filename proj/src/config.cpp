#include "gonora/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace gonora {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double dbm_to_watts(double dbm) { return db_to_linear(dbm) * 1e-3; }

double ChannelSpec::ref_gain() const { return db_to_linear(-ref_loss_db); }
double ChannelSpec::noise_watts() const { return dbm_to_watts(noise_dbm); }

int ScenarioConfig::warmup_prps() const
{
    return static_cast<int>(std::lround(warmup_fraction * horizon));
}

namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues)
{
    std::string out;
    for (const auto& issue : issues) {
        if (!out.empty())
            out += "; ";
        out += issue.field + ": " + issue.message;
    }
    return out;
}

} // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues))
{
}

const ValidatedConfig& ValidationResult::value() const
{
    if (!config)
        throw ConfigError(issues);
    return *config;
}

ValidationResult validate(const ScenarioConfig& c)
{
    std::vector<ConfigIssue> issues;
    auto require = [&](bool ok, const char* field, const char* message) {
        if (!ok)
            issues.push_back({field, message});
    };

    require(c.prp.omega >= 1, "prp.omega", "omega must be ≥ 1");
    require(c.prp.tau > 0, "prp.tau", "tau must be > 0");
    require(c.prp.beta > 0, "prp.beta", "beta must be > 0");
    require(c.prp.gamma >= 1, "prp.gamma", "gamma must be ≥ 1");
    require(c.prp.ru_payload_bits >= 1, "prp.ru_payload_bits", "ru_payload_bits must be ≥ 1");
    if (c.prp.beta > 0 && c.prp.omega >= 1 && c.prp.ru_payload_bits >= 1) {
        const double grid = c.prp.grid_capacity_bits();
        require(std::abs(c.prp.beta - grid) <= 1e-9 * grid, "prp.beta",
                "beta must equal omega × ru_payload_bits");
    }

    require(c.gonora.w0 >= 1, "gonora.w0", "w0 must be ≥ 1");
    require(c.gonora.v_max >= 0, "gonora.v_max", "v_max must be ≥ 0");
    require(c.gonora.v_max <= 20, "gonora.v_max", "v_max must be ≤ 20");
    require(c.gonora.p >= 0 && c.gonora.p <= 1, "gonora.p", "p must lie in [0,1]");

    const auto& t = c.traffic;
    require(t.m_count >= 1, "traffic.m_count", "m_count must be ≥ 1");
    auto per_device_ok = [&](const std::vector<double>& v) {
        return v.size() == 1 || (t.m_count >= 1 && v.size() == static_cast<std::size_t>(t.m_count));
    };
    require(per_device_ok(t.alpha), "traffic.alpha", "alpha needs 1 or m_count entries");
    require(per_device_ok(t.lambda), "traffic.lambda", "lambda needs 1 or m_count entries");
    bool alpha_pos = true, lambda_nonneg = true;
    for (double a : t.alpha)
        alpha_pos = alpha_pos && a > 0;
    for (double l : t.lambda)
        lambda_nonneg = lambda_nonneg && l >= 0;
    require(alpha_pos, "traffic.alpha", "alpha must be > 0");
    require(lambda_nonneg, "traffic.lambda", "lambda must be ≥ 0");

    const auto& d = c.deployment;
    require(d.region_radius > 0, "deployment.region_radius", "region_radius must be > 0");
    require(d.region_width > 0, "deployment.region_width", "region_width must be > 0");
    require(d.region_height > 0, "deployment.region_height", "region_height must be > 0");
    require(d.rrh_count >= 1, "deployment.rrh_count", "rrh_count must be ≥ 1");
    require(d.rrh_ring_fraction >= 0 && d.rrh_ring_fraction <= 1, "deployment.rrh_ring_fraction",
            "rrh_ring_fraction must lie in [0,1]");
    require(d.device_tx_power > 0, "deployment.device_tx_power", "device_tx_power must be > 0");
    require(d.macro_density >= 0, "deployment.macro_density", "macro_density must be ≥ 0");
    require(d.pico_density >= 0, "deployment.pico_density", "pico_density must be ≥ 0");
    require(d.macro_power > 0, "deployment.macro_power", "macro_power must be > 0");
    require(d.pico_power > 0, "deployment.pico_power", "pico_power must be > 0");
    require(d.min_distance > 0, "deployment.min_distance", "min_distance must be > 0");
    require(d.cluster_parent_density >= 0, "deployment.cluster_parent_density",
            "cluster_parent_density must be ≥ 0");
    require(d.cluster_mean_children >= 0, "deployment.cluster_mean_children",
            "cluster_mean_children must be ≥ 0");
    require(d.cluster_sigma > 0, "deployment.cluster_sigma", "cluster_sigma must be > 0");

    require(c.channel.path_loss_exponent > 2, "channel.path_loss_exponent",
            "path_loss_exponent must be > 2");
    require(std::isfinite(c.channel.ref_loss_db), "channel.ref_loss_db", "ref_loss_db must be finite");
    require(std::isfinite(c.channel.noise_dbm), "channel.noise_dbm", "noise_dbm must be finite");

    const auto& r = c.reception;
    require(r.sic_rounds >= 1, "reception.sic_rounds", "sic_rounds must be ≥ 1");
    require(r.abstraction_samples >= 1, "reception.abstraction_samples",
            "abstraction_samples must be ≥ 1");
    require(std::isfinite(r.sinr_threshold_db), "reception.sinr_threshold_db",
            "sinr_threshold_db must be finite");
    if (r.mode == ReceptionMode::Injected) {
        require(r.injected_pe.size() == static_cast<std::size_t>(c.gonora.v_max) + 1,
                "reception.injected_pe", "injected_pe needs v_max + 1 entries");
    }
    bool pe_ok = true;
    for (double pe : r.injected_pe)
        pe_ok = pe_ok && pe >= 0 && pe <= 1;
    require(pe_ok, "reception.injected_pe", "injected_pe entries must lie in [0,1]");

    require(c.horizon >= 1, "sim.horizon", "horizon must be ≥ 1");
    require(c.warmup_fraction >= 0, "sim.warmup_fraction", "warmup_fraction must be ≥ 0");
    require(c.replications >= 1, "sim.replications", "replications must be ≥ 1");

    ValidationResult result;
    result.issues = std::move(issues);
    if (result.issues.empty())
        result.config = ValidatedConfig(c);
    return result;
}

// ---------------------------------------------------------------------------
// key = value parsing

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected)
{
    throw ConfigError({{key, "cannot parse '" + value + "' as " + expected}});
}

double to_double(const std::string& key, const std::string& value)
{
    double out = 0;
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end)
        bad_value(key, value, "a number");
    return out;
}

long long to_integer(const std::string& key, const std::string& value)
{
    long long out = 0;
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end)
        bad_value(key, value, "an integer");
    return out;
}

int to_int(const std::string& key, const std::string& value)
{
    const long long v = to_integer(key, value);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        bad_value(key, value, "a 32-bit integer");
    return static_cast<int>(v);
}

std::uint64_t to_u64(const std::string& key, const std::string& value)
{
    std::uint64_t out = 0;
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end)
        bad_value(key, value, "an unsigned integer");
    return out;
}

bool to_bool(const std::string& key, const std::string& value)
{
    if (value == "true" || value == "1" || value == "yes")
        return true;
    if (value == "false" || value == "0" || value == "no")
        return false;
    bad_value(key, value, "a boolean");
}

std::vector<double> to_list(const std::string& key, const std::string& value)
{
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(to_double(key, trim(item)));
    if (out.empty())
        bad_value(key, value, "a comma-separated list");
    return out;
}

template <typename Enum>
Enum to_enum(const std::string& key, const std::string& value,
             std::initializer_list<std::pair<const char*, Enum>> names)
{
    for (const auto& [name, e] : names)
        if (value == name)
            return e;
    std::string expected = "one of";
    for (const auto& [name, e] : names)
        expected += std::string(" ") + name;
    bad_value(key, value, expected.c_str());
}

std::string fmt_double(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string fmt_list(const std::vector<double>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? "," : "") + fmt_double(v[i]);
    return out;
}

} // namespace

void set_config_value(ScenarioConfig& c, const std::string& key, const std::string& value)
{
    using Setter = std::function<void(const std::string&)>;
    const std::map<std::string, Setter> setters{
        {"prp.omega", [&](auto& v) { c.prp.omega = to_int(key, v); }},
        {"prp.tau", [&](auto& v) { c.prp.tau = to_double(key, v); }},
        {"prp.beta", [&](auto& v) { c.prp.beta = to_double(key, v); }},
        {"prp.gamma", [&](auto& v) { c.prp.gamma = to_double(key, v); }},
        {"prp.ru_payload_bits", [&](auto& v) { c.prp.ru_payload_bits = to_int(key, v); }},
        {"gonora.w0", [&](auto& v) { c.gonora.w0 = to_int(key, v); }},
        {"gonora.v_max", [&](auto& v) { c.gonora.v_max = to_int(key, v); }},
        {"gonora.p", [&](auto& v) { c.gonora.p = to_double(key, v); }},
        {"gonora.p_mode",
         [&](auto& v) {
             c.gonora.p_mode = to_enum<SelectionMode>(
                 key, v, {{"fixed", SelectionMode::Fixed}, {"from_load", SelectionMode::FromLoad}});
         }},
        {"traffic.m_count", [&](auto& v) { c.traffic.m_count = to_int(key, v); }},
        {"traffic.alpha", [&](auto& v) { c.traffic.alpha = to_list(key, v); }},
        {"traffic.lambda", [&](auto& v) { c.traffic.lambda = to_list(key, v); }},
        {"traffic.size_model",
         [&](auto& v) {
             c.traffic.size_model = to_enum<PacketSizeModel>(
                 key, v,
                 {{"deterministic", PacketSizeModel::Deterministic},
                  {"geometric", PacketSizeModel::Geometric}});
         }},
        {"traffic.saturated", [&](auto& v) { c.traffic.saturated = to_bool(key, v); }},
        {"deployment.region_shape",
         [&](auto& v) {
             c.deployment.region_shape =
                 to_enum<RegionShape>(key, v, {{"disc", RegionShape::Disc}, {"rect", RegionShape::Rect}});
         }},
        {"deployment.region_radius", [&](auto& v) { c.deployment.region_radius = to_double(key, v); }},
        {"deployment.region_width", [&](auto& v) { c.deployment.region_width = to_double(key, v); }},
        {"deployment.region_height", [&](auto& v) { c.deployment.region_height = to_double(key, v); }},
        {"deployment.rrh_count", [&](auto& v) { c.deployment.rrh_count = to_int(key, v); }},
        {"deployment.rrh_placement",
         [&](auto& v) {
             c.deployment.rrh_placement = to_enum<RrhPlacement>(
                 key, v,
                 {{"ring", RrhPlacement::Ring}, {"grid", RrhPlacement::Grid},
                  {"uniform", RrhPlacement::Uniform}});
         }},
        {"deployment.rrh_ring_fraction",
         [&](auto& v) { c.deployment.rrh_ring_fraction = to_double(key, v); }},
        {"deployment.device_tx_power", [&](auto& v) { c.deployment.device_tx_power = to_double(key, v); }},
        {"deployment.macro_density", [&](auto& v) { c.deployment.macro_density = to_double(key, v); }},
        {"deployment.pico_density", [&](auto& v) { c.deployment.pico_density = to_double(key, v); }},
        {"deployment.macro_power", [&](auto& v) { c.deployment.macro_power = to_double(key, v); }},
        {"deployment.pico_power", [&](auto& v) { c.deployment.pico_power = to_double(key, v); }},
        {"deployment.min_distance", [&](auto& v) { c.deployment.min_distance = to_double(key, v); }},
        {"deployment.cluster_parent_density",
         [&](auto& v) { c.deployment.cluster_parent_density = to_double(key, v); }},
        {"deployment.cluster_mean_children",
         [&](auto& v) { c.deployment.cluster_mean_children = to_double(key, v); }},
        {"deployment.cluster_sigma", [&](auto& v) { c.deployment.cluster_sigma = to_double(key, v); }},
        {"channel.path_loss_exponent", [&](auto& v) { c.channel.path_loss_exponent = to_double(key, v); }},
        {"channel.ref_loss_db", [&](auto& v) { c.channel.ref_loss_db = to_double(key, v); }},
        {"channel.fading",
         [&](auto& v) {
             c.channel.fading =
                 to_enum<FadingModel>(key, v, {{"none", FadingModel::None}, {"rayleigh", FadingModel::Rayleigh}});
         }},
        {"channel.noise_dbm", [&](auto& v) { c.channel.noise_dbm = to_double(key, v); }},
        {"reception.mode",
         [&](auto& v) {
             c.reception.mode = to_enum<ReceptionMode>(
                 key, v,
                 {{"mi", ReceptionMode::MutualInformation}, {"threshold", ReceptionMode::Threshold},
                  {"injected", ReceptionMode::Injected}});
         }},
        {"reception.sinr_threshold_db", [&](auto& v) { c.reception.sinr_threshold_db = to_double(key, v); }},
        {"reception.sic_rounds", [&](auto& v) { c.reception.sic_rounds = to_int(key, v); }},
        {"reception.abstraction_samples",
         [&](auto& v) { c.reception.abstraction_samples = to_int(key, v); }},
        {"reception.injected_pe", [&](auto& v) { c.reception.injected_pe = to_list(key, v); }},
        {"sim.horizon", [&](auto& v) { c.horizon = to_int(key, v); }},
        {"sim.warmup_fraction", [&](auto& v) { c.warmup_fraction = to_double(key, v); }},
        {"sim.replications", [&](auto& v) { c.replications = to_int(key, v); }},
        {"sim.seed", [&](auto& v) { c.seed = to_u64(key, v); }},
    };
    const auto it = setters.find(key);
    if (it == setters.end())
        throw ConfigError({{key, "unknown key"}});
    it->second(value);
}

ScenarioConfig parse_config(std::istream& in)
{
    ScenarioConfig config;
    std::vector<ConfigIssue> issues;
    bool beta_given = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty())
            continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            issues.push_back({"line " + std::to_string(line_no), "expected 'key = value'"});
            continue;
        }
        const std::string key = trim(std::string_view(stripped).substr(0, eq));
        const std::string value = trim(std::string_view(stripped).substr(eq + 1));
        try {
            set_config_value(config, key, value);
            beta_given = beta_given || key == "prp.beta";
        } catch (const ConfigError& e) {
            issues.insert(issues.end(), e.issues().begin(), e.issues().end());
        }
    }
    if (!issues.empty())
        throw ConfigError(std::move(issues));
    if (!beta_given)
        config.prp.beta = config.prp.grid_capacity_bits();
    return config;
}

ScenarioConfig parse_config_text(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

ScenarioConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError({{"config", "cannot open '" + path + "'"}});
    return parse_config(in);
}

std::string to_config_text(const ScenarioConfig& c)
{
    auto name = [](auto e, std::initializer_list<const char*> names) {
        return std::string(*(names.begin() + static_cast<int>(e)));
    };
    std::ostringstream out;
    out << "prp.omega = " << c.prp.omega << '\n'
        << "prp.tau = " << fmt_double(c.prp.tau) << '\n'
        << "prp.beta = " << fmt_double(c.prp.beta) << '\n'
        << "prp.gamma = " << fmt_double(c.prp.gamma) << '\n'
        << "prp.ru_payload_bits = " << c.prp.ru_payload_bits << '\n'
        << "gonora.w0 = " << c.gonora.w0 << '\n'
        << "gonora.v_max = " << c.gonora.v_max << '\n'
        << "gonora.p = " << fmt_double(c.gonora.p) << '\n'
        << "gonora.p_mode = " << name(c.gonora.p_mode, {"fixed", "from_load"}) << '\n'
        << "traffic.m_count = " << c.traffic.m_count << '\n'
        << "traffic.alpha = " << fmt_list(c.traffic.alpha) << '\n'
        << "traffic.lambda = " << fmt_list(c.traffic.lambda) << '\n'
        << "traffic.size_model = " << name(c.traffic.size_model, {"deterministic", "geometric"}) << '\n'
        << "traffic.saturated = " << (c.traffic.saturated ? "true" : "false") << '\n'
        << "deployment.region_shape = " << name(c.deployment.region_shape, {"disc", "rect"}) << '\n'
        << "deployment.region_radius = " << fmt_double(c.deployment.region_radius) << '\n'
        << "deployment.region_width = " << fmt_double(c.deployment.region_width) << '\n'
        << "deployment.region_height = " << fmt_double(c.deployment.region_height) << '\n'
        << "deployment.rrh_count = " << c.deployment.rrh_count << '\n'
        << "deployment.rrh_placement = " << name(c.deployment.rrh_placement, {"ring", "grid", "uniform"}) << '\n'
        << "deployment.rrh_ring_fraction = " << fmt_double(c.deployment.rrh_ring_fraction) << '\n'
        << "deployment.device_tx_power = " << fmt_double(c.deployment.device_tx_power) << '\n'
        << "deployment.macro_density = " << fmt_double(c.deployment.macro_density) << '\n'
        << "deployment.pico_density = " << fmt_double(c.deployment.pico_density) << '\n'
        << "deployment.macro_power = " << fmt_double(c.deployment.macro_power) << '\n'
        << "deployment.pico_power = " << fmt_double(c.deployment.pico_power) << '\n'
        << "deployment.min_distance = " << fmt_double(c.deployment.min_distance) << '\n'
        << "deployment.cluster_parent_density = " << fmt_double(c.deployment.cluster_parent_density) << '\n'
        << "deployment.cluster_mean_children = " << fmt_double(c.deployment.cluster_mean_children) << '\n'
        << "deployment.cluster_sigma = " << fmt_double(c.deployment.cluster_sigma) << '\n'
        << "channel.path_loss_exponent = " << fmt_double(c.channel.path_loss_exponent) << '\n'
        << "channel.ref_loss_db = " << fmt_double(c.channel.ref_loss_db) << '\n'
        << "channel.fading = " << name(c.channel.fading, {"none", "rayleigh"}) << '\n'
        << "channel.noise_dbm = " << fmt_double(c.channel.noise_dbm) << '\n'
        << "reception.mode = " << name(c.reception.mode, {"mi", "threshold", "injected"}) << '\n'
        << "reception.sinr_threshold_db = " << fmt_double(c.reception.sinr_threshold_db) << '\n'
        << "reception.sic_rounds = " << c.reception.sic_rounds << '\n'
        << "reception.abstraction_samples = " << c.reception.abstraction_samples << '\n';
    if (!c.reception.injected_pe.empty())
        out << "reception.injected_pe = " << fmt_list(c.reception.injected_pe) << '\n';
    out << "sim.horizon = " << c.horizon << '\n'
        << "sim.warmup_fraction = " << fmt_double(c.warmup_fraction) << '\n'
        << "sim.replications = " << c.replications << '\n'
        << "sim.seed = " << c.seed << '\n';
    return out.str();
}

} // namespace gonora
