#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gonora {

/// The physical resource pool: one PRP is a slot of duration `tau` holding
/// `omega` resource units.
struct PrpConfig {
    int omega = 64;
    double tau = 1e-3;            // seconds
    double beta = 1024.0;          // bits per PRP without superposition
    double gamma = 1.0;           // average resource reuse factor
    int ru_payload_bits = 16;

    /// W_v = 2^v * w0 lives in GonoraParams; this is the per-PRP capacity
    /// implied by the RU grid.
    double grid_capacity_bits() const { return static_cast<double>(omega) * ru_payload_bits; }
};

enum class SelectionMode { Fixed, FromLoad };

struct GonoraParams {
    int w0 = 4;
    int v_max = 3;
    double p = 0.3;
    SelectionMode p_mode = SelectionMode::Fixed;

    /// Contention window of repetition stage v.
    int window(int v) const { return w0 << v; }
};

enum class PacketSizeModel { Deterministic, Geometric };

/// Per-device traffic. `alpha` and `lambda` have either one entry (shared by
/// every device) or `m_count` entries.
struct TrafficProfile {
    int m_count = 64;
    std::vector<double> alpha{16.0};   // mean packet size, bits
    std::vector<double> lambda{100.0}; // packets per second
    PacketSizeModel size_model = PacketSizeModel::Deterministic;
    bool saturated = false;

    double alpha_of(int m) const { return alpha.size() == 1 ? alpha.front() : alpha.at(m); }
    double lambda_of(int m) const { return lambda.size() == 1 ? lambda.front() : lambda.at(m); }
};

enum class RegionShape { Disc, Rect };
enum class RrhPlacement { Ring, Grid, Uniform };

struct DeploymentSpec {
    RegionShape region_shape = RegionShape::Disc;
    double region_radius = 150.0;  // m, disc
    double region_width = 300.0;   // m, rect
    double region_height = 300.0;  // m, rect
    int rrh_count = 2;
    RrhPlacement rrh_placement = RrhPlacement::Ring;
    double rrh_ring_fraction = 0.5; // ring radius as a fraction of the disc radius
    double device_tx_power = 0.2;   // W
    // Point-process parameters used by topology dumps and multi-tier studies.
    double macro_density = 1e-6;    // per m^2
    double pico_density = 2e-5;     // per m^2
    double macro_power = 39.8;      // W (46 dBm)
    double pico_power = 0.25;       // W (24 dBm)
    double min_distance = 50.0;     // m, Matern hard-core distance
    double cluster_parent_density = 1e-5;
    double cluster_mean_children = 4.0;
    double cluster_sigma = 20.0;
};

enum class FadingModel { None, Rayleigh };

struct ChannelSpec {
    double path_loss_exponent = 4.0;
    double ref_loss_db = 38.0;     // loss at 1 m
    FadingModel fading = FadingModel::Rayleigh;
    double noise_dbm = -110.0;     // per RU

    double ref_gain() const;
    double noise_watts() const;
};

enum class ReceptionMode { MutualInformation, Threshold, Injected };

struct ReceptionSpec {
    ReceptionMode mode = ReceptionMode::MutualInformation;
    double sinr_threshold_db = 0.0;
    int sic_rounds = 8;
    int abstraction_samples = 200;
    /// Per-stage error probabilities used in place of the PHY when mode is Injected.
    std::vector<double> injected_pe;
};

struct ScenarioConfig {
    PrpConfig prp;
    GonoraParams gonora;
    TrafficProfile traffic;
    DeploymentSpec deployment;
    ChannelSpec channel;
    ReceptionSpec reception;
    int horizon = 2000;            // measured PRPs
    double warmup_fraction = 0.1;
    int replications = 20;
    std::uint64_t seed = 1;

    int warmup_prps() const;
};

struct ConfigIssue {
    std::string field;
    std::string message;

    friend bool operator==(const ConfigIssue&, const ConfigIssue&) = default;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

/// A scenario that passed validation. Only `validate` constructs one.
class ValidatedConfig {
public:
    const ScenarioConfig& get() const { return config_; }
    const ScenarioConfig* operator->() const { return &config_; }

private:
    friend struct ValidationResult validate(const ScenarioConfig&);
    explicit ValidatedConfig(ScenarioConfig c) : config_(std::move(c)) {}
    ScenarioConfig config_;
};

struct ValidationResult {
    std::optional<ValidatedConfig> config;
    std::vector<ConfigIssue> issues;

    bool ok() const { return config.has_value(); }
    /// Returns the validated config or throws ConfigError with every issue.
    const ValidatedConfig& value() const;
};

/// Checks every invariant and reports all violations, not just the first.
ValidationResult validate(const ScenarioConfig& config);

/// Flat `key = value` text, one entry per line, `#` starts a comment.
/// Keys mirror ScenarioConfig field paths (prp.omega, gonora.w0, ...).
/// Unknown keys and unparsable values are reported as ConfigError.
ScenarioConfig parse_config(std::istream& in);
ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Applies one `key = value` assignment; used by the parser and by sweeps.
void set_config_value(ScenarioConfig& config, const std::string& key, const std::string& value);

/// Canonical dump in the same format parse_config reads.
std::string to_config_text(const ScenarioConfig& config);

double db_to_linear(double db);
double dbm_to_watts(double dbm);

} // namespace gonora
