#pragma once

#include "gonora/chain.hpp"
#include "gonora/config.hpp"
#include "gonora/deployment.hpp"
#include "gonora/reception.hpp"
#include "gonora/traffic.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

namespace gonora {

struct Packet {
    std::int64_t bits_remaining = 0;
    std::int64_t created = 0; // arrival slot
    bool measured = false;    // arrived after warm-up
};

struct DeviceRecord {
    DeviceId id = 0;
    ChainState state;                 // Idle or Backoff(v, k); k == 0 transmits
    std::optional<Packet> pending;    // in service; present iff not Idle
    std::deque<Packet> queue;         // waiting behind `pending`
    Point position;
    double tx_power = 0;
    bool idle_last_prp = true;
};

struct Metrics {
    int omega = 1;
    std::int64_t measured_prps = 0;
    std::uint64_t attempts = 0;
    std::uint64_t failed_attempts = 0;
    std::uint64_t packets_offered = 0;
    std::uint64_t packets_delivered = 0;
    std::uint64_t packets_dropped = 0;
    std::uint64_t packets_in_flight = 0;
    std::vector<std::uint32_t> successes_per_prp;
    std::vector<std::int64_t> delays;              // PRPs, delivered packets
    std::vector<std::uint64_t> stage_attempts;     // per repetition stage
    std::vector<std::uint64_t> stage_failures;
    /// cycle_attempts[n] = segment cycles (success or drop) that used n attempts.
    std::vector<std::uint64_t> cycle_attempts;
    std::uint64_t cycles_dropped = 0;
    /// Device-PRPs spent in each chain state, indexed by ChainLayout.
    std::vector<std::uint64_t> occupancy;

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

struct PrpReport {
    std::int64_t slot = 0;
    int attempts = 0;
    int successes = 0;
    int drops = 0;
    int deliveries = 0;
    std::vector<DeviceId> transmitters;
    std::vector<DeviceId> decoded;
};

struct AckEntry {
    DeviceId device = 0;
    bool success = false;
    std::int64_t segment_bits = 0;
    std::int64_t prp = 0;
};

/// One replication: devices driven through the backoff state machine,
/// PRP by PRP, against the reception model.
class Simulator {
public:
    Simulator(const ValidatedConfig& config, std::uint64_t seed);

    /// Advances one PRP:
    /// 1. ACKs of the previous PRP: decoded devices bank their segment and go
    ///    Idle, others move to stage v+1 with a fresh counter or drop at V.
    /// 2. Devices that were Idle for the whole previous PRP and hold a packet
    ///    enter stage 0 with a uniform counter in [0, W_0).
    /// 3. Counter-zero devices transmit; the rest count down.
    /// 4. Arrivals of this slot join the device queues.
    PrpReport step_prp();

    /// Queues a packet as if it had arrived during the previous PRP.
    void enqueue(DeviceId device, std::int64_t bits);

    /// Runs warm-up plus horizon PRPs and returns the measured metrics.
    Metrics run();

    std::int64_t slot() const { return slot_; }
    const std::vector<DeviceRecord>& devices() const { return devices_; }
    const std::vector<AckEntry>& pending_acks() const { return acks_; }
    const Metrics& metrics() const { return metrics_; }
    const Topology& topology() const { return topology_; }
    const ChainLayout& layout() const { return layout_; }
    /// Recomputes packets_in_flight from the device queues.
    void finalize();

private:
    bool measuring() const { return slot_ >= warmup_; }
    void start_cycle(DeviceRecord& d, int stage);
    void end_cycle(DeviceRecord& d, int attempts, bool dropped);
    std::vector<bool> decode(const std::vector<DeviceRecord*>& tx, std::vector<std::int64_t>& segments,
                             PrpReport& report);

    ScenarioConfig config_;
    ChainLayout layout_;
    double p_;
    std::int64_t warmup_;
    std::int64_t slot_ = 0;
    std::vector<DeviceRecord> devices_;
    std::vector<AckEntry> acks_;
    Topology topology_;
    ChannelModel channel_;
    std::vector<ArrivalEvent> arrivals_;
    std::size_t next_arrival_ = 0;
    Rng mac_rng_;
    Rng phy_rng_;
    Rng size_rng_;
    Metrics metrics_;
};

Metrics run(const ValidatedConfig& config, std::uint64_t seed);

/// failed / attempts; absent when nothing was sent.
std::optional<double> bler(const Metrics& m);

/// Mean over measured PRPs of successful devices per RU.
double normalized_throughput(const Metrics& m, const PrpConfig& prp);

/// Dropped / (delivered + dropped); absent when no packet finished.
std::optional<double> drop_rate(const Metrics& m);

std::optional<double> mean_delay(const Metrics& m);

/// Devices per RU of one PRP.
double overload_factor(const ScenarioConfig& config);

/// Mean arrivals per PRP per RU.
double offered_load_per_ru(const ScenarioConfig& config);

struct Estimate {
    double mean = 0;
    double ci95 = 0; // half-width, normal approximation
    int samples = 0; // replications that defined the metric

    bool defined() const { return samples > 0; }
};

Estimate summarize(const std::vector<double>& values);

struct Aggregate {
    std::uint64_t master_seed = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<Metrics> replications;
    std::uint64_t attempts = 0;
    Estimate bler;
    Estimate norm_throughput;
    Estimate drop_rate;
    Estimate mean_delay;
};

/// Seed of replication `index`, derived from the master seed only.
std::uint64_t replication_seed(std::uint64_t master_seed, int index);

/// Runs independent replications on up to `jobs` threads and folds them in
/// replication order.
Aggregate run_replications(const ValidatedConfig& config, int replications, std::uint64_t master_seed,
                           int jobs = 1);

} // namespace gonora
