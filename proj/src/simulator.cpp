#include "gonora/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace gonora {

namespace {

enum Stream : std::uint64_t { TopologyStream = 1, ArrivalStream, MacStream, PhyStream, SizeStream };

} // namespace

Simulator::Simulator(const ValidatedConfig& config, std::uint64_t seed)
    : config_(config.get()), layout_(config->gonora), p_(effective_selection_probability(config.get())),
      warmup_(config->warmup_prps()), mac_rng_(make_rng(seed, MacStream)), phy_rng_(make_rng(seed, PhyStream)),
      size_rng_(make_rng(seed, SizeStream))
{
    Rng topo_rng = make_rng(seed, TopologyStream);
    topology_ = build_topology(config_, topo_rng);
    channel_ = ChannelModel::from(config_.channel);

    const int m = config_.traffic.m_count;
    devices_.resize(m);
    for (int i = 0; i < m; ++i) {
        devices_[i].id = i;
        devices_[i].position = topology_.devices.points[i];
        devices_[i].tx_power = config_.deployment.device_tx_power;
    }
    if (!config_.traffic.saturated) {
        Rng arrival_rng = make_rng(seed, ArrivalStream);
        arrivals_ = sample_arrivals(config_.traffic, warmup_ + config_.horizon, config_.prp, arrival_rng);
    }

    const int stages = config_.gonora.v_max + 1;
    metrics_.omega = config_.prp.omega;
    metrics_.stage_attempts.assign(stages, 0);
    metrics_.stage_failures.assign(stages, 0);
    metrics_.cycle_attempts.assign(stages + 1, 0);
    metrics_.occupancy.assign(layout_.size(), 0);
    metrics_.successes_per_prp.reserve(config_.horizon);
}

void Simulator::start_cycle(DeviceRecord& d, int stage)
{
    d.state = ChainState::backoff(stage, uniform_index(mac_rng_, layout_.window(stage)));
}

void Simulator::end_cycle(DeviceRecord& d, int attempts, bool dropped)
{
    if (d.pending->measured) {
        ++metrics_.cycle_attempts[attempts];
        if (dropped)
            ++metrics_.cycles_dropped;
    }
    d.state = ChainState::idle();
}

std::vector<bool> Simulator::decode(const std::vector<DeviceRecord*>& tx, std::vector<std::int64_t>& segments,
                                    PrpReport& report)
{
    std::vector<bool> ok(tx.size(), false);
    segments.assign(tx.size(), 0);

    if (config_.reception.mode == ReceptionMode::Injected) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::size_t i = 0; i < tx.size(); ++i) {
            const RuSelection sel = sample_ru_selection(p_, config_.prp, tx[i]->state.stage, phy_rng_);
            segments[i] = segment_packet(tx[i]->pending->bits_remaining, sel, config_.prp).bits;
            ok[i] = u(phy_rng_) >= config_.reception.injected_pe[tx[i]->state.stage];
        }
    } else {
        const int rrhs = topology_.rrh_count();
        PrpSnapshot snap;
        snap.omega = config_.prp.omega;
        snap.rrh_count = rrhs;
        snap.noise = channel_.noise;
        snap.transmissions.reserve(tx.size());
        std::exponential_distribution<double> fade(1.0);
        for (std::size_t i = 0; i < tx.size(); ++i) {
            const DeviceRecord& d = *tx[i];
            Transmission t;
            t.device = d.id;
            t.selection = sample_ru_selection(p_, config_.prp, d.state.stage, phy_rng_);
            t.tx_power = d.tx_power;
            t.gains.resize(rrhs);
            for (int r = 0; r < rrhs; ++r) {
                const double f = channel_.fading == FadingModel::Rayleigh ? fade(phy_rng_) : 1.0;
                t.gains[r] = topology_.gain(d.id, r) * f;
            }
            segments[i] = segment_packet(d.pending->bits_remaining, t.selection, config_.prp).bits;
            t.segment_bits = static_cast<double>(segments[i]);
            snap.transmissions.push_back(std::move(t));
        }
        const DecodeOutcome outcome = sic_decode(snap, config_.reception);
        for (std::size_t i = 0; i < tx.size(); ++i)
            ok[i] = outcome.is_decoded(i);
    }
    for (std::size_t i = 0; i < tx.size(); ++i)
        if (ok[i])
            report.decoded.push_back(tx[i]->id);
    return ok;
}

PrpReport Simulator::step_prp()
{
    PrpReport report;
    report.slot = slot_;
    const bool measured = measuring();
    const int V = config_.gonora.v_max;

    // 1. ACKs for the previous PRP.
    for (const AckEntry& ack : acks_) {
        DeviceRecord& d = devices_[ack.device];
        const int stage = d.state.stage;
        if (ack.success) {
            Packet& pkt = *d.pending;
            pkt.bits_remaining -= ack.segment_bits;
            end_cycle(d, stage + 1, false);
            if (pkt.bits_remaining <= 0) {
                if (pkt.measured) {
                    ++metrics_.packets_delivered;
                    metrics_.delays.push_back(ack.prp - pkt.created);
                }
                ++report.deliveries;
            } else {
                d.queue.push_front(pkt);
            }
            d.pending.reset();
        } else if (stage < V) {
            start_cycle(d, stage + 1);
        } else {
            end_cycle(d, stage + 1, true);
            if (d.pending->measured)
                ++metrics_.packets_dropped;
            ++report.drops;
            d.pending.reset();
        }
    }
    acks_.clear();

    // 2. New cycles for devices idle throughout the previous PRP.
    for (DeviceRecord& d : devices_) {
        if (!d.state.is_idle() || !d.idle_last_prp)
            continue;
        if (config_.traffic.saturated && d.queue.empty()) {
            const std::int64_t created = std::max<std::int64_t>(0, slot_ - 1);
            d.queue.push_back({sample_packet_bits(config_.traffic, d.id, size_rng_), created, created >= warmup_});
            if (created >= warmup_)
                ++metrics_.packets_offered;
        }
        if (d.queue.empty())
            continue;
        d.pending = d.queue.front();
        d.queue.pop_front();
        start_cycle(d, 0);
    }

    // 3. Transmit on counter zero, count down otherwise.
    std::vector<DeviceRecord*> tx;
    for (DeviceRecord& d : devices_) {
        if (measured)
            ++metrics_.occupancy[layout_.index_of(d.state)];
        d.idle_last_prp = d.state.is_idle();
        if (d.state.is_transmit())
            tx.push_back(&d);
        else if (!d.state.is_idle())
            --d.state.counter;
    }

    std::vector<std::int64_t> segments;
    const std::vector<bool> ok = decode(tx, segments, report);
    int successes = 0;
    for (std::size_t i = 0; i < tx.size(); ++i) {
        DeviceRecord& d = *tx[i];
        report.transmitters.push_back(d.id);
        if (ok[i])
            ++successes;
        if (measured) {
            ++metrics_.attempts;
            ++metrics_.stage_attempts[d.state.stage];
            if (!ok[i]) {
                ++metrics_.failed_attempts;
                ++metrics_.stage_failures[d.state.stage];
            }
        }
        acks_.push_back({d.id, ok[i], segments[i], slot_});
    }
    report.attempts = static_cast<int>(tx.size());
    report.successes = successes;
    if (measured) {
        metrics_.successes_per_prp.push_back(static_cast<std::uint32_t>(successes));
        ++metrics_.measured_prps;
    }

    // 4. Arrivals of this slot.
    while (next_arrival_ < arrivals_.size() && arrivals_[next_arrival_].slot == slot_) {
        const ArrivalEvent& e = arrivals_[next_arrival_++];
        const bool m = slot_ >= warmup_;
        devices_[e.device].queue.push_back({e.bits, e.slot, m});
        if (m)
            ++metrics_.packets_offered;
    }

    ++slot_;
    return report;
}

void Simulator::enqueue(DeviceId device, std::int64_t bits)
{
    if (bits < 1)
        throw std::invalid_argument("packet needs at least one bit");
    const std::int64_t created = slot_ - 1;
    const bool m = created >= warmup_;
    devices_.at(device).queue.push_back({bits, created, m});
    if (m)
        ++metrics_.packets_offered;
}

void Simulator::finalize()
{
    std::uint64_t in_flight = 0;
    for (const DeviceRecord& d : devices_) {
        if (d.pending && d.pending->measured)
            ++in_flight;
        for (const Packet& p : d.queue)
            if (p.measured)
                ++in_flight;
    }
    metrics_.packets_in_flight = in_flight;
}

Metrics Simulator::run()
{
    const std::int64_t total = warmup_ + config_.horizon;
    while (slot_ < total)
        step_prp();
    finalize();
    return metrics_;
}

Metrics run(const ValidatedConfig& config, std::uint64_t seed)
{
    Simulator sim(config, seed);
    return sim.run();
}

std::optional<double> bler(const Metrics& m)
{
    if (m.attempts == 0)
        return std::nullopt;
    return static_cast<double>(m.failed_attempts) / static_cast<double>(m.attempts);
}

double normalized_throughput(const Metrics& m, const PrpConfig& prp)
{
    if (m.successes_per_prp.empty())
        return 0.0;
    std::uint64_t total = 0;
    for (auto s : m.successes_per_prp)
        total += s;
    return static_cast<double>(total) / static_cast<double>(m.successes_per_prp.size()) / prp.omega;
}

std::optional<double> drop_rate(const Metrics& m)
{
    const auto finished = m.packets_delivered + m.packets_dropped;
    if (finished == 0)
        return std::nullopt;
    return static_cast<double>(m.packets_dropped) / static_cast<double>(finished);
}

std::optional<double> mean_delay(const Metrics& m)
{
    if (m.delays.empty())
        return std::nullopt;
    const double sum = std::accumulate(m.delays.begin(), m.delays.end(), 0.0);
    return sum / static_cast<double>(m.delays.size());
}

double overload_factor(const ScenarioConfig& config)
{
    return static_cast<double>(config.traffic.m_count) / config.prp.omega;
}

double offered_load_per_ru(const ScenarioConfig& config)
{
    double per_prp = 0;
    for (int m = 0; m < config.traffic.m_count; ++m)
        per_prp += config.traffic.lambda_of(m) * config.prp.tau;
    return per_prp / config.prp.omega;
}

Estimate summarize(const std::vector<double>& values)
{
    Estimate e;
    e.samples = static_cast<int>(values.size());
    if (values.empty())
        return e;
    e.mean = std::accumulate(values.begin(), values.end(), 0.0) / e.samples;
    if (e.samples > 1) {
        double ss = 0;
        for (double v : values)
            ss += (v - e.mean) * (v - e.mean);
        e.ci95 = 1.96 * std::sqrt(ss / (e.samples - 1)) / std::sqrt(static_cast<double>(e.samples));
    }
    return e;
}

std::uint64_t replication_seed(std::uint64_t master_seed, int index)
{
    return mix_seed(master_seed, 0x5eed0000ULL + static_cast<std::uint64_t>(index));
}

Aggregate run_replications(const ValidatedConfig& config, int replications, std::uint64_t master_seed, int jobs)
{
    Aggregate agg;
    agg.master_seed = master_seed;
    agg.seeds.resize(replications);
    for (int i = 0; i < replications; ++i)
        agg.seeds[i] = replication_seed(master_seed, i);
    agg.replications.resize(replications);

    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (int i = next++; i < replications && !failed; i = next++) {
            try {
                agg.replications[i] = run(config, agg.seeds[i]);
            } catch (...) {
                if (!failed.exchange(true))
                    failure = std::current_exception();
            }
        }
    };
    const int threads = std::clamp(jobs, 1, std::max(1, replications));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }
    if (failure)
        std::rethrow_exception(failure);

    std::vector<double> blers, thr, drops, delays;
    for (const Metrics& m : agg.replications) {
        agg.attempts += m.attempts;
        if (auto b = bler(m))
            blers.push_back(*b);
        thr.push_back(normalized_throughput(m, config->prp));
        if (auto d = drop_rate(m))
            drops.push_back(*d);
        if (auto d = mean_delay(m))
            delays.push_back(*d);
    }
    agg.bler = summarize(blers);
    agg.norm_throughput = summarize(thr);
    agg.drop_rate = summarize(drops);
    agg.mean_delay = summarize(delays);
    return agg;
}

} // namespace gonora
