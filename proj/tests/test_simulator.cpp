#include "gonora/simulator.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

using namespace gonora;

namespace {

ValidatedConfig checked(const ScenarioConfig& c)
{
    return validate(c).value();
}

// One device on a forced channel, no warm-up, no random arrivals.
ScenarioConfig lone_device(int w0, int v_max, std::vector<double> pe)
{
    ScenarioConfig c;
    c.traffic.m_count = 1;
    c.traffic.lambda = {0};
    c.gonora.w0 = w0;
    c.gonora.v_max = v_max;
    c.reception.mode = ReceptionMode::Injected;
    c.reception.injected_pe = std::move(pe);
    c.warmup_fraction = 0;
    c.horizon = 50;
    return c;
}

ScenarioConfig small_scenario()
{
    ScenarioConfig c;
    c.prp.omega = 16;
    c.prp.ru_payload_bits = 16;
    c.prp.beta = 256;
    c.traffic.m_count = 24;
    c.horizon = 400;
    return c;
}

void check_legal(const Simulator& sim)
{
    const auto& layout = sim.layout();
    for (const auto& d : sim.devices()) {
        if (d.state.is_idle()) {
            CHECK_FALSE(d.pending.has_value());
            continue;
        }
        CHECK(d.pending.has_value());
        CHECK(d.state.stage >= 0);
        CHECK(d.state.stage <= layout.v_max());
        CHECK(d.state.counter >= 0);
        CHECK(d.state.counter <= layout.window(d.state.stage) - 1);
    }
}

std::string dump(const Metrics& m)
{
    std::ostringstream out;
    out << m.measured_prps << ' ' << m.attempts << ' ' << m.failed_attempts << ' ' << m.packets_offered << ' '
        << m.packets_delivered << ' ' << m.packets_dropped << ' ' << m.packets_in_flight << '\n';
    for (auto s : m.successes_per_prp)
        out << s << ' ';
    out << '\n';
    for (auto d : m.delays)
        out << d << ' ';
    out << '\n';
    for (auto o : m.occupancy)
        out << o << ' ';
    return out.str();
}

} // namespace

TEST_CASE("no active devices: only the slot advances")
{
    Simulator sim(checked(lone_device(2, 1, {0, 0})), 1);
    const auto before = sim.devices().front().state;
    const auto r = sim.step_prp();
    CHECK(sim.slot() == 1);
    CHECK(r.slot == 0);
    CHECK(r.attempts == 0);
    CHECK(r.successes == 0);
    CHECK(r.drops == 0);
    CHECK(r.transmitters.empty());
    CHECK(sim.devices().front().state == before);
    CHECK(sim.pending_acks().empty());
}

TEST_CASE("one device, W0=1, V=0, perfect channel: delivered after one PRP")
{
    Simulator sim(checked(lone_device(1, 0, {0.0})), 1);
    sim.step_prp(); // slot 0, idle
    sim.enqueue(0, 16);
    const auto tx = sim.step_prp(); // slot 1: counter 0, transmits
    CHECK(tx.attempts == 1);
    CHECK(tx.successes == 1);
    CHECK(sim.devices()[0].state.is_transmit());
    const auto ack = sim.step_prp(); // slot 2: ACK
    CHECK(ack.deliveries == 1);
    CHECK(sim.devices()[0].state.is_idle());
    sim.finalize();
    const auto& m = sim.metrics();
    CHECK(m.packets_delivered == 1);
    REQUIRE(m.delays.size() == 1);
    CHECK(m.delays[0] == 1);
    CHECK(m.packets_in_flight == 0);
}

TEST_CASE("one device, perfect physical channel in MI mode: delivered after one PRP")
{
    auto c = lone_device(1, 0, {});
    c.reception.mode = ReceptionMode::MutualInformation;
    c.channel.fading = FadingModel::None;
    c.channel.noise_dbm = -200;
    Simulator sim(checked(c), 3);
    sim.step_prp();
    sim.enqueue(0, 16);
    sim.step_prp();
    sim.step_prp();
    CHECK(sim.metrics().packets_delivered == 1);
    CHECK(sim.metrics().delays == std::vector<std::int64_t>{1});
}

TEST_CASE("one device, W0=1, V=1, forced failure: two attempts then a drop")
{
    Simulator sim(checked(lone_device(1, 1, {1.0, 1.0})), 1);
    sim.step_prp();
    sim.enqueue(0, 16);
    int attempts = 0, drops = 0;
    for (int i = 0; i < 10; ++i) {
        const auto r = sim.step_prp();
        attempts += r.attempts;
        drops += r.drops;
        check_legal(sim);
    }
    CHECK(attempts == 2);
    CHECK(drops == 1);
    sim.finalize();
    const auto& m = sim.metrics();
    CHECK(m.attempts == 2);
    CHECK(m.failed_attempts == 2);
    CHECK(m.packets_dropped == 1);
    CHECK(m.packets_delivered == 0);
    CHECK(m.cycle_attempts[2] == 1);
    CHECK(m.cycles_dropped == 1);
    CHECK(bler(m) == 1.0);
}

TEST_CASE("a packet larger than one segment needs a cycle per segment")
{
    auto c = lone_device(1, 0, {0.0});
    c.prp.omega = 4;
    c.prp.ru_payload_bits = 16;
    c.prp.beta = 64;
    c.gonora.p = 1.0;
    Simulator sim(checked(c), 1);
    sim.step_prp();
    sim.enqueue(0, 100); // 64 + 36 bits
    int attempts = 0, deliveries = 0;
    for (int i = 0; i < 10; ++i) {
        const auto r = sim.step_prp();
        attempts += r.attempts;
        deliveries += r.deliveries;
    }
    CHECK(attempts == 2);
    CHECK(deliveries == 1);
    // transmit, ACK + idle, transmit: three PRPs from arrival to the last attempt.
    CHECK(sim.metrics().delays == std::vector<std::int64_t>{3});
    CHECK(sim.metrics().cycle_attempts[1] == 2);
}

TEST_CASE("zero arrival rates give all-zero metrics")
{
    auto c = small_scenario();
    c.traffic.lambda = {0};
    const auto m = run(checked(c), 5);
    CHECK(m.attempts == 0);
    CHECK(m.packets_offered == 0);
    CHECK(m.packets_delivered == 0);
    CHECK(m.packets_dropped == 0);
    CHECK_FALSE(bler(m).has_value());
    CHECK_FALSE(drop_rate(m).has_value());
    CHECK_FALSE(mean_delay(m).has_value());
    CHECK(normalized_throughput(m, c.prp) == 0.0);
}

TEST_CASE("forced-failure channel: BLER 1 and nothing delivered")
{
    auto c = small_scenario();
    c.reception.mode = ReceptionMode::Injected;
    c.reception.injected_pe = {1, 1, 1, 1};
    const auto m = run(checked(c), 6);
    CHECK(m.attempts > 0);
    CHECK(bler(m) == 1.0);
    CHECK(m.packets_delivered == 0);
    CHECK(m.packets_dropped > 0);
}

TEST_CASE("conservation and state legality on every step")
{
    for (std::uint64_t seed : {1, 2, 3}) {
        auto c = small_scenario();
        c.traffic.size_model = PacketSizeModel::Geometric;
        c.traffic.alpha = {40};
        Simulator sim(checked(c), seed);
        for (int i = 0; i < 440; ++i) {
            sim.step_prp();
            check_legal(sim);
        }
        sim.finalize();
        const auto& m = sim.metrics();
        CHECK(m.packets_offered == m.packets_delivered + m.packets_dropped + m.packets_in_flight);
        CHECK(m.packets_delivered + m.packets_dropped <= m.packets_offered);
        CHECK(m.failed_attempts <= m.attempts);
        CHECK(m.measured_prps == c.horizon);
    }
}

TEST_CASE("throughput is bounded by offered load and attempt rate")
{
    for (double lambda : {20.0, 100.0, 400.0}) {
        auto c = small_scenario();
        c.traffic.lambda = {lambda};
        const auto m = run(checked(c), 9);
        const double thr = normalized_throughput(m, c.prp);
        const double attempt_rate = static_cast<double>(m.attempts) / m.measured_prps / c.prp.omega;
        const double offered = static_cast<double>(m.packets_offered) / m.measured_prps / c.prp.omega;
        CHECK(thr <= attempt_rate + 1e-12);
        // Single-segment packets: a success completes at most one offered packet,
        // plus those still queued from the warm-up.
        CHECK(thr <= offered + 0.05 * offered_load_per_ru(c) + 1e-12);
    }
}

TEST_CASE("runs are bit-identical for equal scenario and seed")
{
    const auto c = checked(small_scenario());
    const auto a = run(c, 77);
    const auto b = run(c, 77);
    CHECK(a == b);
    CHECK(dump(a) == dump(b));
    CHECK_FALSE(run(c, 78) == a);
}

TEST_CASE("occupancy with injected outcomes tracks the stationary chain")
{
    auto c = small_scenario();
    c.gonora.w0 = 2;
    c.gonora.v_max = 2;
    c.traffic.saturated = true;
    c.traffic.m_count = 16;
    c.reception.mode = ReceptionMode::Injected;
    c.reception.injected_pe = {0.5, 0.5, 0.5};
    c.horizon = 4000;
    const auto m = run(checked(c), 10);
    const auto pi = stationary_distribution(build_chain(c.gonora, StageOutcomes::uniform(2, 0.5), 1.0));
    const double total = std::accumulate(m.occupancy.begin(), m.occupancy.end(), 0.0);
    double tv = 0;
    for (std::size_t i = 0; i < m.occupancy.size(); ++i)
        tv += std::abs(m.occupancy[i] / total - pi.probability[i]);
    CHECK(tv / 2 <= 0.02);
}

TEST_CASE("per-packet attempt counts follow the truncated geometric law")
{
    auto c = small_scenario();
    c.traffic.saturated = true;
    c.traffic.m_count = 32;
    c.gonora.w0 = 1;
    c.gonora.v_max = 2;
    c.reception.mode = ReceptionMode::Injected;
    c.reception.injected_pe = {0.6, 0.3, 0.8};
    c.horizon = 6000;
    const auto m = run(checked(c), 11);
    const double n = std::accumulate(m.cycle_attempts.begin(), m.cycle_attempts.end(), 0.0);
    REQUIRE(n > 20000);
    const std::vector<double> law{0.0, 0.4, 0.6 * 0.7, 0.6 * 0.3};
    for (int k = 1; k <= 3; ++k) {
        const double f = m.cycle_attempts[k] / n;
        CHECK(std::abs(f - law[k]) <= 3 * std::sqrt(law[k] * (1 - law[k]) / n));
    }
    const double pd = 0.6 * 0.3 * 0.8;
    CHECK(std::abs(m.cycles_dropped / n - pd) <= 3 * std::sqrt(pd * (1 - pd) / n));
}

TEST_CASE("BLER arithmetic")
{
    Metrics m;
    m.attempts = 12;
    m.failed_attempts = 3;
    CHECK(bler(m) == 0.25);
    m.failed_attempts = 0;
    CHECK(bler(m) == 0.0);
    m.failed_attempts = 12;
    CHECK(bler(m) == 1.0);
    m.attempts = 0;
    m.failed_attempts = 0;
    CHECK_FALSE(bler(m).has_value());
}

TEST_CASE("normalized throughput arithmetic")
{
    PrpConfig prp;
    prp.omega = 64;
    Metrics m;
    m.successes_per_prp.assign(100, 0);
    CHECK(normalized_throughput(m, prp) == 0.0);
    m.successes_per_prp.assign(100, 1);
    CHECK(normalized_throughput(m, prp) == doctest::Approx(1.0 / 64));
}

TEST_CASE("overload factor and offered load")
{
    ScenarioConfig c;
    c.prp.omega = 64;
    for (auto [m, expected] : {std::pair{64, 1.0}, {512, 8.0}, {32, 0.5}}) {
        c.traffic.m_count = m;
        CHECK(overload_factor(c) == expected);
    }
    c.traffic.m_count = 32;
    c.traffic.lambda = {100};
    c.prp.tau = 1e-3;
    CHECK(offered_load_per_ru(c) == doctest::Approx(32 * 0.1 / 64));
}

TEST_CASE("drop rate and delay")
{
    Metrics m;
    m.packets_delivered = 6;
    m.packets_dropped = 2;
    m.delays = {1, 2, 3, 4, 5, 6};
    CHECK(drop_rate(m) == 0.25);
    CHECK(mean_delay(m) == 3.5);
}

TEST_CASE("summaries: mean and normal 95% half-width")
{
    const auto e = summarize({1, 2, 3, 4});
    CHECK(e.samples == 4);
    CHECK(e.mean == 2.5);
    CHECK(e.ci95 == doctest::Approx(1.96 * std::sqrt(5.0 / 3.0) / 2));
    const auto one = summarize({0.7});
    CHECK(one.mean == 0.7);
    CHECK(one.ci95 == 0.0);
    CHECK_FALSE(summarize({}).defined());
}

TEST_CASE("replications: degenerate CI, determinism, order independence")
{
    auto c = small_scenario();
    c.horizon = 200;
    const auto v = checked(c);
    const auto one = run_replications(v, 1, 4);
    CHECK(one.bler.ci95 == 0.0);
    CHECK(one.norm_throughput.ci95 == 0.0);
    CHECK(one.norm_throughput.mean == normalized_throughput(one.replications[0], c.prp));
    CHECK(one.seeds[0] == replication_seed(4, 0));

    const auto a = run_replications(v, 6, 99, 1);
    const auto b = run_replications(v, 6, 99, 1);
    const auto par = run_replications(v, 6, 99, 4);
    CHECK(a.replications == b.replications);
    CHECK(a.replications == par.replications);
    CHECK(a.bler.mean == par.bler.mean);
    CHECK(a.bler.ci95 == par.bler.ci95);
    CHECK(a.norm_throughput.mean == par.norm_throughput.mean);
    for (int i = 0; i < 6; ++i)
        CHECK(a.replications[i] == run(v, replication_seed(99, i)));
}

TEST_CASE("replication CI shrinks like 1/sqrt(n)")
{
    auto c = small_scenario();
    c.horizon = 100;
    c.traffic.lambda = {300};
    const auto v = checked(c);
    const auto r64 = run_replications(v, 64, 5);
    std::vector<double> widths;
    for (int n : {4, 16, 64}) {
        // Average the half-width over disjoint blocks of the 64 replications.
        double w = 0;
        for (int b = 0; b < 64 / n; ++b) {
            std::vector<double> x;
            for (int i = b * n; i < (b + 1) * n; ++i)
                x.push_back(*bler(r64.replications[i]));
            w += summarize(x).ci95;
        }
        widths.push_back(w / (64 / n));
    }
    CHECK(widths[0] / widths[1] == doctest::Approx(2.0).epsilon(0.35));
    CHECK(widths[1] / widths[2] == doctest::Approx(2.0).epsilon(0.35));
}
