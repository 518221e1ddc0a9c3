#include "gonora/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace gonora {

double selection_probability_unclamped(const PrpConfig& prp, const TrafficProfile& traffic)
{
    double load = 0;
    for (int m = 0; m < traffic.m_count; ++m)
        load += traffic.alpha_of(m) * traffic.lambda_of(m) * prp.tau;
    if (!(load > 0))
        throw std::domain_error("no offered traffic");
    return prp.beta * prp.gamma / load;
}

double selection_probability(const PrpConfig& prp, const TrafficProfile& traffic)
{
    return std::clamp(selection_probability_unclamped(prp, traffic), 0.0, 1.0);
}

double effective_selection_probability(const ScenarioConfig& config)
{
    if (config.gonora.p_mode == SelectionMode::FromLoad)
        return selection_probability(config.prp, config.traffic);
    return config.gonora.p;
}

std::int64_t sample_packet_bits(const TrafficProfile& traffic, DeviceId m, Rng& rng)
{
    const double mean = traffic.alpha_of(m);
    if (traffic.size_model == PacketSizeModel::Deterministic || mean <= 1.0)
        return std::max<std::int64_t>(1, std::llround(mean));
    // Geometric on {1, 2, ...} with the requested mean.
    std::geometric_distribution<std::int64_t> extra(1.0 / mean);
    return 1 + extra(rng);
}

std::vector<ArrivalEvent> sample_arrivals(const TrafficProfile& traffic, std::int64_t horizon,
                                          const PrpConfig& prp, Rng& rng)
{
    std::vector<ArrivalEvent> events;
    std::uniform_int_distribution<std::int64_t> slot(0, horizon - 1);
    for (DeviceId m = 0; m < traffic.m_count; ++m) {
        const double mean = traffic.lambda_of(m) * prp.tau * static_cast<double>(horizon);
        if (mean <= 0)
            continue;
        const auto count = std::poisson_distribution<std::int64_t>(mean)(rng);
        for (std::int64_t i = 0; i < count; ++i) {
            const std::int64_t s = slot(rng);
            events.push_back({m, s, sample_packet_bits(traffic, m, rng)});
        }
    }
    std::stable_sort(events.begin(), events.end(), [](const ArrivalEvent& a, const ArrivalEvent& b) {
        return a.slot != b.slot ? a.slot < b.slot : a.device < b.device;
    });
    return events;
}

RuSelection sample_ru_selection(double p, const PrpConfig& prp, int stage, Rng& rng)
{
    RuSelection sel;
    sel.stage = stage;
    if (p >= 1.0) {
        sel.rus.resize(prp.omega);
        for (int r = 0; r < prp.omega; ++r)
            sel.rus[r] = r;
        return sel;
    }
    // Bernoulli(p) as a compare against p * 2^64 on the raw 64-bit draw.
    const double scaled = std::ldexp(std::max(p, 0.0), 64);
    const std::uint64_t cut = scaled >= 0x1p64 ? ~std::uint64_t{0} : static_cast<std::uint64_t>(scaled);
    sel.rus.reserve(static_cast<std::size_t>(p * prp.omega) + 8);
    for (int r = 0; r < prp.omega; ++r)
        if (rng() < cut)
            sel.rus.push_back(r);
    if (sel.rus.empty())
        sel.rus.push_back(uniform_index(rng, prp.omega));
    return sel;
}

Segment segment_packet(std::int64_t packet_bits, const RuSelection& selection, const PrpConfig& prp)
{
    const std::int64_t room = static_cast<std::int64_t>(selection.size()) * prp.ru_payload_bits;
    const std::int64_t bits = std::min(packet_bits, room);
    return {bits, packet_bits - bits};
}

void write_arrivals_csv(std::ostream& out, const std::vector<ArrivalEvent>& events)
{
    out << "slot,device,bits\n";
    for (const auto& e : events)
        out << e.slot << ',' << e.device << ',' << e.bits << '\n';
}

} // namespace gonora
