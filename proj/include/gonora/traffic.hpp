#pragma once

#include "gonora/config.hpp"
#include "gonora/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace gonora {

using DeviceId = int;

struct ArrivalEvent {
    DeviceId device = 0;
    std::int64_t slot = 0;
    std::int64_t bits = 0;

    friend bool operator==(const ArrivalEvent&, const ArrivalEvent&) = default;
};

/// RU indices chosen for one transmission, sorted ascending.
struct RuSelection {
    std::vector<int> rus;
    int stage = 0;

    int size() const { return static_cast<int>(rus.size()); }
};

/// RU selection probability: capacity * reuse over the mean
/// offered bits per PRP, clamped to [0, 1]. Throws std::domain_error when no
/// traffic is offered.
double selection_probability(const PrpConfig& prp, const TrafficProfile& traffic);

/// Same ratio without the clamp.
double selection_probability_unclamped(const PrpConfig& prp, const TrafficProfile& traffic);

/// The p a scenario runs with: the configured constant, or the load-derived
/// value when gonora.p_mode = from_load.
double effective_selection_probability(const ScenarioConfig& config);

/// Draws a packet size for device m under the configured size model.
std::int64_t sample_packet_bits(const TrafficProfile& traffic, DeviceId m, Rng& rng);

/// Poisson arrivals of every device over `horizon` PRPs, sorted by slot and
/// then by device.
std::vector<ArrivalEvent> sample_arrivals(const TrafficProfile& traffic, std::int64_t horizon,
                                          const PrpConfig& prp, Rng& rng);

/// Independent Bernoulli(p) choice of every RU. An empty draw falls back to a
/// single uniformly chosen RU, since a device whose counter expired must send.
RuSelection sample_ru_selection(double p, const PrpConfig& prp, int stage, Rng& rng);

struct Segment {
    std::int64_t bits = 0;      // carried by this transmission
    std::int64_t remainder = 0; // left after the transmission succeeds
};

Segment segment_packet(std::int64_t packet_bits, const RuSelection& selection, const PrpConfig& prp);

/// CSV: slot,device,bits
void write_arrivals_csv(std::ostream& out, const std::vector<ArrivalEvent>& events);

} // namespace gonora
