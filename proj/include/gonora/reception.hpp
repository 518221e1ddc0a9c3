#pragma once

#include "gonora/chain.hpp"
#include "gonora/config.hpp"
#include "gonora/deployment.hpp"
#include "gonora/traffic.hpp"

#include <map>
#include <span>
#include <utility>
#include <vector>

namespace gonora {

/// One device's transmission in a PRP.
struct Transmission {
    DeviceId device = 0;
    RuSelection selection;
    double tx_power = 0;          // W
    std::vector<double> gains;    // one linear gain per RRH, this PRP
    double segment_bits = 0;      // information needed to decode

    double received_power(int rrh) const { return tx_power * gains[rrh]; }
};

struct PrpSnapshot {
    int omega = 1;
    int rrh_count = 1;
    double noise = 1e-13; // W per RU
    std::vector<Transmission> transmissions;
};

struct DecodeOutcome {
    /// Decoded devices in decode order.
    std::vector<DeviceId> decoded;
    /// Per transmission (snapshot order): SIC round in which it was decoded,
    /// or 0 when it never was.
    std::vector<int> decode_round;
    /// Per transmission: accumulated information (bits) at its last
    /// evaluation, which for decoded devices is the decoding round.
    std::vector<double> information;
    int rounds = 0;

    bool is_decoded(std::size_t tx_index) const { return decode_round[tx_index] > 0; }
};

/// SINR of every uncancelled device on (ru, rrh); interference is the other
/// uncancelled co-RU received power plus noise.
std::vector<std::pair<DeviceId, double>> per_ru_sinr(const PrpSnapshot& snapshot, int ru, int rrh,
                                                     std::span<const DeviceId> cancelled = {});

/// Maximal-ratio-combining abstraction: post-detection SINRs add.
double combine_rrh(std::span<const double> per_rrh_sinr);

/// Iterative decode-and-cancel. In MI mode a device decodes once the sum over
/// its RUs of log2(1 + combined SINR) reaches its segment bits; in threshold
/// mode once its mean combined SINR reaches the threshold. Every device that
/// qualifies in a round is decoded and cancelled together.
DecodeOutcome sic_decode(const PrpSnapshot& snapshot, const ReceptionSpec& spec);

struct OutcomeEstimate {
    StageOutcomes outcomes;
    double std_error = 0;
};

/// Monte Carlo map from population attempt probability to per-stage
/// outcomes, for coupling with the chain. Success frequencies are estimated
/// conditional on the number of simultaneous transmitters n (common random
/// numbers per n, memoised) and mixed with Binomial(M-1, a) weights as seen
/// by a tagged transmitter, so the map is smooth in a.
class OutcomeAbstraction {
public:
    explicit OutcomeAbstraction(const ScenarioConfig& config);

    OutcomeEstimate estimate(double attempt_prob);
    StageOutcomes operator()(double attempt_prob) { return estimate(attempt_prob).outcomes; }

    /// Fraction of transmitters decoded in PRPs with exactly n transmitters.
    double conditional_success(int n);

private:
    ScenarioConfig config_;
    Topology topology_;
    double p_;
    std::map<int, double> memo_;
};

/// Builds the Monte Carlo abstraction for a scenario; errors on a sample
/// budget below 1.
OutcomeEstimate outcome_abstraction(double attempt_prob, const ScenarioConfig& config);

} // namespace gonora
