#include "gonora/reception.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gonora {

std::vector<std::pair<DeviceId, double>> per_ru_sinr(const PrpSnapshot& snapshot, int ru, int rrh,
                                                     std::span<const DeviceId> cancelled)
{
    auto on_ru = [&](const Transmission& t) {
        return std::binary_search(t.selection.rus.begin(), t.selection.rus.end(), ru) &&
               std::find(cancelled.begin(), cancelled.end(), t.device) == cancelled.end();
    };
    double total = 0;
    for (const auto& t : snapshot.transmissions)
        if (on_ru(t))
            total += t.received_power(rrh);

    std::vector<std::pair<DeviceId, double>> out;
    for (const auto& t : snapshot.transmissions) {
        if (!on_ru(t))
            continue;
        const double own = t.received_power(rrh);
        const double interference = std::max(0.0, total - own);
        out.emplace_back(t.device, own / (interference + snapshot.noise));
    }
    return out;
}

double combine_rrh(std::span<const double> per_rrh_sinr)
{
    if (per_rrh_sinr.empty())
        throw std::invalid_argument("combining needs at least one RRH");
    return std::accumulate(per_rrh_sinr.begin(), per_rrh_sinr.end(), 0.0);
}

DecodeOutcome sic_decode(const PrpSnapshot& snapshot, const ReceptionSpec& spec)
{
    const auto& txs = snapshot.transmissions;
    const std::size_t n = txs.size();
    const int omega = snapshot.omega;
    const int rrhs = snapshot.rrh_count;
    const double threshold = db_to_linear(spec.sinr_threshold_db);

    DecodeOutcome out;
    out.decode_round.assign(n, 0);
    out.information.assign(n, 0.0);
    if (n == 0)
        return out;

    std::vector<double> totals(static_cast<std::size_t>(rrhs) * omega);
    std::vector<std::size_t> active(n);
    std::iota(active.begin(), active.end(), std::size_t{0});
    std::vector<std::size_t> newly;
    // RUs that lost a transmitter in the previous round; devices off these RUs
    // see unchanged interference and cannot newly qualify.
    std::vector<char> touched(static_cast<std::size_t>(omega), 1);

    for (int round = 1; round <= spec.sic_rounds && !active.empty(); ++round) {
        out.rounds = round;
        std::fill(totals.begin(), totals.end(), 0.0);
        for (std::size_t i : active)
            for (int ru : txs[i].selection.rus)
                for (int r = 0; r < rrhs; ++r)
                    totals[static_cast<std::size_t>(r) * omega + ru] += txs[i].received_power(r);

        newly.clear();
        for (std::size_t i : active) {
            const auto& t = txs[i];
            if (std::none_of(t.selection.rus.begin(), t.selection.rus.end(), [&](int ru) { return touched[ru]; }))
                continue;
            double metric = 0;
            for (int ru : t.selection.rus) {
                double combined = 0;
                for (int r = 0; r < rrhs; ++r) {
                    const double own = t.received_power(r);
                    const double interference = std::max(0.0, totals[static_cast<std::size_t>(r) * omega + ru] - own);
                    combined += own / (interference + snapshot.noise);
                }
                metric += spec.mode == ReceptionMode::Threshold ? combined : std::log2(1.0 + combined);
            }
            bool ok = false;
            if (spec.mode == ReceptionMode::Threshold) {
                out.information[i] = metric / t.selection.size();
                ok = out.information[i] >= threshold;
            } else {
                out.information[i] = metric;
                ok = metric >= t.segment_bits * (1.0 - 1e-12);
            }
            if (ok)
                newly.push_back(i);
        }
        if (newly.empty())
            break;
        std::fill(touched.begin(), touched.end(), 0);
        for (std::size_t i : newly) {
            out.decode_round[i] = round;
            out.decoded.push_back(txs[i].device);
            for (int ru : txs[i].selection.rus)
                touched[ru] = 1;
        }
        std::erase_if(active, [&](std::size_t i) { return out.decode_round[i] > 0; });
    }
    return out;
}

// ---------------------------------------------------------------------------

OutcomeAbstraction::OutcomeAbstraction(const ScenarioConfig& config)
    : config_(config), p_(0)
{
    if (config.reception.abstraction_samples < 1)
        throw std::invalid_argument("outcome abstraction needs a positive sample budget");
    Rng rng = make_rng(config.seed, 0xab57);
    topology_ = build_topology(config, rng);
    p_ = effective_selection_probability(config);
}

double OutcomeAbstraction::conditional_success(int n)
{
    if (const auto it = memo_.find(n); it != memo_.end())
        return it->second;

    const int m_count = config_.traffic.m_count;
    const int rrhs = topology_.rrh_count();
    const ChannelModel channel = ChannelModel::from(config_.channel);
    Rng rng = make_rng(mix_seed(config_.seed, 0xab58), static_cast<std::uint64_t>(n));
    std::exponential_distribution<double> fade(1.0);

    std::vector<int> order(m_count);
    long decoded = 0;
    PrpSnapshot snap;
    snap.omega = config_.prp.omega;
    snap.rrh_count = rrhs;
    snap.noise = channel.noise;
    for (int s = 0; s < config_.reception.abstraction_samples; ++s) {
        std::iota(order.begin(), order.end(), 0);
        snap.transmissions.clear();
        for (int i = 0; i < n; ++i) {
            std::swap(order[i], order[i + uniform_index(rng, m_count - i)]);
            const int dev = order[i];
            Transmission t;
            t.device = dev;
            t.selection = sample_ru_selection(p_, config_.prp, 0, rng);
            t.tx_power = config_.deployment.device_tx_power;
            t.gains.resize(rrhs);
            for (int r = 0; r < rrhs; ++r) {
                const double f = channel.fading == FadingModel::Rayleigh ? fade(rng) : 1.0;
                t.gains[r] = topology_.gain(dev, r) * f;
            }
            const auto bits = sample_packet_bits(config_.traffic, dev, rng);
            t.segment_bits = static_cast<double>(segment_packet(bits, t.selection, config_.prp).bits);
            snap.transmissions.push_back(std::move(t));
        }
        decoded += static_cast<long>(sic_decode(snap, config_.reception).decoded.size());
    }
    const double s = static_cast<double>(decoded) / (static_cast<double>(n) * config_.reception.abstraction_samples);
    memo_.emplace(n, s);
    return s;
}

OutcomeEstimate OutcomeAbstraction::estimate(double a)
{
    if (!(a >= 0 && a <= 1))
        throw std::invalid_argument("attempt probability must lie in [0,1]");
    const int stages = config_.gonora.v_max + 1;
    if (config_.reception.mode == ReceptionMode::Injected)
        return {StageOutcomes::from_errors(config_.reception.injected_pe), 0.0};

    // A tagged transmitter shares the PRP with Binomial(M-1, a) others.
    const int others = config_.traffic.m_count - 1;
    double ps = 0, var = 0, mass = 0;
    const double samples = config_.reception.abstraction_samples;
    auto add = [&](int k, double w) {
        const int n = k + 1;
        const double s = conditional_success(n);
        ps += w * s;
        var += w * w * s * (1 - s) / (n * samples);
        mass += w;
    };
    if (a == 0 || others == 0) {
        add(0, 1.0);
    } else if (a == 1) {
        add(others, 1.0);
    } else {
        const double mean = others * a;
        const double sd = std::sqrt(others * a * (1 - a));
        const int lo = std::max(0, static_cast<int>(std::floor(mean - 10 * sd - 5)));
        const int hi = std::min(others, static_cast<int>(std::ceil(mean + 10 * sd + 5)));
        const double log_norm = std::lgamma(others + 1.0);
        for (int k = lo; k <= hi; ++k) {
            const double log_w = log_norm - std::lgamma(k + 1.0) - std::lgamma(others - k + 1.0) +
                                 k * std::log(a) + (others - k) * std::log1p(-a);
            const double w = std::exp(log_w);
            if (w > 1e-14)
                add(k, w);
        }
    }
    ps /= mass;
    ps = std::clamp(ps, 0.0, 1.0);
    return {StageOutcomes::from_errors(std::vector<double>(stages, 1.0 - ps)), std::sqrt(var) / mass};
}

OutcomeEstimate outcome_abstraction(double attempt_prob, const ScenarioConfig& config)
{
    OutcomeAbstraction model(config);
    return model.estimate(attempt_prob);
}

} // namespace gonora
