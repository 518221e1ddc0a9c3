#include "gonora/deployment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace gonora {

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

Region::Region(Disc d) : shape_(d)
{
    if (!(d.radius > 0))
        throw std::invalid_argument("region must have positive area");
}

Region::Region(Rect r) : shape_(r)
{
    if (!(r.width > 0 && r.height > 0))
        throw std::invalid_argument("region must have positive area");
}

double Region::area() const
{
    if (const auto* d = std::get_if<Disc>(&shape_))
        return std::numbers::pi * d->radius * d->radius;
    const auto& r = std::get<Rect>(shape_);
    return r.width * r.height;
}

bool Region::contains(const Point& p) const
{
    if (const auto* d = std::get_if<Disc>(&shape_))
        return distance(p, d->centre) <= d->radius;
    const auto& r = std::get<Rect>(shape_);
    return p.x >= r.origin.x && p.x <= r.origin.x + r.width && p.y >= r.origin.y && p.y <= r.origin.y + r.height;
}

Point Region::sample_uniform(Rng& rng) const
{
    if (const auto* d = std::get_if<Disc>(&shape_)) {
        const double rad = d->radius * std::sqrt(uniform01(rng));
        const double theta = 2.0 * std::numbers::pi * uniform01(rng);
        return {d->centre.x + rad * std::cos(theta), d->centre.y + rad * std::sin(theta)};
    }
    const auto& r = std::get<Rect>(shape_);
    const double x = r.origin.x + r.width * uniform01(rng);
    const double y = r.origin.y + r.height * uniform01(rng);
    return {x, y};
}

Region Region::dilated(double margin) const
{
    if (const auto* d = std::get_if<Disc>(&shape_))
        return Disc{d->centre, d->radius + margin};
    const auto& r = std::get<Rect>(shape_);
    return Rect{{r.origin.x - margin, r.origin.y - margin}, r.width + 2 * margin, r.height + 2 * margin};
}

double Region::diameter() const
{
    if (const auto* d = std::get_if<Disc>(&shape_))
        return 2 * d->radius;
    const auto& r = std::get<Rect>(shape_);
    return std::hypot(r.width, r.height);
}

Point Region::centre() const
{
    if (const auto* d = std::get_if<Disc>(&shape_))
        return d->centre;
    const auto& r = std::get<Rect>(shape_);
    return {r.origin.x + r.width / 2, r.origin.y + r.height / 2};
}

Region make_region(const DeploymentSpec& spec)
{
    if (spec.region_shape == RegionShape::Disc)
        return Disc{{0, 0}, spec.region_radius};
    return Rect{{-spec.region_width / 2, -spec.region_height / 2}, spec.region_width, spec.region_height};
}

const char* to_string(Tier t)
{
    switch (t) {
    case Tier::Macro: return "macro";
    case Tier::Micro: return "micro";
    case Tier::Pico: return "pico";
    case Tier::Femto: return "femto";
    case Tier::Rrh: return "rrh";
    case Tier::Device: return "device";
    }
    return "?";
}

PointSet sample_hppp(const Region& region, double density, Rng& rng, Tier tier)
{
    if (density < 0)
        throw std::invalid_argument("density must be non-negative");
    PointSet set;
    set.tier = tier;
    if (density == 0)
        return set;
    const auto count = std::poisson_distribution<long>(density * region.area())(rng);
    set.points.reserve(count);
    for (long i = 0; i < count; ++i)
        set.points.push_back(region.sample_uniform(rng));
    return set;
}

PointSet matern_thin(const PointSet& parents, double min_dist, Rng& rng)
{
    const std::size_t n = parents.size();
    std::vector<double> mark(n);
    for (auto& m : mark)
        m = uniform01(rng);

    PointSet kept;
    kept.tier = parents.tier;
    kept.tx_power = parents.tx_power;
    for (std::size_t i = 0; i < n; ++i) {
        bool survives = true;
        for (std::size_t j = 0; j < n && survives; ++j)
            if (j != i && mark[j] < mark[i] && distance(parents.points[i], parents.points[j]) < min_dist)
                survives = false;
        if (survives)
            kept.points.push_back(parents.points[i]);
    }
    return kept;
}

PointSet sample_matern_hardcore(const Region& region, double parent_density, double min_dist, Rng& rng, Tier tier)
{
    if (!(min_dist > 0))
        throw std::invalid_argument("hard-core distance must be positive");
    const PointSet parents = sample_hppp(region.dilated(min_dist), parent_density, rng, tier);
    PointSet kept = matern_thin(parents, min_dist, rng);
    std::erase_if(kept.points, [&](const Point& p) { return !region.contains(p); });
    return kept;
}

PointSet sample_poisson_cluster(const Region& region, double parent_density, double mean_children, double sigma,
                                Rng& rng, Tier tier)
{
    if (mean_children < 0 || !(sigma > 0))
        throw std::invalid_argument("cluster process needs mean_children >= 0 and sigma > 0");
    PointSet out;
    out.tier = tier;
    if (mean_children == 0)
        return out;
    const PointSet parents = sample_hppp(region.dilated(4 * sigma), parent_density, rng, tier);
    std::poisson_distribution<long> children(mean_children);
    std::normal_distribution<double> offset(0.0, sigma);
    for (const auto& parent : parents.points) {
        const long n = children(rng);
        for (long c = 0; c < n; ++c) {
            const double dx = offset(rng);
            const double dy = offset(rng);
            const Point p{parent.x + dx, parent.y + dy};
            if (region.contains(p))
                out.points.push_back(p);
        }
    }
    return out;
}

ChannelModel ChannelModel::from(const ChannelSpec& spec)
{
    return {spec.path_loss_exponent, spec.ref_gain(), spec.fading, spec.noise_watts()};
}

double mean_path_gain(const Point& tx, const Point& rx, const ChannelModel& channel)
{
    const double d = std::max(distance(tx, rx), 1.0);
    return channel.ref_gain * std::pow(d, -channel.path_loss_exponent);
}

double path_gain(const Point& tx, const Point& rx, const ChannelModel& channel, Rng& rng)
{
    const double g = mean_path_gain(tx, rx, channel);
    if (channel.fading == FadingModel::None)
        return g;
    return g * std::exponential_distribution<double>(1.0)(rng);
}

namespace {

const Node& pick(std::span<const Node> nodes, auto better)
{
    if (nodes.empty())
        throw std::invalid_argument("association needs at least one candidate node");
    const Node* best = &nodes.front();
    for (const auto& n : nodes.subspan(1))
        if (better(n, *best) || (!better(*best, n) && n.id < best->id))
            best = &n;
    return *best;
}

const Node& strongest(const Point& device, std::span<const Node> nodes, const ChannelModel& channel)
{
    return pick(nodes, [&](const Node& a, const Node& b) {
        return a.tx_power * mean_path_gain(a.position, device, channel) >
               b.tx_power * mean_path_gain(b.position, device, channel);
    });
}

} // namespace

Association associate_dude(const Point& device, std::span<const Node> nodes, const ChannelModel& channel)
{
    const Node& nearest = pick(nodes, [&](const Node& a, const Node& b) {
        return distance(a.position, device) < distance(b.position, device);
    });
    return {nearest.id, strongest(device, nodes, channel).id};
}

Association associate_coupled(const Point& device, std::span<const Node> nodes, const ChannelModel& channel)
{
    const int id = strongest(device, nodes, channel).id;
    return {id, id};
}

double decoupling_fraction(std::span<const Association> associations)
{
    if (associations.empty())
        return 0.0;
    const auto split = std::count_if(associations.begin(), associations.end(),
                                     [](const Association& a) { return a.uplink != a.downlink; });
    return static_cast<double>(split) / static_cast<double>(associations.size());
}

std::vector<Node> to_nodes(std::span<const PointSet> tiers)
{
    std::vector<Node> nodes;
    for (const auto& set : tiers)
        for (const auto& p : set.points)
            nodes.push_back({static_cast<int>(nodes.size()), p, set.tx_power, set.tier});
    return nodes;
}

PointSet place_rrhs(const DeploymentSpec& spec, Rng& rng)
{
    const Region region = make_region(spec);
    const Point c = region.centre();
    const int count = spec.rrh_count;
    PointSet set;
    set.tier = Tier::Rrh;
    switch (spec.rrh_placement) {
    case RrhPlacement::Ring: {
        // Centre site plus the rest evenly on a ring; site i of a smaller
        // count stays in place when count grows along 1, 2, 4, ...
        const double extent = spec.region_shape == RegionShape::Disc
                                  ? spec.region_radius
                                  : std::min(spec.region_width, spec.region_height) / 2;
        const double ring = spec.rrh_ring_fraction * extent;
        set.points.push_back(c);
        for (int i = 1; i < count; ++i) {
            const double theta = 2.0 * std::numbers::pi * (i - 1) / (count - 1);
            set.points.push_back({c.x + ring * std::cos(theta), c.y + ring * std::sin(theta)});
        }
        break;
    }
    case RrhPlacement::Grid: {
        const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count))));
        const int rows = (count + cols - 1) / cols;
        const double w = spec.region_shape == RegionShape::Disc ? std::sqrt(2.0) * spec.region_radius
                                                                : spec.region_width;
        const double h = spec.region_shape == RegionShape::Disc ? std::sqrt(2.0) * spec.region_radius
                                                                : spec.region_height;
        for (int i = 0; i < count; ++i) {
            const int r = i / cols;
            const int col = i % cols;
            set.points.push_back({c.x - w / 2 + w * (col + 0.5) / cols, c.y - h / 2 + h * (r + 0.5) / rows});
        }
        break;
    }
    case RrhPlacement::Uniform:
        for (int i = 0; i < count; ++i)
            set.points.push_back(region.sample_uniform(rng));
        break;
    }
    return set;
}

PointSet place_devices(const DeploymentSpec& spec, int count, Rng& rng)
{
    const Region region = make_region(spec);
    PointSet set;
    set.tier = Tier::Device;
    set.tx_power = spec.device_tx_power;
    set.points.reserve(count);
    for (int i = 0; i < count; ++i)
        set.points.push_back(region.sample_uniform(rng));
    return set;
}

Topology build_topology(const ScenarioConfig& config, Rng& rng)
{
    Topology topo;
    topo.devices = place_devices(config.deployment, config.traffic.m_count, rng);
    topo.rrhs = place_rrhs(config.deployment, rng);
    const ChannelModel channel = ChannelModel::from(config.channel);
    topo.mean_gain.reserve(topo.devices.size() * topo.rrhs.size());
    for (const auto& d : topo.devices.points)
        for (const auto& r : topo.rrhs.points)
            topo.mean_gain.push_back(mean_path_gain(d, r, channel));
    return topo;
}

void write_topology_csv(std::ostream& out, std::span<const PointSet> sets)
{
    out << "tier,x,y,power\n";
    for (const auto& set : sets)
        for (const auto& p : set.points)
            out << to_string(set.tier) << ',' << p.x << ',' << p.y << ',' << set.tx_power << '\n';
}

} // namespace gonora
