#pragma once

#include "gonora/config.hpp"
#include "gonora/rng.hpp"

#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

namespace gonora {

struct Point {
    double x = 0;
    double y = 0;

    friend bool operator==(const Point&, const Point&) = default;
};

double distance(const Point& a, const Point& b);

struct Disc {
    Point centre;
    double radius = 1;
};

struct Rect {
    Point origin; // lower-left corner
    double width = 1;
    double height = 1;
};

/// Observation window for point processes.
class Region {
public:
    Region(Disc d);
    Region(Rect r);

    double area() const;
    bool contains(const Point& p) const;
    Point sample_uniform(Rng& rng) const;
    /// The region grown by `margin` in every direction.
    Region dilated(double margin) const;
    double diameter() const;
    Point centre() const;
    const std::variant<Disc, Rect>& shape() const { return shape_; }

private:
    std::variant<Disc, Rect> shape_;
};

Region make_region(const DeploymentSpec& spec);

enum class Tier { Macro, Micro, Pico, Femto, Rrh, Device };

const char* to_string(Tier t);

struct PointSet {
    std::vector<Point> points;
    Tier tier = Tier::Device;
    double tx_power = 0; // W, shared by the tier

    std::size_t size() const { return points.size(); }
};

PointSet sample_hppp(const Region& region, double density, Rng& rng, Tier tier = Tier::Device);

/// Matern type-II thinning of an arbitrary parent set: each parent draws a
/// uniform mark and survives iff no other parent within `min_dist` carries a
/// smaller mark.
PointSet matern_thin(const PointSet& parents, double min_dist, Rng& rng);

/// Matern type-II hard-core process observed in `region`. Parents are drawn on
/// the region dilated by `min_dist` so thinning near the border sees its full
/// neighbourhood.
PointSet sample_matern_hardcore(const Region& region, double parent_density, double min_dist, Rng& rng,
                                Tier tier = Tier::Device);

/// Thomas cluster process: Poisson(mean_children) offspring per HPPP parent,
/// displaced by an isotropic Gaussian of standard deviation `sigma`. Offspring
/// outside the region are dropped; parents come from the region dilated by
/// 4 sigma.
PointSet sample_poisson_cluster(const Region& region, double parent_density, double mean_children, double sigma,
                                Rng& rng, Tier tier = Tier::Device);

struct ChannelModel {
    double path_loss_exponent = 4.0;
    double ref_gain = 1.0;
    FadingModel fading = FadingModel::Rayleigh;
    double noise = 1e-13; // W

    static ChannelModel from(const ChannelSpec& spec);
};

/// Distance-only gain with a 1 m floor.
double mean_path_gain(const Point& tx, const Point& rx, const ChannelModel& channel);

/// Mean gain times an Exp(1) block fade under Rayleigh fading.
double path_gain(const Point& tx, const Point& rx, const ChannelModel& channel, Rng& rng);

struct Node {
    int id = 0;
    Point position;
    double tx_power = 0;
    Tier tier = Tier::Macro;
};

struct Association {
    int uplink = -1;
    int downlink = -1;

    friend bool operator==(const Association&, const Association&) = default;
};

/// Uplink to the nearest node, downlink to the strongest mean received power.
/// Ties go to the lowest node id. Throws std::invalid_argument on no nodes.
Association associate_dude(const Point& device, std::span<const Node> nodes, const ChannelModel& channel);

/// Both directions to the strongest downlink node.
Association associate_coupled(const Point& device, std::span<const Node> nodes, const ChannelModel& channel);

double decoupling_fraction(std::span<const Association> associations);

/// Flattens point sets into nodes with consecutive ids.
std::vector<Node> to_nodes(std::span<const PointSet> tiers);

/// Receive sites serving one logical cell, placed per the deployment spec.
PointSet place_rrhs(const DeploymentSpec& spec, Rng& rng);

/// Exactly `count` devices, uniform over the region.
PointSet place_devices(const DeploymentSpec& spec, int count, Rng& rng);

/// Devices and receive sites of one replication with their mean
/// (fading-free) gains, stored device-major.
struct Topology {
    PointSet devices;
    PointSet rrhs;
    std::vector<double> mean_gain;

    int rrh_count() const { return static_cast<int>(rrhs.size()); }
    double gain(int device, int rrh) const { return mean_gain[static_cast<std::size_t>(device) * rrhs.size() + rrh]; }
};

/// Devices are drawn before receive sites so that replications with the same
/// seed share device positions across RRH counts.
Topology build_topology(const ScenarioConfig& config, Rng& rng);

/// CSV: tier,x,y,power
void write_topology_csv(std::ostream& out, std::span<const PointSet> sets);

} // namespace gonora
