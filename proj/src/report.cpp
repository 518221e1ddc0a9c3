#include "gonora/sweep.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace gonora {

namespace {

// BLER falls with p only under light load; more RRHs only matter once the
// pool is congested.
constexpr double kLightLoad = 0.5;
constexpr double kCongested = 2.0;

struct Value {
    double mean = 0;
    double ci = 0;
};

std::optional<Value> bler_of(const ResultRow& r)
{
    if (r.bler)
        return Value{*r.bler, r.bler_ci95.value_or(0.0)};
    if (r.analytic_bler)
        return Value{*r.analytic_bler, 0.0};
    return std::nullopt;
}

std::optional<Value> throughput_of(const ResultRow& r)
{
    if (r.norm_throughput)
        return Value{*r.norm_throughput, r.thr_ci95.value_or(0.0)};
    if (r.analytic_throughput)
        return Value{*r.analytic_throughput, 0.0};
    return std::nullopt;
}

// True when `low` is above `high` with disjoint confidence intervals.
bool clearly_above(const Value& low, const Value& high)
{
    return low.mean - low.ci > high.mean + high.ci;
}

std::string cell(const std::optional<double>& v, const std::optional<double>& ci = std::nullopt)
{
    if (!v)
        return "-";
    char buf[64];
    if (ci)
        std::snprintf(buf, sizeof buf, "%.4g +- %.2g", *v, *ci);
    else
        std::snprintf(buf, sizeof buf, "%.4g", *v);
    return buf;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string pad(const std::string& s, std::size_t width)
{
    return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

} // namespace

std::string emit_report(const ResultTable& table)
{
    std::ostringstream out;
    std::vector<const ResultRow*> rows, errors;
    for (const auto& r : table.rows) {
        if (r.is_replication())
            continue;
        (r.is_error() ? errors : rows).push_back(&r);
    }
    if (rows.empty() && errors.empty()) {
        out << "empty sweep: no result rows\n";
        return out.str();
    }

    std::map<std::pair<int, double>, std::vector<const ResultRow*>> curves;
    for (const auto* r : rows)
        curves[{r->rrh_count, r->p}].push_back(r);
    for (auto& [key, c] : curves)
        std::stable_sort(c.begin(), c.end(),
                         [](auto* a, auto* b) { return a->overload_factor < b->overload_factor; });

    const bool delta = table.analytic;
    out << rows.size() << " sweep point(s) in " << curves.size() << " curve(s)";
    if (!errors.empty())
        out << ", " << errors.size() << " failed";
    out << "\n";

    for (const auto& [key, c] : curves) {
        out << "\ncurve rrh_count=" << key.first << " p=" << fmt(key.second) << "\n";
        out << pad("overload", 10) << pad("bler", 22) << pad("throughput", 22) << pad("drop", 10) << pad("delay", 10);
        if (delta)
            out << pad("analytic_bler", 15) << "delta";
        out << "\n";
        for (const auto* r : c) {
            out << pad(fmt(r->overload_factor), 10) << pad(cell(r->bler, r->bler_ci95), 22)
                << pad(cell(r->norm_throughput, r->thr_ci95), 22) << pad(cell(r->drop_rate), 10)
                << pad(cell(r->mean_delay_prps), 10);
            if (delta) {
                std::optional<double> d;
                if (r->bler && r->analytic_bler)
                    d = *r->bler - *r->analytic_bler;
                out << pad(cell(r->analytic_bler), 15) << cell(d);
            }
            out << "\n";
        }
    }

    std::vector<std::string> flags;
    for (const auto& [key, c] : curves) {
        for (std::size_t i = 1; i < c.size(); ++i) {
            const auto a = bler_of(*c[i - 1]), b = bler_of(*c[i]);
            if (a && b && c[i]->overload_factor > c[i - 1]->overload_factor && clearly_above(*a, *b))
                flags.push_back("rrh_count=" + std::to_string(key.first) + " p=" + fmt(key.second) +
                                ": BLER falls from " + fmt(a->mean) + " to " + fmt(b->mean) + " as overload goes " +
                                fmt(c[i - 1]->overload_factor) + " -> " + fmt(c[i]->overload_factor));
        }
    }

    std::map<std::pair<double, double>, std::vector<const ResultRow*>> by_rrh;
    std::map<std::pair<double, int>, std::vector<const ResultRow*>> by_p;
    for (const auto* r : rows) {
        if (r->overload_factor >= kCongested)
            by_rrh[{r->overload_factor, r->p}].push_back(r);
        if (r->overload_factor <= kLightLoad)
            by_p[{r->overload_factor, r->rrh_count}].push_back(r);
    }
    for (auto& [key, g] : by_rrh) {
        std::stable_sort(g.begin(), g.end(), [](auto* a, auto* b) { return a->rrh_count < b->rrh_count; });
        for (std::size_t i = 1; i < g.size(); ++i) {
            if (g[i]->rrh_count == g[i - 1]->rrh_count)
                continue;
            const std::string where = "overload=" + fmt(key.first) + " p=" + fmt(key.second) + ": ";
            const auto few = bler_of(*g[i - 1]), many = bler_of(*g[i]);
            if (few && many && clearly_above(*many, *few))
                flags.push_back(where + "BLER with " + std::to_string(g[i]->rrh_count) + " RRHs (" + fmt(many->mean) +
                                ") exceeds " + std::to_string(g[i - 1]->rrh_count) + " RRHs (" + fmt(few->mean) + ")");
            const auto tf = throughput_of(*g[i - 1]), tm = throughput_of(*g[i]);
            if (tf && tm && clearly_above(*tf, *tm))
                flags.push_back(where + "throughput with " + std::to_string(g[i]->rrh_count) + " RRHs (" +
                                fmt(tm->mean) + ") is below " + std::to_string(g[i - 1]->rrh_count) + " RRHs (" +
                                fmt(tf->mean) + ")");
        }
    }
    for (auto& [key, g] : by_p) {
        std::stable_sort(g.begin(), g.end(), [](auto* a, auto* b) { return a->p < b->p; });
        for (std::size_t i = 1; i < g.size(); ++i) {
            const auto lo = bler_of(*g[i - 1]), hi = bler_of(*g[i]);
            if (g[i]->p > g[i - 1]->p && lo && hi && clearly_above(*hi, *lo))
                flags.push_back("overload=" + fmt(key.first) + " rrh_count=" + std::to_string(key.second) +
                                ": BLER rises from " + fmt(lo->mean) + " to " + fmt(hi->mean) + " as p goes " +
                                fmt(g[i - 1]->p) + " -> " + fmt(g[i]->p));
        }
    }

    out << "\ntrend violations: " << (flags.empty() ? "none" : std::to_string(flags.size())) << "\n";
    for (const auto& f : flags)
        out << "  " << f << "\n";
    if (!errors.empty()) {
        out << "\nfailed points:\n";
        for (const auto* r : errors)
            out << "  " << r->scenario_id << " (overload=" << fmt(r->overload_factor) << " rrh_count=" << r->rrh_count
                << " p=" << fmt(r->p) << ")\n";
    }
    return out.str();
}

} // namespace gonora
