#pragma once

#include "gonora/config.hpp"

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace gonora {

/// A state of the backoff chain. Backoff(v, 0) is the transmit state of
/// stage v, so a state is either Idle or a (stage, counter) pair.
struct ChainState {
    enum class Kind { Idle, Backoff };

    Kind kind = Kind::Idle;
    int stage = 0;
    int counter = 0;

    static ChainState idle() { return {}; }
    static ChainState backoff(int v, int k) { return {Kind::Backoff, v, k}; }
    static ChainState transmit(int v) { return {Kind::Backoff, v, 0}; }

    bool is_idle() const { return kind == Kind::Idle; }
    bool is_transmit() const { return kind == Kind::Backoff && counter == 0; }

    friend bool operator==(const ChainState&, const ChainState&) = default;
};

std::string to_string(const ChainState& s);

/// Enumeration of the state space: Idle first, then for each stage v the
/// counters 0..W_v-1 in increasing order.
class ChainLayout {
public:
    ChainLayout(int w0, int v_max);
    explicit ChainLayout(const GonoraParams& params) : ChainLayout(params.w0, params.v_max) {}

    int size() const { return size_; }
    int v_max() const { return v_max_; }
    int window(int v) const { return w0_ << v; }
    int index_of(const ChainState& s) const;
    ChainState state_at(int index) const;
    int transmit_index(int v) const { return offsets_[v]; }

private:
    int w0_;
    int v_max_;
    int size_;
    std::vector<int> offsets_;
};

struct StageOutcomes {
    std::vector<double> p_success;
    std::vector<double> p_error;

    static StageOutcomes from_errors(std::vector<double> p_error);
    static StageOutcomes uniform(int v_max, double p_error);
    int stages() const { return static_cast<int>(p_error.size()); }
};

class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense row-stochastic matrix over a ChainLayout. Entry (i, j) is the
/// probability of moving from state i to state j in one PRP.
class TransitionMatrix {
public:
    TransitionMatrix(ChainLayout layout, double arrival_prob);

    const ChainLayout& layout() const { return layout_; }
    int size() const { return layout_.size(); }
    double arrival_prob() const { return q_; }
    double operator()(int from, int to) const { return data_[static_cast<std::size_t>(from) * size() + to]; }
    double& operator()(int from, int to) { return data_[static_cast<std::size_t>(from) * size() + to]; }
    const std::vector<double>& data() const { return data_; }

    /// One "from to probability" triple per nonzero entry, row-major.
    void dump(std::ostream& out) const;

private:
    ChainLayout layout_;
    double q_;
    std::vector<double> data_;
};

struct StateDistribution {
    ChainLayout layout;
    std::vector<double> probability;

    double operator[](const ChainState& s) const { return probability[layout.index_of(s)]; }
};

/// Builds the one-step transition matrix. The last stage always returns to
/// Idle (the packet is dropped on failure).
TransitionMatrix build_chain(const GonoraParams& params, const StageOutcomes& outcomes, double arrival_prob);

/// Solves pi * M = pi with sum(pi) = 1. Throws NumericalFailure when the
/// residual max|pi*M - pi| exceeds 1e-12.
StateDistribution stationary_distribution(const TransitionMatrix& m);

double stationarity_residual(const TransitionMatrix& m, const std::vector<double>& pi);

/// Probability that a device transmits in a given PRP.
double attempt_probability(const StateDistribution& pi);

/// Probability that a packet fails every one of its V+1 attempts.
double drop_probability(const StageOutcomes& outcomes);

/// Mean number of attempts per packet.
double expected_attempts(const StageOutcomes& outcomes);

/// Per-PRP arrival probability for a Poisson source observed once per slot.
double arrival_probability(double lambda, double tau);

using OutcomeModel = std::function<StageOutcomes(double attempt_prob)>;

struct FixedPoint {
    StateDistribution pi;
    StageOutcomes outcomes;
    double attempt_prob = 0;
    int iterations = 0;
};

class FixedPointFailure : public NumericalFailure {
public:
    FixedPointFailure(const std::string& what, FixedPoint last)
        : NumericalFailure(what), last_(std::move(last))
    {
    }
    const FixedPoint& last_iterate() const { return last_; }

private:
    FixedPoint last_;
};

struct FixedPointOptions {
    double damping = 0.5;
    double tolerance = 1e-9;
    int max_iterations = 10'000;
};

/// Damped iteration on the attempt probability until the outcome model and
/// the stationary chain agree.
FixedPoint fixed_point_solve(const GonoraParams& params, double arrival_prob, const OutcomeModel& coupling,
                             const FixedPointOptions& options = {});

} // namespace gonora
