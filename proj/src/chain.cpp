#include "gonora/chain.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace gonora {

std::string to_string(const ChainState& s)
{
    if (s.is_idle())
        return "idle";
    return "(" + std::to_string(s.stage) + "," + std::to_string(s.counter) + ")";
}

ChainLayout::ChainLayout(int w0, int v_max) : w0_(w0), v_max_(v_max)
{
    if (w0 < 1 || v_max < 0 || v_max > 20)
        throw std::invalid_argument("chain layout needs w0 >= 1 and 0 <= v_max <= 20");
    offsets_.resize(v_max + 1);
    int next = 1;
    for (int v = 0; v <= v_max; ++v) {
        offsets_[v] = next;
        next += window(v);
    }
    size_ = next;
}

int ChainLayout::index_of(const ChainState& s) const
{
    if (s.is_idle())
        return 0;
    if (s.stage < 0 || s.stage > v_max_ || s.counter < 0 || s.counter >= window(s.stage))
        throw std::out_of_range("state " + to_string(s) + " outside the chain");
    return offsets_[s.stage] + s.counter;
}

ChainState ChainLayout::state_at(int index) const
{
    if (index < 0 || index >= size_)
        throw std::out_of_range("chain index out of range");
    if (index == 0)
        return ChainState::idle();
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), index);
    const int v = static_cast<int>(it - offsets_.begin()) - 1;
    return ChainState::backoff(v, index - offsets_[v]);
}

StageOutcomes StageOutcomes::from_errors(std::vector<double> p_error)
{
    StageOutcomes out;
    out.p_success.reserve(p_error.size());
    for (double pe : p_error)
        out.p_success.push_back(1.0 - pe);
    out.p_error = std::move(p_error);
    return out;
}

StageOutcomes StageOutcomes::uniform(int v_max, double p_error)
{
    return from_errors(std::vector<double>(v_max + 1, p_error));
}

TransitionMatrix::TransitionMatrix(ChainLayout layout, double arrival_prob)
    : layout_(std::move(layout)), q_(arrival_prob),
      data_(static_cast<std::size_t>(layout_.size()) * layout_.size(), 0.0)
{
}

void TransitionMatrix::dump(std::ostream& out) const
{
    for (int i = 0; i < size(); ++i)
        for (int j = 0; j < size(); ++j)
            if ((*this)(i, j) != 0.0)
                out << to_string(layout_.state_at(i)) << ' ' << to_string(layout_.state_at(j)) << ' '
                    << (*this)(i, j) << '\n';
}

namespace {

void check_outcomes(const GonoraParams& params, const StageOutcomes& outcomes)
{
    const auto stages = static_cast<std::size_t>(params.v_max) + 1;
    if (outcomes.p_error.size() != stages || outcomes.p_success.size() != stages)
        throw std::invalid_argument("stage outcomes need v_max + 1 entries");
    for (std::size_t v = 0; v < stages; ++v) {
        const double ps = outcomes.p_success[v];
        const double pe = outcomes.p_error[v];
        if (!(ps >= 0 && ps <= 1 && pe >= 0 && pe <= 1) || std::abs(ps + pe - 1.0) > 1e-12)
            throw std::invalid_argument("stage outcome " + std::to_string(v) + " is not a probability pair");
    }
}

} // namespace

TransitionMatrix build_chain(const GonoraParams& params, const StageOutcomes& outcomes, double q)
{
    if (!(q >= 0 && q <= 1))
        throw std::invalid_argument("arrival probability must lie in [0,1]");
    check_outcomes(params, outcomes);

    const ChainLayout layout(params);
    TransitionMatrix m(layout, q);
    const int idle = 0;
    const int V = params.v_max;

    m(idle, idle) = 1.0 - q;
    const int w0 = layout.window(0);
    for (int k = 0; k < w0; ++k)
        m(idle, layout.index_of(ChainState::backoff(0, k))) += q / w0;

    for (int v = 0; v <= V; ++v) {
        for (int k = 1; k < layout.window(v); ++k)
            m(layout.index_of(ChainState::backoff(v, k)), layout.index_of(ChainState::backoff(v, k - 1))) = 1.0;

        const int tx = layout.transmit_index(v);
        if (v == V) {
            m(tx, idle) = 1.0;
            continue;
        }
        m(tx, idle) = outcomes.p_success[v];
        const int wn = layout.window(v + 1);
        for (int k = 0; k < wn; ++k)
            m(tx, layout.index_of(ChainState::backoff(v + 1, k))) += outcomes.p_error[v] / wn;
    }
    return m;
}

double stationarity_residual(const TransitionMatrix& m, const std::vector<double>& pi)
{
    const int n = m.size();
    double worst = 0;
    for (int j = 0; j < n; ++j) {
        double acc = 0;
        for (int i = 0; i < n; ++i)
            acc += pi[i] * m(i, j);
        worst = std::max(worst, std::abs(acc - pi[j]));
    }
    return worst;
}

StateDistribution stationary_distribution(const TransitionMatrix& m)
{
    const int n = m.size();
    using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const Matrix> p(m.data().data(), n, n);

    // (P^T - I) pi = 0 has rank n-1; every equation is implied by the others,
    // so the last one is swapped for the normalization sum(pi) = 1.
    Matrix a = p.transpose() - Matrix::Identity(n, n);
    a.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;

    const Eigen::PartialPivLU<Matrix> lu(a);
    Eigen::VectorXd x = lu.solve(b);
    for (int refine = 0; refine < 3; ++refine)
        x += lu.solve(b - a * x);

    std::vector<double> pi(n);
    double total = 0;
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(x(i)))
            throw NumericalFailure("stationary solve produced a non-finite entry");
        pi[i] = std::max(0.0, x(i));
        total += pi[i];
    }
    for (double& v : pi)
        v /= total;

    const double residual = stationarity_residual(m, pi);
    if (!(residual <= 1e-12))
        throw NumericalFailure("stationary solve residual " + std::to_string(residual) + " exceeds 1e-12");
    return {m.layout(), std::move(pi)};
}

double attempt_probability(const StateDistribution& pi)
{
    double total = 0;
    for (int v = 0; v <= pi.layout.v_max(); ++v)
        total += pi.probability[pi.layout.transmit_index(v)];
    return total;
}

double drop_probability(const StageOutcomes& outcomes)
{
    double prod = 1.0;
    for (double pe : outcomes.p_error)
        prod *= pe;
    return prod;
}

double expected_attempts(const StageOutcomes& outcomes)
{
    double total = 1.0;
    double reach = 1.0;
    for (int v = 1; v < outcomes.stages(); ++v) {
        reach *= outcomes.p_error[v - 1];
        total += reach;
    }
    return total;
}

double arrival_probability(double lambda, double tau) { return -std::expm1(-lambda * tau); }

FixedPoint fixed_point_solve(const GonoraParams& params, double q, const OutcomeModel& coupling,
                             const FixedPointOptions& options)
{
    auto evaluate = [&](double attempt) {
        StageOutcomes outcomes = coupling(attempt);
        StateDistribution pi = stationary_distribution(build_chain(params, outcomes, q));
        return FixedPoint{std::move(pi), std::move(outcomes), attempt, 0};
    };

    // Start from the interference-free operating point.
    FixedPoint current = evaluate(0.0);
    double x = attempt_probability(current.pi);
    for (int it = 1; it <= options.max_iterations; ++it) {
        FixedPoint next = evaluate(x);
        const double image = attempt_probability(next.pi);
        const double updated = (1.0 - options.damping) * image + options.damping * x;
        next.iterations = it;
        if (std::abs(image - x) <= options.tolerance) {
            next.attempt_prob = image;
            return next;
        }
        current = std::move(next);
        current.attempt_prob = x;
        x = updated;
    }
    throw FixedPointFailure("fixed point did not converge in " + std::to_string(options.max_iterations) +
                                " iterations",
                            std::move(current));
}

} // namespace gonora
