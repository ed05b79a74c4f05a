#ifndef DFSYNC_CLUSTER_HPP
#define DFSYNC_CLUSTER_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "dfsync/error.hpp"
#include "dfsync/flow.hpp"
#include "dfsync/maps.hpp"
#include "dfsync/params.hpp"

namespace dfsync {

/// Partially synchronized state: cluster k holds n[k] oscillators at concentration y[k].
/// At the section y is strictly decreasing and y.back() == 0 (the cluster about to fire).
struct ClusterState {
    std::vector<int> n;
    std::vector<double> y;
    double A = 0.0;
    double period = 0.0;  ///< return time when the state is a fixed point, 0 otherwise

    std::size_t clusters() const { return n.size(); }
    int population() const { return std::accumulate(n.begin(), n.end(), 0); }

    /// Mean repressor concentration.
    double mean() const
    {
        double s = 0.0;
        for (std::size_t k = 0; k < n.size(); ++k) s += n[k] * y[k];
        return s / population();
    }
};

inline void check_cluster_state(const ClusterState& c)
{
    if (c.n.empty() || c.n.size() != c.y.size()) throw Error("cluster sizes and concentrations differ in length");
    for (int v : c.n)
        if (v < 1) throw Error("cluster sizes must be >= 1");
    if (c.y.back() != 0.0) throw Error("the last cluster must sit at the section (y = 0)");
    for (std::size_t k = 1; k < c.y.size(); ++k)
        if (!(c.y[k - 1] > c.y[k])) throw Error("cluster concentrations must be strictly decreasing");
}

/// Full repressor vector: cluster k occupies a contiguous block, the section cluster comes last.
inline std::vector<double> expand(const ClusterState& c)
{
    std::vector<double> x;
    x.reserve(static_cast<std::size_t>(c.population()));
    for (std::size_t k = 0; k < c.n.size(); ++k) x.insert(x.end(), static_cast<std::size_t>(c.n[k]), c.y[k]);
    return x;
}

/// Inverse of expand for a given cluster distribution. Members of a block must be equal.
inline ClusterState collapse(const std::vector<double>& x, const std::vector<int>& n, double a)
{
    ClusterState c;
    c.n = n;
    c.A = a;
    std::size_t i = 0;
    for (int size : n) {
        const double v = x.at(i);
        for (int j = 0; j < size; ++j, ++i)
            if (x.at(i) != v) throw Error("cluster members have different concentrations");
        c.y.push_back(v);
    }
    if (i != x.size()) throw Error("cluster sizes do not add up to the population");
    return c;
}

/// Same dynamics with every cluster size multiplied by q.
inline ClusterState scale(const ClusterState& c, int q)
{
    ClusterState out = c;
    for (auto& v : out.n) v *= q;
    return out;
}

/// Splits one oscillator off cluster k and places it eps above the rest (it fires eps later).
inline ClusterState smear(const ClusterState& c, std::size_t k, double eps)
{
    if (k >= c.n.size()) throw Error("cluster index out of range");
    if (c.n[k] < 2) throw Error("a singleton cluster cannot be smeared");
    if (!(eps > 0.0)) throw Error("smearing offset must be positive");
    if (k > 0 && !(c.y[k] + eps < c.y[k - 1])) throw Error("smearing offset overtakes the previous cluster");
    ClusterState out = c;
    out.n[k] -= 1;
    out.n.insert(out.n.begin() + static_cast<std::ptrdiff_t>(k), 1);
    out.y.insert(out.y.begin() + static_cast<std::ptrdiff_t>(k), c.y[k] + eps);
    out.period = 0.0;
    return out;
}

/// One cluster firing, advanced to just before the next cluster fires.
struct FiringStep {
    ClusterState state;
    double gap = 0.0;        ///< time until the next firing
    double reset = 0.0;      ///< concentration given to the firing cluster
    double a_delayed = 0.0;  ///< A(-tau) relative to this firing
    double m_before = 0.0;   ///< mean just before the firing
    double m_after = 0.0;    ///< mean just after the firing
    bool merged = false;     ///< two clusters reached y = 0 together
};

/// Firing map in closed form. The delayed activator is obtained with the backward
/// flow, which assumes no other firing in [-tau, 0); callers check that window.
inline FiringStep firing_map(const ClusterState& c, const Params& p)
{
    check_cluster_state(c);
    const int total = c.population();
    const std::size_t kf = c.n.size() - 1;

    FiringStep st;
    st.m_before = c.mean();
    st.a_delayed = p.tau == 0.0 ? c.A : backward_flow(c.A, st.m_before, p.beta, p.tau);
    if (st.a_delayed < 0.0) throw NegativeActivator("backward activator is negative in the firing map");
    st.reset = p.R + p.nu * st.a_delayed;

    // mean right after the firing cluster has been reset
    st.m_after = st.m_before + c.n[kf] * st.reset / total;

    st.gap = kf == 0 ? st.reset : c.y[kf - 1];
    for (std::size_t k = 0; k < kf; ++k) st.gap = std::min(st.gap, c.y[k]);

    std::vector<std::pair<double, int>> next;
    next.reserve(c.n.size());
    next.emplace_back(st.reset - st.gap, c.n[kf]);
    for (std::size_t k = 0; k < kf; ++k) next.emplace_back(c.y[k] - st.gap, c.n[k]);
    std::stable_sort(next.begin(), next.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    ClusterState out;
    for (const auto& [y, size] : next) {
        if (!out.y.empty() && out.y.back() == y) {
            out.n.back() += size;
            st.merged = true;
        } else {
            out.y.push_back(y);
            out.n.push_back(size);
        }
    }
    out.A = forward_flow(c.A, st.m_after, p.beta, st.gap);
    st.state = std::move(out);
    return st;
}

/// Applies the firing map `count` times and records every step.
inline std::vector<FiringStep> firing_sequence(const ClusterState& c, const Params& p, std::size_t count)
{
    std::vector<FiringStep> steps;
    steps.reserve(count);
    ClusterState cur = c;
    for (std::size_t i = 0; i < count; ++i) {
        steps.push_back(firing_map(cur, p));
        cur = steps.back().state;
    }
    return steps;
}

/// Composition of one firing map per cluster: the return map on the cluster subspace.
inline ClusterState compose_firing_maps(const ClusterState& c, const Params& p)
{
    const auto steps = firing_sequence(c, p, c.clusters());
    ClusterState out = steps.back().state;
    out.period = 0.0;
    for (const auto& s : steps) out.period += s.gap;
    if (out.n != c.n) throw OrderViolation("cluster distribution changed during the return");
    return out;
}

/// Return map on the cluster subspace through the engine.
inline ClusterState cluster_return_map(const ClusterState& c, const Params& p)
{
    check_cluster_state(c);
    Params q = p;
    q.N = c.population();
    SectionPoint pt;
    pt.x = expand(c);
    pt.A = c.A;
    const auto out = return_map(pt, q);
    ClusterState r = collapse(out.x, c.n, out.A);
    r.period = out.return_time;
    return r;
}

}  // namespace dfsync

#endif  // DFSYNC_CLUSTER_HPP
