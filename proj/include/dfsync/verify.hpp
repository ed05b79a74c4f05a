#ifndef DFSYNC_VERIFY_HPP
#define DFSYNC_VERIFY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dfsync/engine.hpp"
#include "dfsync/error.hpp"
#include "dfsync/maps.hpp"
#include "dfsync/params.hpp"

namespace dfsync {

// ---------------------------------------------------------------------------
// Brute-force reference integrator

/// Sampled solution produced by the reference integrator.
struct SampledTrajectory {
    std::vector<double> t;
    std::vector<std::vector<double>> x;
    std::vector<double> A;
    std::vector<FiringEvent> events;
};

/// Fixed-size circular buffer of activator values on the uniform grid t_k = k*dt.
class DelayBuffer {
public:
    DelayBuffer(double dt, std::size_t capacity) : dt_(dt), data_(capacity) {}

    void push(long long k, double a)
    {
        data_[static_cast<std::size_t>(((k % cap()) + cap()) % cap())] = a;
        last_ = k;
        ++count_;
    }

    /// Linear interpolation at time s, which must lie within the stored window.
    double at(double s) const
    {
        const double u = s / dt_;
        auto k = static_cast<long long>(std::floor(u));
        const long long first = last_ - std::min<long long>(count_, cap()) + 1;
        if (k < first || k > last_) throw HistoryUnderflow("delayed value outside the reference buffer");
        if (k == last_) return get(k);
        const double w = u - static_cast<double>(k);
        return (1.0 - w) * get(k) + w * get(k + 1);
    }

private:
    long long cap() const { return static_cast<long long>(data_.size()); }
    double get(long long k) const { return data_[static_cast<std::size_t>(((k % cap()) + cap()) % cap())]; }

    double dt_;
    std::vector<double> data_;
    long long last_ = -1;
    long long count_ = 0;
};

struct ReferenceOptions {
    std::size_t sample_stride = 1;  ///< keep every k-th grid point
    /// Activator on [-tau, 0]. Defaults to an explicit-Euler backward reconstruction
    /// that assumes no firing in [-tau, 0).
    std::function<double(double)> past;
};

/// Explicit Euler on A' = m - beta*A and x' = -1 with firings located inside each step.
/// A(t - tau) is linearly interpolated from the grid values.
inline SampledTrajectory reference_integrator(const Params& p, std::vector<double> x0, double a0, double dt,
                                              double horizon, const ReferenceOptions& opt = {})
{
    p.validate();
    if (!(dt > 0.0)) throw ParameterError("dt must be positive");
    if (p.tau > 0.0 && dt > p.tau / 10.0) throw ParameterError("dt > tau/10 under-resolves the delay");
    if (static_cast<int>(x0.size()) != p.N) throw ParameterError("initial vector length differs from N");

    const auto steps = static_cast<long long>(std::llround(horizon / dt));
    const auto lag = static_cast<long long>(std::ceil(p.tau / dt));
    DelayBuffer buf(dt, static_cast<std::size_t>(lag + 3));

    std::vector<double> x = std::move(x0);
    const auto n = static_cast<double>(x.size());
    auto mean = [&] { return std::accumulate(x.begin(), x.end(), 0.0) / n; };

    // past values on the grid, oldest first
    if (p.tau > 0.0) {
        std::vector<double> past(static_cast<std::size_t>(lag + 2));
        if (opt.past) {
            for (long long j = 0; j <= lag + 1; ++j) past[static_cast<std::size_t>(j)] = opt.past(-j * dt);
        } else {
            const double m0 = mean();
            past[0] = a0;
            for (long long j = 1; j <= lag + 1; ++j) {
                const double tk = -(j - 1) * dt;
                const double ak = past[static_cast<std::size_t>(j - 1)];
                past[static_cast<std::size_t>(j)] = ak - dt * ((m0 - tk) - p.beta * ak);
            }
        }
        for (long long j = lag + 1; j >= 1; --j) buf.push(-j, past[static_cast<std::size_t>(j)]);
    }
    double a = a0;
    buf.push(0, a);

    SampledTrajectory out;
    auto record = [&](double t) {
        out.t.push_back(t);
        out.x.push_back(x);
        out.A.push_back(a);
    };
    auto fire_zeros = [&](double t) {
        FiringEvent ev;
        ev.t = t;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] <= 0.0) ev.oscillators.push_back(static_cast<int>(i));
        if (ev.oscillators.empty()) return;
        ev.a_delayed = p.tau == 0.0 ? a : buf.at(t - p.tau);
        ev.reset_value = p.R + p.nu * ev.a_delayed;
        for (int i : ev.oscillators) x[static_cast<std::size_t>(i)] = ev.reset_value;
        out.events.push_back(std::move(ev));
    };

    fire_zeros(0.0);
    record(0.0);
    for (long long k = 0; k < steps; ++k) {
        const double t0 = k * dt;
        double done = 0.0;
        while (done < dt) {
            const double xmin = *std::min_element(x.begin(), x.end());
            const double h = std::min(dt - done, xmin);
            a += h * (mean() - p.beta * a);
            for (auto& v : x) v -= h;
            done += h;
            if (h == xmin) fire_zeros(t0 + done);
        }
        buf.push(k + 1, a);
        if ((k + 1) % static_cast<long long>(opt.sample_stride) == 0) record((k + 1) * dt);
    }
    return out;
}

/// Distance between the engine solution and a sampled reference solution.
struct Deviation {
    double activator = 0.0;    ///< sup |A| over the samples
    double firing_time = 0.0;  ///< sup over matched firings of |t_engine - t_ref|
    double repressor = 0.0;    ///< sup |x| over samples away from firings
    std::size_t unmatched_events = 0;

    double overall() const { return std::max({activator, firing_time, repressor}); }
};

inline Deviation compare_to_reference(const Trajectory& tr, const SampledTrajectory& ref)
{
    Deviation d;
    // firings, matched per oscillator in order
    std::map<int, std::vector<double>> te, tf;
    for (const auto& e : tr.events)
        for (int i : e.oscillators) te[i].push_back(e.t);
    for (const auto& e : ref.events)
        for (int i : e.oscillators) tf[i].push_back(e.t);
    for (auto& [i, v] : te) {
        const auto& w = tf[i];
        const std::size_t m = std::min(v.size(), w.size());
        d.unmatched_events += std::max(v.size(), w.size()) - m;
        for (std::size_t k = 0; k < m; ++k) d.firing_time = std::max(d.firing_time, std::fabs(v[k] - w[k]));
    }
    // every firing time from either solution, for the exclusion zone
    std::vector<double> all;
    for (const auto& e : tr.events) all.push_back(e.t);
    std::sort(all.begin(), all.end());
    const double guard = 2.0 * d.firing_time + 1e-12;

    for (std::size_t s = 0; s < ref.t.size(); ++s) {
        const double t = ref.t[s];
        if (t > tr.t_end) break;
        d.activator = std::max(d.activator, std::fabs(tr.activator_at(t) - ref.A[s]));
        const auto it = std::lower_bound(all.begin(), all.end(), t - guard);
        if (it != all.end() && *it <= t + guard) continue;
        const auto xe = tr.x_at(t);
        for (std::size_t i = 0; i < xe.size(); ++i) d.repressor = std::max(d.repressor, std::fabs(xe[i] - ref.x[s][i]));
    }
    return d;
}

// ---------------------------------------------------------------------------
// Spread of a perturbed cluster

struct SpreadSeries {
    std::vector<double> times;    ///< section firing times
    std::vector<double> spreads;  ///< max - min firing offset of the members at each return
    std::vector<double> ratios;   ///< spread(n+1)/spread(n) where both exceed 1e-14
    double mean_ratio = std::numeric_limits<double>::quiet_NaN();  ///< geometric mean of ratios
};

inline constexpr double spread_floor = 1e-14;

/// Spread series from firing events. At each firing of `section`, every member's
/// nearest firing gives an offset; the spread is the range of those offsets.
/// Ratios stop at the first return whose spread exceeds max_spread (local regime).
inline SpreadSeries spread_metrics(const std::vector<FiringEvent>& events, int section, const std::vector<int>& members,
                                   double max_spread = std::numeric_limits<double>::infinity())
{
    std::map<int, std::vector<double>> times;
    for (const auto& e : events)
        for (int i : e.oscillators) times[i].push_back(e.t);
    SpreadSeries s;
    const auto& sec = times[section];
    for (std::size_t r = 0; r < sec.size(); ++r) {
        const double ts = sec[r];
        // an offset counts only if it is closer than half the way to a neighbouring
        // section firing; otherwise the member's firing for this return is missing
        double half = std::numeric_limits<double>::infinity();
        if (r > 0) half = std::min(half, 0.5 * (ts - sec[r - 1]));
        if (r + 1 < sec.size()) half = std::min(half, 0.5 * (sec[r + 1] - ts));
        double lo = 0.0, hi = 0.0;
        bool complete = true;
        for (int i : members) {
            const auto& v = times[i];
            if (v.empty()) {
                complete = false;
                break;
            }
            auto it = std::lower_bound(v.begin(), v.end(), ts);
            double best = std::numeric_limits<double>::infinity();
            if (it != v.end()) best = *it - ts;
            if (it != v.begin() && std::fabs(*(it - 1) - ts) < std::fabs(best)) best = *(it - 1) - ts;
            if (!(std::fabs(best) < half)) {
                complete = false;
                break;
            }
            lo = std::min(lo, best);
            hi = std::max(hi, best);
        }
        if (!complete) break;
        s.times.push_back(ts);
        s.spreads.push_back(hi - lo);
    }
    double logsum = 0.0;
    for (std::size_t k = 0; k + 1 < s.spreads.size(); ++k) {
        if (s.spreads[k] > max_spread) break;
        // an exact re-merge gives spread 0, which carries no rate information
        if (!(s.spreads[k] > spread_floor) || !(s.spreads[k + 1] > spread_floor)) continue;
        s.ratios.push_back(s.spreads[k + 1] / s.spreads[k]);
        logsum += std::log(s.ratios.back());
    }
    if (!s.ratios.empty()) s.mean_ratio = std::exp(logsum / static_cast<double>(s.ratios.size()));
    return s;
}

inline SpreadSeries spread_metrics(const Trajectory& tr, int section, const std::vector<int>& members,
                                   double max_spread = std::numeric_limits<double>::infinity())
{
    return spread_metrics(tr.events, section, members, max_spread);
}

/// All oscillators as members.
inline SpreadSeries spread_metrics(const Trajectory& tr, int section)
{
    std::vector<int> all(tr.x0.size());
    std::iota(all.begin(), all.end(), 0);
    return spread_metrics(tr, section, all);
}

// ---------------------------------------------------------------------------
// Empirical Lipschitz constant of the return map

struct LipschitzPair {
    std::vector<double> x, x2;
    double A = 0.0, A2 = 0.0;
    double ratio = 0.0;
};

struct LipschitzReport {
    std::uint64_t seed = 0;
    int trials = 0;        ///< pairs evaluated
    int skipped = 0;       ///< inadmissible or order-breaking samples
    int identical = 0;     ///< pairs at distance zero (ratio undefined)
    int first_later = 0;   ///< pairs with t_R > t'_R
    int second_later = 0;  ///< pairs with t'_R >= t_R
    double L = 0.0;
    LipschitzPair worst;
};

inline constexpr int lipschitz_grid_points = 1000;

namespace detail {

/// sup over a uniform grid on [-tau, 0] of |A1 - A2| (the current value when tau = 0).
inline double history_distance(const ActivatorHistory& h1, const ActivatorHistory& h2, double tau)
{
    if (tau == 0.0) return std::fabs(h1.value(0.0) - h2.value(0.0));
    double d = 0.0;
    for (int k = 0; k < lipschitz_grid_points; ++k) {
        const double t = -tau + tau * k / (lipschitz_grid_points - 1);
        d = std::max(d, std::fabs(h1.value(t) - h2.value(t)));
    }
    return d;
}

inline double section_distance(const SectionPoint& a, const SectionPoint& b, double tau)
{
    double dx = 0.0;
    for (std::size_t i = 0; i + 1 < a.x.size(); ++i) dx = std::max(dx, std::fabs(a.x[i] - b.x[i]));
    if (tau == 0.0 || !a.history || !b.history) return std::max(dx, std::fabs(a.A - b.A));
    return std::max(dx, history_distance(*a.history, *b.history, tau));
}

}  // namespace detail

/// Samples base points in the attracting box and perturbations of size `radius`,
/// applies the return map to both and records the largest distance ratio.
inline LipschitzReport lipschitz_probe(const Params& p, int trials, double radius, std::uint64_t seed,
                                       int max_attempts_factor = 200)
{
    p.validate_with_order();
    LipschitzReport rep;
    rep.seed = seed;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, p.R), ua(0.0, p.a_max()), up(-1.0, 1.0);
    const std::size_t n = static_cast<std::size_t>(p.N);

    auto make_point = [&](std::vector<double> x, double a) -> std::optional<SectionPoint> {
        x.back() = 0.0;
        for (auto& v : x) v = std::max(v, 0.0);
        if (a < 0.0 || !check_wellposed(x, a, p).admissible()) return std::nullopt;
        SectionPoint pt;
        pt.x = std::move(x);
        pt.A = a;
        if (p.tau > 0.0) {
            try {
                pt.history = reconstruct_history(pt.x, a, p);
            } catch (const Error&) {
                return std::nullopt;
            }
        }
        return pt;
    };

    const int max_attempts = max_attempts_factor * trials;
    for (int attempt = 0; attempt < max_attempts && rep.trials < trials; ++attempt) {
        std::vector<double> x(n);
        for (auto& v : x) v = ux(rng);
        const double a = ua(rng);
        std::vector<double> x2(x);
        for (auto& v : x2) v += radius * up(rng);
        const double a2 = a + radius * up(rng);

        const auto p1 = make_point(x, a);
        const auto p2 = make_point(x2, a2);
        if (!p1 || !p2) {
            ++rep.skipped;
            continue;
        }
        const double din = detail::section_distance(*p1, *p2, p.tau);
        if (din == 0.0) {
            ++rep.identical;
            continue;
        }
        SectionPoint o1, o2;
        try {
            o1 = return_map(*p1, p);
            o2 = return_map(*p2, p);
        } catch (const Error&) {
            ++rep.skipped;
            continue;
        }
        const double dout = detail::section_distance(o1, o2, p.tau);
        const double ratio = dout / din;
        ++rep.trials;
        (o1.return_time > o2.return_time ? rep.first_later : rep.second_later) += 1;
        if (ratio > rep.L) {
            rep.L = ratio;
            rep.worst = {p1->x, p2->x, a, a2, ratio};
        }
    }
    return rep;
}

}  // namespace dfsync

#endif  // DFSYNC_VERIFY_HPP
