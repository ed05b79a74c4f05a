#ifndef DFSYNC_ENGINE_HPP
#define DFSYNC_ENGINE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dfsync/error.hpp"
#include "dfsync/flow.hpp"
#include "dfsync/history.hpp"
#include "dfsync/params.hpp"

namespace dfsync {

/// Oscillators closer than this (but not equal) are reported as near-collisions.
inline constexpr double near_collision_distance = 1e-9;

struct FiringEvent {
    double t = 0.0;
    std::vector<int> oscillators;  ///< 0-based indices firing simultaneously
    double a_delayed = 0.0;        ///< A(t - tau)
    double reset_value = 0.0;      ///< R + nu*A(t - tau)
};

/// Population state at time t. x holds the repressor concentrations; the last
/// history segment starts at the most recent event (or the initial time).
struct PopulationState {
    double t = 0.0;
    std::vector<double> x;
    double A = 0.0;
    ActivatorHistory history;

    double mean() const
    {
        return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    }
};

/// Initial datum: repressor vector, current activator and optionally an explicit
/// activator history covering [-tau, 0].
struct InitialData {
    std::vector<double> x;
    double A = 0.0;
    std::optional<ActivatorHistory> history;
};

/// Which sufficient condition certifies that (x0, A0) alone determines the trajectory.
enum class Admissibility {
    MinAboveDelay,    ///< min x0 >= tau: no firing in [0, tau)
    StrongCondition,  ///< max + min < R - tau and A0 >= A_x(tau)
    ClaimInequality,  ///< max < R + nu*A0 + (nu*K+1)*min - (2*nu*K+1)*tau and A0 >= A_x(tau)
    Inadmissible
};

inline const char* to_string(Admissibility a)
{
    switch (a) {
    case Admissibility::MinAboveDelay: return "min-above-delay";
    case Admissibility::StrongCondition: return "strong-condition";
    case Admissibility::ClaimInequality: return "claim-inequality";
    case Admissibility::Inadmissible: return "inadmissible";
    }
    return "?";
}

struct WellposedReport {
    Admissibility verdict = Admissibility::Inadmissible;
    double min_x = 0.0;
    double max_x = 0.0;
    double threshold = 0.0;        ///< A_x(tau): smallest A0 keeping the backward flow >= 0
    bool above_threshold = false;  ///< A0 >= threshold
    double lipschitz_k = 0.0;      ///< time-Lipschitz constant of the backward flow on [0, tau]
    double claim_bound = 0.0;      ///< right-hand side of the claim inequality

    bool admissible() const { return verdict != Admissibility::Inadmissible; }
};

inline double mean_of(std::span<const double> x)
{
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Classifies (x0, A0). Total: never throws.
inline WellposedReport check_wellposed(std::span<const double> x0, double a0, const Params& p)
{
    WellposedReport r;
    if (x0.empty()) return r;
    r.min_x = *std::min_element(x0.begin(), x0.end());
    r.max_x = *std::max_element(x0.begin(), x0.end());
    const double m0 = mean_of(x0);
    r.threshold = lookback_integral(m0, p.beta, p.tau);
    r.above_threshold = a0 >= r.threshold;
    r.lipschitz_k = backward_flow_lipschitz(a0, m0, p.beta, p.tau);
    const double nk = p.nu * r.lipschitz_k;
    r.claim_bound = p.R + p.nu * a0 + (nk + 1.0) * r.min_x - (2.0 * nk + 1.0) * p.tau;

    if (r.min_x < 0.0)
        r.verdict = Admissibility::Inadmissible;
    else if (r.min_x >= p.tau)
        r.verdict = Admissibility::MinAboveDelay;
    else if (r.above_threshold && r.max_x + r.min_x < p.R - p.tau)
        r.verdict = Admissibility::StrongCondition;
    else if (r.above_threshold && r.max_x < r.claim_bound)
        r.verdict = Admissibility::ClaimInequality;
    else
        r.verdict = Admissibility::Inadmissible;
    return r;
}

/// A(t - delta) from the current repressor vector and activator, assuming no
/// firing in [t - delta, t) so that m(t - s) = mean(x) + s.
inline double backward_activator(std::span<const double> x, double a, double beta, double delta)
{
    const double v = backward_flow(a, mean_of(x), beta, delta);
    if (v < 0.0)
        throw NegativeActivator("backward activator is negative (" + std::to_string(v) +
                                "): A is below the admissibility threshold");
    return v;
}

inline double backward_activator(const PopulationState& s, const Params& p, double delta)
{
    return backward_activator(s.x, s.A, p.beta, delta);
}

/// Single segment on [-tau, 0] obtained by running the activator backward from
/// (x0, A0) under the assumption that nothing fired in [-tau, 0).
inline ActivatorHistory reconstruct_history(std::span<const double> x0, double a0, const Params& p)
{
    ActivatorHistory h(p.beta);
    if (p.tau > 0.0) {
        const double m0 = mean_of(x0);
        const double a_past = backward_activator(x0, a0, p.beta, p.tau);
        h.append({-p.tau, 0.0, a_past, m0 + p.tau});
    }
    return h;
}

namespace detail {

inline void check_population(std::span<const double> x, const Params& p)
{
    if (x.empty()) throw ParameterError("population is empty");
    if (static_cast<int>(x.size()) != p.N)
        throw ParameterError("repressor vector has " + std::to_string(x.size()) +
                             " entries but N = " + std::to_string(p.N));
    for (double v : x)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError("repressor concentrations must be finite and >= 0");
}

inline double pruning_margin(const Params& p, double a)
{
    return p.tau + p.R + p.nu * std::max(p.a_max(), a);
}

}  // namespace detail

/// Initial state from an explicit activator history covering [-tau, 0].
inline PopulationState initial_state(const Params& p, std::vector<double> x0, ActivatorHistory history)
{
    p.validate();
    detail::check_population(x0, p);
    if (p.tau > 0.0 && !history.covers(-p.tau))
        throw HistoryUnderflow("explicit history must cover [-tau, 0]");
    if (history.empty() || history.t_end() != 0.0)
        throw HistoryUnderflow("explicit history must end at t = 0");
    PopulationState s;
    s.t = 0.0;
    s.A = history.value(0.0);
    s.x = std::move(x0);
    s.history = std::move(history);
    s.history.append({0.0, 0.0, s.A, s.mean()});
    return s;
}

/// Initial state from (x0, A0) alone. The past activator is reconstructed when
/// the admissibility conditions allow it; otherwise a WellPosednessError is raised.
inline PopulationState initial_state(const Params& p, std::vector<double> x0, double a0)
{
    p.validate();
    detail::check_population(x0, p);
    if (!(a0 >= 0.0)) throw ParameterError("initial activator must be >= 0");
    const auto report = check_wellposed(x0, a0, p);
    if (!report.admissible())
        throw WellPosednessError(
            "initial data is not admissible without an explicit activator history "
            "(min=" + std::to_string(report.min_x) + ", max=" + std::to_string(report.max_x) +
            ", A0=" + std::to_string(a0) + ", threshold=" + std::to_string(report.threshold) +
            ", claim bound=" + std::to_string(report.claim_bound) + ")");

    PopulationState s;
    s.t = 0.0;
    s.A = a0;
    s.history = ActivatorHistory(p.beta);
    if (p.tau > 0.0 && report.above_threshold) {
        s.history = reconstruct_history(x0, a0, p);
    }
    s.x = std::move(x0);
    s.history.append({0.0, 0.0, a0, s.mean()});
    return s;
}

inline PopulationState initial_state(const Params& p, const InitialData& init)
{
    if (init.history) return initial_state(p, init.x, *init.history);
    return initial_state(p, init.x, init.A);
}

/// Oscillators about to fire, after the population was flowed up to the firing time.
struct PendingFiring {
    double t = 0.0;
    std::vector<int> oscillators;
};

/// Time of the next firing: exact, because every x_i decreases with slope -1.
inline double next_firing_time(const PopulationState& s)
{
    return s.t + *std::min_element(s.x.begin(), s.x.end());
}

/// Flows the state up to the next firing without applying the resets.
/// Afterwards the firing oscillators have x_i == 0 exactly.
inline PendingFiring flow_to_next_firing(PopulationState& s)
{
    const double dt = *std::min_element(s.x.begin(), s.x.end());
    const double t_fire = s.t + dt;
    s.history.extend_to(t_fire);
    s.A = s.history.value(t_fire);
    PendingFiring out;
    out.t = t_fire;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        s.x[i] -= dt;
        if (s.x[i] == 0.0) out.oscillators.push_back(static_cast<int>(i));
    }
    s.t = t_fire;
    return out;
}

/// Resets the given oscillators to R + nu*A(t - tau) and opens a new history segment.
inline FiringEvent fire(PopulationState& s, const Params& p, const std::vector<int>& who)
{
    FiringEvent ev;
    ev.t = s.t;
    ev.oscillators = who;
    ev.a_delayed = p.tau == 0.0 ? s.A : s.history.value(s.t - p.tau);
    ev.reset_value = p.R + p.nu * ev.a_delayed;
    for (int i : who) s.x[static_cast<std::size_t>(i)] = ev.reset_value;

    // a zero-length segment appears when firing at the initial instant
    s.history.append_replacing_empty({s.t, s.t, s.A, s.mean()});
    s.history.prune_before(s.t - detail::pruning_margin(p, s.A));
    return ev;
}

/// Advances to the next firing and applies it. Oscillators with exactly equal
/// concentrations fire together and stay a cluster.
inline FiringEvent advance_to_next_firing(PopulationState& s, const Params& p)
{
    const auto pending = flow_to_next_firing(s);
    return fire(s, p, pending.oscillators);
}

/// Flows the state to time t (no firing may occur before t).
inline void flow_to(PopulationState& s, double t)
{
    if (t < s.t) throw Error("cannot flow backward in time");
    if (t > next_firing_time(s)) throw Error("flow_to would skip a firing");
    const double dt = t - s.t;
    s.history.extend_to(t);
    s.A = s.history.value(t);
    for (auto& v : s.x) v -= dt;
    s.t = t;
}

/// Complete event-driven solution on [t0, t_end].
struct Trajectory {
    Params params;
    double t0 = 0.0;
    double t_end = 0.0;
    std::vector<double> x0;
    double a0 = 0.0;
    std::vector<FiringEvent> events;
    std::vector<std::vector<double>> x_checkpoints;  ///< x(t_k+) after event k
    ActivatorHistory activator;                       ///< every segment since the start
    std::size_t near_collisions = 0;

    double activator_at(double t) const { return activator.value(t); }

    /// Left-continuous repressor vector: at a firing time the firing entries are 0.
    std::vector<double> x_at(double t) const
    {
        if (t < t0 || t > t_end) throw HistoryUnderflow("repressor requested outside the simulated span");
        // last event strictly before t
        auto it = std::lower_bound(events.begin(), events.end(), t,
                                   [](const FiringEvent& e, double v) { return e.t < v; });
        std::vector<double> x;
        double t_ref = t0;
        if (it == events.begin()) {
            x = x0;
        } else {
            const auto k = static_cast<std::size_t>(it - events.begin()) - 1;
            x = x_checkpoints[k];
            t_ref = events[k].t;
        }
        for (auto& v : x) v -= (t - t_ref);
        return x;
    }

    /// Firing times of oscillator i.
    std::vector<double> firing_times(int i) const
    {
        std::vector<double> out;
        for (const auto& e : events)
            if (std::find(e.oscillators.begin(), e.oscillators.end(), i) != e.oscillators.end())
                out.push_back(e.t);
        return out;
    }
};

namespace detail {

inline std::size_t count_near_collisions(std::vector<double> x)
{
    std::sort(x.begin(), x.end());
    std::size_t n = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double d = x[i] - x[i - 1];
        if (d > 0.0 && d < near_collision_distance) ++n;
    }
    return n;
}

}  // namespace detail

/// Event-driven simulation from a prepared state up to time `horizon`.
/// Deterministic: identical inputs give bit-identical outputs.
inline Trajectory simulate(const Params& p, PopulationState s, double horizon)
{
    Trajectory tr;
    tr.params = p;
    tr.t0 = s.t;
    tr.x0 = s.x;
    tr.a0 = s.A;
    tr.activator = s.history;
    while (next_firing_time(s) <= horizon) {
        auto ev = advance_to_next_firing(s, p);
        tr.activator.extend_to(ev.t);
        tr.activator.append_replacing_empty(s.history.segments().back());
        tr.near_collisions += detail::count_near_collisions(s.x);
        tr.x_checkpoints.push_back(s.x);
        tr.events.push_back(std::move(ev));
    }
    tr.t_end = std::max(horizon, s.t);
    tr.activator.extend_to(tr.t_end);
    return tr;
}

inline Trajectory simulate(const Params& p, const InitialData& init, double horizon)
{
    return simulate(p, initial_state(p, init), horizon);
}

/// Runs until oscillator `section` has fired `returns` + 1 times (the first
/// firing opens the first return) and stops right after that firing.
inline Trajectory simulate_returns(const Params& p, const InitialData& init, int returns, int section)
{
    PopulationState s = initial_state(p, init);
    Trajectory tr;
    int seen = 0;
    double t_stop = s.t;
    {
        PopulationState probe = s;
        while (seen <= returns) {
            const auto ev = advance_to_next_firing(probe, p);
            if (std::find(ev.oscillators.begin(), ev.oscillators.end(), section) != ev.oscillators.end()) ++seen;
            t_stop = ev.t;
        }
    }
    return simulate(p, std::move(s), t_stop);
}

}  // namespace dfsync

#endif  // DFSYNC_ENGINE_HPP
