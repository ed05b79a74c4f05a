#ifndef DFSYNC_MAPS_HPP
#define DFSYNC_MAPS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dfsync/engine.hpp"
#include "dfsync/error.hpp"
#include "dfsync/flow.hpp"
#include "dfsync/params.hpp"

namespace dfsync {

struct ResetCoefficients {
    double R_tau = 0.0;
    double nu_tau = 0.0;
};

/// With no firing in [t - tau, t) the reset at a firing is R_tau + nu_tau * A(t).
inline ResetCoefficients reset_coefficients(const Params& p)
{
    const ResetCoefficients rc{p.r_tau(), p.nu_tau()};
    if (!std::isfinite(rc.R_tau) || !std::isfinite(rc.nu_tau))
        throw ParameterError("reset coefficients are not finite");
    if (!(rc.R_tau > 0.0)) throw ParameterError("parameter conditions violated: [R_tau > 0]");
    if (!(rc.nu_tau < p.beta)) throw ParameterError("parameter conditions violated: [nu_tau < beta]");
    return rc;
}

/// Return map of the synchronized population, acting on the activator value at firing.
inline double f1(double a, const Params& p)
{
    const double b = p.beta;
    const auto rc = reset_coefficients(p);
    const double period = rc.R_tau + rc.nu_tau * a;
    return 1.0 / (b * b) +
           (a * (1.0 - rc.nu_tau / b) - rc.R_tau / b - 1.0 / (b * b)) * std::exp(-b * period);
}

inline double f1_derivative(double a, const Params& p)
{
    const double b = p.beta;
    const auto rc = reset_coefficients(p);
    const double e = std::exp(-b * (rc.R_tau + rc.nu_tau * a));
    const double c = a * (1.0 - rc.nu_tau / b) - rc.R_tau / b - 1.0 / (b * b);
    return e * ((1.0 - rc.nu_tau / b) - b * rc.nu_tau * c);
}

/// Smallest activator value at a synchronized firing for which the past is admissible.
inline double a0_tau(const Params& p)
{
    const double bt = p.beta * p.tau;
    return (-std::expm1(-bt) - bt * std::exp(-bt)) / (p.beta * p.beta);
}

/// Upper end of the interval mapped into itself by f1.
inline double a_tau_max(const Params& p)
{
    const auto rc = reset_coefficients(p);
    return rc.R_tau / (p.beta - rc.nu_tau);
}

struct SyncAnalysis {
    double R_tau = 0.0;
    double nu_tau = 0.0;
    double A0_tau = 0.0;
    double A_tau_max = 0.0;
    double A_FP = 0.0;
    double period = 0.0;  ///< R_tau + nu_tau * A_FP
};

/// State immediately before the section oscillator (the last index) fires.
struct SectionPoint {
    std::vector<double> x;                 ///< x.back() == 0
    double A = 0.0;
    std::optional<ActivatorHistory> history;  ///< covers [-tau, 0] when present
    double return_time = 0.0;              ///< time since the previous section crossing (outputs only)
};

/// Relabels the first N-1 coordinates: out[i] = x[perm[i]]; the section stays last.
inline std::vector<double> permute(const std::vector<double>& x, const std::vector<int>& perm)
{
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < perm.size(); ++i) out[i] = x[static_cast<std::size_t>(perm[i])];
    for (std::size_t i = perm.size(); i < x.size(); ++i) out[i] = x[i];
    return out;
}

/// Return map to the section x_N = 0, computed by running the engine from one
/// firing of the section oscillator to just before its next firing.
/// Throws OrderViolation if another oscillator fires twice in between.
inline SectionPoint return_map(const SectionPoint& pt, const Params& p)
{
    if (pt.x.empty() || pt.x.back() != 0.0) throw Error("section point must have x_N = 0");
    PopulationState s = pt.history ? initial_state(p, pt.x, *pt.history) : initial_state(p, pt.x, pt.A);
    const std::size_t n = s.x.size();
    const int sec = static_cast<int>(n) - 1;
    const double max_x = *std::max_element(pt.x.begin(), pt.x.end());

    std::vector<char> fired(n, 0);
    const auto first = advance_to_next_firing(s, p);
    if (max_x >= first.reset_value)
        throw OrderViolation("max_x >= reset value at the section: firing order is not preserved");
    for (int i : first.oscillators) fired[static_cast<std::size_t>(i)] = 1;

    for (;;) {
        const auto pending = flow_to_next_firing(s);
        if (std::find(pending.oscillators.begin(), pending.oscillators.end(), sec) != pending.oscillators.end()) {
            for (int i : pending.oscillators)
                if (!fired[static_cast<std::size_t>(i)])
                    throw OrderViolation("oscillator " + std::to_string(i) + " did not fire during the return");
            break;
        }
        for (int i : pending.oscillators) {
            if (fired[static_cast<std::size_t>(i)])
                throw OrderViolation("oscillator " + std::to_string(i) + " fired twice during one return");
            fired[static_cast<std::size_t>(i)] = 1;
        }
        fire(s, p, pending.oscillators);
    }
    if (std::find(fired.begin(), fired.end(), 0) != fired.end())
        throw OrderViolation("an oscillator did not fire during the return");

    SectionPoint out;
    out.x = s.x;
    out.A = s.A;
    out.return_time = s.t;
    ActivatorHistory h = s.history.window(s.t - p.tau, s.t);
    h.shift(-s.t);
    out.history = std::move(h);
    return out;
}

/// Iterates the return map k times.
inline std::vector<SectionPoint> iterate_return_map(SectionPoint pt, const Params& p, int k)
{
    std::vector<SectionPoint> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        pt = return_map(pt, p);
        out.push_back(pt);
    }
    return out;
}

}  // namespace dfsync

#endif  // DFSYNC_MAPS_HPP
