#ifndef DFSYNC_FLOW_HPP
#define DFSYNC_FLOW_HPP

#include <cmath>

namespace dfsync {

// Closed-form activator flow between firings.
//
// Between two firings every x_i has slope -1, so the population mean is
// m(t0 + s) = m0 - s. The activator obeys A' = m - beta*A, whose forward
// variation-of-constants solution is
//
//     A(t0 + s) = (A(t0) + \int_0^s e^{beta u} m(t0 + u) du) e^{-beta s}.
//
// Integrating by parts with m linear gives the particular solution
// A_p(s) = (m0 - s)/beta + 1/beta^2 (it satisfies A_p' = m - beta*A_p) and
// A(t0 + s) = A_p(s) + (A(t0) - A_p(0)) e^{-beta s}. Regrouping,
//
//     A(t0 + s) = A e^{-beta s} + (m0/beta) (1 - e^{-beta s}) + (1 - e^{-beta s} - beta s)/beta^2,
//
// which is the form evaluated below (expm1 keeps small beta*s accurate).
// The backward formula runs the same equation in reverse time with
// m(t - u) = m(t) + u.

/// A(t0+s) from A(t0)=a when the mean is m0 at t0+ and decreases with slope -1.
inline double forward_flow(double a, double m0, double beta, double s)
{
    const double bs = beta * s;
    const double one_minus_e = -std::expm1(-bs);
    return a * std::exp(-bs) + m0 * one_minus_e / beta + (one_minus_e - bs) / (beta * beta);
}

/// Time derivative m - beta*A of the forward flow at offset s.
inline double forward_flow_rate(double a, double m0, double beta, double s)
{
    return (m0 - s) - beta * forward_flow(a, m0, beta, s);
}

/// \int_0^delta e^{-beta u} (m_now + u) du, the smallest activator value at time t
/// that keeps the backward flow over [t - delta, t] non-negative.
inline double lookback_integral(double m_now, double beta, double delta)
{
    const double bd = beta * delta;
    const double one_minus_e = -std::expm1(-bd);
    return m_now * one_minus_e / beta + (one_minus_e - bd * std::exp(-bd)) / (beta * beta);
}

/// Backward flow: A(t - delta) from A(t) = a, assuming no firing in [t - delta, t)
/// so that m(t - u) = m_now + u.
inline double backward_flow(double a, double m_now, double beta, double delta)
{
    return (a - lookback_integral(m_now, beta, delta)) * std::exp(beta * delta);
}

/// Lipschitz constant in time of u -> backward_flow(a, m_now, beta, u) on [0, delta].
///
/// The derivative g(u) = beta*phi(u) - (m_now + u) satisfies g' = beta*g - 1, so
/// g(u) = 1/beta + (g(0) - 1/beta) e^{beta u} is monotone and the supremum of |g|
/// is attained at an endpoint.
inline double backward_flow_lipschitz(double a, double m_now, double beta, double delta)
{
    const double g0 = beta * a - m_now;
    const double g1 = 1.0 / beta + (g0 - 1.0 / beta) * std::exp(beta * delta);
    return std::fmax(std::fabs(g0), std::fabs(g1));
}

}  // namespace dfsync

#endif  // DFSYNC_FLOW_HPP
