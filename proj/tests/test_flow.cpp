#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "dfsync/flow.hpp"
#include "dfsync/history.hpp"
#include "dfsync/fixed_points.hpp"
#include "dfsync/maps.hpp"
#include "dfsync/params.hpp"

using namespace dfsync;
using boost::math::quadrature::gauss_kronrod;

namespace {

// A(s) = (A0 + \int_0^s e^{beta u} (m0 - u) du) e^{-beta s}, integrated numerically.
double quad_forward(double a0, double m0, double beta, double s)
{
    if (s == 0.0) return a0;
    const double I = gauss_kronrod<double, 61>::integrate(
        [&](double u) { return std::exp(beta * (u - s)) * (m0 - u); }, 0.0, s, 10, 1e-15);
    return a0 * std::exp(-beta * s) + I;
}

double quad_lookback(double m, double beta, double delta)
{
    return gauss_kronrod<double, 61>::integrate([&](double u) { return std::exp(-beta * u) * (m + u); }, 0.0, delta,
                                                10, 1e-15);
}

}  // namespace

TEST(Flow, SegmentStartReturnsStoredValueExactly)
{
    const ActivatorSegment seg{1.5, 3.0, 0.123456789, 1.7};
    EXPECT_EQ(seg.value(1.5, 0.9), 0.123456789);
}

TEST(Flow, ForcingDominatedLimit)
{
    // m0 = 0, beta = 1, A = 1: A(s) - A_p(s) = (1 - A_p(0)) e^{-s} with A_p(s) = -s + 1
    for (double s : {0.5, 2.0, 10.0, 30.0}) {
        const double ap = -s + 1.0;
        const double a = forward_flow(1.0, 0.0, 1.0, s);
        EXPECT_NEAR(std::fabs(a - ap), std::fabs(1.0 - 1.0) * std::exp(-s), 1e-12);
    }
    for (double s : {0.5, 2.0, 10.0}) {
        const double ap = -s + 1.0;  // A_p for m0 = 0, beta = 1
        const double a = forward_flow(3.0, 0.0, 1.0, s);
        EXPECT_NEAR(a - ap, (3.0 - 1.0) * std::exp(-s), 1e-12);
    }
}

TEST(Flow, ParticularSolutionForm)
{
    // A_p(s) + (A - A_p(0)) e^{-beta s} with A_p(s) = (m0 - s)/beta + 1/beta^2
    const double a = 0.4, m0 = 1.3, b = 0.7;
    for (double s : {0.0, 0.1, 1.0, 3.0}) {
        const double ap = (m0 - s) / b + 1.0 / (b * b);
        const double ap0 = m0 / b + 1.0 / (b * b);
        EXPECT_NEAR(forward_flow(a, m0, b, s), ap + (a - ap0) * std::exp(-b * s), 1e-13);
    }
}

TEST(Flow, SynchronizedPeriodMatchesQuadrature)
{
    const Params p{2.0, 1.0, 0.2, 0.0, 1};
    const double a = sync_fixed_point(p).A_FP;
    const double t = p.R + p.nu * a;  // mean right after the firing
    for (int k = 0; k <= 50; ++k) {
        const double s = t * k / 50.0;
        EXPECT_NEAR(forward_flow(a, t, p.beta, s), quad_forward(a, t, p.beta, s), 1e-10) << "s=" << s;
    }
}

TEST(Flow, SmallBetaKeepsPrecision)
{
    // series: A(s) = A + (m0 - beta*A) s - (1 + beta m0 - beta^2 A) s^2/2 + O(s^3)
    const double a = 0.5, m0 = 1.0, b = 1e-6, s = 1e-3;
    const double series = a + (m0 - b * a) * s - (1.0 + b * m0 - b * b * a) * s * s / 2.0;
    EXPECT_NEAR(forward_flow(a, m0, b, s), series, 1e-12);
}

TEST(Flow, BackwardIdentityAtZeroDelay)
{
    EXPECT_DOUBLE_EQ(backward_flow(0.77, 1.2, 1.0, 0.0), 0.77);
}

TEST(Flow, ForwardThenBackwardIsIdentity)
{
    for (double b : {0.3, 1.0, 5.0})
        for (double d : {0.05, 0.2, 1.0}) {
            const double a0 = 0.8, m_start = 1.4;
            const double a1 = forward_flow(a0, m_start, b, d);
            EXPECT_NEAR(backward_flow(a1, m_start - d, b, d), a0, 1e-12);
        }
}

TEST(Flow, LookbackIntegralMatchesQuadrature)
{
    for (double b : {0.2, 1.0, 4.0})
        for (double d : {0.01, 0.2, 1.5}) EXPECT_NEAR(lookback_integral(0.9, b, d), quad_lookback(0.9, b, d), 1e-13);
}

TEST(Flow, LipschitzConstantBoundsBackwardDerivative)
{
    // brute force: max over a fine grid of |d/du backward_flow(a, m, beta, u)|
    for (double a : {0.2, 0.7, 2.0})
        for (double b : {0.5, 1.0, 3.0}) {
            const double m = 0.6, tau = 0.3, h = 1e-6;
            double brute = 0.0;
            for (int k = 0; k <= 2000; ++k) {
                const double u = std::clamp(tau * k / 2000.0, h, tau - h);
                const double d = (backward_flow(a, m, b, u + h) - backward_flow(a, m, b, u - h)) / (2 * h);
                brute = std::max(brute, std::fabs(d));
            }
            const double k = backward_flow_lipschitz(a, m, b, tau);
            EXPECT_GE(k, brute - 1e-6);
            EXPECT_NEAR(k, brute, 1e-4);
        }
}

TEST(Params, ResetCoefficientsAtZeroDelay)
{
    const Params p{2.0, 1.0, 0.2, 0.0, 1};
    const auto rc = reset_coefficients(p);
    EXPECT_EQ(rc.R_tau, 2.0);
    EXPECT_EQ(rc.nu_tau, 0.2);
}

TEST(Params, ResetCoefficientsFigureValues)
{
    const Params p{2.0, 1.0, 0.2, 0.2, 1};
    const auto rc = reset_coefficients(p);
    EXPECT_NEAR(rc.R_tau, 2.0 + 0.2 * (1.2 - std::exp(0.2)), 1e-15);
    EXPECT_NEAR(rc.nu_tau, 0.2 * std::exp(0.2), 1e-15);
}

TEST(Params, ResetCoefficientsSmallBetaSeries)
{
    const Params p{2.0, 1e-4, 5e-5, 0.2, 1};
    // R_tau = R - nu tau^2/2 - nu beta tau^3/6 - ...
    EXPECT_NEAR(p.r_tau(), p.R - p.nu * p.tau * p.tau / 2.0, 1e-6);
}

TEST(Params, ViolationsAreAllListed)
{
    Params p{2.0, 1.0, 1.5, 3.0, 1};
    const auto v = p.violations();
    EXPECT_NE(std::find(v.begin(), v.end(), "nu < beta"), v.end());
    EXPECT_NE(std::find(v.begin(), v.end(), "tau < R"), v.end());
    EXPECT_THROW(p.validate(), ParameterError);

    const Params ok{2.0, 1.0, 0.2, 0.0, 10};
    EXPECT_NO_THROW(ok.validate());
    EXPECT_THROW((Params{2.0, 1.0, 0.5, 0.0, 10}.validate_with_order()), ParameterError);
}

TEST(Params, ConditionViolationInResetCoefficients)
{
    // nu_tau = nu e^{beta tau} crosses beta for a long delay
    const Params p{2.0, 1.0, 0.3, 1.9, 1};
    EXPECT_THROW(reset_coefficients(p), ParameterError);
}

TEST(History, OutsideCoveredSpanThrows)
{
    ActivatorHistory h(1.0);
    h.append({0.0, 1.0, 0.5, 1.0});
    EXPECT_THROW(h.value(-0.1), HistoryUnderflow);
    EXPECT_THROW(h.value(1.1), HistoryUnderflow);
    EXPECT_NO_THROW(h.value(1.0));
}

TEST(History, SegmentsAgreeAtSharedEndpoints)
{
    ActivatorHistory h(0.8);
    h.append({0.0, 0.7, 0.5, 1.0});
    const double a = h.value(0.7);
    h.append({0.7, 1.5, a, 2.1});
    EXPECT_EQ(h.value(0.7), a);
    EXPECT_NE(h.rate(0.7), h.rate_left(0.7));
    EXPECT_NEAR(h.rate(0.7) - h.rate_left(0.7), 2.1 - (1.0 - 0.7), 1e-14);
}
