#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "dfsync/cluster.hpp"
#include "dfsync/fixed_points.hpp"
#include "dfsync/maps.hpp"

using namespace dfsync;
using boost::math::quadrature::gauss_kronrod;

namespace {

Params fig(double tau, int n = 1) { return {2.0, 1.0, 0.2, tau, n}; }

SectionPoint point(std::vector<double> x, double a, const Params& p)
{
    SectionPoint pt;
    pt.x = std::move(x);
    pt.A = a;
    if (p.tau > 0.0) pt.history = reconstruct_history(pt.x, a, p);
    return pt;
}

// A(t0 + s) by quadrature of A' = m - beta*A with a given mean profile m(u), u in [0, s].
template <class M>
double quad_flow(double a, double beta, double s, M m)
{
    if (s == 0.0) return a;
    const double I = gauss_kronrod<double, 61>::integrate([&](double u) { return std::exp(beta * (u - s)) * m(u); },
                                                          0.0, s, 10, 1e-15);
    return a * std::exp(-beta * s) + I;
}

}  // namespace

TEST(F1, ValueAtZero)
{
    EXPECT_NEAR(f1(0.0, fig(0.0)), 1.0 - 3.0 * std::exp(-2.0), 1e-15);
    EXPECT_NEAR(f1(0.0, fig(0.0)), 0.5939942, 1e-7);
}

TEST(F1, EndpointsMapInward)
{
    for (double tau : {0.0, 0.05, 0.1, 0.2}) {
        const Params p = fig(tau);
        const double lo = a0_tau(p), hi = a_tau_max(p);
        EXPECT_GT(f1(lo, p), lo) << tau;
        EXPECT_LT(f1(hi, p), hi) << tau;
    }
}

TEST(F1, IncreasingAndConcaveOnFineGrid)
{
    for (double tau : {0.0, 0.1, 0.2}) {
        const Params p = fig(tau);
        const double lo = a0_tau(p), hi = a_tau_max(p);
        const int n = 10000;
        std::vector<double> v(n + 1);
        for (int k = 0; k <= n; ++k) v[static_cast<std::size_t>(k)] = f1(lo + (hi - lo) * k / n, p);
        for (int k = 1; k <= n; ++k) ASSERT_GT(v[static_cast<std::size_t>(k)], v[static_cast<std::size_t>(k - 1)]);
        for (int k = 1; k < n; ++k) {
            const auto i = static_cast<std::size_t>(k);
            ASSERT_LE(v[i + 1] - 2 * v[i] + v[i - 1], 1e-15);
        }
    }
}

TEST(F1, DerivativeMatchesFiniteDifference)
{
    const Params p = fig(0.2);
    for (double a : {0.1, 0.5, 1.5}) {
        const double h = 1e-6;
        EXPECT_NEAR(f1_derivative(a, p), (f1(a + h, p) - f1(a - h, p)) / (2 * h), 1e-8);
    }
}

TEST(F1, QuadratureOracle)
{
    // one synchronized period: mean T - s, A from quadrature
    for (double tau : {0.0, 0.2}) {
        const Params p = fig(tau);
        for (double a : {0.3, 0.7, 1.2}) {
            const double ad = backward_flow(a, 0.0, p.beta, tau);
            const double t = p.R + p.nu * ad;
            EXPECT_NEAR(f1(a, p), quad_flow(a, p.beta, t, [&](double u) { return t - u; }), 1e-12);
        }
    }
}

TEST(ReturnMap, SingleOscillatorEqualsF1)
{
    std::mt19937_64 rng(3);
    for (double tau : {0.0, 0.1, 0.2}) {
        const Params p = fig(tau);
        std::uniform_real_distribution<double> ua(a0_tau(p), a_tau_max(p));
        for (int k = 0; k < 100; ++k) {
            const double a = ua(rng);
            EXPECT_NEAR(return_map(point({0.0}, a, p), p).A, f1(a, p), 1e-10);
        }
    }
}

TEST(ReturnMap, SynchronyIsInvariant)
{
    const Params p = fig(0.2, 4);
    const auto out = return_map(point({0.0, 0.0, 0.0, 0.0}, 0.8, p), p);
    for (double v : out.x) EXPECT_EQ(v, 0.0);
    EXPECT_NEAR(out.A, f1(0.8, p), 1e-12);
}

TEST(ReturnMap, SectionIsPreserved)
{
    const Params p = fig(0.1, 3);
    auto pt = point({1.2, 0.5, 0.0}, 0.7, p);
    for (int k = 0; k < 20; ++k) {
        pt = return_map(pt, p);
        ASSERT_EQ(pt.x.back(), 0.0);
        ASSERT_TRUE(pt.history.has_value());
        EXPECT_TRUE(pt.history->covers(-p.tau));
        EXPECT_EQ(pt.history->t_end(), 0.0);
    }
}

TEST(ReturnMap, PermutationEquivariance)
{
    const Params p = fig(0.1, 4);
    const std::vector<double> x{1.3, 0.4, 0.9, 0.0};
    const std::vector<int> perm{2, 0, 1};
    const auto a = return_map(point(x, 0.6, p), p);
    const auto b = return_map(point(permute(x, perm), 0.6, p), p);
    const auto pa = permute(a.x, perm);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(pa[i], b.x[i]);
    EXPECT_EQ(a.A, b.A);
    EXPECT_EQ(a.return_time, b.return_time);
}

TEST(ReturnMap, TwoOscillatorQuadratureOracle)
{
    // x = (x1, 0) at tau = 0: section fires at 0, oscillator 1 at x1, section again at T0
    const Params p = fig(0.0, 2);
    for (double x1 : {0.2, 0.9, 1.6}) {
        const double a = 0.7;
        const double t0 = p.R + p.nu * a;
        const double a1 = quad_flow(a, p.beta, x1, [&](double u) { return (x1 - u + t0 - u) / 2.0; });
        const double t1 = p.R + p.nu * a1;
        const double a2 =
            quad_flow(a1, p.beta, t0 - x1, [&](double u) { return (t1 - u + (t0 - x1) - u) / 2.0; });
        const auto out = return_map(point({x1, 0.0}, a, p), p);
        EXPECT_NEAR(out.x[0], t1 - (t0 - x1), 1e-12);
        EXPECT_NEAR(out.A, a2, 1e-12);
        EXPECT_NEAR(out.return_time, t0, 1e-14);
    }
}

TEST(ReturnMap, LaggingSplitMultiplierAtZeroDelay)
{
    // slope of x1 -> x1' at the synchronized point as x1 -> 0, by Richardson extrapolation
    const Params p = fig(0.0, 2);
    const double a = sync_fixed_point(p).A_FP;
    auto ratio = [&](double x1) { return return_map(point({x1, 0.0}, a, p), p).x[0] / x1; };
    const double r1 = ratio(1e-3), r2 = ratio(5e-4), r3 = ratio(2.5e-4);
    const double e12 = 2 * r2 - r1, e23 = 2 * r3 - r2;
    const double slope = (4 * e23 - e12) / 3;
    const double predicted = 1.0 + p.nu * (0.5 * (p.R + p.nu * a) - p.beta * a);
    EXPECT_NEAR(slope, predicted, 1e-6);
    EXPECT_GT(slope, 1.0);
}

TEST(ReturnMap, OrderViolationDetected)
{
    const Params p = fig(0.0, 2);
    // x1 above the reset value: the section oscillator would fire again first
    EXPECT_THROW(return_map(point({2.5, 0.0}, 0.1, p), p), OrderViolation);
    SectionPoint bad;
    bad.x = {0.5, 0.1};
    bad.A = 0.3;
    EXPECT_THROW(return_map(bad, p), Error);
}

TEST(ReturnMap, ClusterScalingInvariance)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uy(0.3, 1.5), ua(0.3, 1.0);
    for (double tau : {0.0, 0.1}) {
        const Params p = fig(tau);
        for (int trial = 0; trial < 10; ++trial) {
            ClusterState c;
            c.n = {1, 2, 1};
            const double y0 = uy(rng), y1 = y0 * 0.5;
            c.y = {y0, y1, 0.0};
            c.A = ua(rng);
            const auto base = cluster_return_map(c, p);
            for (int q : {2, 5}) {
                const auto big = cluster_return_map(scale(c, q), p);
                EXPECT_EQ(big.n, scale(c, q).n);
                for (std::size_t k = 0; k < c.y.size(); ++k) EXPECT_NEAR(big.y[k], base.y[k], 1e-12);
                EXPECT_NEAR(big.A, base.A, 1e-12);
                EXPECT_NEAR(big.period, base.period, 1e-12);
            }
        }
    }
}

TEST(ReturnMap, IterationMatchesRepeatedApplication)
{
    const Params p = fig(0.2, 3);
    const auto pt = point({1.1, 0.5, 0.0}, 0.8, p);
    const auto seq = iterate_return_map(pt, p, 3);
    auto step = return_map(return_map(return_map(pt, p), p), p);
    EXPECT_EQ(seq.back().x, step.x);
    EXPECT_EQ(seq.back().A, step.A);
}
