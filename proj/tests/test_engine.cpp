#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dfsync/engine.hpp"
#include "dfsync/fixed_points.hpp"
#include "dfsync/maps.hpp"

using namespace dfsync;

namespace {

const Params fig_tau0{2.0, 1.0, 0.2, 0.0, 10};
const Params fig_tau02{2.0, 1.0, 0.2, 0.2, 10};

InitialData sync_init(const Params& p)
{
    return {std::vector<double>(static_cast<std::size_t>(p.N), 0.0), sync_fixed_point(p).A_FP, std::nullopt};
}

}  // namespace

TEST(Wellposed, Classification)
{
    const Params p{2.0, 1.0, 0.2, 0.2, 2};
    EXPECT_EQ(check_wellposed(std::vector<double>{0.3, 1.0}, 0.0, p).verdict, Admissibility::MinAboveDelay);
    EXPECT_EQ(check_wellposed(std::vector<double>{0.1, 1.0}, 1.0, p).verdict, Admissibility::StrongCondition);
    EXPECT_EQ(check_wellposed(std::vector<double>{0.1, 1.8}, 1.0, p).verdict, Admissibility::ClaimInequality);
    EXPECT_EQ(check_wellposed(std::vector<double>{0.1, 1.0}, 0.0, p).verdict, Admissibility::Inadmissible);
    EXPECT_EQ(check_wellposed(std::vector<double>{-0.1, 1.0}, 1.0, p).verdict, Admissibility::Inadmissible);
    EXPECT_EQ(check_wellposed(std::vector<double>{}, 1.0, p).verdict, Admissibility::Inadmissible);
}

TEST(Wellposed, InadmissibleDataIsRefused)
{
    const Params p{2.0, 1.0, 0.2, 0.2, 2};
    EXPECT_THROW(initial_state(p, {0.1, 1.0}, 0.0), WellPosednessError);
    EXPECT_NO_THROW(initial_state(p, {0.1, 1.0}, 1.0));
}

TEST(Wellposed, ExplicitHistoryMustCoverDelay)
{
    const Params p{2.0, 1.0, 0.2, 0.2, 2};
    ActivatorHistory h(p.beta);
    h.append({-0.1, 0.0, 0.5, 1.0});
    EXPECT_THROW(initial_state(p, {0.1, 1.0}, h), HistoryUnderflow);
    ActivatorHistory full(p.beta);
    full.append({-0.2, 0.0, 0.5, 1.0});
    EXPECT_NO_THROW(initial_state(p, {0.1, 1.0}, full));
}

TEST(Wellposed, ReconstructedPastFollowsBackwardFlow)
{
    const Params p{2.0, 1.0, 0.2, 0.2, 2};
    const std::vector<double> x{0.1, 1.0};
    const auto s = initial_state(p, x, 1.0);
    // the reconstructed segment must end at A0 and satisfy A' = m - beta*A
    EXPECT_NEAR(s.history.value(0.0), 1.0, 1e-14);
    const double h = 1e-6, t = -0.1;
    const double d = (s.history.value(t + h) - s.history.value(t - h)) / (2 * h);
    EXPECT_NEAR(d, (0.55 - t) - p.beta * s.history.value(t), 1e-8);
}

TEST(Engine, SynchronizedPopulationIsPeriodic)
{
    Params p = fig_tau02;
    const auto sa = sync_fixed_point(p);
    const auto tr = simulate_returns(p, sync_init(p), 50, 0);
    ASSERT_EQ(tr.events.size(), 51u);
    for (std::size_t k = 0; k < tr.events.size(); ++k) {
        EXPECT_EQ(tr.events[k].oscillators.size(), 10u);
        EXPECT_NEAR(tr.events[k].t, k * sa.period, 1e-9);
        EXPECT_NEAR(tr.activator_at(tr.events[k].t), sa.A_FP, 1e-9);
    }
}

TEST(Engine, ResetUsesDelayedCoefficients)
{
    // with no firing in the delay window the reset is R_tau + nu_tau * A(t)
    for (double tau : {0.0, 0.1, 0.2}) {
        Params p = fig_tau0;
        p.tau = tau;
        const auto rc = reset_coefficients(p);
        const auto tr = simulate(p, sync_init(p), 30.0);
        for (const auto& e : tr.events)
            EXPECT_NEAR(e.reset_value, rc.R_tau + rc.nu_tau * tr.activator_at(e.t), 1e-10);
    }
}

TEST(Engine, TrajectorySatisfiesTheEquations)
{
    const Params p{2.0, 1.0, 0.2, 0.2, 5};
    const InitialData init{{1.7, 1.1, 0.6, 0.35, 0.25}, 0.9, std::nullopt};
    const auto tr = simulate(p, init, 60.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ut(1.0, 59.0);
    const double h = 1e-6;
    int checked = 0;
    while (checked < 1000) {
        const double t = ut(rng);
        // skip points within h of a firing
        const bool near = std::any_of(tr.events.begin(), tr.events.end(),
                                      [&](const FiringEvent& e) { return std::fabs(e.t - t) < 2 * h; });
        if (near) continue;
        ++checked;
        const auto x = tr.x_at(t);
        const double m = mean_of(x);
        const double dA = (tr.activator_at(t + h) - tr.activator_at(t - h)) / (2 * h);
        EXPECT_NEAR(dA, m - p.beta * tr.activator_at(t), 1e-5);
        const auto xp = tr.x_at(t + h), xm = tr.x_at(t - h);
        for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR((xp[i] - xm[i]) / (2 * h), -1.0, 1e-5);
    }
    // every reset equals R + nu*A(t - tau), read back from the recorded activator
    for (std::size_t k = 0; k < tr.events.size(); ++k) {
        const auto& e = tr.events[k];
        if (e.t < p.tau) continue;
        const double want = p.R + p.nu * tr.activator_at(e.t - p.tau);
        for (int i : e.oscillators) EXPECT_NEAR(tr.x_checkpoints[k][static_cast<std::size_t>(i)], want, 1e-12);
    }
}

TEST(Engine, InvariantRegionIsPreserved)
{
    std::mt19937_64 rng(11);
    for (double tau : {0.0, 0.2}) {
        const Params p{2.0, 1.0, 0.2, tau, 4};
        std::uniform_real_distribution<double> ux(tau, p.x_max()), ua(0.0, p.a_max());
        for (int trial = 0; trial < 100; ++trial) {
            InitialData init;
            for (int i = 0; i < p.N; ++i) init.x.push_back(ux(rng));
            init.A = ua(rng);
            const auto tr = simulate(p, init, 100.0);
            for (std::size_t k = 0; k < tr.events.size(); ++k) {
                for (double v : tr.x_checkpoints[k]) EXPECT_LE(v, p.x_max() + 1e-12);
                const double a = tr.activator_at(tr.events[k].t);
                EXPECT_GE(a, 0.0);
                EXPECT_LE(a, p.a_max() + 1e-12);
            }
            for (double t = 0.0; t <= 100.0; t += 0.37) {
                EXPECT_LE(tr.activator_at(t), p.a_max() + 1e-12);
                EXPECT_GE(tr.activator_at(t), 0.0);
            }
        }
    }
}

TEST(Engine, LargeInitialActivatorIsAttracted)
{
    std::mt19937_64 rng(13);
    const Params p{2.0, 1.0, 0.2, 0.2, 4};
    std::uniform_real_distribution<double> ux(p.tau, p.x_max()), ua(p.a_max(), 5.0 * p.a_max());
    for (int trial = 0; trial < 50; ++trial) {
        InitialData init;
        for (int i = 0; i < p.N; ++i) init.x.push_back(ux(rng));
        init.A = ua(rng);
        const auto tr = simulate(p, init, 200.0);
        for (double t = 150.0; t <= 200.0; t += 0.5) EXPECT_LE(tr.activator_at(t), p.a_max() + 1e-9);
        for (std::size_t k = 0; k < tr.events.size(); ++k)
            if (tr.events[k].t > 150.0) {
                for (double v : tr.x_checkpoints[k]) EXPECT_LE(v, p.x_max() + 1e-9);
            }
    }
}

TEST(Engine, CyclicOrderIsPreserved)
{
    std::mt19937_64 rng(17);
    const Params p{2.0, 1.0, 0.2, 0.1, 6};
    ASSERT_TRUE(p.preserves_order());
    std::uniform_real_distribution<double> ux(p.tau, p.R);
    for (int trial = 0; trial < 20; ++trial) {
        InitialData init;
        for (int i = 0; i < p.N; ++i) init.x.push_back(ux(rng));
        init.A = 0.6;
        const auto tr = simulate(p, init, 60.0);
        ASSERT_GE(tr.events.size(), 100u);
        for (std::size_t k = static_cast<std::size_t>(p.N); k < tr.events.size(); ++k)
            EXPECT_EQ(tr.events[k].oscillators, tr.events[k - static_cast<std::size_t>(p.N)].oscillators);
    }
}

TEST(Engine, InterFiringIntervalsAreAtLeastR)
{
    const Params p{2.0, 1.0, 0.2, 0.2, 5};
    const InitialData init{{1.7, 1.1, 0.6, 0.35, 0.25}, 0.9, std::nullopt};
    const auto tr = simulate(p, init, 80.0);
    for (int i = 0; i < p.N; ++i) {
        const auto ft = tr.firing_times(i);
        for (std::size_t k = 1; k < ft.size(); ++k) EXPECT_GE(ft[k] - ft[k - 1], p.R - 1e-12);
    }
}

TEST(Engine, DeterministicBitForBit)
{
    const Params p{2.0, 1.0, 0.2, 0.2, 5};
    const InitialData init{{1.7, 1.1, 0.6, 0.35, 0.25}, 0.9, std::nullopt};
    const auto a = simulate(p, init, 40.0);
    const auto b = simulate(p, init, 40.0);
    ASSERT_EQ(a.events.size(), b.events.size());
    for (std::size_t k = 0; k < a.events.size(); ++k) {
        EXPECT_EQ(a.events[k].t, b.events[k].t);
        EXPECT_EQ(a.events[k].oscillators, b.events[k].oscillators);
        EXPECT_EQ(a.x_checkpoints[k], b.x_checkpoints[k]);
    }
}

TEST(Engine, EqualConcentrationsFireTogether)
{
    const Params p{2.0, 1.0, 0.2, 0.0, 3};
    const InitialData init{{0.5, 0.5, 1.2}, 0.4, std::nullopt};
    const auto tr = simulate(p, init, 20.0);
    ASSERT_FALSE(tr.events.empty());
    EXPECT_EQ(tr.events[0].oscillators, (std::vector<int>{0, 1}));
    for (std::size_t k = 0; k < tr.events.size(); ++k) EXPECT_EQ(tr.x_checkpoints[k][0], tr.x_checkpoints[k][1]);
}

TEST(Engine, SingleOscillatorFollowsScalarMap)
{
    for (double tau : {0.0, 0.2}) {
        const Params p{2.0, 1.0, 0.2, tau, 1};
        const auto tr = simulate_returns(p, {{0.0}, 0.3, std::nullopt}, 30, 0);
        double a = 0.3;
        for (std::size_t k = 1; k < tr.events.size(); ++k) {
            a = f1(a, p);
            EXPECT_NEAR(tr.activator_at(tr.events[k].t), a, 1e-13);
        }
    }
}

TEST(Engine, NearCollisionsAreCounted)
{
    const Params p{2.0, 1.0, 0.2, 0.0, 2};
    const auto tr = simulate(p, {{0.5, 0.5 + 1e-11}, 0.4, std::nullopt}, 5.0);
    EXPECT_GT(tr.near_collisions, 0u);
}

TEST(Engine, FlowToRefusesToSkipFirings)
{
    const Params p{2.0, 1.0, 0.2, 0.0, 2};
    auto s = initial_state(p, {0.5, 1.0}, 0.4);
    EXPECT_THROW(flow_to(s, 0.6), Error);
    flow_to(s, 0.25);
    EXPECT_DOUBLE_EQ(s.x[0], 0.25);
    EXPECT_NEAR(s.A, forward_flow(0.4, 0.75, 1.0, 0.25), 1e-15);
}
