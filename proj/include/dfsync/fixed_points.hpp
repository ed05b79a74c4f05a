#ifndef DFSYNC_FIXED_POINTS_HPP
#define DFSYNC_FIXED_POINTS_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "dfsync/cluster.hpp"
#include "dfsync/error.hpp"
#include "dfsync/maps.hpp"
#include "dfsync/params.hpp"

namespace dfsync {

inline constexpr double scalar_residual_tol = 1e-13;
inline constexpr double vector_residual_tol = 1e-11;

namespace detail {

/// Bracketed root of g on [lo, hi]; g(lo) and g(hi) must have opposite signs.
template <class G>
double bracketed_root(G g, double lo, double hi, const char* what)
{
    const double glo = g(lo);
    const double ghi = g(hi);
    if (glo == 0.0) return lo;
    if (ghi == 0.0) return hi;
    if ((glo > 0.0) == (ghi > 0.0))
        throw ParameterError(std::string(what) + ": no sign change on the bracketing interval");
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi,
                                                      boost::math::tools::eps_tolerance<double>(52), iters);
    // pick the endpoint with the smaller residual
    const double a = r.first, b = r.second;
    return std::fabs(g(a)) <= std::fabs(g(b)) ? a : b;
}

}  // namespace detail

/// Fixed point of f1 in (A0_tau, A_tau_max) and the synchronized period.
inline SyncAnalysis sync_fixed_point(const Params& p)
{
    p.validate();
    const auto rc = reset_coefficients(p);
    SyncAnalysis s;
    s.R_tau = rc.R_tau;
    s.nu_tau = rc.nu_tau;
    s.A0_tau = a0_tau(p);
    s.A_tau_max = a_tau_max(p);
    s.A_FP = detail::bracketed_root([&](double a) { return f1(a, p) - a; }, s.A0_tau, s.A_tau_max,
                                    "synchronized fixed point");
    if (!(std::fabs(f1(s.A_FP, p) - s.A_FP) <= scalar_residual_tol))
        throw NumericalError("synchronized fixed point residual above tolerance");
    s.period = rc.R_tau + rc.nu_tau * s.A_FP;
    return s;
}

/// Synchronized fixed point as a one-cluster state.
inline ClusterState sync_cluster_state(const Params& p)
{
    const auto s = sync_fixed_point(p);
    ClusterState c;
    c.n = {p.N};
    c.y = {0.0};
    c.A = s.A_FP;
    c.period = s.period;
    return c;
}

/// tanh(u) - u at u = beta^2 R / (2 beta - nu).
inline double tanh_gap(const Params& p)
{
    const double u = p.beta * p.beta * p.R / (2.0 * p.beta - p.nu);
    return std::tanh(u) - u;
}

/// Sign of tanh_gap: negative whenever u > 0.
inline int tanh_check(const Params& p)
{
    const double v = tanh_gap(p);
    return (v > 0.0) - (v < 0.0);
}

/// Scalar equation for K equally spaced clusters at tau = 0:
/// f(A) = ((K+1)T/(2K) - beta*A + 1/beta)(1 - e^{-beta T/K}) - T/K with T = R + nu*A.
inline double equi_f(double a, const Params& p, int k)
{
    const double t = p.R + p.nu * a;
    const double gap = t / k;
    return ((k + 1) * t / (2.0 * k) - p.beta * a + 1.0 / p.beta) * (-std::expm1(-p.beta * gap)) - gap;
}

/// Fixed point with K equally spaced clusters of N/K oscillators each (tau = 0).
inline ClusterState equi_fixed_point(const Params& p, int k)
{
    p.validate();
    if (p.tau != 0.0) throw Error("the equi-distributed fixed point is computed at tau = 0; continue it in tau");
    if (k < 2) throw Error("equi-distributed fixed points need at least two clusters");
    if (p.N % k != 0) throw ParameterError("N must be a multiple of the number of clusters");
    const double a = detail::bracketed_root([&](double v) { return equi_f(v, p, k); }, 0.0, p.a_max(),
                                            "equi-distributed fixed point");
    const double t = p.R + p.nu * a;
    ClusterState c;
    c.n.assign(static_cast<std::size_t>(k), p.N / k);
    for (int i = 0; i < k; ++i) c.y.push_back((k - 1 - i) * (t / k));
    c.y.back() = 0.0;
    c.A = a;
    c.period = t;
    return c;
}

/// Unknowns of the cluster fixed-point problem: (y_1, ..., y_{K-1}, A).
inline Eigen::VectorXd cluster_coordinates(const ClusterState& c)
{
    const auto k = static_cast<Eigen::Index>(c.clusters());
    Eigen::VectorXd z(k);
    for (Eigen::Index i = 0; i + 1 < k; ++i) z(i) = c.y[static_cast<std::size_t>(i)];
    z(k - 1) = c.A;
    return z;
}

inline ClusterState with_coordinates(const ClusterState& c, const Eigen::VectorXd& z)
{
    ClusterState out = c;
    const auto k = static_cast<Eigen::Index>(c.clusters());
    for (Eigen::Index i = 0; i + 1 < k; ++i) out.y[static_cast<std::size_t>(i)] = z(i);
    out.y.back() = 0.0;
    out.A = z(k - 1);
    return out;
}

/// Central-difference Jacobian of the composed firing maps in cluster coordinates.
inline Eigen::MatrixXd firing_cycle_jacobian(const ClusterState& c, const Params& p, double h = 1e-7)
{
    const Eigen::VectorXd z = cluster_coordinates(c);
    const auto k = z.size();
    Eigen::MatrixXd J(k, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::VectorXd zp = z, zm = z;
        zp(j) += h;
        zm(j) -= h;
        const auto fp = cluster_coordinates(compose_firing_maps(with_coordinates(c, zp), p));
        const auto fm = cluster_coordinates(compose_firing_maps(with_coordinates(c, zm), p));
        J.col(j) = (fp - fm) / (2.0 * h);
    }
    return J;
}

inline double spectral_radius(const Eigen::MatrixXd& m)
{
    if (m.size() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Residual of the fixed-point equation in cluster coordinates (sup norm).
inline double cluster_residual(const ClusterState& c, const Params& p)
{
    const auto img = compose_firing_maps(c, p);
    return (cluster_coordinates(img) - cluster_coordinates(c)).lpNorm<Eigen::Infinity>();
}

/// Time between consecutive firings along one cycle of the fixed point; every
/// entry must exceed tau for the backward-flow formula to be valid.
inline std::vector<double> firing_gaps(const ClusterState& c, const Params& p)
{
    std::vector<double> gaps;
    for (const auto& s : firing_sequence(c, p, c.clusters())) gaps.push_back(s.gap);
    return gaps;
}

/// Newton iteration on the composed firing maps. Throws NumericalError on divergence.
inline ClusterState solve_cluster_fixed_point(const ClusterState& guess, const Params& p, int max_iter = 50)
{
    check_cluster_state(guess);
    ClusterState c = guess;
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd z = cluster_coordinates(c);
        const Eigen::VectorXd g = cluster_coordinates(compose_firing_maps(c, p)) - z;
        if (g.lpNorm<Eigen::Infinity>() <= vector_residual_tol) {
            c.period = compose_firing_maps(c, p).period;
            return c;
        }
        Eigen::MatrixXd J = firing_cycle_jacobian(c, p);
        J -= Eigen::MatrixXd::Identity(J.rows(), J.cols());
        const Eigen::VectorXd dz = J.partialPivLu().solve(-g);
        if (!dz.allFinite()) throw NumericalError("Newton step is not finite");
        const ClusterState next = with_coordinates(c, z + dz);
        check_cluster_state(next);
        c = next;
    }
    throw NumericalError("Newton iteration did not converge to the fixed point");
}

/// Natural-parameter continuation in tau with a secant predictor. `fp` is a fixed
/// point at p.tau; the result is the fixed point at target_tau.
inline ClusterState continue_fixed_point(const ClusterState& fp, const Params& p, double target_tau, int steps)
{
    if (steps < 1) throw Error("continuation needs at least one step");
    if (target_tau == p.tau) return fp;
    {
        const double rho = spectral_radius(firing_cycle_jacobian(fp, p));
        if (!(rho < 1.0))
            throw NumericalError("fixed point is not stable in its cluster subspace (radius " +
                                 std::to_string(rho) + "); continuation refused");
    }
    Params q = p;
    ClusterState prev = fp, cur = fp;
    double tau_prev = p.tau, tau_cur = p.tau;
    for (int i = 1; i <= steps; ++i) {
        const double tau_next = p.tau + (target_tau - p.tau) * i / steps;
        q.tau = tau_next;
        q.validate();
        reset_coefficients(q);

        Eigen::VectorXd z = cluster_coordinates(cur);
        if (i > 1) {
            const double w = (tau_next - tau_cur) / (tau_cur - tau_prev);
            z += w * (cluster_coordinates(cur) - cluster_coordinates(prev));
        }
        ClusterState next;
        try {
            next = solve_cluster_fixed_point(with_coordinates(cur, z), q);
        } catch (const Error& e) {
            throw NumericalError(std::string("continuation failed at tau=") + std::to_string(tau_next) +
                                 " (largest tau reached " + std::to_string(tau_cur) + "): " + e.what());
        }
        for (double g : firing_gaps(next, q))
            if (!(g > tau_next))
                throw NumericalError("continuation stopped at tau=" + std::to_string(tau_next) +
                                     ": a firing falls inside the delay window (largest tau reached " +
                                     std::to_string(tau_cur) + ")");
        prev = cur;
        cur = next;
        tau_prev = tau_cur;
        tau_cur = tau_next;
    }
    return cur;
}

}  // namespace dfsync

#endif  // DFSYNC_FIXED_POINTS_HPP
