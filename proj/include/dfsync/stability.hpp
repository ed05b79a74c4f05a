#ifndef DFSYNC_STABILITY_HPP
#define DFSYNC_STABILITY_HPP

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dfsync/cluster.hpp"
#include "dfsync/error.hpp"
#include "dfsync/fixed_points.hpp"
#include "dfsync/maps.hpp"
#include "dfsync/params.hpp"

namespace dfsync {

using Spectrum = std::vector<std::complex<double>>;

inline Spectrum eigenvalues(const Eigen::MatrixXd& m)
{
    Spectrum out;
    if (m.size() == 0) return out;
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
    return out;
}

inline double spectral_radius(const Spectrum& s)
{
    double r = 0.0;
    for (const auto& z : s) r = std::max(r, std::abs(z));
    return r;
}

struct StabilityMatrices {
    Eigen::MatrixXd M;  ///< derivative of the relabelled firing map
    Eigen::MatrixXd U;
    Eigen::MatrixXd V;
    Eigen::MatrixXd W;  ///< U^K + (1/beta) sum_{k=0}^{K-1} U^k V U^{K-1-k}
    Spectrum spectrum_MK;
    Spectrum spectrum_W;
};

/// Leading-order matrices U, V for K clusters (large-beta expansion of M).
inline Eigen::MatrixXd matrix_u(int k, double nu)
{
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(k, k);
    u(0, k - 2) = -1.0;
    u(0, k - 1) = nu;
    for (int i = 1; i <= k - 2; ++i) {
        u(i, i - 1) = 1.0;
        u(i, k - 2) = -1.0;
    }
    return u;
}

inline Eigen::MatrixXd matrix_v(int k, double nu)
{
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(k, k);
    for (int j = 0; j < k - 2; ++j) v(k - 1, j) = 1.0 / k;
    v(k - 1, k - 2) = -(k - 1.0) / k;
    v(k - 1, k - 1) = nu / k;
    return v;
}

inline Eigen::MatrixXd matrix_w(int k, double beta, double nu)
{
    const Eigen::MatrixXd u = matrix_u(k, nu);
    const Eigen::MatrixXd v = matrix_v(k, nu);
    std::vector<Eigen::MatrixXd> pw{Eigen::MatrixXd::Identity(k, k)};
    for (int i = 1; i <= k; ++i) pw.push_back(pw.back() * u);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i <= k - 1; ++i) sum += pw[static_cast<std::size_t>(i)] * v * pw[static_cast<std::size_t>(k - 1 - i)];
    return pw[static_cast<std::size_t>(k)] + sum / beta;
}

/// Exact derivative of the relabelled firing map at an equi-distributed fixed point (tau = 0).
inline StabilityMatrices cluster_matrices(const Params& p, const ClusterState& fp)
{
    if (p.tau != 0.0) throw Error("cluster matrices are defined at tau = 0");
    const int k = static_cast<int>(fp.clusters());
    if (k < 2) throw Error("cluster matrices need at least two clusters");
    const double b = p.beta, nu = p.nu, a = fp.A;
    const double gap = fp.y[static_cast<std::size_t>(k - 2)];
    const double e = std::exp(-b * gap);
    double sum_y = 0.0;
    for (double v : fp.y) sum_y += v;
    const double m_plus = (sum_y + p.R + nu * a) / k;
    const double dm = (1.0 - e) / (b * k);  // dA'/dm0 * dm0/dx_i

    StabilityMatrices sm;
    sm.M = matrix_u(k, nu);
    for (int j = 0; j < k - 2; ++j) sm.M(k - 1, j) = dm;
    sm.M(k - 1, k - 2) = (m_plus + 1.0 / b - b * a) * e - 1.0 / b + dm;
    sm.M(k - 1, k - 1) = e + nu * dm;
    sm.U = matrix_u(k, nu);
    sm.V = matrix_v(k, nu);
    sm.W = matrix_w(k, b, nu);

    Eigen::MatrixXd mk = Eigen::MatrixXd::Identity(k, k);
    for (int i = 0; i < k; ++i) mk = sm.M * mk;
    sm.spectrum_MK = eigenvalues(mk);
    sm.spectrum_W = eigenvalues(sm.W);
    return sm;
}

/// M^K: the return-map derivative predicted from the firing-map derivative.
inline Eigen::MatrixXd analytic_return_jacobian(const Params& p, const ClusterState& fp)
{
    const auto sm = cluster_matrices(p, fp);
    Eigen::MatrixXd mk = Eigen::MatrixXd::Identity(sm.M.rows(), sm.M.cols());
    for (Eigen::Index i = 0; i < sm.M.rows(); ++i) mk = sm.M * mk;
    return mk;
}

// ---------------------------------------------------------------------------
// Engine-backed Jacobians

namespace detail {

/// Return map in raw cluster coordinates. No strict-order check on y, so two
/// blocks may coincide (the unsmeared limit).
inline std::pair<std::vector<double>, double> raw_cluster_return(const std::vector<int>& n,
                                                                 const std::vector<double>& y, double a,
                                                                 const Params& p)
{
    Params q = p;
    q.N = 0;
    SectionPoint pt;
    for (std::size_t k = 0; k < n.size(); ++k) {
        pt.x.insert(pt.x.end(), static_cast<std::size_t>(n[k]), y[k]);
        q.N += n[k];
    }
    pt.A = a;
    const auto out = return_map(pt, q);
    std::vector<double> yy;
    std::size_t i = 0;
    for (int size : n) {
        yy.push_back(out.x[i]);
        i += static_cast<std::size_t>(size);
    }
    return {yy, out.A};
}

}  // namespace detail

struct JacobianMode {
    enum Kind { InSubspace, Smeared } kind = InSubspace;
    std::size_t cluster = 0;  ///< smeared cluster (Smeared only)

    static JacobianMode in_subspace() { return {}; }
    static JacobianMode smeared(std::size_t k) { return {Smeared, k}; }
};

inline constexpr double jacobian_step = 1e-6;
inline constexpr double fixed_point_check_tol = 1e-10;

/// Finite-difference Jacobian of the engine return map at a fixed point.
///
/// In-subspace coordinates are (y_1..y_{K-1}, A). Smeared coordinates insert the
/// offset d of a singleton split off the chosen cluster, placed right before A:
/// (y_1..y_{K-1}, d, A). The d column is one-sided (d >= 0) since the map is only
/// piecewise smooth across d = 0.
inline Eigen::MatrixXd return_map_jacobian(const ClusterState& fp, const Params& p,
                                           JacobianMode mode = JacobianMode::in_subspace(),
                                           double h = jacobian_step)
{
    check_cluster_state(fp);
    const std::size_t kc = fp.clusters();
    {
        const auto [y1, a1] = detail::raw_cluster_return(fp.n, fp.y, fp.A, p);
        double res = std::fabs(a1 - fp.A);
        for (std::size_t k = 0; k < kc; ++k) res = std::max(res, std::fabs(y1[k] - fp.y[k]));
        if (!(res <= fixed_point_check_tol))
            throw NumericalError("fixed-point residual " + std::to_string(res) + " too large for differentiation");
    }

    if (mode.kind == JacobianMode::InSubspace) {
        const Eigen::VectorXd z0 = cluster_coordinates(fp);
        const auto dim = z0.size();
        auto eval = [&](const Eigen::VectorXd& z) {
            const auto c = with_coordinates(fp, z);
            const auto [y, a] = detail::raw_cluster_return(c.n, c.y, c.A, p);
            ClusterState r = c;
            r.y = y;
            r.A = a;
            return cluster_coordinates(r);
        };
        auto central = [&](double step) {
            Eigen::MatrixXd d(dim, dim);
            for (Eigen::Index j = 0; j < dim; ++j) {
                Eigen::VectorXd zp = z0, zm = z0;
                zp(j) += step;
                zm(j) -= step;
                d.col(j) = (eval(zp) - eval(zm)) / (2.0 * step);
            }
            return d;
        };
        return (4.0 * central(h / 2.0) - central(h)) / 3.0;
    }

    // smeared
    const std::size_t ks = mode.cluster;
    if (ks >= kc) throw Error("cluster index out of range");
    if (fp.n[ks] < 2) throw Error("a singleton cluster cannot be smeared");
    std::vector<int> n = fp.n;
    n[ks] -= 1;
    n.insert(n.begin() + static_cast<std::ptrdiff_t>(ks), 1);

    // coordinates w = (y_0..y_{K-2}, d, A)
    const auto dim = static_cast<Eigen::Index>(kc + 1);
    Eigen::VectorXd w0(dim);
    for (std::size_t k = 0; k + 1 < kc; ++k) w0(static_cast<Eigen::Index>(k)) = fp.y[k];
    w0(dim - 2) = 0.0;
    w0(dim - 1) = fp.A;

    auto build_y = [&](const Eigen::VectorXd& w) {
        std::vector<double> base(kc, 0.0);
        for (std::size_t k = 0; k + 1 < kc; ++k) base[k] = w(static_cast<Eigen::Index>(k));
        std::vector<double> y = base;
        y.insert(y.begin() + static_cast<std::ptrdiff_t>(ks), base[ks] + w(dim - 2));
        return y;
    };
    auto eval = [&](const Eigen::VectorXd& w) {
        const auto [y, a] = detail::raw_cluster_return(n, build_y(w), w(dim - 1), p);
        Eigen::VectorXd out(dim);
        // y has K+1 entries: the singleton sits at ks, its parent at ks+1
        for (std::size_t k = 0, j = 0; k < y.size(); ++k) {
            if (k == ks) continue;
            if (j + 1 < kc) out(static_cast<Eigen::Index>(j)) = y[k];
            ++j;
        }
        out(dim - 2) = y[ks] - y[ks + 1];
        out(dim - 1) = a;
        return out;
    };
    const Eigen::VectorXd f0 = eval(w0);
    auto diff = [&](double step) {
        Eigen::MatrixXd d(dim, dim);
        for (Eigen::Index j = 0; j < dim; ++j) {
            Eigen::VectorXd wp = w0, wm = w0;
            wp(j) += step;
            if (j == dim - 2) {
                d.col(j) = (eval(wp) - f0) / step;
            } else {
                wm(j) -= step;
                d.col(j) = (eval(wp) - eval(wm)) / (2.0 * step);
            }
        }
        return d;
    };
    const Eigen::MatrixXd d1 = diff(h), d2 = diff(h / 2.0);
    Eigen::MatrixXd out = (4.0 * d2 - d1) / 3.0;
    out.col(dim - 2) = 2.0 * d2.col(dim - 2) - d1.col(dim - 2);
    return out;
}

// ---------------------------------------------------------------------------
// Criteria

/// Activator data around one firing of a fixed point.
struct FiringPhase {
    std::size_t cluster = 0;   ///< index of the firing cluster in the input state
    double t = 0.0;            ///< firing time within the cycle (section firing at 0)
    double A = 0.0;            ///< activator at the firing
    double adot_minus = 0.0;   ///< dA/dt just before the firing
    double adot_plus = 0.0;    ///< dA/dt just after the firing
    double a_delayed = 0.0;    ///< A(t - tau)
    double adot_delayed = 0.0; ///< dA/dt at t - tau
    double reset = 0.0;
    double gap_before = 0.0;   ///< time since the previous firing
};

/// One cycle of the fixed point, firing by firing (exact closed forms).
inline std::vector<FiringPhase> firing_phases(const ClusterState& fp, const Params& p)
{
    const std::size_t kc = fp.clusters();
    const auto steps = firing_sequence(fp, p, kc);
    std::vector<FiringPhase> out;
    double t = 0.0;
    ClusterState cur = fp;
    for (std::size_t j = 0; j < kc; ++j) {
        const auto& s = steps[j];
        FiringPhase ph;
        ph.cluster = kc - 1 - j;
        ph.t = t;
        ph.A = cur.A;
        ph.adot_minus = s.m_before - p.beta * cur.A;
        ph.adot_plus = s.m_after - p.beta * cur.A;
        ph.a_delayed = s.a_delayed;
        ph.adot_delayed = (s.m_before + p.tau) - p.beta * s.a_delayed;
        ph.reset = s.reset;
        ph.gap_before = steps[(j + kc - 1) % kc].gap;
        out.push_back(ph);
        t += s.gap;
        cur = s.state;
    }
    return out;
}

struct ClusterCriteria {
    std::size_t cluster = 0;
    int size = 0;
    FiringPhase phase;
    bool window_clear = false;   ///< no other firing in [-tau, 0)
    double window_slack = 0.0;   ///< gap_before - tau
    double lemma3_threshold = 0.0;
    double lemma3_margin = 0.0;  ///< adot_plus - threshold
    bool stable_criterion = false;    ///< delay criterion passes (tau > 0)
    bool unstable_criterion = false;  ///< zero-delay instability criterion passes
    std::optional<double> smeared_multiplier;  ///< d'/d along the split direction (clusters of size >= 2)
    std::optional<double> smeared_radius;
    std::string verdict;  ///< stable | unstable | inapplicable | undetermined
};

struct StabilityReport {
    Params params;
    ClusterState fixed_point;
    double residual = 0.0;
    Eigen::MatrixXd jacobian;
    Spectrum spectrum;
    double in_subspace_radius = 0.0;
    bool in_subspace_stable = false;
    std::vector<ClusterCriteria> clusters;
    std::string verdict;  ///< STABLE | UNSTABLE | INAPPLICABLE | UNDETERMINED
};

/// Evaluates the stability and instability criteria at a fixed point and, when
/// `linearize_smear` is set, the directly computed smeared spectral radii.
inline StabilityReport analyze_stability(const ClusterState& fp, const Params& p, bool linearize_smear = true)
{
    Params q = p;
    q.N = fp.population();
    q.validate();

    StabilityReport rep;
    rep.params = q;
    rep.fixed_point = fp;
    rep.residual = cluster_residual(fp, q);
    if (!(rep.residual <= fixed_point_check_tol))
        throw NumericalError("input is not a fixed point (residual " + std::to_string(rep.residual) + ")");
    rep.fixed_point.period = compose_firing_maps(fp, q).period;

    const auto phases = firing_phases(fp, q);
    bool windows_clear = true;
    for (const auto& ph : phases) windows_clear = windows_clear && (q.tau == 0.0 || ph.gap_before > q.tau);

    // With a firing inside some delay window the closed-form cycle is not the
    // engine dynamics; its Jacobian is reported but no criterion applies.
    rep.jacobian = windows_clear ? return_map_jacobian(fp, q, JacobianMode::in_subspace())
                                 : firing_cycle_jacobian(fp, q);
    rep.spectrum = eigenvalues(rep.jacobian);
    rep.in_subspace_radius = spectral_radius(rep.spectrum);
    rep.in_subspace_stable = rep.in_subspace_radius < 1.0;

    const int total = q.N;
    for (const auto& ph : phases) {
        ClusterCriteria c;
        c.cluster = ph.cluster;
        c.size = fp.n[ph.cluster];
        c.phase = ph;
        c.window_slack = ph.gap_before - q.tau;
        c.window_clear = q.tau == 0.0 || c.window_slack > 0.0;
        c.lemma3_threshold = ph.reset / total;
        c.lemma3_margin = ph.adot_plus - c.lemma3_threshold;
        if (q.tau > 0.0) {
            c.stable_criterion = rep.in_subspace_stable && c.window_clear && ph.adot_delayed < 0.0;
            if (!c.window_clear)
                c.verdict = "inapplicable";
            else
                c.verdict = c.stable_criterion ? "stable" : "undetermined";
        } else {
            c.unstable_criterion = c.lemma3_margin > 0.0;
            c.verdict = c.unstable_criterion ? "unstable" : "undetermined";
        }
        if (c.size >= 2 && linearize_smear && windows_clear) {
            const auto js = return_map_jacobian(fp, q, JacobianMode::smeared(ph.cluster));
            const auto d = js.rows() - 2;
            c.smeared_multiplier = js(d, d);
            c.smeared_radius = spectral_radius(eigenvalues(js));
        }
        rep.clusters.push_back(c);
    }
    std::sort(rep.clusters.begin(), rep.clusters.end(),
              [](const ClusterCriteria& a, const ClusterCriteria& b) { return a.cluster < b.cluster; });

    bool any_unstable = false, all_stable = true, any_inapplicable = false;
    for (const auto& c : rep.clusters) {
        any_unstable = any_unstable || c.verdict == "unstable";
        all_stable = all_stable && c.verdict == "stable";
        any_inapplicable = any_inapplicable || c.verdict == "inapplicable";
    }
    if (any_unstable)
        rep.verdict = "UNSTABLE";
    else if (all_stable && rep.in_subspace_stable)
        rep.verdict = "STABLE";
    else if (any_inapplicable)
        rep.verdict = "INAPPLICABLE";
    else
        rep.verdict = "UNDETERMINED";
    return rep;
}

// ---------------------------------------------------------------------------
// Estimates of the thresholds whose existence is only asserted

struct BetaEstimate {
    double beta_n = 0.0;        ///< largest scanned beta with radius >= 1, or the scan start
    bool unstable_found = false;
    double scan_lo = 0.0;
    double scan_hi = 0.0;
    int samples = 0;
};

/// In-subspace radius of the K-cluster equi-distributed fixed point at tau = 0 (from M^K).
inline double equi_in_subspace_radius(Params p, int k)
{
    p.tau = 0.0;
    p.N = k;
    const auto fp = equi_fixed_point(p, k);
    return spectral_radius(eigenvalues(analytic_return_jacobian(p, fp)));
}

/// Geometric scan of beta on [lo, hi] refined by bisection at the last crossing.
inline BetaEstimate estimate_beta_n(const Params& p, int k, double lo, double hi, int samples = 200)
{
    BetaEstimate est{lo, false, lo, hi, samples};
    double last_bad = -1.0, next_good = -1.0;
    for (int i = 0; i < samples; ++i) {
        Params q = p;
        q.beta = lo * std::pow(hi / lo, static_cast<double>(i) / (samples - 1));
        if (!q.violations().empty()) continue;
        const double r = equi_in_subspace_radius(q, k);
        if (r >= 1.0) {
            last_bad = q.beta;
            next_good = -1.0;
        } else if (last_bad > 0.0 && next_good < 0.0) {
            next_good = q.beta;
        }
    }
    if (last_bad < 0.0) return est;
    est.unstable_found = true;
    if (next_good < 0.0) {
        est.beta_n = last_bad;
        return est;
    }
    double a = last_bad, b = next_good;
    for (int it = 0; it < 60; ++it) {
        Params q = p;
        q.beta = 0.5 * (a + b);
        (equi_in_subspace_radius(q, k) >= 1.0 ? a : b) = q.beta;
    }
    est.beta_n = a;
    return est;
}

struct TauEstimate {
    double tau0 = 0.0;   ///< largest scanned tau where every criterion still holds
    std::string reason;  ///< why the scan stopped
};

/// Continues the fixed point upward in tau and stops at the first tau where the
/// continuation fails or the delay criterion breaks for some cluster.
inline TauEstimate estimate_tau0(const ClusterState& fp0, const Params& p, double tau_step, double tau_max)
{
    TauEstimate est;
    Params q = p;
    q.tau = 0.0;
    q.N = fp0.population();
    ClusterState cur = fp0;
    for (double tau = tau_step; tau <= tau_max + 1e-12; tau += tau_step) {
        try {
            cur = continue_fixed_point(cur, q, tau, 1);
        } catch (const Error& e) {
            est.reason = std::string("continuation stopped: ") + e.what();
            return est;
        }
        q.tau = tau;
        for (const auto& ph : firing_phases(cur, q)) {
            if (!(ph.gap_before > tau)) {
                est.reason = "firing inside the delay window at tau=" + std::to_string(tau);
                return est;
            }
            if (!(ph.adot_delayed < 0.0)) {
                est.reason = "dA/dt(-tau) >= 0 at tau=" + std::to_string(tau);
                return est;
            }
        }
        if (!(spectral_radius(firing_cycle_jacobian(cur, q)) < 1.0)) {
            est.reason = "in-subspace radius >= 1 at tau=" + std::to_string(tau);
            return est;
        }
        est.tau0 = tau;
    }
    est.reason = "criterion holds on the whole scan";
    return est;
}

struct QEstimate {
    std::optional<int> q0;
    std::vector<double> margins;  ///< zero-delay instability margin for q = 1..q_max
};

/// Smallest cluster-size multiplier q for which the zero-delay instability margin
/// of the K-cluster equi-distributed (or synchronized, K = 1) fixed point is positive.
inline QEstimate estimate_q0(const Params& p, int k, int q_max = 64)
{
    QEstimate est;
    for (int q = 1; q <= q_max; ++q) {
        Params pq = p;
        pq.tau = 0.0;
        pq.N = q * k;
        const ClusterState fp = k == 1 ? sync_cluster_state(pq) : equi_fixed_point(pq, k);
        double margin = -1e300;
        for (const auto& ph : firing_phases(fp, pq)) margin = std::max(margin, ph.adot_plus - ph.reset / pq.N);
        est.margins.push_back(margin);
        if (!est.q0 && margin > 0.0) est.q0 = q;
    }
    return est;
}

}  // namespace dfsync

#endif  // DFSYNC_STABILITY_HPP
