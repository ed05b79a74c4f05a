// Command-line front end: simulate, fixed-point, stability, continue, sweep, verify.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "dfsync/dfsync.hpp"

using namespace dfsync;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::optional<double> R, beta, nu, tau;
    std::optional<int> N;
};

struct FpChoice {
    bool sync = false;
    int equi = 0;
    std::string cluster_file;
};

ExperimentConfig load(const Common& c)
{
    ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : parse_config_file(c.config);
    if (c.R) cfg.params.R = *c.R;
    if (c.beta) cfg.params.beta = *c.beta;
    if (c.nu) cfg.params.nu = *c.nu;
    if (c.tau) cfg.params.tau = *c.tau;
    if (c.N) cfg.params.N = *c.N;
    if (c.seed) cfg.seed = *c.seed;
    if (!c.out.empty()) cfg.out_dir = c.out;
    cfg.params.validate();
    return cfg;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name)
{
    fs::create_directories(cfg.out_dir);
    return (fs::path(cfg.out_dir) / name).string();
}

ordered_json header(const ExperimentConfig& cfg)
{
    return ordered_json{{"version", version_string}, {"params", to_json(cfg.params)}, {"seed", cfg.seed}};
}

ClusterState choose_fixed_point(const ExperimentConfig& cfg, const FpChoice& fc)
{
    const Params& p = cfg.params;
    if (!fc.cluster_file.empty()) {
        std::ifstream is(fc.cluster_file);
        if (!is) throw ConfigError("cannot open " + fc.cluster_file);
        const auto guess = cluster_state_from_json(nlohmann::json::parse(is));
        Params q = p;
        q.N = guess.population();
        return solve_cluster_fixed_point(guess, q);
    }
    if (fc.equi > 0) return base_fixed_point(p, fc.equi);
    return sync_cluster_state(p);
}

void add_fp_flags(CLI::App* app, FpChoice& fc)
{
    auto* g = app->add_option_group("fixed point");
    g->add_flag("--sync", fc.sync, "synchronized fixed point (default)");
    g->add_option("--equi", fc.equi, "K equally spaced clusters");
    g->add_option("--cluster", fc.cluster_file, "JSON file {n, y, A} used as Newton guess");
    g->require_option(0, 1);
}

int cmd_simulate(const Common& c)
{
    const auto cfg = load(c);
    const auto init = resolve_initial_data(cfg);
    const auto tr = cfg.returns > 0 ? simulate_returns(cfg.params, init, cfg.returns, cfg.params.N - 1)
                                    : simulate(cfg.params, init, cfg.horizon);
    {
        std::ofstream os(out_path(cfg, "trajectory.csv"));
        write_trajectory_csv(os, tr, cfg.sample_dt);
    }
    {
        std::ofstream os(out_path(cfg, "events.jsonl"));
        write_events_jsonl(os, tr.events);
    }
    auto j = header(cfg);
    j["init"] = to_string(cfg.init);
    j["horizon"] = cfg.horizon;
    j["events"] = tr.events.size();
    j["near_collisions"] = tr.near_collisions;
    j["spread"] = to_json(spread_metrics(tr, cfg.params.N - 1));
    write_json_file(out_path(cfg, "simulate.json"), j);
    std::printf("%zu firing events up to t=%g\n", tr.events.size(), tr.t_end);
    return 0;
}

int cmd_fixed_point(const Common& c, const FpChoice& fc)
{
    const auto cfg = load(c);
    const auto fp = choose_fixed_point(cfg, fc);
    Params q = cfg.params;
    q.N = fp.population();
    auto j = header(cfg);
    j["fixed_point"] = to_json(fp);
    j["residual"] = cluster_residual(fp, q);
    if (fp.clusters() == 1) j["sync"] = to_json(sync_fixed_point(q));
    write_json_file(out_path(cfg, "fixed_point.json"), j);
    std::printf("A_FP = %.17g  period = %.17g\n", fp.A, fp.period);
    return 0;
}

int cmd_stability(const Common& c, const FpChoice& fc, bool beta_n, bool tau0, bool q0)
{
    const auto cfg = load(c);
    const auto fp = choose_fixed_point(cfg, fc);
    const auto rep = analyze_stability(fp, cfg.params);
    auto j = to_json(rep);
    j["seed"] = cfg.seed;
    const int k = static_cast<int>(fp.clusters());
    if (beta_n && k >= 2) {
        const auto e = estimate_beta_n(cfg.params, k, cfg.params.nu * 1.05 + 0.01, 200.0);
        j["beta_n_estimate"] = {{"beta_n", e.beta_n}, {"unstable_found", e.unstable_found},
                                {"scan_lo", e.scan_lo}, {"scan_hi", e.scan_hi}, {"samples", e.samples}};
    }
    if (tau0) {
        Params p0 = cfg.params;
        p0.tau = 0.0;
        const auto fp0 = base_fixed_point(p0, k);
        const auto e = estimate_tau0(fp0, p0, 0.01, cfg.params.R * 0.99);
        j["tau0_estimate"] = {{"tau0", e.tau0}, {"reason", e.reason}};
    }
    if (q0) {
        const auto e = estimate_q0(cfg.params, k);
        j["q0_estimate"] = {{"q0", e.q0 ? ordered_json(*e.q0) : ordered_json(nullptr)}, {"margins", e.margins}};
    }
    write_json_file(out_path(cfg, "stability.json"), j);
    std::printf("%s", rep.verdict.c_str());
    for (const auto& cl : rep.clusters) {
        if (cfg.params.tau == 0.0)
            std::printf("  cluster %zu: instability margin %.6g", cl.cluster, cl.lemma3_margin);
        else
            std::printf("  cluster %zu: dA/dt(-tau) %.6g, window slack %.6g", cl.cluster, cl.phase.adot_delayed,
                        cl.window_slack);
    }
    std::printf("\n");
    return 0;
}

int cmd_continue(const Common& c, const FpChoice& fc, double target, int steps)
{
    const auto cfg = load(c);
    ClusterState cur = choose_fixed_point(cfg, fc);
    Params q = cfg.params;
    q.N = cur.population();
    ordered_json path = ordered_json::array();
    path.push_back({{"tau", q.tau}, {"fixed_point", to_json(cur)}});
    const double tau_start = q.tau;
    for (int i = 1; i <= steps; ++i) {
        const double t = tau_start + (target - tau_start) * i / steps;
        cur = continue_fixed_point(cur, q, t, 1);
        q.tau = t;
        path.push_back({{"tau", t}, {"fixed_point", to_json(cur)}});
    }
    auto j = header(cfg);
    j["tau_target"] = target;
    j["steps"] = steps;
    j["path"] = path;
    write_json_file(out_path(cfg, "continuation.json"), j);
    std::printf("A_FP(tau=%g) = %.17g\n", target, cur.A);
    return 0;
}

std::vector<double> parse_range(const std::string& s)
{
    double a = 0, b = 0, h = 0;
    if (std::sscanf(s.c_str(), "%lf:%lf:%lf", &a, &b, &h) != 3 || !(h > 0.0) || b < a)
        throw ConfigError("range must be start:stop:step with step > 0");
    std::vector<double> out;
    const auto n = static_cast<long long>(std::floor((b - a) / h + 1e-9));
    for (long long i = 0; i <= n; ++i) out.push_back(a + i * h);
    return out;
}

int cmd_sweep(const Common& c, const FpChoice& fc, const std::string& range, const std::string& metric)
{
    const auto cfg = load(c);
    const auto taus = parse_range(range);
    static const std::vector<std::string> metrics{"contraction-ratio", "in-subspace-radius", "A_FP", "period"};
    if (std::find(metrics.begin(), metrics.end(), metric) == metrics.end())
        throw ConfigError("unknown metric '" + metric + "'");

    struct Row {
        double tau;
        double value;
        std::string error;
    };
    std::vector<Row> rows(taus.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < taus.size();) {
            rows[i].tau = taus[i];
            try {
                ExperimentConfig local = cfg;
                local.params.tau = taus[i];
                const auto fp = choose_fixed_point(local, fc);
                Params q = local.params;
                q.N = fp.population();
                if (metric == "A_FP")
                    rows[i].value = fp.A;
                else if (metric == "period")
                    rows[i].value = fp.period;
                else if (metric == "in-subspace-radius")
                    rows[i].value = spectral_radius(eigenvalues(return_map_jacobian(fp, q)));
                else {
                    const auto js = return_map_jacobian(fp, q, JacobianMode::smeared(fp.clusters() - 1));
                    rows[i].value = js(js.rows() - 2, js.rows() - 2);
                }
            } catch (const Error& e) {
                rows[i].value = std::numeric_limits<double>::quiet_NaN();
                rows[i].error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::max(1, c.jobs); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.tau < b.tau; });

    std::ofstream os(out_path(cfg, "sweep.csv"));
    os << "tau," << metric << "\n";
    for (const auto& r : rows) {
        os << fmt(r.tau) << "," << fmt(r.value) << "\n";
        std::printf("%-8.4g %.10g%s%s\n", r.tau, r.value, r.error.empty() ? "" : "  # ", r.error.c_str());
    }
    auto j = header(cfg);
    j["metric"] = metric;
    j["range"] = range;
    write_json_file(out_path(cfg, "sweep.json"), j);
    return 0;
}

int cmd_verify(const Common& c, int trials, double radius, double dt)
{
    const auto cfg = load(c);
    auto j = header(cfg);
    const auto lp = lipschitz_probe(cfg.params, trials, radius, cfg.seed);
    j["lipschitz"] = to_json(lp);
    if (dt > 0.0) {
        const auto init = resolve_initial_data(cfg);
        const auto tr = simulate(cfg.params, init, cfg.horizon);
        const auto ref = reference_integrator(cfg.params, init.x, init.A, dt, cfg.horizon);
        const auto d = compare_to_reference(tr, ref);
        j["reference"] = {{"dt", dt},
                          {"horizon", cfg.horizon},
                          {"activator", d.activator},
                          {"firing_time", d.firing_time},
                          {"repressor", d.repressor},
                          {"unmatched_events", d.unmatched_events},
                          {"overall", d.overall()}};
    }
    write_json_file(out_path(cfg, "verify.json"), j);
    std::printf("empirical L = %.6g over %d pairs (%d skipped)\n", lp.L, lp.trials, lp.skipped);
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Degrade-and-fire population simulator and stability toolkit"};
    app.set_version_flag("--version", version_string);
    app.require_subcommand(1);

    Common c;
    auto add_common = [&](CLI::App* s, bool scalar_tau = true) {
        s->add_option("--config", c.config, "configuration file");
        s->add_option("--out", c.out, "output directory");
        s->add_option("--seed", c.seed, "random seed");
        s->add_option("--jobs", c.jobs, "parallel jobs")->check(CLI::PositiveNumber);
        s->add_option("--R", c.R, "base reset concentration");
        s->add_option("--beta", c.beta, "activator degradation rate");
        s->add_option("--nu", c.nu, "coupling gain");
        if (scalar_tau) s->add_option("--tau", c.tau, "delay");
        s->add_option("--N", c.N, "population size");
    };

    auto* sim = app.add_subcommand("simulate", "event-driven simulation");
    add_common(sim);

    FpChoice fc;
    auto* fpc = app.add_subcommand("fixed-point", "compute a fixed point of the return map");
    add_common(fpc);
    add_fp_flags(fpc, fc);

    bool beta_n = false, tau0 = false, q0 = false;
    auto* stab = app.add_subcommand("stability", "stability report of a fixed point");
    add_common(stab);
    add_fp_flags(stab, fc);
    stab->add_flag("--estimate-beta-n", beta_n, "estimate the in-subspace stability threshold in beta");
    stab->add_flag("--estimate-tau0", tau0, "estimate the largest delay keeping the criterion");
    stab->add_flag("--estimate-q0", q0, "smallest cluster multiplier with positive instability margin");

    double target = 0.0;
    int steps = 10;
    auto* cont = app.add_subcommand("continue", "continue a fixed point in tau");
    add_common(cont);
    add_fp_flags(cont, fc);
    cont->add_option("--tau-target", target, "final delay")->required();
    cont->add_option("--steps", steps, "number of continuation steps")->check(CLI::PositiveNumber);

    std::string range = "0:0.3:0.01", metric = "contraction-ratio";
    auto* sw = app.add_subcommand("sweep", "parameter sweep in tau");
    add_common(sw, false);
    add_fp_flags(sw, fc);
    sw->add_option("--tau", range, "delay range start:stop:step");
    sw->add_option("--metric", metric, "contraction-ratio | in-subspace-radius | A_FP | period");

    int trials = 500;
    double radius = 1e-3, dt = 0.0;
    auto* ver = app.add_subcommand("verify", "Lipschitz probe and reference-integrator comparison");
    add_common(ver);
    ver->add_option("--trials", trials, "sampled pairs");
    ver->add_option("--radius", radius, "perturbation radius");
    ver->add_option("--dt", dt, "reference integrator step (0 skips the comparison)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) return cmd_simulate(c);
        if (fpc->parsed()) return cmd_fixed_point(c, fc);
        if (stab->parsed()) return cmd_stability(c, fc, beta_n, tau0, q0);
        if (cont->parsed()) return cmd_continue(c, fc, target, steps);
        if (sw->parsed()) return cmd_sweep(c, fc, range, metric);
        if (ver->parsed()) return cmd_verify(c, trials, radius, dt);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 1;
    } catch (const ParameterError& e) {
        std::fprintf(stderr, "parameter error: %s\n", e.what());
        return 2;
    } catch (const WellPosednessError& e) {
        std::fprintf(stderr, "inadmissible initial data: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    }
    return 1;
}
