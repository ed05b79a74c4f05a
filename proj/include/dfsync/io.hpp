#ifndef DFSYNC_IO_HPP
#define DFSYNC_IO_HPP

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dfsync/engine.hpp"
#include "dfsync/error.hpp"
#include "dfsync/maps.hpp"
#include "dfsync/stability.hpp"
#include "dfsync/verify.hpp"

namespace dfsync {

inline constexpr const char* version_string = "dfsync 1.0.0";

using ordered_json = nlohmann::ordered_json;

/// 17 significant digits: enough to round-trip any double.
inline std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Trajectory export

inline std::string event_field(const std::vector<int>& who)
{
    std::string s;
    for (std::size_t k = 0; k < who.size(); ++k) {
        if (k) s += ';';
        s += std::to_string(who[k] + 1);
    }
    return s;
}

inline void write_csv_header(std::ostream& os, std::size_t n)
{
    os << 't';
    for (std::size_t i = 1; i <= n; ++i) os << ",x_" << i;
    os << ",A,event\n";
}

inline void write_csv_row(std::ostream& os, double t, const std::vector<double>& x, double a, const std::string& ev)
{
    os << fmt(t);
    for (double v : x) os << ',' << fmt(v);
    os << ',' << fmt(a) << ',' << ev << '\n';
}

/// Trajectory as CSV. Every firing produces two rows at the firing time: the
/// left limit (event column empty) and the post-reset state (firing indices,
/// 1-based, separated by ';'). With sample_dt > 0 regular samples are added.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, double sample_dt = 0.0)
{
    write_csv_header(os, tr.x0.size());
    std::size_t next_event = 0;
    auto emit_event = [&](std::size_t k) {
        const auto& e = tr.events[k];
        const double a = tr.activator_at(e.t);
        write_csv_row(os, e.t, tr.x_at(e.t), a, "");
        write_csv_row(os, e.t, tr.x_checkpoints[k], a, event_field(e.oscillators));
    };
    if (tr.events.empty() || tr.events.front().t > tr.t0) write_csv_row(os, tr.t0, tr.x0, tr.a0, "");
    if (sample_dt > 0.0) {
        const auto count = static_cast<long long>(std::floor((tr.t_end - tr.t0) / sample_dt));
        for (long long j = 1; j <= count; ++j) {
            const double t = tr.t0 + j * sample_dt;
            while (next_event < tr.events.size() && tr.events[next_event].t <= t) emit_event(next_event++);
            write_csv_row(os, t, tr.x_at(t), tr.activator_at(t), "");
        }
    }
    while (next_event < tr.events.size()) emit_event(next_event++);
    if (tr.events.empty() || tr.events.back().t < tr.t_end)
        write_csv_row(os, tr.t_end, tr.x_at(tr.t_end), tr.activator_at(tr.t_end), "");
}

/// One JSON object per line: {t, oscillators, A_delayed, reset_value}.
inline void write_events_jsonl(std::ostream& os, const std::vector<FiringEvent>& events)
{
    for (const auto& e : events) {
        os << "{\"t\":" << fmt(e.t) << ",\"oscillators\":[";
        for (std::size_t k = 0; k < e.oscillators.size(); ++k) os << (k ? "," : "") << e.oscillators[k];
        os << "],\"A_delayed\":" << fmt(e.a_delayed) << ",\"reset_value\":" << fmt(e.reset_value) << "}\n";
    }
}

/// Rows read back from a trajectory CSV.
struct CsvTrajectory {
    std::vector<double> t;
    std::vector<std::vector<double>> x;
    std::vector<double> A;
    std::vector<FiringEvent> events;  ///< t, oscillators and (post-reset) x of the firing rows
};

inline CsvTrajectory read_trajectory_csv(std::istream& is)
{
    CsvTrajectory out;
    std::string line;
    if (!std::getline(is, line)) throw Error("empty trajectory CSV");
    std::size_t cols = 1;
    for (char c : line) cols += c == ',';
    if (cols < 4) throw Error("trajectory CSV header is too short");
    const std::size_t n = cols - 3;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) f.push_back(item);
        if (line.back() == ',') f.emplace_back();
        if (f.size() != cols) throw Error("malformed trajectory CSV row: " + line);
        const double t = std::stod(f[0]);
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = std::stod(f[1 + i]);
        const double a = std::stod(f[n + 1]);
        if (!f[n + 2].empty()) {
            FiringEvent ev;
            ev.t = t;
            std::stringstream es(f[n + 2]);
            while (std::getline(es, item, ';')) ev.oscillators.push_back(std::stoi(item) - 1);
            ev.reset_value = x[static_cast<std::size_t>(ev.oscillators.front())];
            out.events.push_back(std::move(ev));
        }
        out.t.push_back(t);
        out.x.push_back(std::move(x));
        out.A.push_back(a);
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON reports

inline ordered_json to_json(const Params& p)
{
    return ordered_json{{"R", p.R}, {"beta", p.beta}, {"nu", p.nu}, {"tau", p.tau}, {"N", p.N}};
}

inline ordered_json to_json(const std::complex<double>& z) { return ordered_json::array({z.real(), z.imag()}); }

inline ordered_json to_json(const Spectrum& s)
{
    ordered_json a = ordered_json::array();
    for (const auto& z : s) a.push_back(to_json(z));
    return a;
}

inline ordered_json to_json(const Eigen::MatrixXd& m)
{
    ordered_json a = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        a.push_back(row);
    }
    return a;
}

inline ordered_json to_json(const ClusterState& c)
{
    return ordered_json{{"n", c.n}, {"y", c.y}, {"A", c.A}, {"period", c.period}};
}

inline ClusterState cluster_state_from_json(const nlohmann::json& j)
{
    ClusterState c;
    c.n = j.at("n").get<std::vector<int>>();
    c.y = j.at("y").get<std::vector<double>>();
    c.A = j.at("A").get<double>();
    if (j.contains("period")) c.period = j.at("period").get<double>();
    return c;
}

inline ordered_json to_json(const SyncAnalysis& s)
{
    return ordered_json{{"R_tau", s.R_tau},   {"nu_tau", s.nu_tau}, {"A0_tau", s.A0_tau},
                        {"A_tau_max", s.A_tau_max}, {"A_FP", s.A_FP},   {"period", s.period}};
}

inline ordered_json to_json(const ClusterCriteria& c)
{
    ordered_json j{{"cluster", c.cluster},
                   {"size", c.size},
                   {"firing_time", c.phase.t},
                   {"A", c.phase.A},
                   {"adot_before_firing", c.phase.adot_minus},
                   {"adot_after_firing", c.phase.adot_plus},
                   {"A_delayed", c.phase.a_delayed},
                   {"adot_delayed", c.phase.adot_delayed},
                   {"reset", c.phase.reset},
                   {"window_clear", c.window_clear},
                   {"window_slack", c.window_slack},
                   {"instability_threshold", c.lemma3_threshold},
                   {"instability_margin", c.lemma3_margin},
                   {"stable_criterion", c.stable_criterion},
                   {"unstable_criterion", c.unstable_criterion}};
    j["smeared_multiplier"] = c.smeared_multiplier ? ordered_json(*c.smeared_multiplier) : ordered_json(nullptr);
    j["smeared_radius"] = c.smeared_radius ? ordered_json(*c.smeared_radius) : ordered_json(nullptr);
    j["verdict"] = c.verdict;
    return j;
}

inline ordered_json to_json(const StabilityReport& r)
{
    ordered_json clusters = ordered_json::array();
    for (const auto& c : r.clusters) clusters.push_back(to_json(c));
    return ordered_json{{"version", version_string},
                        {"params", to_json(r.params)},
                        {"fixed_point", to_json(r.fixed_point)},
                        {"residual", r.residual},
                        {"jacobian", to_json(r.jacobian)},
                        {"spectrum", to_json(r.spectrum)},
                        {"in_subspace_radius", r.in_subspace_radius},
                        {"in_subspace_stable", r.in_subspace_stable},
                        {"clusters", clusters},
                        {"verdict", r.verdict}};
}

inline ordered_json to_json(const LipschitzReport& r)
{
    return ordered_json{{"seed", r.seed},
                        {"trials", r.trials},
                        {"skipped", r.skipped},
                        {"identical", r.identical},
                        {"first_return_later", r.first_later},
                        {"second_return_later", r.second_later},
                        {"L", r.L},
                        {"worst", {{"x", r.worst.x}, {"A", r.worst.A}, {"x2", r.worst.x2}, {"A2", r.worst.A2}}}};
}

inline ordered_json to_json(const SpreadSeries& s)
{
    ordered_json j{{"times", s.times}, {"spreads", s.spreads}, {"ratios", s.ratios}};
    j["mean_ratio"] = std::isnan(s.mean_ratio) ? ordered_json(nullptr) : ordered_json(s.mean_ratio);
    return j;
}

inline void write_json_file(const std::string& path, const ordered_json& j)
{
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    os << j.dump(2) << '\n';
}

}  // namespace dfsync

#endif  // DFSYNC_IO_HPP
