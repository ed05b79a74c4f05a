#ifndef DFSYNC_CONFIG_HPP
#define DFSYNC_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dfsync/cluster.hpp"
#include "dfsync/engine.hpp"
#include "dfsync/error.hpp"
#include "dfsync/fixed_points.hpp"
#include "dfsync/io.hpp"
#include "dfsync/params.hpp"

namespace dfsync {

class ConfigError : public Error {
public:
    using Error::Error;
};

enum class InitKind { Explicit, Sync, Equi, FpSmear };

inline const char* to_string(InitKind k)
{
    switch (k) {
    case InitKind::Explicit: return "explicit";
    case InitKind::Sync: return "sync";
    case InitKind::Equi: return "equi";
    case InitKind::FpSmear: return "fp-smear";
    }
    return "?";
}

struct ExperimentConfig {
    Params params{2.0, 1.0, 0.2, 0.0, 10};
    InitKind init = InitKind::Sync;
    std::vector<double> x;  ///< explicit only
    double A = 0.0;         ///< explicit only
    int clusters = 1;       ///< equi / fp-smear: number of equally spaced clusters (1 = synchronized)
    double epsilon = 1e-4;  ///< fp-smear offset
    int smear_cluster = 0;  ///< fp-smear: which cluster loses an oscillator
    double horizon = 20.0;
    int returns = 0;        ///< if > 0, number of section returns to record
    std::uint64_t seed = 0;
    double sample_dt = 0.0;
    std::string out_dir = ".";

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("invalid number for " + key + ": '" + v + "'");
    }
}

inline long long parse_int(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const long long d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("invalid integer for " + key + ": '" + v + "'");
    }
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
    return out;
}

}  // namespace detail

/// Parses `[section]` headers and `key = value` lines. '#' starts a comment.
/// Every unknown section or key is collected and reported in one error.
inline ExperimentConfig parse_config(std::istream& is)
{
    ExperimentConfig c;
    std::string line, section;
    std::vector<std::string> unknown;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        const std::string full = section + "." + key;

        if (full == "params.R") c.params.R = detail::parse_double(full, val);
        else if (full == "params.beta") c.params.beta = detail::parse_double(full, val);
        else if (full == "params.nu") c.params.nu = detail::parse_double(full, val);
        else if (full == "params.tau") c.params.tau = detail::parse_double(full, val);
        else if (full == "params.N") c.params.N = static_cast<int>(detail::parse_int(full, val));
        else if (full == "init.kind") {
            if (val == "explicit") c.init = InitKind::Explicit;
            else if (val == "sync") c.init = InitKind::Sync;
            else if (val == "equi") c.init = InitKind::Equi;
            else if (val == "fp-smear") c.init = InitKind::FpSmear;
            else throw ConfigError("unknown init kind '" + val + "'");
        }
        else if (full == "init.x") c.x = detail::parse_list(full, val);
        else if (full == "init.A") c.A = detail::parse_double(full, val);
        else if (full == "init.K") c.clusters = static_cast<int>(detail::parse_int(full, val));
        else if (full == "init.epsilon") c.epsilon = detail::parse_double(full, val);
        else if (full == "init.cluster") c.smear_cluster = static_cast<int>(detail::parse_int(full, val));
        else if (full == "run.horizon") c.horizon = detail::parse_double(full, val);
        else if (full == "run.returns") c.returns = static_cast<int>(detail::parse_int(full, val));
        else if (full == "run.seed") c.seed = static_cast<std::uint64_t>(detail::parse_int(full, val));
        else if (full == "run.sample_dt") c.sample_dt = detail::parse_double(full, val);
        else if (full == "output.dir") c.out_dir = val;
        else unknown.push_back(full);
    }
    if (!unknown.empty()) {
        std::string msg = "unknown configuration keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }
    return c;
}

inline ExperimentConfig parse_config_file(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open configuration file " + path);
    return parse_config(is);
}

inline std::string serialize_config(const ExperimentConfig& c)
{
    std::ostringstream os;
    os << "[params]\n"
       << "R = " << fmt(c.params.R) << "\n"
       << "beta = " << fmt(c.params.beta) << "\n"
       << "nu = " << fmt(c.params.nu) << "\n"
       << "tau = " << fmt(c.params.tau) << "\n"
       << "N = " << c.params.N << "\n\n"
       << "[init]\n"
       << "kind = " << to_string(c.init) << "\n";
    if (!c.x.empty()) {
        os << "x = ";
        for (std::size_t i = 0; i < c.x.size(); ++i) os << (i ? ", " : "") << fmt(c.x[i]);
        os << "\n";
    }
    os << "A = " << fmt(c.A) << "\n"
       << "K = " << c.clusters << "\n"
       << "epsilon = " << fmt(c.epsilon) << "\n"
       << "cluster = " << c.smear_cluster << "\n\n"
       << "[run]\n"
       << "horizon = " << fmt(c.horizon) << "\n"
       << "returns = " << c.returns << "\n"
       << "seed = " << c.seed << "\n"
       << "sample_dt = " << fmt(c.sample_dt) << "\n\n"
       << "[output]\n"
       << "dir = " << c.out_dir << "\n";
    return os.str();
}

/// Fixed point with K equally spaced clusters (K = 1: synchronized) at p.tau,
/// continued from tau = 0 when needed.
inline ClusterState base_fixed_point(const Params& p, int k, int continuation_steps = 20)
{
    if (k == 1) return sync_cluster_state(p);
    Params p0 = p;
    p0.tau = 0.0;
    const ClusterState fp0 = equi_fixed_point(p0, k);
    if (p.tau == 0.0) return fp0;
    return continue_fixed_point(fp0, p0, p.tau, continuation_steps);
}

/// Initial data described by the configuration.
inline InitialData resolve_initial_data(const ExperimentConfig& c)
{
    const Params& p = c.params;
    p.validate();
    InitialData d;
    switch (c.init) {
    case InitKind::Explicit:
        if (static_cast<int>(c.x.size()) != p.N)
            throw ConfigError("init.x has " + std::to_string(c.x.size()) + " entries but N = " + std::to_string(p.N));
        d.x = c.x;
        d.A = c.A;
        break;
    case InitKind::Sync:
        d.x.assign(static_cast<std::size_t>(p.N), 0.0);
        d.A = sync_fixed_point(p).A_FP;
        break;
    case InitKind::Equi:
    case InitKind::FpSmear: {
        ClusterState fp = base_fixed_point(p, c.clusters);
        if (c.init == InitKind::FpSmear) {
            if (c.smear_cluster < 0 || c.smear_cluster >= static_cast<int>(fp.clusters()))
                throw ConfigError("init.cluster out of range");
            fp = smear(fp, static_cast<std::size_t>(c.smear_cluster), c.epsilon);
        }
        d.x = expand(fp);
        d.A = fp.A;
        break;
    }
    }
    const auto rep = check_wellposed(d.x, d.A, p);
    if (!rep.admissible())
        throw WellPosednessError(std::string("initial data is not admissible (") + to_string(rep.verdict) +
                                 ", threshold " + fmt(rep.threshold) + ", claim bound " + fmt(rep.claim_bound) + ")");
    return d;
}

}  // namespace dfsync

#endif  // DFSYNC_CONFIG_HPP
