#ifndef DFSYNC_PARAMS_HPP
#define DFSYNC_PARAMS_HPP

#include <cmath>
#include <string>
#include <vector>

#include "dfsync/error.hpp"

namespace dfsync {

/// Model parameters of a population of degrade-and-fire oscillators coupled
/// through a common, delayed activator. Time is measured in units of the
/// repressor decay rate, so every x_i decreases with slope -1.
struct Params {
    double R = 2.0;     ///< base reset concentration
    double beta = 1.0;  ///< activator degradation rate
    double nu = 0.2;    ///< activator-to-reset coupling gain
    double tau = 0.0;   ///< synthesis delay
    int N = 1;          ///< population size

    /// Upper bound of the activator on the attracting set.
    double a_max() const { return R / (beta - nu); }

    /// Upper bound of the repressor concentrations on the attracting set.
    double x_max() const { return R + nu * a_max(); }

    /// Largest coupling gain for which the cyclic firing order is preserved.
    double order_bound() const { return beta / (1.0 + beta * R); }

    bool preserves_order() const { return nu < order_bound(); }

    /// R_τ = R + ν(1+βτ-e^{βτ})/β², written with expm1 so that small βτ keeps full precision.
    double r_tau() const
    {
        const double bt = beta * tau;
        return R + nu * (bt - std::expm1(bt)) / (beta * beta);
    }

    double nu_tau() const { return nu * std::exp(beta * tau); }

    /// Collects every violated model inequality; empty when the parameters are valid.
    std::vector<std::string> violations() const
    {
        std::vector<std::string> out;
        if (!(R > 0.0)) out.emplace_back("R > 0");
        if (!(beta > 0.0)) out.emplace_back("beta > 0");
        if (!(nu > 0.0)) out.emplace_back("nu > 0");
        if (!(tau >= 0.0)) out.emplace_back("tau >= 0");
        if (N < 1) out.emplace_back("N >= 1");
        if (!out.empty()) return out;
        if (!(nu < beta)) out.emplace_back("nu < beta");
        if (!(tau < R)) out.emplace_back("tau < R");
        if (!(r_tau() > 0.0)) out.emplace_back("R_tau > 0");
        if (!(nu_tau() < beta)) out.emplace_back("nu_tau < beta");
        return out;
    }

    /// Throws ParameterError listing every violated inequality.
    void validate() const
    {
        const auto v = violations();
        if (v.empty()) return;
        std::string msg = "parameter conditions violated:";
        for (const auto& s : v) msg += " [" + s + "]";
        throw ParameterError(msg);
    }

    /// validate() plus the order-preservation bound ν < β/(1+βR).
    void validate_with_order() const
    {
        validate();
        if (!preserves_order())
            throw ParameterError("parameter conditions violated: [nu < beta/(1+beta*R)]");
    }

    friend bool operator==(const Params&, const Params&) = default;
};

}  // namespace dfsync

#endif  // DFSYNC_PARAMS_HPP
