#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "verdoorn/ols.hpp"
#include "verdoorn/spatial_ml.hpp"

namespace verdoorn {

enum class ModelChoice { Ols, Lag, Error };

inline const char* model_choice_name(ModelChoice c) {
    switch (c) {
        case ModelChoice::Ols: return "OLS";
        case ModelChoice::Lag: return "LAG";
        case ModelChoice::Error: return "ERROR";
    }
    return "OLS";
}

/// Outcome of the classical specification search, with the LM evidence and
/// an ordered trace of which rule fired.
struct SpecDecision {
    ModelChoice choice = ModelChoice::Ols;
    double alpha = 0.05;
    TestStat lm_lag, lm_err;
    std::optional<TestStat> rlm_lag, rlm_err;
    std::vector<std::string> narrative;
};

namespace detail {

inline std::string lm_line(const char* name, const TestStat& t, double alpha) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s = %.3f (p = %.4f) is %ssignificant at %.2f", name,
                  t.stat, t.p, t.p <= alpha ? "" : "not ", alpha);
    return buf;
}

}  // namespace detail

/// Classical decision tree over the four LM statistics:
///   - neither plain test significant  -> keep OLS
///   - exactly one significant         -> that specification
///   - both significant                -> the one with the larger robust
///                                        statistic (ERROR on an exact tie)
/// If the robust pair is degenerate the plain statistics break the tie,
/// with a warning in the narrative.
inline SpecDecision decide(const OlsReport& report, double alpha = 0.05) {
    SpecDecision d;
    d.alpha = alpha;
    d.lm_lag = report.lm.lm_lag;
    d.lm_err = report.lm.lm_err;
    d.rlm_lag = report.lm.rlm_lag;
    d.rlm_err = report.lm.rlm_err;

    const bool sig_lag = d.lm_lag.p <= alpha;
    const bool sig_err = d.lm_err.p <= alpha;
    d.narrative.push_back(detail::lm_line("LM_lag", d.lm_lag, alpha));
    d.narrative.push_back(detail::lm_line("LM_err", d.lm_err, alpha));

    if (!sig_lag && !sig_err) {
        d.choice = ModelChoice::Ols;
        d.narrative.push_back("neither plain LM test significant -> keep OLS");
        return d;
    }
    if (sig_lag != sig_err) {
        d.choice = sig_lag ? ModelChoice::Lag : ModelChoice::Error;
        d.narrative.push_back(std::string("exactly one plain LM test significant -> ") +
                              model_choice_name(d.choice));
        return d;
    }

    // both significant: compare the robust statistics
    if (d.rlm_lag && d.rlm_err) {
        d.narrative.push_back(detail::lm_line("robust LM_lag", *d.rlm_lag, alpha));
        d.narrative.push_back(detail::lm_line("robust LM_err", *d.rlm_err, alpha));
        if (d.rlm_lag->stat == d.rlm_err->stat) {
            d.choice = ModelChoice::Error;
            d.narrative.push_back("robust statistics tie exactly -> ERROR (fixed tie-break)");
        } else {
            d.choice = d.rlm_lag->stat > d.rlm_err->stat ? ModelChoice::Lag : ModelChoice::Error;
            d.narrative.push_back(std::string("both plain tests significant; larger robust "
                                              "statistic -> ") +
                                  model_choice_name(d.choice));
        }
    } else {
        d.narrative.push_back(
            "warning: robust LM tests degenerate (D <= T); falling back to the plain "
            "statistics");
        d.choice = d.lm_lag.stat > d.lm_err.stat ? ModelChoice::Lag : ModelChoice::Error;
        d.narrative.push_back(std::string("larger plain statistic -> ") +
                              model_choice_name(d.choice));
    }
    return d;
}

/// Dispatches the chosen specification: OLS hands back the original report,
/// otherwise the matching ML fit is estimated on the same data.
inline std::variant<OlsReport, SpatialFit> run_selected(const SpecDecision& decision,
                                                        const OlsReport& report,
                                                        const GrowthVector& gv,
                                                        const SpatialWeights& w) {
    if (decision.choice == ModelChoice::Ols) return report;

    const int n = static_cast<int>(gv.p.size());
    Eigen::VectorXd y = detail::to_vec(gv.p);
    Eigen::MatrixXd x(n, 2);
    x.col(0).setOnes();
    x.col(1) = detail::to_vec(gv.q);
    SpatialFit fit = decision.choice == ModelChoice::Lag ? fit_lag(y, x, w) : fit_error(y, x, w);
    fit.sector = gv.sector;
    fit.start_year = gv.start_year;
    fit.end_year = gv.end_year;
    return fit;
}

}  // namespace verdoorn
