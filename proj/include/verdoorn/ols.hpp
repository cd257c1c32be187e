#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "verdoorn/errors.hpp"
#include "verdoorn/moran.hpp"
#include "verdoorn/panel.hpp"
#include "verdoorn/stats.hpp"
#include "verdoorn/weights.hpp"

namespace verdoorn {

struct TestStat {
    double stat = 0.0;
    int df = 0;
    double p = 1.0;
};

/// Least-squares fit. sigma2 is the ML variance e'e/n (the convention the
/// LM diagnostics are defined with); coefficient covariance uses e'e/(n-k).
struct OlsFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd cov;  // s2 * (X'X)^-1
    double sigma2 = 0.0;  // e'e / n
    double s2 = 0.0;      // e'e / (n - k)
    double r2 = 0.0;
    double r2_adj = 0.0;
    std::vector<double> t_stats;
    std::vector<double> p_values;  // two-sided, t(n-k)
    int n = 0;
    int k = 0;

    /// Gaussian log-likelihood at the ML variance.
    double loglik() const {
        return -0.5 * n * (std::log(2.0 * M_PI) + 1.0) - 0.5 * n * std::log(sigma2);
    }
};

inline OlsFit ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X) {
    const int n = static_cast<int>(X.rows());
    const int k = static_cast<int>(X.cols());
    if (y.size() != n) throw ParameterError("ols: y/X size mismatch");
    if (n <= k) {
        throw EstimationError("ols: insufficient data, n = " + std::to_string(n) +
                              " <= k = " + std::to_string(k));
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < k) throw EstimationError("ols: design matrix is rank deficient");

    OlsFit fit;
    fit.n = n;
    fit.k = k;
    fit.beta = qr.solve(y);
    fit.residuals = y - X * fit.beta;
    const double sse = fit.residuals.squaredNorm();
    fit.sigma2 = sse / n;
    fit.s2 = sse / (n - k);
    fit.cov = fit.s2 * (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(k, k));

    const double mean_y = y.mean();
    const double sst = (y.array() - mean_y).square().sum();
    fit.r2 = sst > 0.0 ? 1.0 - sse / sst : (sse > 0.0 ? 0.0 : 1.0);
    fit.r2_adj = 1.0 - (1.0 - fit.r2) * (n - 1.0) / (n - k);

    fit.t_stats.resize(k);
    fit.p_values.resize(k);
    for (int j = 0; j < k; ++j) {
        const double se = std::sqrt(fit.cov(j, j));
        fit.t_stats[j] = fit.beta(j) / se;
        fit.p_values[j] = student_t_two_sided(fit.t_stats[j], n - k);
    }
    return fit;
}

/// Jarque-Bera normality test: JB = n/6 (S^2 + (K-3)^2/4), chi-square(2).
/// Moments are central with divisor n.
inline TestStat jarque_bera(std::span<const double> e) {
    const int n = static_cast<int>(e.size());
    if (n < 4) throw DomainError("jarque_bera: need at least 4 residuals");
    double mean = 0.0;
    for (double v : e) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : e) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 <= 0.0) throw DomainError("jarque_bera: residual variance is zero");
    const double skew = m3 / std::pow(m2, 1.5);
    const double kurt = m4 / (m2 * m2);
    TestStat t;
    t.stat = n / 6.0 * (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
    t.df = 2;
    t.p = chi2_sf(t.stat, 2);
    return t;
}

namespace detail {

inline Eigen::VectorXd to_vec(std::span<const double> v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Auxiliary regression of g on X; returns (explained sum of squares,
/// centered total sum of squares).
inline std::pair<double, double> aux_regression(const Eigen::VectorXd& g,
                                                const Eigen::MatrixXd& X) {
    const Eigen::VectorXd fitted = X * Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(X).solve(g);
    const double mean_g = g.mean();
    const double ess = (fitted.array() - mean_g).square().sum();
    const double tss = (g.array() - mean_g).square().sum();
    return {ess, tss};
}

}  // namespace detail

/// Breusch-Pagan heteroskedasticity test: regress e_i^2/sigma2 - 1 on X,
/// statistic = ESS / 2, chi-square(k-1).
inline TestStat breusch_pagan(std::span<const double> e, const Eigen::MatrixXd& X) {
    const int n = static_cast<int>(e.size());
    const int k = static_cast<int>(X.cols());
    if (n != X.rows()) throw ParameterError("breusch_pagan: e/X size mismatch");
    if (k < 2) throw ParameterError("breusch_pagan: X needs a non-constant column");
    const Eigen::VectorXd ev = detail::to_vec(e);
    const double sigma2 = ev.squaredNorm() / n;
    if (sigma2 <= 0.0) throw DomainError("breusch_pagan: residual variance is zero");
    const Eigen::VectorXd g = ev.array().square() / sigma2 - 1.0;
    const auto [ess, tss] = detail::aux_regression(g, X);
    (void)tss;
    TestStat t;
    t.stat = 0.5 * ess;
    t.df = k - 1;
    t.p = chi2_sf(t.stat, t.df);
    return t;
}

/// Koenker-Bassett (studentized BP): regress e_i^2 on X, statistic = n * R^2
/// of the auxiliary regression, chi-square(k-1).
inline TestStat koenker_bassett(std::span<const double> e, const Eigen::MatrixXd& X) {
    const int n = static_cast<int>(e.size());
    const int k = static_cast<int>(X.cols());
    if (n != X.rows()) throw ParameterError("koenker_bassett: e/X size mismatch");
    if (k < 2) throw ParameterError("koenker_bassett: X needs a non-constant column");
    const Eigen::VectorXd ev = detail::to_vec(e);
    if (ev.squaredNorm() <= 0.0) throw DomainError("koenker_bassett: residual variance is zero");
    const Eigen::VectorXd g = ev.array().square();
    const auto [ess, tss] = detail::aux_regression(g, X);
    TestStat t;
    t.stat = tss > 0.0 ? n * (ess / tss) : 0.0;
    t.df = k - 1;
    t.p = chi2_sf(t.stat, t.df);
    return t;
}

/// The four Lagrange multiplier diagnostics for spatial dependence in an OLS
/// fit. The robust pair is undefined when D <= T (the lag term of the fitted
/// mean is perfectly explained by X); the plain pair is always reported.
struct LmTests {
    TestStat lm_lag, lm_err;
    std::optional<TestStat> rlm_lag, rlm_err;
    double d_rho = 0.0;       // e'Wy / sigma2
    double d_lambda = 0.0;    // e'We / sigma2
    double trace_term = 0.0;  // T = tr(W'W + WW)
    double denom = 0.0;       // D = (WXb)'M(WXb)/sigma2 + T

    bool robust_valid() const { return rlm_lag.has_value(); }

    const TestStat& robust_lag() const {
        if (!rlm_lag) {
            throw DiagnosticDegeneracyError("robust LM tests degenerate: D <= T", d_rho,
                                            d_lambda, trace_term, denom);
        }
        return *rlm_lag;
    }
    const TestStat& robust_err() const {
        if (!rlm_err) {
            throw DiagnosticDegeneracyError("robust LM tests degenerate: D <= T", d_rho,
                                            d_lambda, trace_term, denom);
        }
        return *rlm_err;
    }
};

/// tr(W'W + WW) over the sparse rows.
inline double lm_trace_term(const SpatialWeights& w) {
    double tr = 0.0;
    for (int i = 0; i < w.n(); ++i) {
        for (const auto& nb : w.rows[i]) {
            tr += nb.weight * nb.weight;  // tr(W'W)
            const auto& back = w.rows[nb.index];
            const auto it = std::lower_bound(
                back.begin(), back.end(), i,
                [](const Neighbor& a, int v) { return a.index < v; });
            if (it != back.end() && it->index == i) tr += nb.weight * it->weight;  // tr(WW)
        }
    }
    return tr;
}

inline LmTests lm_tests(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                        const SpatialWeights& w) {
    const int n = static_cast<int>(y.size());
    if (w.n() != n) throw ParameterError("lm_tests: y/W size mismatch");
    const OlsFit fit = ols(y, X);
    const double sigma2 = fit.sigma2;

    std::vector<double> yv(y.data(), y.data() + n);
    std::vector<double> ev(fit.residuals.data(), fit.residuals.data() + n);
    const std::vector<double> wy = w.lag(yv);
    const std::vector<double> we = w.lag(ev);

    LmTests lm;
    double e_we = 0.0, e_wy = 0.0;
    for (int i = 0; i < n; ++i) {
        e_we += ev[i] * we[i];
        e_wy += ev[i] * wy[i];
    }
    lm.d_lambda = e_we / sigma2;
    lm.d_rho = e_wy / sigma2;
    lm.trace_term = lm_trace_term(w);

    // (WXb)' M (WXb) = squared norm of WXb after projecting out X
    const Eigen::VectorXd xb = X * fit.beta;
    std::vector<double> xbv(xb.data(), xb.data() + n);
    const std::vector<double> wxb_v = w.lag(xbv);
    const Eigen::VectorXd wxb = detail::to_vec(wxb_v);
    const Eigen::VectorXd proj_resid =
        wxb - X * Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(X).solve(wxb);
    lm.denom = proj_resid.squaredNorm() / sigma2 + lm.trace_term;

    const double t_term = lm.trace_term;
    const double d = lm.denom;
    auto make = [](double stat) {
        TestStat t;
        t.stat = stat;
        t.df = 1;
        t.p = chi2_sf(std::max(0.0, stat), 1);
        return t;
    };
    lm.lm_err = make(lm.d_lambda * lm.d_lambda / t_term);
    lm.lm_lag = make(lm.d_rho * lm.d_rho / d);
    if (d - t_term > 1e-12 * d) {
        const double diff = lm.d_rho - lm.d_lambda;
        lm.rlm_lag = make(diff * diff / (d - t_term));
        const double adj = lm.d_lambda - (t_term / d) * lm.d_rho;
        lm.rlm_err = make(adj * adj / (t_term * (1.0 - t_term / d)));
    }
    return lm;
}

/// Moran's I of the OLS residuals, with permutation inference.
inline MoranResult residual_moran(std::span<const double> e, const SpatialWeights& w,
                                  int n_perm, std::uint64_t seed) {
    return permutation_test(e, w, n_perm, seed);
}

struct InferenceOptions {
    int n_perm = 999;
    std::uint64_t seed = 1995;
};

/// One row of the OLS tables: coefficients, inference and the full
/// diagnostic battery for a sector/period cell.
struct OlsReport {
    Sector sector = Sector::Total;
    int start_year = 0;
    int end_year = 0;
    int n_obs = 0;

    double alpha_hat = 0.0;  // intercept
    double gamma_hat = 0.0;  // Verdoorn coefficient
    double t_alpha = 0.0, p_alpha = 1.0;
    double t_gamma = 0.0, p_gamma = 1.0;
    double sigma2 = 0.0;
    double r2 = 0.0;
    double r2_adj = 0.0;

    TestStat jb, bp, kb;
    MoranResult residual_moran;
    LmTests lm;

    std::vector<double> residuals;
};

/// OLS estimation of p = alpha + gamma q + error plus all diagnostics.
inline OlsReport estimate_verdoorn_ols(const GrowthVector& gv, const SpatialWeights& w,
                                       const InferenceOptions& opts = {}) {
    const int n = static_cast<int>(gv.p.size());
    if (w.n() != n) throw ParameterError("estimate_verdoorn_ols: growth vector/W mismatch");
    Eigen::VectorXd y = detail::to_vec(gv.p);
    Eigen::MatrixXd X(n, 2);
    X.col(0).setOnes();
    X.col(1) = detail::to_vec(gv.q);

    const OlsFit fit = ols(y, X);
    OlsReport rep;
    rep.sector = gv.sector;
    rep.start_year = gv.start_year;
    rep.end_year = gv.end_year;
    rep.n_obs = n;
    rep.alpha_hat = fit.beta(0);
    rep.gamma_hat = fit.beta(1);
    rep.t_alpha = fit.t_stats[0];
    rep.p_alpha = fit.p_values[0];
    rep.t_gamma = fit.t_stats[1];
    rep.p_gamma = fit.p_values[1];
    rep.sigma2 = fit.sigma2;
    rep.r2 = fit.r2;
    rep.r2_adj = fit.r2_adj;
    rep.residuals.assign(fit.residuals.data(), fit.residuals.data() + n);

    rep.jb = jarque_bera(rep.residuals);
    rep.bp = breusch_pagan(rep.residuals, X);
    rep.kb = koenker_bassett(rep.residuals, X);
    rep.residual_moran = residual_moran(rep.residuals, w, opts.n_perm, opts.seed);
    rep.lm = lm_tests(y, X, w);
    return rep;
}

}  // namespace verdoorn
