#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "verdoorn/errors.hpp"
#include "verdoorn/ols.hpp"
#include "verdoorn/optimize.hpp"
#include "verdoorn/weights.hpp"

namespace verdoorn {

namespace detail {

inline constexpr int kMaxDenseN = 2000;

inline Eigen::MatrixXd dense_weights(const SpatialWeights& w) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(w.n(), w.n());
    for (int i = 0; i < w.n(); ++i) {
        for (const auto& nb : w.rows[i]) m(i, nb.index) = nb.weight;
    }
    return m;
}

}  // namespace detail

/// Real eigenvalues of the row-standardized matrix, computed once per
/// SpatialWeights and cached. The non-island block D^{-1} B is similar to
/// the symmetric D^{-1/2} B D^{-1/2}, which guarantees a real spectrum;
/// island rows contribute zero eigenvalues.
inline const Spectrum& eigen_bounds(const SpatialWeights& w) {
    std::lock_guard<std::mutex> lock(*w.spectrum_mutex);
    if (w.spectrum_cache) return *w.spectrum_cache;

    const int n = w.n();
    if (n > detail::kMaxDenseN) {
        throw EstimationError("eigen_bounds: dense spectrum limited to n <= " +
                              std::to_string(detail::kMaxDenseN));
    }
    std::vector<int> position(n, -1);
    std::vector<int> members;
    for (int i = 0; i < n; ++i) {
        if (!w.is_island(i)) {
            position[i] = static_cast<int>(members.size());
            members.push_back(i);
        }
    }
    if (members.empty()) throw DomainError("eigen_bounds: every region is an island");

    const int m = static_cast<int>(members.size());
    Eigen::MatrixXd sym = Eigen::MatrixXd::Zero(m, m);
    for (int i : members) {
        const double share = 1.0 / w.degree(i);
        for (const auto& nb : w.rows[i]) {
            if (position[nb.index] < 0 || std::abs(nb.weight - share) > 1e-9) {
                throw EstimationError(
                    "eigen_bounds: weights are not row-standardized symmetric adjacency");
            }
            sym(position[i], position[nb.index]) =
                1.0 / std::sqrt(static_cast<double>(w.degree(i)) * w.degree(nb.index));
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw EstimationError("eigen_bounds: eigenvalue computation failed");
    }

    auto spec = std::make_shared<Spectrum>();
    spec->eigenvalues.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + m);
    spec->eigenvalues.resize(n, 0.0);  // islands
    std::sort(spec->eigenvalues.begin(), spec->eigenvalues.end());
    spec->omega_min = spec->eigenvalues.front();
    spec->omega_max = spec->eigenvalues.back();
    w.spectrum_cache = std::move(spec);
    return *w.spectrum_cache;
}

/// ln det(I - coef * W) as the eigenvalue sum of ln(1 - coef * omega).
inline double log_jacobian(const Spectrum& spec, double coef) {
    double sum = 0.0;
    for (double omega : spec.eigenvalues) {
        const double term = 1.0 - coef * omega;
        if (term <= 0.0) throw ParameterError("log_jacobian: coefficient outside bounds");
        sum += std::log(term);
    }
    return sum;
}

enum class SpatialModel { Lag, Error };

/// A fitted spatial lag or spatial error model (concentrated ML).
struct SpatialFit {
    SpatialModel kind = SpatialModel::Lag;
    Sector sector = Sector::Total;
    int start_year = 0;
    int end_year = 0;
    int n_obs = 0;

    double spatial_coef = 0.0;  // rho (lag) or lambda (error)
    double spatial_se = 0.0;
    double spatial_z = 0.0;
    double spatial_p = 1.0;

    Eigen::VectorXd beta;
    std::vector<double> beta_se, beta_z, beta_p;

    double sigma2 = 0.0;
    double loglik = 0.0;
    double pseudo_r2 = 0.0;  // squared correlation of predictions with y
    TestStat bp_spatial;

    double bound_lo = 0.0;  // 1 / omega_min
    double bound_hi = 0.0;  // 1 / omega_max
    bool boundary_warning = false;
};

namespace detail {

inline constexpr double kBoundMargin = 1e-6;

inline double pearson_corr_sq(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double ma = a.mean(), mb = b.mean();
    const Eigen::ArrayXd da = a.array() - ma, db = b.array() - mb;
    const double cov = (da * db).sum();
    const double va = da.square().sum(), vb = db.square().sum();
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return cov * cov / (va * vb);
}

struct TraceTerms {
    double tr = 0.0;       // tr(W A^-1)
    double tr_sq = 0.0;    // tr((W A^-1)^2)
    double tr_cross = 0.0; // tr((W A^-1)'(W A^-1))
    Eigen::MatrixXd wa_inv;
};

inline TraceTerms trace_terms(const SpatialWeights& w, double coef) {
    const int n = w.n();
    const Eigen::MatrixXd wd = dense_weights(w);
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - coef * wd;
    TraceTerms t;
    t.wa_inv = wd * a.partialPivLu().inverse();
    t.tr = t.wa_inv.trace();
    t.tr_sq = (t.wa_inv * t.wa_inv).trace();
    t.tr_cross = t.wa_inv.squaredNorm();
    return t;
}

inline void check_bounds(double lo, double hi) {
    if (!(hi - lo > 4.0 * kBoundMargin)) {
        throw EstimationError("spatial fit: eigenvalue bounds leave no search interval");
    }
}

inline bool near_boundary(double coef, double lo, double hi) {
    const double tol = 1e-5 * (hi - lo);
    return coef - (lo + kBoundMargin) < tol || (hi - kBoundMargin) - coef < tol;
}

}  // namespace detail

/// ML spatial lag model y = rho W y + X beta + eps via the concentrated
/// likelihood in rho. Asymptotic covariance from the analytic information
/// matrix at the optimum.
inline SpatialFit fit_lag(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                          const SpatialWeights& w) {
    const int n = static_cast<int>(y.size());
    const int k = static_cast<int>(X.cols());
    if (w.n() != n) throw ParameterError("fit_lag: y/W size mismatch");
    const Spectrum& spec = eigen_bounds(w);
    const double lo = 1.0 / spec.omega_min;
    const double hi = 1.0 / spec.omega_max;
    detail::check_bounds(lo, hi);

    std::vector<double> yv(y.data(), y.data() + n);
    const Eigen::VectorXd wy = detail::to_vec(w.lag(yv));
    const OlsFit fit0 = ols(y, X);
    const OlsFit fit_l = ols(wy, X);
    const Eigen::VectorXd& e0 = fit0.residuals;
    const Eigen::VectorXd& el = fit_l.residuals;
    const double e00 = e0.squaredNorm();
    const double e0l = e0.dot(el);
    const double ell = el.squaredNorm();

    const double const_term = -0.5 * n * (std::log(2.0 * M_PI) + 1.0);
    auto sigma2_at = [&](double rho) {
        return std::max((e00 - 2.0 * rho * e0l + rho * rho * ell) / n, 1e-300);
    };
    auto loglik_at = [&](double rho) {
        return const_term - 0.5 * n * std::log(sigma2_at(rho)) + log_jacobian(spec, rho);
    };

    const auto opt = maximize_scalar(loglik_at, lo + detail::kBoundMargin,
                                     hi - detail::kBoundMargin, 1e-9);
    const double rho = opt.x;

    SpatialFit res;
    res.kind = SpatialModel::Lag;
    res.n_obs = n;
    res.spatial_coef = rho;
    res.beta = fit0.beta - rho * fit_l.beta;
    res.sigma2 = sigma2_at(rho);
    res.loglik = opt.value;
    res.bound_lo = lo;
    res.bound_hi = hi;
    res.boundary_warning = detail::near_boundary(rho, lo, hi);

    // information matrix over (beta, rho, sigma2)
    const auto tt = detail::trace_terms(w, rho);
    const Eigen::VectorXd xb = X * res.beta;
    const Eigen::VectorXd v = tt.wa_inv * xb;
    const double s2 = res.sigma2;
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(k + 2, k + 2);
    info.topLeftCorner(k, k) = X.transpose() * X / s2;
    info.block(0, k, k, 1) = X.transpose() * v / s2;
    info.block(k, 0, 1, k) = info.block(0, k, k, 1).transpose();
    info(k, k) = tt.tr_sq + tt.tr_cross + v.squaredNorm() / s2;
    info(k, k + 1) = info(k + 1, k) = tt.tr / s2;
    info(k + 1, k + 1) = n / (2.0 * s2 * s2);
    const Eigen::MatrixXd cov = info.fullPivLu().inverse();

    res.beta_se.resize(k);
    res.beta_z.resize(k);
    res.beta_p.resize(k);
    for (int j = 0; j < k; ++j) {
        res.beta_se[j] = std::sqrt(cov(j, j));
        res.beta_z[j] = res.beta(j) / res.beta_se[j];
        res.beta_p[j] = normal_two_sided(res.beta_z[j]);
    }
    res.spatial_se = std::sqrt(cov(k, k));
    res.spatial_z = rho / res.spatial_se;
    res.spatial_p = normal_two_sided(res.spatial_z);

    // predictions (I - rho W)^-1 X beta
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(n, n) - rho * detail::dense_weights(w);
    const Eigen::VectorXd yhat = a.partialPivLu().solve(xb);
    res.pseudo_r2 = detail::pearson_corr_sq(yhat, y);

    const Eigen::VectorXd innovations = y - rho * wy - xb;
    std::vector<double> iv(innovations.data(), innovations.data() + n);
    res.bp_spatial = breusch_pagan(iv, X);
    return res;
}

/// ML spatial error model y = X beta + u, u = lambda W u + xi, concentrated
/// in lambda with GLS beta at each step.
inline SpatialFit fit_error(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                            const SpatialWeights& w) {
    const int n = static_cast<int>(y.size());
    const int k = static_cast<int>(X.cols());
    if (w.n() != n) throw ParameterError("fit_error: y/W size mismatch");
    const Spectrum& spec = eigen_bounds(w);
    const double lo = 1.0 / spec.omega_min;
    const double hi = 1.0 / spec.omega_max;
    detail::check_bounds(lo, hi);

    std::vector<double> yv(y.data(), y.data() + n);
    const Eigen::VectorXd wy = detail::to_vec(w.lag(yv));
    Eigen::MatrixXd wx(n, k);
    for (int j = 0; j < k; ++j) {
        std::vector<double> col(X.col(j).data(), X.col(j).data() + n);
        wx.col(j) = detail::to_vec(w.lag(col));
    }

    const double const_term = -0.5 * n * (std::log(2.0 * M_PI) + 1.0);
    struct GlsStep {
        Eigen::VectorXd beta;
        double sigma2 = 0.0;
    };
    auto gls_at = [&](double lambda) {
        const Eigen::MatrixXd ax = X - lambda * wx;
        const Eigen::VectorXd ay = y - lambda * wy;
        GlsStep step;
        step.beta = (ax.transpose() * ax).ldlt().solve(ax.transpose() * ay);
        step.sigma2 = std::max((ay - ax * step.beta).squaredNorm() / n, 1e-300);
        return step;
    };
    auto loglik_at = [&](double lambda) {
        return const_term - 0.5 * n * std::log(gls_at(lambda).sigma2) +
               log_jacobian(spec, lambda);
    };

    const auto opt = maximize_scalar(loglik_at, lo + detail::kBoundMargin,
                                     hi - detail::kBoundMargin, 1e-9);
    const double lambda = opt.x;
    const GlsStep step = gls_at(lambda);

    SpatialFit res;
    res.kind = SpatialModel::Error;
    res.n_obs = n;
    res.spatial_coef = lambda;
    res.beta = step.beta;
    res.sigma2 = step.sigma2;
    res.loglik = opt.value;
    res.bound_lo = lo;
    res.bound_hi = hi;
    res.boundary_warning = detail::near_boundary(lambda, lo, hi);

    // information matrix: beta block independent of (lambda, sigma2)
    const auto tt = detail::trace_terms(w, lambda);
    const double s2 = res.sigma2;
    const Eigen::MatrixXd ax = X - lambda * wx;
    const Eigen::MatrixXd cov_beta =
        s2 * (ax.transpose() * ax).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::Matrix2d info_ls;
    info_ls << tt.tr_sq + tt.tr_cross, tt.tr / s2, tt.tr / s2, n / (2.0 * s2 * s2);
    const Eigen::Matrix2d cov_ls = info_ls.inverse();

    res.beta_se.resize(k);
    res.beta_z.resize(k);
    res.beta_p.resize(k);
    for (int j = 0; j < k; ++j) {
        res.beta_se[j] = std::sqrt(cov_beta(j, j));
        res.beta_z[j] = res.beta(j) / res.beta_se[j];
        res.beta_p[j] = normal_two_sided(res.beta_z[j]);
    }
    res.spatial_se = std::sqrt(cov_ls(0, 0));
    res.spatial_z = lambda / res.spatial_se;
    res.spatial_p = normal_two_sided(res.spatial_z);

    const Eigen::VectorXd yhat = X * res.beta;
    res.pseudo_r2 = detail::pearson_corr_sq(yhat, y);

    const Eigen::VectorXd u = y - yhat;
    std::vector<double> uv(u.data(), u.data() + n);
    const Eigen::VectorXd xi = u - lambda * detail::to_vec(w.lag(uv));
    std::vector<double> xv(xi.data(), xi.data() + n);
    res.bp_spatial = breusch_pagan(xv, X);
    return res;
}

/// Concentrated log-likelihood on a caller grid; each point must lie
/// strictly inside the eigenvalue bounds.
inline std::vector<std::pair<double, double>> likelihood_profile(
    SpatialModel kind, const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
    const SpatialWeights& w, std::span<const double> grid) {
    const int n = static_cast<int>(y.size());
    const Spectrum& spec = eigen_bounds(w);
    const double lo = 1.0 / spec.omega_min;
    const double hi = 1.0 / spec.omega_max;
    for (double g : grid) {
        if (!(g > lo && g < hi)) {
            throw ParameterError("likelihood_profile: grid point " + std::to_string(g) +
                                 " outside bounds");
        }
    }
    const double const_term = -0.5 * n * (std::log(2.0 * M_PI) + 1.0);
    std::vector<std::pair<double, double>> out;
    out.reserve(grid.size());
    if (kind == SpatialModel::Lag) {
        std::vector<double> yv(y.data(), y.data() + n);
        const Eigen::VectorXd wy = detail::to_vec(w.lag(yv));
        const Eigen::VectorXd e0 = ols(y, X).residuals;
        const Eigen::VectorXd el = ols(wy, X).residuals;
        const double e00 = e0.squaredNorm(), e0l = e0.dot(el), ell = el.squaredNorm();
        for (double rho : grid) {
            const double s2 = (e00 - 2.0 * rho * e0l + rho * rho * ell) / n;
            out.emplace_back(rho, const_term - 0.5 * n * std::log(s2) +
                                      log_jacobian(spec, rho));
        }
    } else {
        const int k = static_cast<int>(X.cols());
        std::vector<double> yv(y.data(), y.data() + n);
        const Eigen::VectorXd wy = detail::to_vec(w.lag(yv));
        Eigen::MatrixXd wx(n, k);
        for (int j = 0; j < k; ++j) {
            std::vector<double> col(X.col(j).data(), X.col(j).data() + n);
            wx.col(j) = detail::to_vec(w.lag(col));
        }
        for (double lambda : grid) {
            const Eigen::MatrixXd ax = X - lambda * wx;
            const Eigen::VectorXd ay = y - lambda * wy;
            const Eigen::VectorXd beta = (ax.transpose() * ax).ldlt().solve(ax.transpose() * ay);
            const double s2 = (ay - ax * beta).squaredNorm() / n;
            out.emplace_back(lambda, const_term - 0.5 * n * std::log(s2) +
                                         log_jacobian(spec, lambda));
        }
    }
    return out;
}

}  // namespace verdoorn
