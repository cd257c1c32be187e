#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "verdoorn/errors.hpp"
#include "verdoorn/rng.hpp"
#include "verdoorn/weights.hpp"

namespace verdoorn {

struct PermutationSummary {
    int n_perm = 0;
    double pseudo_p = 1.0;
    double perm_mean = 0.0;
    double perm_sd = 0.0;
    std::uint64_t seed = 0;
};

struct MoranResult {
    double i = 0.0;         // the statistic
    double expected = 0.0;  // -1/(n-1)
    double z_norm = 0.0;    // deviate under the normality assumption
    std::optional<PermutationSummary> perm;
};

namespace detail {

inline void check_moran_input(std::span<const double> x, const SpatialWeights& w) {
    const int n = w.n();
    if (static_cast<int>(x.size()) != n) throw ParameterError("moran: x/W size mismatch");
    if (n < 3) throw ParameterError("moran: need at least 3 regions");
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*lo == *hi) throw DomainError("moran: x is constant, variance degenerate");
}

/// Numerator sum_i z_i (Wz)_i for centered z.
inline double moran_numerator(std::span<const double> z, const SpatialWeights& w) {
    double num = 0.0;
    for (int i = 0; i < w.n(); ++i) {
        double lag = 0.0;
        for (const auto& nb : w.rows[i]) lag += nb.weight * z[nb.index];
        num += z[i] * lag;
    }
    return num;
}

inline std::vector<double> centered(std::span<const double> x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    std::vector<double> z(x.begin(), x.end());
    for (double& v : z) v -= mean;
    return z;
}

/// Variance of I under the normality assumption (Cliff-Ord moments).
inline double moran_normal_variance(const SpatialWeights& w) {
    const int n = w.n();
    const double s0 = w.s0();
    double s1 = 0.0;
    std::vector<double> colsum(n, 0.0), rowsum(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (const auto& nb : w.rows[i]) {
            rowsum[i] += nb.weight;
            colsum[nb.index] += nb.weight;
            // transpose entry w_ji, if present
            const auto& back = w.rows[nb.index];
            double wji = 0.0;
            const auto it = std::lower_bound(
                back.begin(), back.end(), i,
                [](const Neighbor& a, int v) { return a.index < v; });
            if (it != back.end() && it->index == i) wji = it->weight;
            const double pair = nb.weight + wji;
            s1 += 0.5 * pair * pair;
        }
    }
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = rowsum[i] + colsum[i];
        s2 += t * t;
    }
    const double nn = static_cast<double>(n);
    const double e = -1.0 / (nn - 1.0);
    return (nn * nn * s1 - nn * s2 + 3.0 * s0 * s0) / ((nn * nn - 1.0) * s0 * s0) - e * e;
}

}  // namespace detail

/// Global Moran's I with the row-standardized weights:
/// I = (n / S0) * (z'Wz) / (z'z), z = x - mean(x).
inline MoranResult morans_i(std::span<const double> x, const SpatialWeights& w) {
    detail::check_moran_input(x, w);
    const int n = w.n();
    const std::vector<double> z = detail::centered(x);
    double denom = 0.0;
    for (double v : z) denom += v * v;
    const double s0 = w.s0();
    if (s0 <= 0.0) throw DomainError("moran: weight matrix has no links");
    MoranResult res;
    res.i = (static_cast<double>(n) / s0) * detail::moran_numerator(z, w) / denom;
    res.expected = -1.0 / (static_cast<double>(n) - 1.0);
    const double var = detail::moran_normal_variance(w);
    res.z_norm = var > 0.0 ? (res.i - res.expected) / std::sqrt(var) : 0.0;
    return res;
}

/// Permutation inference for Moran's I. x is reshuffled across all regions
/// n_perm times; the pseudo p-value is two-sided around E[I]:
/// (1 + #{|I_perm - E| >= |I_obs - E|}) / (1 + n_perm).
/// One RNG substream per permutation makes the result independent of
/// evaluation order.
inline MoranResult permutation_test(std::span<const double> x, const SpatialWeights& w,
                                    int n_perm, std::uint64_t seed) {
    if (n_perm < 99) throw ParameterError("permutation_test: n_perm must be >= 99");
    MoranResult res = morans_i(x, w);

    const int n = w.n();
    const double s0 = w.s0();
    std::vector<double> z = detail::centered(x);
    double denom = 0.0;
    for (double v : z) denom += v * v;
    const double scale = static_cast<double>(n) / (s0 * denom);

    const double obs_dev = std::abs(res.i - res.expected);
    long more_extreme = 0;
    double sum = 0.0, sumsq = 0.0;
    std::vector<double> shuffled = z;
    for (int k = 0; k < n_perm; ++k) {
        Rng rng(substream_seed(seed, static_cast<std::uint64_t>(k)));
        std::copy(z.begin(), z.end(), shuffled.begin());
        rng.shuffle(std::span<double>(shuffled));
        const double i_perm = scale * detail::moran_numerator(shuffled, w);
        if (std::abs(i_perm - res.expected) >= obs_dev) ++more_extreme;
        sum += i_perm;
        sumsq += i_perm * i_perm;
    }

    PermutationSummary perm;
    perm.n_perm = n_perm;
    perm.seed = seed;
    perm.pseudo_p = (1.0 + static_cast<double>(more_extreme)) / (1.0 + n_perm);
    perm.perm_mean = sum / n_perm;
    perm.perm_sd = n_perm > 1 ? std::sqrt(std::max(0.0, (sumsq - sum * sum / n_perm) /
                                                            (n_perm - 1.0)))
                              : 0.0;
    res.perm = perm;
    return res;
}

/// Moran scatterplot: standardized values against their spatial lags.
/// The least-squares slope through the cloud equals global I when W is
/// row-standardized with no islands.
struct MoranScatter {
    std::vector<double> z;    // population-standardized x
    std::vector<double> lag;  // Wz
    double slope = 0.0;
};

inline MoranScatter moran_scatter(std::span<const double> x, const SpatialWeights& w) {
    detail::check_moran_input(x, w);
    const int n = w.n();
    MoranScatter sc;
    sc.z = detail::centered(x);
    double ss = 0.0;
    for (double v : sc.z) ss += v * v;
    const double sd = std::sqrt(ss / n);
    for (double& v : sc.z) v /= sd;
    sc.lag = w.lag(sc.z);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        num += sc.z[i] * sc.lag[i];
        den += sc.z[i] * sc.z[i];
    }
    sc.slope = num / den;
    return sc;
}

}  // namespace verdoorn
