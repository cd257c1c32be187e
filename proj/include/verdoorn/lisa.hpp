#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "verdoorn/errors.hpp"
#include "verdoorn/moran.hpp"
#include "verdoorn/rng.hpp"
#include "verdoorn/weights.hpp"

namespace verdoorn {

enum class Cluster { HH, LL, HL, LH, NS, Island };

inline const char* cluster_name(Cluster c) {
    switch (c) {
        case Cluster::HH: return "HH";
        case Cluster::LL: return "LL";
        case Cluster::HL: return "HL";
        case Cluster::LH: return "LH";
        case Cluster::NS: return "NS";
        case Cluster::Island: return "ISLAND";
    }
    return "NS";
}

/// Quadrant rule for a non-island region. Significance first; a value
/// sitting exactly on an axis (z or lag equal to 0) stays NS so the
/// labeling is deterministic.
inline Cluster classify(double z, double lag, double pseudo_p, double alpha) {
    if (pseudo_p > alpha) return Cluster::NS;
    if (z == 0.0 || lag == 0.0) return Cluster::NS;
    if (z > 0.0) return lag > 0.0 ? Cluster::HH : Cluster::HL;
    return lag < 0.0 ? Cluster::LL : Cluster::LH;
}

/// Local Moran statistics I_i = z_i * (Wz)_i with z standardized by the
/// population standard deviation, so sum_i I_i = n * I_global when the
/// row-standardized matrix has no islands.
inline std::vector<double> local_moran(std::span<const double> x, const SpatialWeights& w) {
    detail::check_moran_input(x, w);
    std::vector<double> z = detail::centered(x);
    double ss = 0.0;
    for (double v : z) ss += v * v;
    const double sd = std::sqrt(ss / w.n());
    for (double& v : z) v /= sd;
    std::vector<double> out(w.n(), 0.0);
    for (int i = 0; i < w.n(); ++i) {
        double lag = 0.0;
        for (const auto& nb : w.rows[i]) lag += nb.weight * z[nb.index];
        out[i] = z[i] * lag;
    }
    return out;
}

struct LisaResult {
    double alpha = 0.05;
    int n_perm = 0;
    std::uint64_t seed = 0;
    std::vector<double> z;        // standardized values
    std::vector<double> lag;      // spatial lag of z
    std::vector<double> local_i;  // I_i
    std::vector<double> pseudo_p;
    std::vector<Cluster> cluster;
};

/// Conditional-permutation LISA: z_i stays in place while the other n-1
/// values are reshuffled over its neighbor slots. Two-sided pseudo-p around
/// the conditional null mean E[I_i] = -z_i^2 * rowsum_i / (n-1). Island
/// regions get pseudo_p = 1 and the ISLAND label.
inline LisaResult lisa(std::span<const double> x, const SpatialWeights& w, double alpha,
                       int n_perm, std::uint64_t seed) {
    if (n_perm < 99) throw ParameterError("lisa: n_perm must be >= 99");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("lisa: alpha must be in (0,1)");
    detail::check_moran_input(x, w);

    const int n = w.n();
    LisaResult res;
    res.alpha = alpha;
    res.n_perm = n_perm;
    res.seed = seed;

    res.z = detail::centered(x);
    double ss = 0.0;
    for (double v : res.z) ss += v * v;
    const double sd = std::sqrt(ss / n);
    for (double& v : res.z) v /= sd;
    res.lag = w.lag(res.z);
    res.local_i.resize(n);
    res.pseudo_p.assign(n, 1.0);
    res.cluster.assign(n, Cluster::NS);

    std::vector<int> pool;
    pool.reserve(n - 1);
    std::vector<int> swaps;
    for (int i = 0; i < n; ++i) {
        res.local_i[i] = res.z[i] * res.lag[i];
        if (w.is_island(i)) {
            res.pseudo_p[i] = 1.0;
            res.cluster[i] = Cluster::Island;
            continue;
        }

        double rowsum = 0.0;
        for (const auto& nb : w.rows[i]) rowsum += nb.weight;
        const double center = -res.z[i] * res.z[i] * rowsum / (n - 1.0);
        const double obs_dev = std::abs(res.local_i[i] - center);

        pool.clear();
        for (int j = 0; j < n; ++j) {
            if (j != i) pool.push_back(j);
        }
        const int k = w.degree(i);
        const std::uint64_t region_seed = substream_seed(seed, static_cast<std::uint64_t>(i));
        long more_extreme = 0;
        swaps.resize(k);
        for (int rep = 0; rep < n_perm; ++rep) {
            Rng rng(substream_seed(region_seed, static_cast<std::uint64_t>(rep)));
            // partial Fisher-Yates: draw k values, compute the lag, undo
            double lag_perm = 0.0;
            for (int t = 0; t < k; ++t) {
                const int r = t + static_cast<int>(rng.below(static_cast<std::uint64_t>(
                                  pool.size() - static_cast<std::size_t>(t))));
                std::swap(pool[t], pool[r]);
                swaps[t] = r;
                lag_perm += w.rows[i][t].weight * res.z[pool[t]];
            }
            for (int t = k - 1; t >= 0; --t) std::swap(pool[t], pool[swaps[t]]);
            const double i_perm = res.z[i] * lag_perm;
            if (std::abs(i_perm - center) >= obs_dev) ++more_extreme;
        }
        res.pseudo_p[i] = (1.0 + static_cast<double>(more_extreme)) / (1.0 + n_perm);
        res.cluster[i] = classify(res.z[i], res.lag[i], res.pseudo_p[i], alpha);
    }
    return res;
}

}  // namespace verdoorn
