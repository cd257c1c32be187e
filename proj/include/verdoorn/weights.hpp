#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "verdoorn/errors.hpp"
#include "verdoorn/panel.hpp"

namespace verdoorn {

/// Great-circle radius used for latlon_deg coordinates.
inline constexpr double kEarthRadiusKm = 6371.0;

/// Distance in kilometers under the given metric: Euclidean for planar_km,
/// haversine for latlon_deg (x = latitude, y = longitude, degrees).
inline double distance_km(const Coordinate& a, const Coordinate& b, Metric metric) {
    if (metric == Metric::PlanarKm) {
        return std::hypot(a.x - b.x, a.y - b.y);
    }
    const double deg = 0.017453292519943295;  // pi / 180
    const double lat1 = a.x * deg, lat2 = b.x * deg;
    const double dlat = (b.x - a.x) * deg, dlon = (b.y - a.y) * deg;
    const double s1 = std::sin(0.5 * dlat), s2 = std::sin(0.5 * dlon);
    const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

struct Neighbor {
    int index = 0;
    double distance_km = 0.0;
    double weight = 0.0;  // row-standardized
};

/// Real spectrum of the row-standardized matrix, obtained from the similar
/// symmetric matrix D^{-1/2} B D^{-1/2}; islands contribute zero eigenvalues.
struct Spectrum {
    std::vector<double> eigenvalues;  // ascending
    double omega_min = 0.0;
    double omega_max = 0.0;
};

/// Distance-band spatial weights: symmetric binary adjacency within the
/// threshold plus the row-standardized form. Immutable once built; the
/// spectrum is computed on first use and shared afterwards.
class SpatialWeights {
public:
    double threshold_km = 0.0;
    std::vector<std::string> ordering;            // region ids, row order
    std::vector<std::vector<Neighbor>> rows;      // sorted by column index
    std::vector<int> islands;                     // rows with no neighbors
    std::vector<std::string> warnings;

    int n() const { return static_cast<int>(rows.size()); }
    int degree(int i) const { return static_cast<int>(rows[i].size()); }
    bool is_island(int i) const { return rows[i].empty(); }

    /// Sum of all standardized weights; equals the non-island row count.
    double s0() const {
        double sum = 0.0;
        for (const auto& row : rows)
            for (const auto& nb : row) sum += nb.weight;
        return sum;
    }

    /// Spatial lag of x: (Wx)_i = sum_j w_ij x_j. Islands get 0.
    std::vector<double> lag(std::span<const double> x) const {
        std::vector<double> out(rows.size(), 0.0);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            double acc = 0.0;
            for (const auto& nb : rows[i]) acc += nb.weight * x[nb.index];
            out[i] = acc;
        }
        return out;
    }

    // Spectrum cache, filled lazily by eigen_bounds() in spatial_ml.hpp.
    // Copies share the cache; the mutex guards the one-time computation.
    mutable std::shared_ptr<const Spectrum> spectrum_cache;
    std::shared_ptr<std::mutex> spectrum_mutex = std::make_shared<std::mutex>();
};

/// Recomputes standardized weights from the adjacency structure:
/// w*_ij = 1 / degree(i). Island rows stay all-zero.
inline void row_standardize(SpatialWeights& w) {
    w.islands.clear();
    for (int i = 0; i < w.n(); ++i) {
        if (w.rows[i].empty()) {
            w.islands.push_back(i);
            continue;
        }
        const double share = 1.0 / static_cast<double>(w.rows[i].size());
        for (auto& nb : w.rows[i]) nb.weight = share;
    }
}

/// Builds the binary distance-band adjacency (0 < d <= threshold, inclusive)
/// and row-standardizes it. Duplicate coordinates are flagged as warnings,
/// not errors; islands are recorded and kept.
inline SpatialWeights distance_band(const std::vector<Coordinate>& coords,
                                    const std::vector<std::string>& ordering,
                                    double threshold_km, Metric metric) {
    const int n = static_cast<int>(coords.size());
    if (n < 2) throw ParameterError("distance_band: need at least 2 regions");
    if (!(threshold_km > 0.0)) throw ParameterError("distance_band: threshold must be positive");
    if (!ordering.empty() && static_cast<int>(ordering.size()) != n) {
        throw ParameterError("distance_band: ordering/coords size mismatch");
    }

    SpatialWeights w;
    w.threshold_km = threshold_km;
    w.ordering = ordering;
    w.rows.assign(n, {});
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double d = distance_km(coords[i], coords[j], metric);
            if (d == 0.0) {
                const std::string a = ordering.empty() ? std::to_string(i) : ordering[i];
                const std::string b = ordering.empty() ? std::to_string(j) : ordering[j];
                w.warnings.push_back("duplicate coordinates for regions " + a + " and " + b);
            }
            if (d <= threshold_km) {
                w.rows[i].push_back({j, d, 0.0});
                w.rows[j].push_back({i, d, 0.0});
            }
        }
    }
    for (auto& row : w.rows) {
        std::sort(row.begin(), row.end(),
                  [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
    }
    row_standardize(w);
    return w;
}

/// Text export: header "n threshold_km", then one "i j w_ij" line per nonzero
/// (0-based, row-major), 17 significant digits. Round-trips bit-exactly.
inline void save_weights(const SpatialWeights& w, std::ostream& out) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%d %.17g\n", w.n(), w.threshold_km);
    out << buf;
    for (int i = 0; i < w.n(); ++i) {
        for (const auto& nb : w.rows[i]) {
            std::snprintf(buf, sizeof buf, "%d %d %.17g\n", i, nb.index, nb.weight);
            out << buf;
        }
    }
}

inline SpatialWeights load_weights(std::istream& in) {
    SpatialWeights w;
    int n = 0;
    if (!(in >> n >> w.threshold_km) || n <= 0) {
        throw SchemaError("weights: malformed header, expected 'n threshold_km'");
    }
    w.rows.assign(n, {});
    int i, j;
    double value;
    while (in >> i >> j >> value) {
        if (i < 0 || i >= n || j < 0 || j >= n || i == j) {
            throw SchemaError("weights: bad entry (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
        }
        w.rows[i].push_back({j, 0.0, value});
    }
    for (auto& row : w.rows) {
        std::sort(row.begin(), row.end(),
                  [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
    }
    for (int r = 0; r < n; ++r) {
        if (w.rows[r].empty()) w.islands.push_back(r);
    }
    return w;
}

}  // namespace verdoorn
