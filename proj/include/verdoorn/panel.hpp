#pragma once

#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "verdoorn/csv.hpp"
#include "verdoorn/errors.hpp"

namespace verdoorn {

enum class Sector { Agriculture = 0, Industry = 1, Services = 2, Total = 3 };

inline constexpr std::array<Sector, 4> kAllSectors = {Sector::Agriculture, Sector::Industry,
                                                      Sector::Services, Sector::Total};

inline const char* sector_name(Sector s) {
    switch (s) {
        case Sector::Agriculture: return "agriculture";
        case Sector::Industry: return "industry";
        case Sector::Services: return "services";
        case Sector::Total: return "total";
    }
    return "unknown";
}

inline std::optional<Sector> parse_sector(const std::string& raw) {
    const std::string s = csv::lower(csv::trim(raw));
    if (s == "agriculture") return Sector::Agriculture;
    if (s == "industry") return Sector::Industry;
    if (s == "services") return Sector::Services;
    if (s == "total" || s == "total of sectors" || s == "all sectors") return Sector::Total;
    return std::nullopt;
}

enum class Metric { PlanarKm, LatLonDeg };

inline std::optional<Metric> parse_metric(const std::string& raw) {
    const std::string s = csv::lower(csv::trim(raw));
    if (s == "planar_km") return Metric::PlanarKm;
    if (s == "latlon_deg") return Metric::LatLonDeg;
    return std::nullopt;
}

inline const char* metric_name(Metric m) {
    return m == Metric::PlanarKm ? "planar_km" : "latlon_deg";
}

/// Planar (x, y) in kilometers, or (lat, lon) in degrees when the metric
/// is LatLonDeg. x carries latitude in that case.
struct Coordinate {
    double x = 0.0;
    double y = 0.0;
};

struct Observation {
    double output = 0.0;
    double employment = 0.0;
};

/// Column mapping for load_panel; values are header names.
struct PanelSchema {
    std::string region = "region";
    std::string sector = "sector";
    std::string year = "year";
    std::string output = "output";
    std::string employment = "employment";
};

/// Balanced long-form panel. Region ordering is frozen to first appearance
/// in the input and shared by every downstream vector and matrix.
class RegionalPanel {
public:
    std::vector<std::string> regions;
    std::vector<Sector> sectors_in_data;  // as found in the file
    int start_year = 0;
    int end_year = 0;
    bool total_synthesized = false;

    std::vector<Coordinate> coords;  // aligned to regions; empty until attach_coords
    Metric metric = Metric::PlanarKm;

    int n() const { return static_cast<int>(regions.size()); }
    int years() const { return end_year - start_year + 1; }

    const Observation& at(int region, Sector sector, int year) const {
        return cells_[index(region, sector, year)];
    }

    std::optional<int> region_index(const std::string& id) const {
        const auto it = region_lookup_.find(id);
        if (it == region_lookup_.end()) return std::nullopt;
        return it->second;
    }

    friend RegionalPanel load_panel(std::istream&, const PanelSchema&);

private:
    std::size_t index(int region, Sector sector, int year) const {
        return (static_cast<std::size_t>(region) * 4 + static_cast<std::size_t>(sector)) *
                   static_cast<std::size_t>(years()) +
               static_cast<std::size_t>(year - start_year);
    }

    std::vector<Observation> cells_;
    std::map<std::string, int> region_lookup_;
};

/// Parses the long-form panel, validates it, and freezes the region order.
/// Sector "total" is synthesized by summing output and employment across
/// the sectors present when the data does not carry it.
inline RegionalPanel load_panel(std::istream& in, const PanelSchema& schema = {}) {
    const csv::Table table = csv::read_table(in, "panel");
    struct Cols {
        std::size_t region, sector, year, output, employment;
    } cols{};
    auto need = [&](const std::string& name) {
        const auto idx = table.column(name);
        if (!idx) throw SchemaError("panel: missing column '" + name + "'");
        return *idx;
    };
    cols.region = need(schema.region);
    cols.sector = need(schema.sector);
    cols.year = need(schema.year);
    cols.output = need(schema.output);
    cols.employment = need(schema.employment);

    if (table.rows.empty()) throw SchemaError("panel: no data rows");

    RegionalPanel panel;
    struct RawObs {
        Observation obs;
        std::size_t line;
    };
    std::map<std::tuple<int, Sector, int>, RawObs> raw;
    bool saw_total = false;
    int year_min = 0, year_max = 0;
    bool first_year = true;

    for (const auto& row : table.rows) {
        if (row.fields.size() <= std::max({cols.region, cols.sector, cols.year, cols.output,
                                           cols.employment})) {
            throw SchemaError("panel: too few fields at line " + std::to_string(row.line));
        }
        const std::string region_id = row.fields[cols.region];
        if (region_id.empty())
            throw SchemaError("panel: empty region id at line " + std::to_string(row.line));
        const auto sector = parse_sector(row.fields[cols.sector]);
        if (!sector) {
            throw SchemaError("panel: unknown sector '" + row.fields[cols.sector] +
                              "' at line " + std::to_string(row.line));
        }
        const int year = csv::parse_int(row.fields[cols.year], "panel", row.line);
        Observation obs;
        obs.output = csv::parse_double(row.fields[cols.output], "panel", row.line);
        obs.employment = csv::parse_double(row.fields[cols.employment], "panel", row.line);
        if (obs.employment <= 0.0) {
            throw DomainError("panel: non-positive employment at line " +
                              std::to_string(row.line));
        }

        int region_idx;
        if (const auto existing = panel.region_index(region_id)) {
            region_idx = *existing;
        } else {
            region_idx = panel.n();
            panel.regions.push_back(region_id);
            panel.region_lookup_[region_id] = region_idx;
        }
        if (*sector == Sector::Total) saw_total = true;

        const auto key = std::make_tuple(region_idx, *sector, year);
        if (const auto it = raw.find(key); it != raw.end()) {
            throw IntegrityError("panel: duplicate (region, sector, year) = (" + region_id +
                                 ", " + sector_name(*sector) + ", " + std::to_string(year) +
                                 ") at line " + std::to_string(row.line) + ", first seen at line " +
                                 std::to_string(it->second.line));
        }
        raw[key] = {obs, row.line};

        if (first_year) {
            year_min = year_max = year;
            first_year = false;
        } else {
            year_min = std::min(year_min, year);
            year_max = std::max(year_max, year);
        }
    }

    panel.start_year = year_min;
    panel.end_year = year_max;

    // Which sectors does the file carry?
    std::array<bool, 4> present{};
    for (const auto& [key, value] : raw) present[static_cast<int>(std::get<1>(key))] = true;
    for (Sector s : kAllSectors) {
        if (present[static_cast<int>(s)]) panel.sectors_in_data.push_back(s);
    }

    // Fill the dense cube, checking the balanced-coverage invariant.
    const int ny = panel.years();
    panel.cells_.assign(static_cast<std::size_t>(panel.n()) * 4 * ny, Observation{});
    for (int r = 0; r < panel.n(); ++r) {
        for (Sector s : panel.sectors_in_data) {
            for (int y = year_min; y <= year_max; ++y) {
                const auto it = raw.find(std::make_tuple(r, s, y));
                if (it == raw.end()) {
                    throw IntegrityError("panel: (" + panel.regions[r] + ", " + sector_name(s) +
                                         ") is missing year " + std::to_string(y));
                }
                panel.cells_[panel.index(r, s, y)] = it->second.obs;
            }
        }
    }

    // Aggregate total = sum of outputs over sum of workers, not a mean of ratios.
    if (!saw_total) {
        panel.total_synthesized = true;
        for (int r = 0; r < panel.n(); ++r) {
            for (int y = year_min; y <= year_max; ++y) {
                Observation sum;
                for (Sector s : panel.sectors_in_data) {
                    const Observation& o = panel.cells_[panel.index(r, s, y)];
                    sum.output += o.output;
                    sum.employment += o.employment;
                }
                panel.cells_[panel.index(r, Sector::Total, y)] = sum;
            }
        }
    }

    return panel;
}

/// Reads coords.csv (region,x,y,metric) and aligns it to the panel ordering.
inline void attach_coords(RegionalPanel& panel, std::istream& in) {
    const csv::Table table = csv::read_table(in, "coords");
    auto need = [&](const std::string& name) {
        const auto idx = table.column(name);
        if (!idx) throw SchemaError("coords: missing column '" + name + "'");
        return *idx;
    };
    const std::size_t c_region = need("region");
    const std::size_t c_x = need("x");
    const std::size_t c_y = need("y");
    const std::size_t c_metric = need("metric");

    std::vector<Coordinate> coords(panel.n());
    std::vector<bool> seen(panel.n(), false);
    std::optional<Metric> metric;
    for (const auto& row : table.rows) {
        if (row.fields.size() <= std::max({c_region, c_x, c_y, c_metric})) {
            throw SchemaError("coords: too few fields at line " + std::to_string(row.line));
        }
        const auto region = panel.region_index(row.fields[c_region]);
        if (!region) {
            throw IntegrityError("coords: unknown region '" + row.fields[c_region] +
                                 "' at line " + std::to_string(row.line));
        }
        if (seen[*region]) {
            throw IntegrityError("coords: duplicate region '" + row.fields[c_region] +
                                 "' at line " + std::to_string(row.line));
        }
        const auto m = parse_metric(row.fields[c_metric]);
        if (!m) {
            throw SchemaError("coords: metric must be planar_km or latlon_deg at line " +
                              std::to_string(row.line));
        }
        if (metric && *metric != *m) {
            throw DomainError("coords: mixed metrics at line " + std::to_string(row.line));
        }
        metric = *m;
        coords[*region] = {csv::parse_double(row.fields[c_x], "coords", row.line),
                           csv::parse_double(row.fields[c_y], "coords", row.line)};
        seen[*region] = true;
    }
    for (int r = 0; r < panel.n(); ++r) {
        if (!seen[r]) throw IntegrityError("coords: no coordinates for region '" +
                                           panel.regions[r] + "'");
    }
    panel.coords = std::move(coords);
    panel.metric = metric.value_or(Metric::PlanarKm);
}

/// Productivity level = output per worker.
inline double productivity(const Observation& obs) {
    if (obs.employment <= 0.0) throw DomainError("productivity: employment must be positive");
    return obs.output / obs.employment;
}

/// Compound annualized growth over the endpoints of a level series:
/// (ln s_last - ln s_first) / span. All levels must be positive.
inline double avg_growth(std::span<const double> series, int span_years) {
    if (series.size() < 2) throw DomainError("avg_growth: need at least 2 level values");
    if (span_years <= 0) throw DomainError("avg_growth: span must be positive");
    for (double v : series) {
        if (!(v > 0.0)) throw DomainError("avg_growth: levels must be positive for log growth");
    }
    return (std::log(series.back()) - std::log(series.front())) / span_years;
}

/// Period-average growth of productivity (p) and output (q), region-aligned.
struct GrowthVector {
    Sector sector = Sector::Total;
    int start_year = 0;
    int end_year = 0;
    std::vector<std::string> ordering;  // echo of the panel ordering
    std::vector<double> p;
    std::vector<double> q;
};

inline GrowthVector build_growth_vectors(const RegionalPanel& panel, Sector sector,
                                         int start_year, int end_year) {
    if (start_year < panel.start_year || end_year > panel.end_year || start_year >= end_year) {
        throw ParameterError("growth: period " + std::to_string(start_year) + "-" +
                             std::to_string(end_year) + " outside panel coverage " +
                             std::to_string(panel.start_year) + "-" +
                             std::to_string(panel.end_year));
    }
    GrowthVector gv;
    gv.sector = sector;
    gv.start_year = start_year;
    gv.end_year = end_year;
    gv.ordering = panel.regions;
    const int span = end_year - start_year;
    gv.p.resize(panel.n());
    gv.q.resize(panel.n());
    for (int r = 0; r < panel.n(); ++r) {
        std::vector<double> prod, out;
        for (int y = start_year; y <= end_year; ++y) {
            const Observation& obs = panel.at(r, sector, y);
            out.push_back(obs.output);
            prod.push_back(productivity(obs));
        }
        try {
            gv.p[r] = avg_growth(prod, span);
            gv.q[r] = avg_growth(out, span);
        } catch (const DomainError& e) {
            throw DomainError(std::string(e.what()) + " [region " + panel.regions[r] +
                              ", sector " + sector_name(sector) + "]");
        }
    }
    return gv;
}

}  // namespace verdoorn
