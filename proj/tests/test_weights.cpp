#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "verdoorn/rng.hpp"
#include "verdoorn/weights.hpp"

using namespace verdoorn;

namespace {

std::vector<std::string> ids(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back("R" + std::to_string(i));
    return out;
}

}  // namespace

TEST_CASE("planar distance") {
    CHECK(distance_km({0, 0}, {3, 4}, Metric::PlanarKm) == Catch::Approx(5.0).epsilon(1e-14));
    CHECK(distance_km({2, 2}, {2, 2}, Metric::PlanarKm) == 0.0);
}

TEST_CASE("haversine distance with R = 6371") {
    // one degree of longitude on the equator
    CHECK(distance_km({0, 0}, {0, 1}, Metric::LatLonDeg) ==
          Catch::Approx(111.19492664455873).epsilon(1e-10));
    CHECK(distance_km({40, -8}, {40, -8}, Metric::LatLonDeg) == 0.0);
    // symmetric
    CHECK(distance_km({38.7, -9.1}, {41.1, -8.6}, Metric::LatLonDeg) ==
          Catch::Approx(distance_km({41.1, -8.6}, {38.7, -9.1}, Metric::LatLonDeg)));
}

TEST_CASE("distance band on collinear points") {
    const std::vector<Coordinate> coords = {{0, 0}, {50, 0}, {100, 0}};
    const SpatialWeights w = distance_band(coords, ids(3), 97.0, Metric::PlanarKm);
    REQUIRE(w.n() == 3);
    CHECK(w.degree(0) == 1);
    CHECK(w.degree(1) == 2);
    CHECK(w.degree(2) == 1);
    CHECK(w.rows[0][0].index == 1);
    CHECK(w.rows[1][0].index == 0);
    CHECK(w.rows[1][1].index == 2);
    // middle row splits its weight
    CHECK(w.rows[1][0].weight == Catch::Approx(0.5));
    CHECK(w.rows[1][1].weight == Catch::Approx(0.5));
    // degree-1 rows carry weight 1
    CHECK(w.rows[0][0].weight == Catch::Approx(1.0));
    CHECK(w.islands.empty());
}

TEST_CASE("threshold is inclusive") {
    const std::vector<Coordinate> coords = {{0, 0}, {97, 0}};
    const SpatialWeights w = distance_band(coords, ids(2), 97.0, Metric::PlanarKm);
    CHECK(w.degree(0) == 1);
    CHECK(w.degree(1) == 1);
}

TEST_CASE("far point becomes an island") {
    const std::vector<Coordinate> coords = {{0, 0}, {50, 0}, {500, 0}};
    const SpatialWeights w = distance_band(coords, ids(3), 97.0, Metric::PlanarKm);
    REQUIRE(w.islands.size() == 1);
    CHECK(w.islands[0] == 2);
    CHECK(w.is_island(2));
    CHECK(w.rows[2].empty());
    CHECK(w.s0() == Catch::Approx(2.0));  // two non-island rows
}

TEST_CASE("duplicate coordinates warn and link the pair") {
    const std::vector<Coordinate> coords = {{0, 0}, {0, 0}, {50, 0}};
    const SpatialWeights w = distance_band(coords, ids(3), 97.0, Metric::PlanarKm);
    CHECK_FALSE(w.warnings.empty());
    // distance 0 between distinct regions still counts as a link
    CHECK(w.rows[0][0].index == 1);
    CHECK(w.rows[0][0].distance_km == 0.0);
}

TEST_CASE("binary adjacency is symmetric and off-diagonal") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 5 + static_cast<int>(rng.below(20));
        std::vector<Coordinate> coords;
        for (int i = 0; i < n; ++i)
            coords.push_back({200.0 * rng.uniform(), 200.0 * rng.uniform()});
        const SpatialWeights w = distance_band(coords, ids(n), 80.0, Metric::PlanarKm);
        for (int i = 0; i < n; ++i) {
            for (const auto& nb : w.rows[i]) {
                CHECK(nb.index != i);
                bool found = false;
                for (const auto& back : w.rows[nb.index]) {
                    if (back.index == i) found = true;
                }
                CHECK(found);
            }
        }
    }
}

TEST_CASE("standardized rows sum to one or zero") {
    Rng rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 4 + static_cast<int>(rng.below(30));
        std::vector<Coordinate> coords;
        for (int i = 0; i < n; ++i)
            coords.push_back({300.0 * rng.uniform(), 300.0 * rng.uniform()});
        const SpatialWeights w = distance_band(coords, ids(n), 60.0, Metric::PlanarKm);
        for (int i = 0; i < n; ++i) {
            double sum = 0.0;
            for (const auto& nb : w.rows[i]) sum += nb.weight;
            if (w.is_island(i)) {
                CHECK(sum == 0.0);
            } else {
                CHECK(std::abs(sum - 1.0) <= 1e-12);
            }
        }
    }
}

TEST_CASE("raising the threshold never removes a pair") {
    Rng rng(33);
    std::vector<Coordinate> coords;
    for (int i = 0; i < 25; ++i)
        coords.push_back({400.0 * rng.uniform(), 400.0 * rng.uniform()});
    const SpatialWeights small = distance_band(coords, ids(25), 70.0, Metric::PlanarKm);
    const SpatialWeights big = distance_band(coords, ids(25), 140.0, Metric::PlanarKm);
    for (int i = 0; i < 25; ++i) {
        for (const auto& nb : small.rows[i]) {
            bool kept = false;
            for (const auto& other : big.rows[i]) {
                if (other.index == nb.index) kept = true;
            }
            CHECK(kept);
        }
    }
}

TEST_CASE("lag of constant ones is one on non-islands") {
    const std::vector<Coordinate> coords = {{0, 0}, {10, 0}, {20, 0}, {500, 500}};
    const SpatialWeights w = distance_band(coords, ids(4), 97.0, Metric::PlanarKm);
    const std::vector<double> ones(4, 1.0);
    const std::vector<double> lag = w.lag(ones);
    CHECK(lag[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(lag[1] == Catch::Approx(1.0).margin(1e-12));
    CHECK(lag[2] == Catch::Approx(1.0).margin(1e-12));
    CHECK(lag[3] == 0.0);  // island
}

TEST_CASE("weights export round-trips bit-exactly") {
    Rng rng(34);
    std::vector<Coordinate> coords;
    for (int i = 0; i < 17; ++i)
        coords.push_back({250.0 * rng.uniform(), 250.0 * rng.uniform()});
    const SpatialWeights w = distance_band(coords, ids(17), 90.0, Metric::PlanarKm);

    std::ostringstream out;
    save_weights(w, out);
    std::istringstream in(out.str());
    const SpatialWeights back = load_weights(in);

    REQUIRE(back.n() == w.n());
    CHECK(back.threshold_km == w.threshold_km);
    CHECK(back.islands == w.islands);
    for (int i = 0; i < w.n(); ++i) {
        REQUIRE(back.rows[i].size() == w.rows[i].size());
        for (std::size_t j = 0; j < w.rows[i].size(); ++j) {
            CHECK(back.rows[i][j].index == w.rows[i][j].index);
            CHECK(back.rows[i][j].weight == w.rows[i][j].weight);  // bit-exact
        }
    }

    std::ostringstream again;
    save_weights(back, again);
    CHECK(again.str() == out.str());
}

TEST_CASE("degenerate construction inputs") {
    CHECK_THROWS_AS(distance_band({{0, 0}}, ids(1), 97.0, Metric::PlanarKm), ParameterError);
    CHECK_THROWS_AS(distance_band({{0, 0}, {1, 1}}, ids(2), -5.0, Metric::PlanarKm),
                    ParameterError);
    std::istringstream bad("not a header");
    CHECK_THROWS_AS(load_weights(bad), SchemaError);
}
