#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "oracles.hpp"
#include "test_helpers.hpp"
#include "verdoorn/moran.hpp"

using namespace verdoorn;

TEST_CASE("alternating 4-ring has I = -1 exactly") {
    const SpatialWeights w = testutil::ring(4);
    const std::vector<double> x = testutil::alternating(4);
    const MoranResult res = morans_i(x, w);
    CHECK(std::abs(res.i - (-1.0)) <= 1e-12);
    CHECK(res.expected == Catch::Approx(-1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("constant input is a degenerate-variance error") {
    const SpatialWeights w = testutil::ring(5);
    const std::vector<double> x(5, 2.5);
    CHECK_THROWS_AS(morans_i(x, w), DomainError);
}

TEST_CASE("sparse statistic matches the dense triple product") {
    Rng rng(101);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 6 + static_cast<int>(rng.below(24));
        const SpatialWeights w = testutil::random_maybe_island(rng, n);
        if (w.s0() <= 0.0) continue;
        const std::vector<double> x = testutil::random_values(rng, n);
        const MoranResult res = morans_i(x, w);
        const double dense = static_cast<double>(oracle::moran_dense(x, w));
        CHECK(std::abs(res.i - dense) <= 1e-12);
    }
}

TEST_CASE("affine transforms leave I unchanged") {
    Rng rng(102);
    const SpatialWeights w = testutil::random_no_island(rng, 20);
    const std::vector<double> x = testutil::random_values(rng, 20);
    const double base = morans_i(x, w).i;
    for (int trial = 0; trial < 20; ++trial) {
        const double a = 4.0 * rng.normal();
        double b = 0.0;
        while (b == 0.0) b = 2.0 * rng.normal();
        std::vector<double> y = x;
        for (double& v : y) v = a + b * v;
        CHECK(morans_i(y, w).i == Catch::Approx(base).margin(1e-10));
    }
}

TEST_CASE("scatter slope equals I on row-standardized no-island weights") {
    Rng rng(103);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 8 + static_cast<int>(rng.below(30));
        const SpatialWeights w = testutil::random_no_island(rng, n);
        const std::vector<double> x = testutil::random_values(rng, n);
        const MoranScatter sc = moran_scatter(x, w);
        CHECK(std::abs(sc.slope - morans_i(x, w).i) <= 1e-10);
    }
}

TEST_CASE("scatter standardization is idempotent") {
    Rng rng(104);
    const SpatialWeights w = testutil::random_no_island(rng, 15);
    std::vector<double> x = testutil::random_values(rng, 15);
    const MoranScatter first = moran_scatter(x, w);
    const MoranScatter second = moran_scatter(first.z, w);
    for (int i = 0; i < 15; ++i) {
        CHECK(second.z[i] == Catch::Approx(first.z[i]).margin(1e-12));
        CHECK(second.lag[i] == Catch::Approx(first.lag[i]).margin(1e-12));
    }
    CHECK(second.slope == Catch::Approx(first.slope).margin(1e-12));
}

TEST_CASE("alternating ring scatter lies on lag = -z") {
    const SpatialWeights w = testutil::ring(4);
    const MoranScatter sc = moran_scatter(testutil::alternating(4), w);
    for (int i = 0; i < 4; ++i) CHECK(sc.lag[i] == Catch::Approx(-sc.z[i]).margin(1e-12));
    CHECK(sc.slope == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("permutation test is deterministic for a fixed seed") {
    Rng rng(105);
    const SpatialWeights w = testutil::random_no_island(rng, 18);
    const std::vector<double> x = testutil::random_values(rng, 18);
    const MoranResult a = permutation_test(x, w, 999, 42);
    const MoranResult b = permutation_test(x, w, 999, 42);
    REQUIRE(a.perm.has_value());
    REQUIRE(b.perm.has_value());
    CHECK(a.i == b.i);
    CHECK(a.perm->pseudo_p == b.perm->pseudo_p);
    CHECK(a.perm->perm_mean == b.perm->perm_mean);
    CHECK(a.perm->perm_sd == b.perm->perm_sd);
}

TEST_CASE("permutation count below 99 is rejected") {
    const SpatialWeights w = testutil::ring(6);
    CHECK_THROWS_AS(permutation_test(testutil::alternating(6), w, 50, 1), ParameterError);
}

TEST_CASE("alternating 12-ring is extreme under permutation") {
    const SpatialWeights w = testutil::ring(12);
    const MoranResult res = permutation_test(testutil::alternating(12), w, 999, 7);
    REQUIRE(res.perm.has_value());
    CHECK(res.i == Catch::Approx(-1.0).margin(1e-12));
    CHECK(res.perm->pseudo_p <= 0.05);
}

TEST_CASE("permutation mean approximates -1/(n-1)") {
    Rng rng(106);
    const int n = 28;
    const SpatialWeights w = testutil::random_no_island(rng, n);
    const std::vector<double> x = testutil::random_values(rng, n);
    const MoranResult res = permutation_test(x, w, 4999, 11);
    REQUIRE(res.perm.has_value());
    const double expected = -1.0 / (n - 1);
    const double se = res.perm->perm_sd / std::sqrt(4999.0);
    CHECK(std::abs(res.perm->perm_mean - expected) <= 3.0 * se);
}

TEST_CASE("sampled pseudo-p converges to the exhaustive enumeration") {
    Rng rng(107);
    const int n = 6;
    const SpatialWeights w = testutil::ring(n);
    const std::vector<double> x = {1.4, -0.2, 0.7, -1.1, 0.4, 2.2};
    const double exact = oracle::moran_pseudo_p_exhaustive(x, w);
    const MoranResult res = permutation_test(x, w, 9999, 3);
    REQUIRE(res.perm.has_value());
    // sampled estimator has (1 + count)/(1 + m) bias of order 1/m plus noise
    const double se = std::sqrt(exact * (1.0 - exact) / 9999.0);
    CHECK(std::abs(res.perm->pseudo_p - exact) <= 4.0 * se + 2e-4);
}

TEST_CASE("exhaustive pseudo-p is invariant to joint relabeling") {
    Rng rng(108);
    const int n = 6;
    const SpatialWeights w = testutil::random_no_island(rng, n);
    const std::vector<double> x = testutil::random_values(rng, n);

    // relabel regions with a fixed permutation pi
    const std::vector<int> pi = {3, 0, 4, 1, 5, 2};
    SpatialWeights wp;
    wp.threshold_km = w.threshold_km;
    wp.rows.resize(n);
    std::vector<double> xp(n);
    for (int i = 0; i < n; ++i) {
        xp[pi[i]] = x[i];
        for (const auto& nb : w.rows[i]) wp.rows[pi[i]].push_back({pi[nb.index], 1.0, 0.0});
    }
    for (auto& row : wp.rows) {
        std::sort(row.begin(), row.end(),
                  [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
    }
    row_standardize(wp);

    CHECK(morans_i(x, w).i == Catch::Approx(morans_i(xp, wp).i).margin(1e-12));
    CHECK(oracle::moran_pseudo_p_exhaustive(x, w) ==
          Catch::Approx(oracle::moran_pseudo_p_exhaustive(xp, wp)).margin(1e-12));
}

TEST_CASE("normality deviate is finite and centered") {
    Rng rng(109);
    const SpatialWeights w = testutil::random_no_island(rng, 22);
    const std::vector<double> x = testutil::random_values(rng, 22);
    const MoranResult res = morans_i(x, w);
    CHECK(std::isfinite(res.z_norm));
    // same sign as the centered statistic
    CHECK((res.i - res.expected > 0) == (res.z_norm > 0));
}
