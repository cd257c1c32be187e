#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <sstream>

#include "verdoorn/panel.hpp"
#include "verdoorn/rng.hpp"

using namespace verdoorn;

namespace {

std::string toy_panel_csv() {
    std::ostringstream out;
    out << "region,sector,year,output,employment\n";
    for (const char* region : {"A", "B"}) {
        for (const char* sector : {"agriculture", "industry", "services"}) {
            for (int year = 2000; year <= 2002; ++year) {
                const double base = region[0] == 'A' ? 100.0 : 80.0;
                // output doubles over the two years, employment fixed
                const double out_level = base * std::pow(2.0, (year - 2000) / 2.0);
                out << region << ',' << sector << ',' << year << ',' << out_level << ",10\n";
            }
        }
    }
    return out.str();
}

}  // namespace

TEST_CASE("load_panel parses and freezes region order") {
    std::istringstream in(toy_panel_csv());
    const RegionalPanel panel = load_panel(in);
    REQUIRE(panel.n() == 2);
    CHECK(panel.regions[0] == "A");
    CHECK(panel.regions[1] == "B");
    CHECK(panel.start_year == 2000);
    CHECK(panel.end_year == 2002);
    CHECK(panel.total_synthesized);
    CHECK(panel.at(0, Sector::Agriculture, 2000).output == Catch::Approx(100.0));
    // synthesized total sums output and employment across sectors
    CHECK(panel.at(0, Sector::Total, 2000).output == Catch::Approx(300.0));
    CHECK(panel.at(0, Sector::Total, 2000).employment == Catch::Approx(30.0));
}

TEST_CASE("empty stream is a schema error") {
    std::istringstream in("");
    CHECK_THROWS_AS(load_panel(in), SchemaError);
}

TEST_CASE("missing column is a schema error") {
    std::istringstream in("region,sector,year,output\nA,industry,2000,5\n");
    CHECK_THROWS_AS(load_panel(in), SchemaError);
}

TEST_CASE("duplicate key is an integrity error") {
    std::istringstream in(
        "region,sector,year,output,employment\n"
        "A,industry,2000,5,1\n"
        "A,industry,2000,6,1\n");
    CHECK_THROWS_AS(load_panel(in), IntegrityError);
}

TEST_CASE("coverage gap is an integrity error") {
    std::istringstream in(
        "region,sector,year,output,employment\n"
        "A,industry,2000,5,1\n"
        "A,industry,2002,6,1\n");
    CHECK_THROWS_AS(load_panel(in), IntegrityError);
}

TEST_CASE("non-positive employment names the row") {
    std::istringstream in(
        "region,sector,year,output,employment\n"
        "A,industry,2000,5,0\n");
    try {
        load_panel(in);
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("tab-delimited input is accepted") {
    std::istringstream in(
        "region\tsector\tyear\toutput\temployment\n"
        "A\tindustry\t2000\t5\t1\n"
        "A\tindustry\t2001\t6\t1\n");
    const RegionalPanel panel = load_panel(in);
    CHECK(panel.n() == 1);
    CHECK(panel.at(0, Sector::Industry, 2001).output == Catch::Approx(6.0));
}

TEST_CASE("productivity is output per worker") {
    CHECK(productivity({100.0, 4.0}) == Catch::Approx(25.0));
    CHECK(productivity({0.0, 5.0}) == 0.0);
    CHECK(productivity({121.0, 11.0}) == Catch::Approx(11.0));
    CHECK_THROWS_AS(productivity({1.0, 0.0}), DomainError);
}

TEST_CASE("avg_growth is the endpoint log difference per year") {
    const double series_a[] = {50.0, 50.0, 50.0};
    CHECK(avg_growth(series_a, 2) == 0.0);
    const double series_b[] = {100.0, 200.0};
    CHECK(avg_growth(series_b, 1) == Catch::Approx(std::log(2.0)).epsilon(1e-12));
    const double series_c[] = {100.0, 110.0, 121.0};
    CHECK(avg_growth(series_c, 2) == Catch::Approx(std::log(1.21) / 2.0).epsilon(1e-12));
    CHECK(avg_growth(series_c, 2) == Catch::Approx(0.095310179804325).epsilon(1e-10));

    const double one[] = {3.0};
    CHECK_THROWS_AS(avg_growth(one, 1), DomainError);
    const double nonpos[] = {1.0, -2.0, 4.0};
    CHECK_THROWS_AS(avg_growth(nonpos, 2), DomainError);
}

TEST_CASE("avg_growth is scale invariant") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> series;
        for (int i = 0; i < 5; ++i) series.push_back(std::exp(rng.normal()));
        const double base = avg_growth(series, 4);
        const double c = std::exp(2.0 * rng.normal());
        std::vector<double> scaled = series;
        for (double& v : scaled) v *= c;
        CHECK(avg_growth(scaled, 4) == Catch::Approx(base).margin(1e-12));
    }
}

TEST_CASE("constant employment makes p equal q") {
    std::istringstream in(toy_panel_csv());
    const RegionalPanel panel = load_panel(in);
    const GrowthVector gv = build_growth_vectors(panel, Sector::Agriculture, 2000, 2002);
    REQUIRE(gv.p.size() == 2);
    for (int r = 0; r < 2; ++r) {
        CHECK(gv.p[r] == Catch::Approx(gv.q[r]).margin(1e-12));
        CHECK(gv.q[r] == Catch::Approx(std::log(2.0) / 2.0).epsilon(1e-9));
    }
    CHECK(gv.ordering == panel.regions);
}

TEST_CASE("growth vectors reject periods outside coverage") {
    std::istringstream in(toy_panel_csv());
    const RegionalPanel panel = load_panel(in);
    CHECK_THROWS_AS(build_growth_vectors(panel, Sector::Total, 1999, 2002), ParameterError);
    CHECK_THROWS_AS(build_growth_vectors(panel, Sector::Total, 2000, 2003), ParameterError);
    CHECK_THROWS_AS(build_growth_vectors(panel, Sector::Total, 2002, 2000), ParameterError);
}

TEST_CASE("row permutation leaves growth values attached to their regions") {
    // same data, rows shuffled; ordering differs but values follow the ids
    const std::string header = "region,sector,year,output,employment\n";
    const std::string rows_a =
        "A,total,2000,100,10\nA,total,2001,110,10\nB,total,2000,50,5\nB,total,2001,60,5\n";
    const std::string rows_b =
        "B,total,2001,60,5\nB,total,2000,50,5\nA,total,2001,110,10\nA,total,2000,100,10\n";
    std::istringstream in_a(header + rows_a), in_b(header + rows_b);
    const RegionalPanel pa = load_panel(in_a);
    const RegionalPanel pb = load_panel(in_b);
    const GrowthVector ga = build_growth_vectors(pa, Sector::Total, 2000, 2001);
    const GrowthVector gb = build_growth_vectors(pb, Sector::Total, 2000, 2001);
    REQUIRE(pa.regions == std::vector<std::string>{"A", "B"});
    REQUIRE(pb.regions == std::vector<std::string>{"B", "A"});
    CHECK(ga.q[0] == Catch::Approx(gb.q[1]).margin(1e-15));
    CHECK(ga.q[1] == Catch::Approx(gb.q[0]).margin(1e-15));
}

TEST_CASE("coords attach by region id and reject unknown or mixed metrics") {
    std::istringstream in(toy_panel_csv());
    RegionalPanel panel = load_panel(in);

    std::istringstream good("region,x,y,metric\nB,3,4,planar_km\nA,0,0,planar_km\n");
    attach_coords(panel, good);
    CHECK(panel.coords[0].x == 0.0);  // region A is row 0
    CHECK(panel.coords[1].x == 3.0);

    std::istringstream unknown("region,x,y,metric\nA,0,0,planar_km\nZ,1,1,planar_km\n");
    CHECK_THROWS_AS(attach_coords(panel, unknown), IntegrityError);

    std::istringstream missing("region,x,y,metric\nA,0,0,planar_km\n");
    CHECK_THROWS_AS(attach_coords(panel, missing), IntegrityError);

    std::istringstream mixed("region,x,y,metric\nA,0,0,planar_km\nB,1,1,latlon_deg\n");
    CHECK_THROWS_AS(attach_coords(panel, mixed), DomainError);
}

TEST_CASE("total from data wins over synthesis") {
    std::istringstream in(
        "region,sector,year,output,employment\n"
        "A,agriculture,2000,10,1\nA,agriculture,2001,11,1\n"
        "A,total,2000,99,9\nA,total,2001,100,9\n"
        "B,agriculture,2000,10,1\nB,agriculture,2001,11,1\n"
        "B,total,2000,99,9\nB,total,2001,100,9\n");
    const RegionalPanel panel = load_panel(in);
    CHECK_FALSE(panel.total_synthesized);
    CHECK(panel.at(0, Sector::Total, 2000).output == Catch::Approx(99.0));
}
