#include <doctest.h>

#include <cmath>
#include <set>
#include <utility>

#include "nfjcl/constellation.hpp"
#include "nfjcl/geometry.hpp"

using namespace nfjcl;

namespace {

ScenarioConfig square(double side, double spacing) {
    ScenarioConfig cfg;
    cfg.area_side = side;
    cfg.grid_spacing = spacing;
    cfg.bs_positions = {{-5.0, side / 2}, {side / 2, side + 5.0}};
    return cfg;
}

}  // namespace

TEST_CASE("grid point counts") {
    CHECK(grid_points(default_scenario()).size() == 441);
    CHECK(grid_points(square(2.0, 1.0)).size() == 9);
    CHECK(grid_points(square(20.0, 20.0)).size() == 4);
}

TEST_CASE("grid points are distinct, inside the area and row-major") {
    const auto cfg = default_scenario();
    const auto pts = grid_points(cfg);
    std::set<std::pair<double, double>> seen;
    for (const auto& p : pts) {
        CHECK(p.x >= cfg.area_origin.x - 1e-12);
        CHECK(p.x <= cfg.area_origin.x + cfg.area_side + 1e-12);
        CHECK(p.y >= cfg.area_origin.y - 1e-12);
        CHECK(p.y <= cfg.area_origin.y + cfg.area_side + 1e-12);
        seen.insert({p.x, p.y});
    }
    CHECK(seen.size() == pts.size());
    CHECK(pts[1].x == doctest::Approx(1.0));
    CHECK(pts[1].y == doctest::Approx(0.0));
    CHECK(pts[21].y == doctest::Approx(1.0));
}

TEST_CASE("scenario validation") {
    CHECK_NOTHROW(validate(default_scenario()));
    auto cfg = default_scenario();
    cfg.num_antennas = 1;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = default_scenario();
    cfg.bs_positions[0] = {5.0, 5.0};
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = default_scenario();
    cfg.block_length = 1;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = default_scenario();
    cfg.num_users = 0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = default_scenario();
    cfg.grid_spacing = 0.0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("array layout") {
    ScenarioConfig cfg = default_scenario();
    cfg.num_antennas = 2;
    cfg.antenna_spacing = 0.5;
    const auto arr = build_array({-5.0, 10.0}, cfg, {10.0, 10.0});
    REQUIRE(arr.size() == 2);
    CHECK(arr.element_positions[0].x == doctest::Approx(-5.0));
    CHECK(arr.element_positions[0].y == doctest::Approx(9.75));
    CHECK(arr.element_positions[1].x == doctest::Approx(-5.0));
    CHECK(arr.element_positions[1].y == doctest::Approx(10.25));

    cfg.num_antennas = 3;
    const auto arr3 = build_array({-5.0, 10.0}, cfg, {10.0, 10.0});
    CHECK(arr3.element_positions[1].x == doctest::Approx(-5.0));
    CHECK(arr3.element_positions[1].y == doctest::Approx(10.0));

    // Uniform spacing and collinearity on the default arrays.
    for (const auto& a : build_arrays(default_scenario())) {
        for (std::size_t r = 1; r < a.size(); ++r) {
            CHECK(distance(a.element_positions[r], a.element_positions[r - 1]) == doctest::Approx(0.025));
            const double cross = (a.element_positions[r].x - a.element_positions[0].x) * a.axis.y -
                                 (a.element_positions[r].y - a.element_positions[0].y) * a.axis.x;
            CHECK(std::abs(cross) < 1e-12);
        }
    }
}

TEST_CASE("near-field response") {
    const auto cfg = default_scenario();
    const auto arrays = build_arrays(cfg);
    for (const auto& arr : arrays) {
        for (const auto& u : {Position2D{0, 0}, Position2D{13, 7}, Position2D{20, 20}}) {
            const auto resp = near_field_response(u, arr, cfg.wavelength);
            CHECK(resp.values(0) == Complex(1.0, 0.0));
            CHECK((resp.values.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-12);
        }
    }

    // Two-element array from the layout example, user at the origin.
    AntennaArray arr;
    arr.element_positions = {{-5.0, 9.75}, {-5.0, 10.25}};
    arr.spacing = 0.5;
    const auto resp = near_field_response({0.0, 0.0}, arr, 0.05);
    const double d1 = std::sqrt(25.0 + 95.0625);
    const double d2 = std::sqrt(25.0 + 105.0625);
    const Complex expected = std::exp(Complex(0.0, -2.0 * kPi / 0.05 * (d2 - d1)));
    CHECK(std::abs(resp.values(1) - expected) < 1e-9);

    // Equidistant user.
    const auto sym = near_field_response({0.0, 10.0}, arr, 0.05);
    CHECK(std::abs(sym.values(1) - Complex(1.0, 0.0)) < 1e-12);

    CHECK_THROWS_AS(near_field_response({-5.0, 9.75}, arr, 0.05), GeometryError);
}

TEST_CASE("near-field response is translation invariant") {
    const auto cfg = default_scenario();
    const auto arr = build_arrays(cfg)[1];
    AntennaArray moved = arr;
    const Position2D shift{123.4, -56.7};
    for (auto& p : moved.element_positions) p = {p.x + shift.x, p.y + shift.y};
    const Position2D u{7.0, 3.0};
    const auto a = near_field_response(u, arr, cfg.wavelength);
    const auto b = near_field_response({u.x + shift.x, u.y + shift.y}, moved, cfg.wavelength);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("far-field response") {
    ScenarioConfig cfg = default_scenario();
    cfg.num_antennas = 8;
    cfg.antenna_spacing = cfg.wavelength / 2;
    const auto arr = build_array({-5.0, 10.0}, cfg, {10.0, 10.0});

    // Broadside.
    const Position2D far_broadside{arr.reference().x + 1e3 * arr.broadside.x, arr.reference().y + 1e3 * arr.broadside.y};
    const auto b = far_field_response(far_broadside, arr, cfg.wavelength);
    CHECK((b.values.array() - Complex(1.0, 0.0)).abs().maxCoeff() < 1e-12);

    // Endfire with half-wavelength spacing: alternating signs.
    const Position2D endfire{arr.reference().x + 50.0 * arr.axis.x, arr.reference().y + 50.0 * arr.axis.y};
    const auto e = far_field_response(endfire, arr, cfg.wavelength);
    for (Eigen::Index r = 0; r < e.values.size(); ++r) {
        const double sign = r % 2 == 0 ? 1.0 : -1.0;
        CHECK(std::abs(e.values(r) - Complex(sign, 0.0)) < 1e-9);
    }
}

TEST_CASE("far-field and near-field agree for distant users") {
    const auto cfg = default_scenario();
    const auto arr = build_arrays(cfg)[0];
    const double dist = 1e4 * fraunhofer_distance(cfg.num_antennas, cfg.antenna_spacing, cfg.wavelength);
    for (double angle : {-0.7, -0.2, 0.0, 0.3, 0.9}) {
        const double c = std::cos(angle), s = std::sin(angle);
        const Position2D dir{c * arr.broadside.x - s * arr.broadside.y, s * arr.broadside.x + c * arr.broadside.y};
        const Position2D u{arr.reference().x + dist * dir.x, arr.reference().y + dist * dir.y};
        const auto nf = near_field_response(u, arr, cfg.wavelength);
        const auto ff = far_field_response(u, arr, cfg.wavelength);
        double worst = 0.0;
        for (Eigen::Index r = 0; r < nf.values.size(); ++r) worst = std::max(worst, std::abs(std::arg(nf.values(r) / ff.values(r))));
        CHECK(worst < 1e-3);
    }
}

TEST_CASE("Fraunhofer distance") {
    CHECK(fraunhofer_distance(64, 0.025, 0.05) == doctest::Approx(99.225).epsilon(1e-6));
    CHECK(fraunhofer_distance(2, 0.025, 0.05) == doctest::Approx(0.025));
    CHECK(fraunhofer_distance(128, 0.025, 0.05) == doctest::Approx(403.225).epsilon(1e-6));
    CHECK_THROWS_AS(fraunhofer_distance(1, 0.025, 0.05), ConfigError);
}

TEST_CASE("pi/4-DQPSK constellation") {
    const auto c = Constellation::make(ConstellationId::Pi4Dqpsk);
    REQUIRE(c.size() == 4);
    CHECK(c.bits_per_symbol() == 2);
    CHECK(std::abs(c.reference() - std::polar(1.0, kPi / 4)) < 1e-15);
    const std::uint8_t labels[4][2] = {{0, 0}, {0, 1}, {1, 1}, {1, 0}};
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(c.symbol(i) - std::polar(1.0, (2.0 * i + 1.0) * kPi / 4)) < 1e-15);
        CHECK(c.bits(i)[0] == labels[i][0]);
        CHECK(c.bits(i)[1] == labels[i][1]);
        CHECK(c.index_of_bits(labels[i]) == i);
        CHECK(std::abs(std::abs(c.symbol(i)) - 1.0) < 1e-15);
        // Gray adjacency.
        const auto& a = c.bits(i);
        const auto& b = c.bits((i + 1) % 4);
        CHECK((a[0] != b[0]) + (a[1] != b[1]) == 1);
    }
    CHECK(c.nearest_index(std::polar(0.3, 3 * kPi / 4 + 0.1)) == 1);
    // The origin is equidistant from every point; ties resolve low.
    CHECK(c.nearest_index(Complex(0.0, 0.0)) == 0);
    CHECK(constellation_from_string("pi/4-dqpsk") == ConstellationId::Pi4Dqpsk);
    CHECK_THROWS_AS(constellation_from_string("qam16"), ConfigError);
}
