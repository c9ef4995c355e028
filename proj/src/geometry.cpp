#include "nfjcl/geometry.hpp"

#include <cmath>

namespace nfjcl {

namespace {

constexpr double kCoincidentTol = 1e-12;

bool inside_closed_square(Position2D p, Position2D origin, double side) {
    return p.x >= origin.x && p.x <= origin.x + side && p.y >= origin.y && p.y <= origin.y + side;
}

void check_distinct(Position2D user, const AntennaArray& array) {
    for (const auto& e : array.element_positions) {
        if (distance(user, e) < kCoincidentTol) {
            throw GeometryError("user position coincides with an antenna element");
        }
    }
}

}  // namespace

double distance(Position2D a, Position2D b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::string to_string(ConstellationId id) {
    switch (id) {
        case ConstellationId::Pi4Dqpsk:
            return "pi4dqpsk";
    }
    return "unknown";
}

ConstellationId constellation_from_string(const std::string& name) {
    if (name == "pi4dqpsk" || name == "pi/4-dqpsk" || name == "dqpsk") {
        return ConstellationId::Pi4Dqpsk;
    }
    throw ConfigError("unknown constellation '" + name + "'");
}

std::size_t ScenarioConfig::points_per_axis() const {
    // Small slack so that 20 / 0.1 style ratios do not lose a boundary point.
    return static_cast<std::size_t>(std::floor(area_side / grid_spacing + 1e-9)) + 1;
}

std::size_t ScenarioConfig::num_grid_points() const {
    const auto n = points_per_axis();
    return n * n;
}

Position2D ScenarioConfig::area_center() const {
    return {area_origin.x + 0.5 * area_side, area_origin.y + 0.5 * area_side};
}

void validate(const ScenarioConfig& cfg) {
    auto finite = [](Position2D p) { return std::isfinite(p.x) && std::isfinite(p.y); };
    if (!finite(cfg.area_origin)) throw ConfigError("area_origin must be finite");
    if (!(cfg.area_side > 0.0) || !std::isfinite(cfg.area_side)) throw ConfigError("area_side must be > 0");
    if (!(cfg.grid_spacing > 0.0) || !std::isfinite(cfg.grid_spacing)) {
        throw ConfigError("grid_spacing must be > 0");
    }
    if (cfg.bs_positions.empty()) throw ConfigError("at least one base station is required");
    if (cfg.num_antennas < 2) throw ConfigError("num_antennas must be >= 2");
    if (!(cfg.antenna_spacing > 0.0)) throw ConfigError("antenna_spacing must be > 0");
    if (!(cfg.wavelength > 0.0)) throw ConfigError("wavelength must be > 0");
    if (cfg.num_users < 1) throw ConfigError("num_users must be >= 1");
    if (cfg.block_length < 2) throw ConfigError("block_length must be >= 2");
    if (static_cast<std::size_t>(cfg.num_users) > cfg.num_grid_points()) {
        throw ConfigError("num_users exceeds the number of grid points");
    }
    for (const auto& bs : cfg.bs_positions) {
        if (!finite(bs)) throw ConfigError("base station positions must be finite");
        if (inside_closed_square(bs, cfg.area_origin, cfg.area_side)) {
            throw ConfigError("base station inside the user area");
        }
    }
}

ScenarioConfig default_scenario() { return ScenarioConfig{}; }

std::vector<Position2D> grid_points(const ScenarioConfig& cfg) {
    const auto n = cfg.points_per_axis();
    std::vector<Position2D> pts;
    pts.reserve(n * n);
    for (std::size_t iy = 0; iy < n; ++iy) {
        for (std::size_t ix = 0; ix < n; ++ix) {
            pts.push_back({cfg.area_origin.x + static_cast<double>(ix) * cfg.grid_spacing,
                           cfg.area_origin.y + static_cast<double>(iy) * cfg.grid_spacing});
        }
    }
    return pts;
}

AntennaArray build_array(Position2D bs_pos, const ScenarioConfig& cfg, Position2D area_center) {
    const double dx = area_center.x - bs_pos.x;
    const double dy = area_center.y - bs_pos.y;
    const double len = std::hypot(dx, dy);
    if (len < kCoincidentTol) throw GeometryError("base station at the area center");

    AntennaArray array;
    array.spacing = cfg.antenna_spacing;
    array.broadside = {dx / len, dy / len};
    array.axis = {-array.broadside.y, array.broadside.x};

    const int R = cfg.num_antennas;
    const double half = 0.5 * static_cast<double>(R - 1);
    array.element_positions.reserve(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) {
        const double offset = (static_cast<double>(r) - half) * cfg.antenna_spacing;
        array.element_positions.push_back({bs_pos.x + offset * array.axis.x, bs_pos.y + offset * array.axis.y});
    }
    return array;
}

std::vector<AntennaArray> build_arrays(const ScenarioConfig& cfg) {
    std::vector<AntennaArray> arrays;
    arrays.reserve(cfg.num_bs());
    for (const auto& bs : cfg.bs_positions) arrays.push_back(build_array(bs, cfg, cfg.area_center()));
    return arrays;
}

ArrayResponse near_field_response(Position2D user, const AntennaArray& array, double wavelength) {
    check_distinct(user, array);
    const double k = 2.0 * kPi / wavelength;
    const double d_ref = distance(user, array.reference());
    ArrayResponse out{CVector(static_cast<Eigen::Index>(array.size()))};
    out.values(0) = Complex(1.0, 0.0);
    for (std::size_t r = 1; r < array.size(); ++r) {
        const double phase = -k * (distance(user, array.element_positions[r]) - d_ref);
        out.values(static_cast<Eigen::Index>(r)) = std::polar(1.0, phase);
    }
    return out;
}

ArrayResponse far_field_response(Position2D user, const AntennaArray& array, double wavelength) {
    check_distinct(user, array);
    const Position2D ref = array.reference();
    const double range = distance(user, ref);
    const double wx = (user.x - ref.x) / range;
    const double wy = (user.y - ref.y) / range;
    const double sin_theta = -(wx * array.axis.x + wy * array.axis.y);
    const double k = 2.0 * kPi / wavelength;

    ArrayResponse out{CVector(static_cast<Eigen::Index>(array.size()))};
    out.values(0) = Complex(1.0, 0.0);
    for (std::size_t r = 1; r < array.size(); ++r) {
        const double phase = -k * static_cast<double>(r) * array.spacing * sin_theta;
        out.values(static_cast<Eigen::Index>(r)) = std::polar(1.0, phase);
    }
    return out;
}

ArrayResponse array_response(ResponseModel model, Position2D user, const AntennaArray& array,
                             double wavelength) {
    return model == ResponseModel::NearField ? near_field_response(user, array, wavelength)
                                             : far_field_response(user, array, wavelength);
}

double fraunhofer_distance(int num_antennas, double spacing, double wavelength) {
    if (num_antennas < 2) throw ConfigError("fraunhofer_distance needs at least two elements");
    const double aperture = static_cast<double>(num_antennas - 1) * spacing;
    return 2.0 * aperture * aperture / wavelength;
}

}  // namespace nfjcl
