#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nfjcl/types.hpp"

namespace nfjcl {

struct Position2D {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Position2D&, const Position2D&) = default;
};

double distance(Position2D a, Position2D b);

enum class ConstellationId { Pi4Dqpsk };

std::string to_string(ConstellationId id);
ConstellationId constellation_from_string(const std::string& name);

/// Which steering model a dictionary is built from. The world is always
/// near-field; the far-field model only exists for the mismatch ablation.
enum class ResponseModel { NearField, FarField };

/// One simulated world: the square user area, the base stations with their
/// ULAs, the localization grid and the frame layout.
struct ScenarioConfig {
    Position2D area_origin{0.0, 0.0};
    double area_side = 20.0;
    double grid_spacing = 1.0;
    std::vector<Position2D> bs_positions{{-5.0, 10.0}, {10.0, 25.0}, {25.0, 10.0}, {10.0, -5.0}};
    int num_antennas = 128;
    double antenna_spacing = 0.025;
    double wavelength = 0.05;
    int num_users = 8;
    int block_length = 100;
    ConstellationId constellation = ConstellationId::Pi4Dqpsk;

    std::size_t num_bs() const { return bs_positions.size(); }
    std::size_t points_per_axis() const;
    std::size_t num_grid_points() const;
    Position2D area_center() const;
};

/// Throws ConfigError naming the first violated invariant.
void validate(const ScenarioConfig& cfg);

/// The 4-BS, 128-antenna, 20 m x 20 m reference world.
ScenarioConfig default_scenario();

struct AntennaArray {
    std::vector<Position2D> element_positions;
    double spacing = 0.0;
    // Unit vector along the array axis (element r sits at element 0 + r * spacing * axis).
    Position2D axis{0.0, 1.0};
    // Unit vector of the broadside direction, pointing into the user area.
    Position2D broadside{1.0, 0.0};

    std::size_t size() const { return element_positions.size(); }
    const Position2D& reference() const { return element_positions.front(); }
};

struct ArrayResponse {
    CVector values;
};

/// Inclusive square lattice, row-major with x running fastest.
std::vector<Position2D> grid_points(const ScenarioConfig& cfg);

/// ULA centred on the BS with its broadside facing `area_center`.
AntennaArray build_array(Position2D bs_pos, const ScenarioConfig& cfg, Position2D area_center);

std::vector<AntennaArray> build_arrays(const ScenarioConfig& cfg);

/// Spherical-wavefront response, phase referenced to the first element.
ArrayResponse near_field_response(Position2D user, const AntennaArray& array, double wavelength);

/// Plane-wave response. sin(theta) is taken so that (r-1)*spacing*sin(theta)
/// is the first-order expansion of d_r - d_1, which makes both models agree
/// for distant users.
ArrayResponse far_field_response(Position2D user, const AntennaArray& array, double wavelength);

ArrayResponse array_response(ResponseModel model, Position2D user, const AntennaArray& array,
                             double wavelength);

double fraunhofer_distance(int num_antennas, double spacing, double wavelength);

}  // namespace nfjcl
