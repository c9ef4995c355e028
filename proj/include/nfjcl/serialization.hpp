#pragma once

#include <iosfwd>
#include <string>

#include "nfjcl/geometry.hpp"
#include "nfjcl/system_model.hpp"

namespace nfjcl {

// Line-oriented text fixtures. Reals are written with 17 significant digits so
// a write/read round trip is exact.
//
// Scenario, one record per line, in this order:
//   # nfjcl scenario v1
//   area_origin <x> <y>
//   area_side <v>
//   grid_spacing <v>
//   bs_count <L>
//   bs <x> <y>                      (L lines)
//   num_antennas <R>
//   antenna_spacing <v>
//   wavelength <v>
//   num_users <K>
//   block_length <N>
//   constellation <name>
//
// Ground truth:
//   # nfjcl truth v1
//   dims <K> <N> <L> <bits_per_symbol>
//   users <m_1> ... <m_K>
//   gain <k> <l> <re> <im>          (K*L lines, k outer)
//   symbol <k> <n> <re> <im>        (K*N lines, k outer)
//   bits <0/1 string, user-major>

void write_scenario(std::ostream& os, const ScenarioConfig& cfg);
ScenarioConfig read_scenario(std::istream& is);

void write_ground_truth(std::ostream& os, const GroundTruth& truth);
GroundTruth read_ground_truth(std::istream& is);

std::string format_real(double v);

}  // namespace nfjcl
