#pragma once

#include <cstdint>
#include <string>

#include "nfjcl/geometry.hpp"

namespace nfjcl {

// Small-instance verification suites shared by the CLI `oracle-check`
// subcommand and the acceptance binary.

struct CheckOutcome {
    bool pass = false;
    double value = 0.0;  // the measured quantity compared against the bound
    std::string detail;
};

/// Frozen-prior UAMP posterior means against the dense LMMSE oracle
/// (R=8, M=12, L=2, N=3).
CheckOutcome check_uamp_lmmse(int seeds, std::uint64_t base_seed, double tolerance = 1e-6);

/// 7 x 7 grid, 4 BSs with 32 antennas each.
ScenarioConfig small_scenario();

/// Noiseless pipeline on small_scenario() with 1..4 users: exact support, zero BER.
CheckOutcome check_noiseless_pipeline(int seeds, std::uint64_t base_seed);

/// 5 x 5 grid, 2 BSs with 16 antennas each.
ScenarioConfig toy_scenario();

/// Mean total-variation distance between the detector's psi and the exact
/// posterior on toys with K <= 2, N <= 3 at `snr_db`.
CheckOutcome check_detector_posterior(int seeds, std::uint64_t base_seed, double snr_db = 10.0,
                                      double bound = 0.05);

}  // namespace nfjcl
