#include "nfjcl/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "nfjcl/baselines.hpp"
#include "nfjcl/diff_detector.hpp"
#include "nfjcl/harness.hpp"
#include "nfjcl/oracles.hpp"

namespace nfjcl {

CheckOutcome check_uamp_lmmse(int seeds, std::uint64_t base_seed, double tolerance) {
    constexpr Eigen::Index R = 8, M = 12, L = 2, N = 3;
    CheckOutcome out;
    int failures = 0;
    double worst = 0.0;
    for (int s = 0; s < seeds; ++s) {
        Rng rng = trial_rng(base_seed, static_cast<std::uint64_t>(s));
        std::vector<CMatrix> blocks;
        for (Eigen::Index l = 0; l < L; ++l) blocks.push_back(complex_gaussian(R, M, 1.0, rng));
        auto transform = std::make_shared<const BlockTransform>(unitary_transform(blocks));
        const CMatrix Y = complex_gaussian(R * L, N, 1.0, rng);
        const TransformedModel model = transform_observation(transform, Y);

        std::uniform_real_distribution<double> unif(0.2, 5.0);
        RVector lambda(M);
        for (auto& v : lambda) v = unif(rng);
        const double gamma = unif(rng);

        SblOptions opt;
        opt.fixed_lambda = lambda;
        opt.fixed_gamma = gamma;
        opt.xi = 1e-26;
        opt.max_iterations = 2000;
        opt.detection.num_users = 1;
        const LocalizationResult res = run_localization(model, opt);

        // Only the means are compared: UAMP's diagonal variances approximate
        // the posterior variances and do not coincide with them.
        double err = 0.0;
        for (Eigen::Index l = 0; l < L; ++l) {
            const auto lu = static_cast<std::size_t>(l);
            const LmmseResult ref = lmmse_oracle(transform->phi[lu], lambda, gamma, model.y_block(lu));
            err = std::max(err, (res.state.z[lu].mean - ref.mean).cwiseAbs().maxCoeff());
        }
        if (!res.converged) err = std::numeric_limits<double>::infinity();
        worst = std::max(worst, err);
        if (!(err <= tolerance)) ++failures;
    }
    out.pass = failures == 0;
    out.value = worst;
    std::ostringstream ss;
    ss << seeds << " seeds, " << failures << " failures, max abs deviation " << worst;
    out.detail = ss.str();
    return out;
}

ScenarioConfig small_scenario() {
    ScenarioConfig cfg;
    cfg.area_side = 6.0;
    cfg.grid_spacing = 1.0;
    cfg.bs_positions = {{-3.0, 3.0}, {3.0, 9.0}, {9.0, 3.0}, {3.0, -3.0}};
    cfg.num_antennas = 32;
    cfg.num_users = 4;
    cfg.block_length = 20;
    return cfg;
}

CheckOutcome check_noiseless_pipeline(int seeds, std::uint64_t base_seed) {
    CheckOutcome out;
    int failures = 0;
    std::size_t total_errors = 0;
    std::vector<std::unique_ptr<SweepContext>> contexts;
    for (int K = 1; K <= 4; ++K) {
        ExperimentSpec spec;
        spec.scenario = small_scenario();
        spec.scenario.num_users = K;
        spec.noiseless = true;
        spec.seed = base_seed;
        spec.algorithms = {Algorithm::Proposed};
        contexts.push_back(std::make_unique<SweepContext>(spec));
    }
    for (int s = 0; s < seeds; ++s) {
        const auto& ctx = *contexts[static_cast<std::size_t>(s % 4)];
        const TrialRecord rec = run_trial(ctx, 0.0, s).front();
        total_errors += rec.bit_errors;
        if (!rec.located || rec.bit_errors != 0) ++failures;
    }
    out.pass = failures == 0;
    out.value = failures;
    std::ostringstream ss;
    ss << seeds << " seeds, " << failures << " failures, " << total_errors << " bit errors";
    out.detail = ss.str();
    return out;
}

ScenarioConfig toy_scenario() {
    ScenarioConfig cfg;
    cfg.area_side = 4.0;
    cfg.grid_spacing = 1.0;
    cfg.bs_positions = {{-3.0, 2.0}, {2.0, -3.0}};
    cfg.num_antennas = 16;
    cfg.num_users = 2;
    cfg.block_length = 3;
    return cfg;
}

CheckOutcome check_detector_posterior(int seeds, std::uint64_t base_seed, double snr_db, double bound) {
    CheckOutcome out;
    const Constellation constellation = Constellation::make(ConstellationId::Pi4Dqpsk);
    double tv_sum = 0.0;
    for (int s = 0; s < seeds; ++s) {
        ScenarioConfig cfg = toy_scenario();
        cfg.num_users = 1 + s % 2;
        cfg.block_length = 2 + (s / 2) % 2;
        const PreparedDictionary prepared = prepare_dictionary(cfg, ResponseModel::NearField);
        const auto& dict = prepared.dictionary;

        Rng rng = trial_rng(base_seed, static_cast<std::uint64_t>(s));
        const GroundTruth truth = draw_ground_truth(cfg, constellation, rng);
        const CMatrix Z = assemble_z(truth, dict.num_columns(), static_cast<Eigen::Index>(dict.num_blocks()));
        const double gamma = snr_to_noise_precision(dict, Z, cfg.num_users, snr_db);
        const CMatrix Y = synthesize(dict, Z, gamma, rng);

        SblOptions sbl;
        sbl.detection.num_users = cfg.num_users;
        const LocalizationResult loc = localize(prepared, Y, sbl);

        // Detection runs on the true support so that the comparison isolates
        // the message-passing approximation from localization errors.
        std::vector<int> order(truth.user_grid_indices.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return truth.user_grid_indices[a] < truth.user_grid_indices[b]; });
        std::vector<int> active;
        for (int i : order) active.push_back(truth.user_grid_indices[static_cast<std::size_t>(i)]);

        const PrunedModel pruned = prune(dict, active, Y);
        const DetectionResult det =
            run_detection(pruned, warm_start_from(loc, active), constellation, DetectorOptions{});

        ToyInstance toy;
        toy.blocks = pruned.dictionary.blocks;
        toy.gains.resize(cfg.num_users, static_cast<Eigen::Index>(dict.num_blocks()));
        for (std::size_t j = 0; j < order.size(); ++j)
            toy.gains.row(static_cast<Eigen::Index>(j)) = truth.gains.row(order[j]);
        toy.Y = Y;
        toy.gamma = gamma;
        const SymbolBeliefs exact = exhaustive_symbol_posterior(toy, constellation);
        tv_sum += mean_total_variation(det.psi, exact);
    }
    out.value = seeds > 0 ? tv_sum / seeds : 0.0;
    out.pass = out.value <= bound;
    std::ostringstream ss;
    ss << seeds << " seeds, mean TV " << out.value << " (bound " << bound << ")";
    out.detail = ss.str();
    return out;
}

}  // namespace nfjcl
