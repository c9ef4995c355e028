#include "nfjcl/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include "nfjcl/checks.hpp"
#include "nfjcl/config.hpp"
#include "nfjcl/harness.hpp"

namespace nfjcl {

namespace {

const std::vector<std::string> kFlagKeys = {"snr-min",   "snr-max", "snr-step",     "users", "symbols",
                                            "antennas",  "trials",  "seed",         "algorithms",
                                            "grid-spacing", "mode", "beta",         "max-iters",
                                            "xi",        "threads", "out"};

struct SubcommandFlags {
    std::map<std::string, std::string> values;
    std::string config_path;
    bool noiseless = false;
};

void add_common_flags(CLI::App* sub, SubcommandFlags& flags) {
    for (const auto& key : kFlagKeys) sub->add_option("--" + key, flags.values[key]);
    sub->add_option("--config", flags.config_path, "key=value file overriding the defaults");
    sub->add_flag("--noiseless", flags.noiseless, "no receiver noise");
}

// Defaults, then the config file, then flags given on the command line.
RunSettings resolve(CLI::App* sub, const SubcommandFlags& flags, RunSettings defaults) {
    if (!flags.config_path.empty()) apply_settings(defaults, load_key_values(flags.config_path));
    for (const auto& key : kFlagKeys)
        if (sub->count("--" + key) > 0) apply_setting(defaults, key, flags.values.at(key));
    if (flags.noiseless) defaults.noiseless = true;
    return defaults;
}

std::string plot_path(const std::string& csv) {
    std::filesystem::path p(csv);
    p.replace_extension(".dat");
    return p.string();
}

int run_sweep_command(const RunSettings& settings, bool detector, PlotQuantity quantity) {
    ExperimentSpec spec = to_spec(settings);
    spec.run_detector = detector;
    const SweepResult result = run_sweep(spec);
    emit_csv(result.rows, settings.out);
    emit_plotdata(result.rows, quantity, plot_path(settings.out));
    emit_csv(result.rows, std::cout);
    std::cerr << "wrote " << settings.out << " and " << plot_path(settings.out) << '\n';
    return kExitOk;
}

int run_oracle_check(const RunSettings& settings) {
    const CheckOutcome checks[] = {
        check_uamp_lmmse(20, settings.seed),
        check_noiseless_pipeline(8, settings.seed),
        check_detector_posterior(10, settings.seed),
    };
    const char* names[] = {"uamp-vs-lmmse", "noiseless-pipeline", "detector-vs-exhaustive"};
    bool all = true;
    for (std::size_t i = 0; i < 3; ++i) {
        std::cout << (checks[i].pass ? "PASS " : "FAIL ") << names[i] << ": " << checks[i].detail << '\n';
        all = all && checks[i].pass;
    }
    std::cout << (all ? "all checks passed" : "some checks failed") << '\n';
    return all ? kExitOk : 1;
}

int run_demo(const RunSettings& settings) {
    ExperimentSpec spec = to_spec(settings);
    const SweepContext ctx(spec);
    const double snr = spec.snr_grid_db.front();
    const auto& dict = ctx.near_field.dictionary;

    Rng rng = trial_rng(spec.seed, 0);
    const GroundTruth truth = draw_ground_truth(spec.scenario, ctx.constellation, rng);
    const CMatrix Z = assemble_z(truth, dict.num_columns(), static_cast<Eigen::Index>(dict.num_blocks()));
    const double gamma = spec.noiseless ? kInf : snr_to_noise_precision(dict, Z, spec.scenario.num_users, snr);
    const CMatrix Y = synthesize(dict, Z, gamma, rng);

    std::cout << "grid points " << dict.num_columns() << ", base stations " << dict.num_blocks() << ", antennas "
              << dict.rows_per_block() << ", users " << truth.num_users() << ", symbols " << truth.block_length()
              << '\n';
    std::cout << "snr_db " << snr << " noise variance " << (std::isfinite(gamma) ? 1.0 / gamma : 0.0) << '\n';
    std::cout << "users at";
    for (int m : truth.user_grid_indices)
        std::cout << " " << m << "(" << dict.grid_positions[static_cast<std::size_t>(m)].x << ","
                  << dict.grid_positions[static_cast<std::size_t>(m)].y << ")";
    std::cout << '\n';

    SblOptions sbl;
    sbl.xi = spec.xi;
    sbl.max_iterations = spec.max_iterations;
    sbl.detection = {spec.mode, spec.scenario.num_users, spec.beta};
    sbl.trace = [](const SblTraceRecord& r) { std::cout << "stage1 " << format_trace(r) << '\n'; };
    const LocalizationResult loc = localize(ctx.near_field, Y, sbl);
    std::cout << "detected";
    for (int m : loc.active_grid_indices) std::cout << ' ' << m;
    std::cout << "\nstage1 iterations " << loc.iterations_used << (loc.converged ? " (converged)" : " (cap reached)")
              << '\n';
    if (loc.active_grid_indices.empty()) {
        std::cout << "no users detected\n";
        return kExitOk;
    }

    DetectorOptions det;
    det.xi = spec.xi;
    det.trace = [](const DetectorTraceRecord& r) { std::cout << "stage2 " << format_trace(r) << '\n'; };
    const PrunedModel pruned = prune(dict, loc.active_grid_indices, Y);
    const DetectionResult d = run_detection(pruned, warm_start_from(loc, loc.active_grid_indices), ctx.constellation, det);
    std::cout << "stage2 iterations " << d.iterations_used << (d.converged ? " (converged)" : " (cap reached)") << '\n';

    const TrialRecord rec = run_trial(ctx, snr, 0).front();
    std::cout << "located " << (rec.located ? "yes" : "no") << ", bit errors " << rec.bit_errors << " / " << rec.bits
              << ", noise variance relative error " << rec.gamma_rel_error << '\n';
    return kExitOk;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Near-field joint localization and differential detection simulator"};
    app.require_subcommand(1);

    SubcommandFlags f_loc, f_ber, f_noise, f_oracle, f_demo;
    auto* loc = app.add_subcommand("localize", "localization accuracy sweep");
    auto* ber = app.add_subcommand("ber", "bit error rate sweep");
    auto* noise = app.add_subcommand("noise-est", "noise variance estimation sweep");
    auto* oracle = app.add_subcommand("oracle-check", "small-instance oracle suite");
    auto* demo = app.add_subcommand("demo", "one verbose trial");
    add_common_flags(loc, f_loc);
    add_common_flags(ber, f_ber);
    add_common_flags(noise, f_noise);
    add_common_flags(oracle, f_oracle);
    add_common_flags(demo, f_demo);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (loc->parsed()) {
            RunSettings d;
            d.algorithms = "proposed,omp,ff_mismatch";
            d.out = "localize.csv";
            return run_sweep_command(resolve(loc, f_loc, d), false, PlotQuantity::Accuracy);
        }
        if (ber->parsed()) {
            RunSettings d;
            d.snr_min = -10.0;
            d.snr_max = 5.0;
            d.out = "ber.csv";
            return run_sweep_command(resolve(ber, f_ber, d), true, PlotQuantity::Ber);
        }
        if (noise->parsed()) {
            RunSettings d;
            d.snr_min = -10.0;
            d.snr_max = 20.0;
            d.algorithms = "proposed";
            d.out = "noise_est.csv";
            return run_sweep_command(resolve(noise, f_noise, d), true, PlotQuantity::GammaError);
        }
        if (oracle->parsed()) return run_oracle_check(resolve(oracle, f_oracle, RunSettings{}));
        if (demo->parsed()) {
            RunSettings d;
            d.snr_min = d.snr_max = 0.0;
            d.trials = 1;
            d.algorithms = "proposed";
            return run_demo(resolve(demo, f_demo, d));
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const GeometryError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitConfig;
}

}  // namespace nfjcl
