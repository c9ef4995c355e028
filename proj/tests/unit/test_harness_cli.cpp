#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "nfjcl/checks.hpp"
#include "nfjcl/config.hpp"
#include "nfjcl/harness.hpp"

using namespace nfjcl;
namespace fs = std::filesystem;

namespace {

ExperimentSpec small_spec() {
    ExperimentSpec spec;
    spec.scenario = small_scenario();
    spec.scenario.num_users = 2;
    spec.scenario.block_length = 8;
    spec.snr_grid_db = {-5.0, 5.0};
    spec.trials = 5;
    spec.algorithms = {Algorithm::Proposed, Algorithm::Omp};
    spec.seed = 3;
    return spec;
}

std::string csv_of(const std::vector<MetricsRow>& rows) {
    std::ostringstream os;
    emit_csv(rows, os);
    return os.str();
}

std::string cli_path() {
    const char* p = std::getenv("NFJCL_CLI");
    return p ? p : "";
}

int run_cli(const std::string& args, std::string* output = nullptr) {
    const std::string cmd = cli_path() + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe)) out += buf;
    const int status = pclose(pipe);
    if (output) *output = out;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / ("nfjcl_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("trial streams are reproducible and distinct") {
    Rng a = trial_rng(1, 7), b = trial_rng(1, 7), c = trial_rng(1, 8), d = trial_rng(2, 7);
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
}

TEST_CASE("one trial") {
    const SweepContext ctx(small_spec());
    const auto r1 = run_trial(ctx, 5.0, 2);
    const auto r2 = run_trial(ctx, 5.0, 2);
    REQUIRE(r1.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(r1[i].located == r2[i].located);
        CHECK(r1[i].bit_errors == r2[i].bit_errors);
        CHECK(r1[i].bits == 2u * 7u * 2u);
        CHECK(r1[i].iterations == r2[i].iterations);
    }
    CHECK(r1[0].algorithm == Algorithm::Proposed);
    CHECK(r1[0].gamma_rel_error >= 0.0);
    CHECK(std::isnan(r1[1].gamma_rel_error));

    ExperimentSpec nl = small_spec();
    nl.noiseless = true;
    const SweepContext nctx(nl);
    const auto rec = run_trial(nctx, 0.0, 1);
    for (const auto& r : rec) {
        CHECK(r.located);
        CHECK(r.bit_errors == 0);
    }
    CHECK(std::isnan(rec[0].gamma_rel_error));
}

TEST_CASE("sweep rows and aggregation") {
    ExperimentSpec spec = small_spec();
    const auto res = run_sweep(spec);
    CHECK(res.records.size() == 2u * 2u * 5u);
    REQUIRE(res.rows.size() == 4);
    CHECK(res.rows[0].snr_db == -5.0);
    CHECK(res.rows[0].algorithm == "proposed");
    CHECK(res.rows[1].algorithm == "omp");
    CHECK(res.rows[3].snr_db == 5.0);
    for (const auto& r : res.rows) {
        CHECK(r.K == 2);
        CHECK(r.N == 8);
        CHECK(r.trials == 5);
        CHECK(r.loc_accuracy >= 0.0);
        CHECK(r.loc_accuracy <= 1.0);
        CHECK(r.ber >= 0.0);
        CHECK(r.ber <= 1.0);
    }

    // Hand-built records.
    ExperimentSpec s1 = spec;
    s1.snr_grid_db = {0.0};
    s1.algorithms = {Algorithm::Proposed};
    s1.trials = 3;
    std::vector<TrialRecord> recs(3);
    for (int i = 0; i < 3; ++i) {
        recs[static_cast<std::size_t>(i)].trial = i;
        recs[static_cast<std::size_t>(i)].bits = 100;
        recs[static_cast<std::size_t>(i)].iterations = 10 * (i + 1);
    }
    recs[0].located = true;
    recs[1].located = true;
    recs[2].bit_errors = 30;
    recs[1].bit_errors = 6;
    recs[0].gamma_rel_error = 0.1;
    recs[1].gamma_rel_error = 0.5;
    recs[2].gamma_rel_error = 0.2;
    const auto rows = aggregate(recs, s1);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].loc_accuracy == doctest::Approx(2.0 / 3.0));
    CHECK(rows[0].ber == doctest::Approx(36.0 / 300.0));
    CHECK(rows[0].ber_cond == doctest::Approx(6.0 / 200.0));
    CHECK(rows[0].gamma_rel_error == doctest::Approx(0.2));
    CHECK(rows[0].mean_iters == doctest::Approx(20.0));
    const double m = 0.12;
    const double var = ((0.0 - m) * (0.0 - m) + (0.06 - m) * (0.06 - m) + (0.3 - m) * (0.3 - m)) / 2.0;
    CHECK(ber_standard_error(recs, 0.0, Algorithm::Proposed) == doctest::Approx(std::sqrt(var / 3.0)));

    // A single trial echoes its record.
    ExperimentSpec one = spec;
    one.trials = 1;
    one.snr_grid_db = {5.0};
    const auto r1 = run_sweep(one);
    REQUIRE(r1.rows.size() == 2);
    CHECK(r1.rows[0].loc_accuracy == (r1.records[0].located ? 1.0 : 0.0));
    CHECK(r1.rows[0].mean_iters == r1.records[0].iterations);
}

TEST_CASE("sweep output does not depend on the thread count") {
    ExperimentSpec spec = small_spec();
    spec.threads = 1;
    const std::string a = csv_of(run_sweep(spec).rows);
    spec.threads = 3;
    const std::string b = csv_of(run_sweep(spec).rows);
    CHECK(a == b);
    const std::string c = csv_of(run_sweep(spec).rows);
    CHECK(a == c);
}

TEST_CASE("CSV and plot data") {
    std::ostringstream empty;
    emit_csv({}, empty);
    CHECK(empty.str() == std::string(kCsvHeader) + "\n");

    std::vector<MetricsRow> rows{{-5.0, "proposed", 8, 100, 0.9, 0.01, 0.005, 0.12, 33.5, 50},
                                 {-5.0, "omp", 8, 100, 0.7, 0.05, 0.02, std::nan(""), 8.0, 50},
                                 {0.0, "proposed", 8, 100, 1.0, 1.0 / 3.0, 0.0, 0.01, 20.25, 50}};
    std::istringstream in(csv_of(rows));
    const auto back = parse_csv(in);
    REQUIRE(back.size() == 3);
    CHECK(back[0] == rows[0]);
    CHECK(back[2] == rows[2]);
    CHECK(std::isnan(back[1].gamma_rel_error));
    CHECK(back[1].algorithm == "omp");

    std::istringstream bad("snr,alg\n1,2\n");
    CHECK_THROWS(parse_csv(bad));

    std::ostringstream plot;
    emit_plotdata(rows, PlotQuantity::Ber, plot);
    std::istringstream pl(plot.str());
    std::string header, l1, l2;
    std::getline(pl, header);
    std::getline(pl, l1);
    std::getline(pl, l2);
    CHECK(header == "# snr_db proposed_K8 omp_K8");
    CHECK(l1.rfind("-5 ", 0) == 0);
    CHECK(l2.find("nan") != std::string::npos);
}

TEST_CASE("settings") {
    std::istringstream cfg("# sweep\nusers = 4\n\nsnr-min=-10\ntrials = 7\nusers=3\nalgorithms = proposed, ff\n");
    const auto kv = parse_key_values(cfg);
    RunSettings s;
    apply_settings(s, kv);
    CHECK(s.users == 3);
    CHECK(s.snr_min == -10.0);
    CHECK(s.trials == 7);
    const auto spec = to_spec(s);
    CHECK(spec.scenario.num_users == 3);
    CHECK(spec.snr_grid_db == std::vector<double>{-10.0, -5.0, 0.0, 5.0, 10.0});
    CHECK(spec.algorithms == std::vector<Algorithm>{Algorithm::Proposed, Algorithm::FfMismatch});

    RunSettings t;
    CHECK_THROWS_AS(apply_setting(t, "colour", "blue"), ConfigError);
    CHECK_THROWS_AS(apply_setting(t, "users", "many"), ConfigError);
    CHECK_THROWS_AS(snr_grid(0.0, -1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(snr_grid(0.0, 1.0, 0.0), ConfigError);
    CHECK(snr_grid(-20.0, 10.0, 5.0).size() == 7);
    CHECK_THROWS_AS(parse_algorithms("proposed,music"), ConfigError);
    t.mode = "threshold";
    CHECK_THROWS_AS(to_spec(t), ConfigError);  // threshold mode needs beta
    t.beta = 10.0;
    CHECK(to_spec(t).beta == 10.0);

    ExperimentSpec e;
    e.trials = 0;
    CHECK_THROWS_AS(validate(e), ConfigError);
    e.trials = 1;
    e.snr_grid_db.clear();
    CHECK_THROWS_AS(validate(e), ConfigError);
}

TEST_CASE("thread count resolution") {
    CHECK(resolve_thread_count(3) == 3);
    ::setenv("NFJCL_THREADS", "5", 1);
    CHECK(resolve_thread_count(0) == 5);
    CHECK(resolve_thread_count(2) == 2);
    ::unsetenv("NFJCL_THREADS");
    CHECK(resolve_thread_count(0) >= 1);
}

TEST_CASE("command line") {
    if (cli_path().empty()) {
        MESSAGE("NFJCL_CLI not set; skipping");
        return;
    }
    const fs::path dir = scratch_dir();
    std::string out;

    CHECK(run_cli("localize --no-such-flag", &out) == 2);
    CHECK(run_cli("", &out) == 2);
    CHECK(run_cli("localize --users 0 --trials 1", &out) == 2);

    {
        std::ofstream bad(dir / "bad.cfg");
        bad << "colour = blue\n";
    }
    CHECK(run_cli("localize --config " + (dir / "bad.cfg").string(), &out) == 2);
    CHECK(out.find("colour") != std::string::npos);

    const std::string csv = (dir / "loc.csv").string();
    const std::string args = "localize --users 1 --symbols 4 --antennas 16 --grid-spacing 5 --trials 2 "
                             "--snr-min 0 --snr-max 10 --snr-step 10 --seed 4 --algorithms proposed,omp --out " + csv;
    REQUIRE(run_cli(args, &out) == 0);
    std::ifstream f(csv);
    std::string header;
    std::getline(f, header);
    CHECK(header == kCsvHeader);
    f.clear();
    f.seekg(0);
    const auto rows = parse_csv(f);
    CHECK(rows.size() == 4);
    CHECK(fs::exists(dir / "loc.dat"));

    // Same command, same bytes.
    const std::string csv2 = (dir / "loc2.csv").string();
    std::string args2 = args;
    args2.replace(args2.find(csv), csv.size(), csv2);
    REQUIRE(run_cli(args2, &out) == 0);
    std::ifstream a(csv), b(csv2);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());

    // Config file values, overridden by an explicit flag.
    {
        std::ofstream good(dir / "good.cfg");
        good << "users = 1\nsymbols = 4\nantennas = 16\ngrid-spacing = 5\ntrials = 3\nsnr-min = 0\nsnr-max = 0\n";
    }
    const std::string csv3 = (dir / "cfg.csv").string();
    REQUIRE(run_cli("localize --config " + (dir / "good.cfg").string() + " --trials 1 --algorithms omp --out " + csv3, &out) == 0);
    std::ifstream f3(csv3);
    const auto rows3 = parse_csv(f3);
    REQUIRE(rows3.size() == 1);
    CHECK(rows3[0].trials == 1);
    CHECK(rows3[0].K == 1);

    CHECK(run_cli("oracle-check", &out) == 0);
    CHECK(out.find("all checks passed") != std::string::npos);

    CHECK(run_cli("demo --users 1 --symbols 4 --antennas 16 --grid-spacing 5 --snr-min 10 --snr-max 10", &out) == 0);
    CHECK(out.find("located") != std::string::npos);

    fs::remove_all(dir);
}
