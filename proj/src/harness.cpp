#include "nfjcl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "nfjcl/serialization.hpp"

namespace nfjcl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<int> sorted(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    return v;
}

// For each true user, the row of the estimate its bits are compared with, or
// -1 when no estimate is left. Exact hits are paired first; the remaining
// users take the nearest unused estimate, in user order.
std::vector<int> pair_users(const std::vector<int>& truth, const std::vector<int>& estimate,
                            const std::vector<Position2D>& grid) {
    std::vector<int> pairing(truth.size(), -1);
    std::vector<bool> used(estimate.size(), false);
    for (std::size_t k = 0; k < truth.size(); ++k) {
        for (std::size_t j = 0; j < estimate.size(); ++j) {
            if (!used[j] && estimate[j] == truth[k]) {
                pairing[k] = static_cast<int>(j);
                used[j] = true;
                break;
            }
        }
    }
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (pairing[k] >= 0) continue;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < estimate.size(); ++j) {
            if (used[j]) continue;
            const double d = distance(grid[static_cast<std::size_t>(truth[k])], grid[static_cast<std::size_t>(estimate[j])]);
            if (d < best) {
                best = d;
                pairing[k] = static_cast<int>(j);
            }
        }
        if (pairing[k] >= 0) used[static_cast<std::size_t>(pairing[k])] = true;
    }
    return pairing;
}

std::size_t count_bit_errors(const GroundTruth& truth, const std::vector<int>& estimate,
                             const Eigen::MatrixXi& decisions, const Constellation& constellation,
                             const std::vector<Position2D>& grid) {
    const int K = truth.num_users();
    const int N = truth.block_length();
    const int bps = truth.bits_per_symbol;
    const auto pairing = pair_users(truth.user_grid_indices, estimate, grid);
    std::size_t errors = 0;
    for (int k = 0; k < K; ++k) {
        const int j = pairing[static_cast<std::size_t>(k)];
        for (int n = 0; n < N - 1; ++n) {
            if (j < 0) {
                errors += static_cast<std::size_t>(bps);
                continue;
            }
            const auto& label = constellation.bits(static_cast<std::size_t>(decisions(j, n)));
            for (int b = 0; b < bps; ++b)
                errors += label[static_cast<std::size_t>(b)] != truth.info_bits[bit_index(k, n, b, N, bps)];
        }
    }
    return errors;
}

double gamma_error(double gamma_true, double gamma_hat) {
    if (!std::isfinite(gamma_true) || !(gamma_hat > 0.0)) return kNaN;
    const double v = 1.0 / gamma_true;
    return std::abs(1.0 / gamma_hat - v) / v;
}

double median(std::vector<double> v) {
    v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Proposed: return "proposed";
        case Algorithm::Omp: return "omp";
        case Algorithm::FfMismatch: return "ff_mismatch";
    }
    return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
    if (name == "proposed") return Algorithm::Proposed;
    if (name == "omp") return Algorithm::Omp;
    if (name == "ff_mismatch" || name == "ff") return Algorithm::FfMismatch;
    throw ConfigError("unknown algorithm '" + name + "'");
}

void validate(const ExperimentSpec& spec) {
    validate(spec.scenario);
    if (spec.trials < 1) throw ConfigError("trials must be >= 1");
    if (spec.snr_grid_db.empty()) throw ConfigError("SNR grid is empty");
    for (double s : spec.snr_grid_db)
        if (!std::isfinite(s)) throw ConfigError("SNR values must be finite");
    if (spec.algorithms.empty()) throw ConfigError("no algorithms selected");
    if (spec.mode == DetectionMode::Threshold && !spec.beta) throw ConfigError("threshold mode needs --beta");
    if (spec.beta && !(*spec.beta > 0.0)) throw ConfigError("beta must be positive");
    if (!(spec.xi > 0.0)) throw ConfigError("xi must be positive");
    if (spec.max_iterations < 1 || spec.detector_max_iterations < 1) throw ConfigError("iteration caps must be >= 1");
    if (spec.threads < 0) throw ConfigError("threads must be >= 0");
}

Rng trial_rng(std::uint64_t seed, std::uint64_t trial_index) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ splitmix64(trial_index + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return Rng(seq);
}

SweepContext::SweepContext(ExperimentSpec s)
    : spec(std::move(s)),
      constellation(Constellation::make(spec.scenario.constellation)),
      near_field(prepare_dictionary(spec.scenario, ResponseModel::NearField)) {
    if (std::find(spec.algorithms.begin(), spec.algorithms.end(), Algorithm::FfMismatch) != spec.algorithms.end())
        far_field = prepare_dictionary(spec.scenario, ResponseModel::FarField);
}

std::vector<TrialRecord> run_trial(const SweepContext& ctx, double snr_db, int trial_index) {
    const ExperimentSpec& spec = ctx.spec;
    const int K = spec.scenario.num_users;
    const int N = spec.scenario.block_length;
    const auto& dict = ctx.near_field.dictionary;

    Rng rng = trial_rng(spec.seed, static_cast<std::uint64_t>(trial_index));
    const GroundTruth truth = draw_ground_truth(spec.scenario, ctx.constellation, rng);
    const CMatrix Z = assemble_z(truth, dict.num_columns(), static_cast<Eigen::Index>(dict.num_blocks()));
    const double gamma = spec.noiseless ? kInf : snr_to_noise_precision(dict, Z, K, snr_db);
    const CMatrix Y = synthesize(dict, Z, gamma, rng);
    const auto truth_sorted = sorted(truth.user_grid_indices);
    const std::size_t total_bits = static_cast<std::size_t>(K) * static_cast<std::size_t>(N - 1) *
                                   static_cast<std::size_t>(truth.bits_per_symbol);

    SblOptions sbl;
    sbl.xi = spec.xi;
    sbl.max_iterations = spec.max_iterations;
    sbl.detection.mode = spec.mode;
    sbl.detection.num_users = K;
    sbl.detection.beta = spec.beta;

    DetectorOptions det;
    det.xi = spec.xi;
    det.max_iterations = spec.detector_max_iterations;

    std::vector<TrialRecord> out;
    for (Algorithm alg : spec.algorithms) {
        TrialRecord rec;
        rec.snr_db = snr_db;
        rec.algorithm = alg;
        rec.trial = trial_index;
        rec.gamma_rel_error = kNaN;
        if (alg == Algorithm::Omp) {
            const OmpResult omp = omp_localize(dict, Y, K);
            rec.located = sorted(omp.selected_grid_indices) == truth_sorted;
            rec.iterations = K;
            rec.converged = true;
            if (spec.run_detector) {
                rec.bits = total_bits;
                rec.bit_errors = count_bit_errors(truth, omp.selected_grid_indices,
                                                  omp_demodulate(omp.z_estimate, ctx.constellation),
                                                  ctx.constellation, dict.grid_positions);
            }
        } else {
            const PreparedDictionary& prepared =
                alg == Algorithm::Proposed ? ctx.near_field : *ctx.far_field;
            const LocalizationResult loc = localize(prepared, Y, sbl);
            rec.located = loc.active_grid_indices == truth_sorted;
            rec.iterations = loc.iterations_used;
            rec.converged = loc.converged;
            rec.max_epsilon_clamp = loc.state.max_epsilon_clamp;
            double gamma_hat = loc.gamma_hat;
            if (spec.run_detector) {
                rec.bits = total_bits;
                if (loc.active_grid_indices.empty()) {
                    rec.bit_errors = total_bits;
                } else {
                    const PrunedModel pruned = prune(prepared.dictionary, loc.active_grid_indices, Y);
                    const DetectionResult d =
                        run_detection(pruned, warm_start_from(loc, loc.active_grid_indices), ctx.constellation, det);
                    rec.detector_converged = d.converged;
                    rec.bit_errors = count_bit_errors(truth, loc.active_grid_indices, d.decisions,
                                                      ctx.constellation, dict.grid_positions);
                    gamma_hat = d.state.gamma_hat;
                }
            }
            rec.gamma_rel_error = gamma_error(gamma, gamma_hat);
        }
        out.push_back(rec);
    }
    return out;
}

int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("NFJCL_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
        throw ConfigError("NFJCL_THREADS must be a positive integer");
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

SweepResult run_sweep(const ExperimentSpec& spec) {
    validate(spec);
    const SweepContext ctx(spec);
    const std::size_t units = spec.snr_grid_db.size() * static_cast<std::size_t>(spec.trials);
    std::vector<std::vector<TrialRecord>> slots(units);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t u = next.fetch_add(1);
            if (u >= units) return;
            {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (failure) return;
            }
            const std::size_t s = u / static_cast<std::size_t>(spec.trials);
            const int t = static_cast<int>(u % static_cast<std::size_t>(spec.trials));
            try {
                slots[u] = run_trial(ctx, spec.snr_grid_db[s], t);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int threads = std::min<int>(resolve_thread_count(spec.threads), static_cast<int>(units));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    SweepResult result;
    for (auto& slot : slots)
        for (auto& rec : slot) result.records.push_back(rec);
    result.rows = aggregate(result.records, spec);
    return result;
}

std::vector<MetricsRow> aggregate(const std::vector<TrialRecord>& records, const ExperimentSpec& spec) {
    std::vector<MetricsRow> rows;
    for (double snr : spec.snr_grid_db) {
        for (Algorithm alg : spec.algorithms) {
            MetricsRow row;
            row.snr_db = snr;
            row.algorithm = to_string(alg);
            row.K = spec.scenario.num_users;
            row.N = spec.scenario.block_length;
            std::size_t located = 0, errors = 0, bits = 0, cond_errors = 0, cond_bits = 0;
            double iters = 0.0;
            std::vector<double> gamma_errors;
            for (const auto& r : records) {
                if (r.snr_db != snr || r.algorithm != alg) continue;
                ++row.trials;
                located += r.located;
                errors += r.bit_errors;
                bits += r.bits;
                if (r.located) {
                    cond_errors += r.bit_errors;
                    cond_bits += r.bits;
                }
                iters += r.iterations;
                gamma_errors.push_back(r.gamma_rel_error);
            }
            if (row.trials > 0) {
                row.loc_accuracy = static_cast<double>(located) / row.trials;
                row.mean_iters = iters / row.trials;
            }
            row.ber = bits > 0 ? static_cast<double>(errors) / static_cast<double>(bits) : kNaN;
            row.ber_cond = cond_bits > 0 ? static_cast<double>(cond_errors) / static_cast<double>(cond_bits) : kNaN;
            row.gamma_rel_error = median(gamma_errors);
            rows.push_back(row);
        }
    }
    return rows;
}

double ber_standard_error(const std::vector<TrialRecord>& records, double snr_db, Algorithm algorithm) {
    std::vector<double> v;
    for (const auto& r : records)
        if (r.snr_db == snr_db && r.algorithm == algorithm && r.bits > 0)
            v.push_back(static_cast<double>(r.bit_errors) / static_cast<double>(r.bits));
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

void emit_csv(const std::vector<MetricsRow>& rows, std::ostream& os) {
    os << kCsvHeader << '\n';
    for (const auto& r : rows) {
        os << format_real(r.snr_db) << ',' << r.algorithm << ',' << r.K << ',' << r.N << ','
           << format_real(r.loc_accuracy) << ',' << format_real(r.ber) << ',' << format_real(r.ber_cond) << ','
           << format_real(r.gamma_rel_error) << ',' << format_real(r.mean_iters) << ',' << r.trials << '\n';
    }
}

void emit_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    emit_csv(rows, os);
}

std::vector<MetricsRow> parse_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader) throw ConfigError("CSV header mismatch");
    std::vector<MetricsRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 10) throw ConfigError("CSV row has " + std::to_string(f.size()) + " fields");
        MetricsRow r;
        r.snr_db = std::strtod(f[0].c_str(), nullptr);
        r.algorithm = f[1];
        r.K = std::stoi(f[2]);
        r.N = std::stoi(f[3]);
        r.loc_accuracy = std::strtod(f[4].c_str(), nullptr);
        r.ber = std::strtod(f[5].c_str(), nullptr);
        r.ber_cond = std::strtod(f[6].c_str(), nullptr);
        r.gamma_rel_error = std::strtod(f[7].c_str(), nullptr);
        r.mean_iters = std::strtod(f[8].c_str(), nullptr);
        r.trials = std::stoi(f[9]);
        rows.push_back(r);
    }
    return rows;
}

void emit_plotdata(const std::vector<MetricsRow>& rows, PlotQuantity quantity, std::ostream& os) {
    std::vector<std::string> series;
    std::vector<double> snrs;
    std::map<std::pair<double, std::string>, double> value;
    for (const auto& r : rows) {
        const std::string name = r.algorithm + "_K" + std::to_string(r.K);
        if (std::find(series.begin(), series.end(), name) == series.end()) series.push_back(name);
        if (std::find(snrs.begin(), snrs.end(), r.snr_db) == snrs.end()) snrs.push_back(r.snr_db);
        const double v = quantity == PlotQuantity::Accuracy ? r.loc_accuracy
                         : quantity == PlotQuantity::Ber    ? r.ber
                                                            : r.gamma_rel_error;
        value[{r.snr_db, name}] = v;
    }
    std::sort(snrs.begin(), snrs.end());
    os << "# snr_db";
    for (const auto& s : series) os << ' ' << s;
    os << '\n';
    for (double snr : snrs) {
        os << format_real(snr);
        for (const auto& s : series) {
            const auto it = value.find({snr, s});
            os << ' ' << (it == value.end() ? std::string("nan") : format_real(it->second));
        }
        os << '\n';
    }
}

void emit_plotdata(const std::vector<MetricsRow>& rows, PlotQuantity quantity, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    emit_plotdata(rows, quantity, os);
}

}  // namespace nfjcl
