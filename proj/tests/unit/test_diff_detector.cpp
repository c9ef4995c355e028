#include <doctest.h>

#include <cmath>

#include "nfjcl/checks.hpp"
#include "nfjcl/diff_detector.hpp"

using namespace nfjcl;

namespace {

GaussianVecMessage single(Complex mean, double var) {
    GaussianVecMessage m{CMatrix::Constant(1, 1, mean), RMatrix::Constant(1, 1, var)};
    return m;
}

const Constellation& dqpsk() {
    static const Constellation c = Constellation::make(ConstellationId::Pi4Dqpsk);
    return c;
}

}  // namespace

TEST_CASE("pruning keeps the active columns") {
    const auto cfg = toy_scenario();
    const auto dict = build_dictionary(cfg);
    Rng rng(1);
    const CMatrix Y = complex_gaussian(32, 3, 1.0, rng);
    const auto pm = prune(dict, {3, 17}, Y);
    REQUIRE(pm.dictionary.num_blocks() == 2);
    for (std::size_t l = 0; l < 2; ++l) {
        CHECK(pm.dictionary.blocks[l].cols() == 2);
        CHECK(pm.dictionary.blocks[l].col(0) == dict.blocks[l].col(3));
        CHECK(pm.dictionary.blocks[l].col(1) == dict.blocks[l].col(17));
        CHECK(pm.model.transform->phi[l].cols() == 2);
    }
    CHECK(prune(dict, {5}, Y).model.cols() == 1);

    std::vector<int> all(25);
    for (int m = 0; m < 25; ++m) all[static_cast<std::size_t>(m)] = m;
    const auto full = prune(dict, all, Y);
    for (std::size_t l = 0; l < 2; ++l) CHECK(full.dictionary.blocks[l] == dict.blocks[l]);
}

TEST_CASE("forward messages") {
    GaussianVecMessage q{CMatrix(1, 3), RMatrix(1, 3)};
    q.mean << Complex(1, 1), Complex(2, 0), Complex(0, -1);
    q.var << 1.0, 2.0, 0.5;
    const auto absent = GaussianVecMessage::uninformative(1, 3);
    const auto f = forward_to_delta(q, absent);
    CHECK(f.mean == q.mean);
    CHECK(f.var == q.var);

    const auto twice = forward_to_delta(q, q);
    CHECK((twice.mean - q.mean).norm() < 1e-15);
    CHECK((twice.var - 0.5 * q.var).norm() < 1e-15);

    GaussianVecMessage b{CMatrix(1, 3), RMatrix(1, 3)};
    b.mean << Complex(-1, 0), Complex(0, 3), Complex(4, 4);
    b.var << 3.0, 0.25, 2.0;
    const auto fb = forward_to_delta(q, b);
    for (Eigen::Index n = 0; n < 3; ++n) {
        const double v = 1.0 / (1.0 / q.var(0, n) + 1.0 / b.var(0, n));
        CHECK(fb.var(0, n) == doctest::Approx(v));
        CHECK(std::abs(fb.mean(0, n) - v * (q.mean(0, n) / q.var(0, n) + b.mean(0, n) / b.var(0, n))) < 1e-12);
    }

    const auto fp = forward_from_prev(q, b);
    CHECK(std::isinf(fp.var(0, 0)));
    for (Eigen::Index n = 1; n < 3; ++n) {
        CHECK(fp.var(0, n) == doctest::Approx(fb.var(0, n - 1)));
        CHECK(std::abs(fp.mean(0, n) - fb.mean(0, n - 1)) < 1e-12);
    }
    const auto fpa = forward_from_prev(q, absent);
    CHECK(fpa.mean(0, 2) == q.mean(0, 1));
}

TEST_CASE("symbol likelihoods and beliefs") {
    const auto& c = dqpsk();
    const Complex zp(0.8, -0.3);
    const Complex q0 = c.symbol(2);

    // Noiseless: one-hot at q0.
    std::vector<GaussianVecMessage> fwd{GaussianVecMessage{CMatrix(1, 2), RMatrix::Constant(1, 2, 1e-9)}};
    fwd[0].mean << Complex(0, 0), q0 * zp;
    std::vector<GaussianVecMessage> prev{GaussianVecMessage{CMatrix(1, 2), RMatrix::Constant(1, 2, 1e-9)}};
    prev[0].mean << Complex(0, 0), zp;
    const auto ll = symbol_log_likelihoods(fwd, prev, c);
    const auto psi = symbol_weights(ll, 1, 2);
    CHECK(psi.row(0, 1)(2) == doctest::Approx(1.0));
    CHECK(std::abs(psi.row(0, 1).sum() - 1.0) < 1e-12);

    // Symmetric between symbols 0 and 1: forward mean on their bisector.
    const Complex mid = std::polar(1.0, kPi / 2);
    fwd[0].mean(0, 1) = mid;
    fwd[0].var.setConstant(0.3);
    prev[0].mean(0, 1) = 1.0;
    prev[0].var.setConstant(0.2);
    const auto sym = symbol_weights(symbol_log_likelihoods(fwd, prev, c), 1, 2);
    CHECK(sym.row(0, 1)(0) == doctest::Approx(sym.row(0, 1)(1)).epsilon(1e-12));

    // Explicit complex Gaussian densities.
    Rng rng(5);
    std::vector<GaussianVecMessage> f2, p2;
    for (int l = 0; l < 3; ++l) {
        f2.push_back({complex_gaussian(2, 4, 1.0, rng), RMatrix::Constant(2, 4, 0.3 + 0.2 * l)});
        p2.push_back({complex_gaussian(2, 4, 1.0, rng), RMatrix::Constant(2, 4, 0.5)});
    }
    const auto tables = symbol_log_likelihoods(f2, p2, c);
    const auto psi2 = symbol_weights(tables, 2, 4);
    for (int k = 0; k < 2; ++k) {
        for (int n = 1; n < 4; ++n) {
            RVector w(4);
            for (int qi = 0; qi < 4; ++qi) {
                double prod = 1.0;
                for (int l = 0; l < 3; ++l) {
                    const double v = f2[l].var(k, n) + std::norm(c.symbol(qi)) * p2[l].var(k, n);
                    prod *= std::exp(-std::norm(f2[l].mean(k, n) - c.symbol(qi) * p2[l].mean(k, n)) / v) / (kPi * v);
                }
                w(qi) = prod;
            }
            w /= w.sum();
            CHECK((psi2.row(k, n).transpose() - w).cwiseAbs().maxCoeff() < 1e-10);
            CHECK(std::abs(psi2.row(k, n).sum() - 1.0) < 1e-12);

            // Leave-one-out for block 1 is the product of blocks 0 and 2.
            const auto xi1 = extrinsic_weights(tables, 1, 2, 4);
            RVector loo = (tables[0].row(k * 3 + n - 1) + tables[2].row(k * 3 + n - 1)).transpose();
            normalize_log_weights(loo);
            CHECK((xi1.row(k, n).transpose() - loo).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(std::abs(xi1.row(k, n).sum() - 1.0) < 1e-12);
        }
    }

    // L = 1: the extrinsic product is empty.
    const auto xi_single = extrinsic_weights({tables[0]}, 0, 2, 4);
    CHECK((xi_single.table().array() - 0.25).abs().maxCoeff() < 1e-15);

    // L = 2: xi for block 0 is block 1's normalized likelihood.
    const auto xi_pair = extrinsic_weights({tables[0], tables[1]}, 0, 2, 4);
    RVector r = tables[1].row(0).transpose();
    normalize_log_weights(r);
    CHECK((xi_pair.row(0, 1).transpose() - r).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("psi is invariant to a common complex scaling") {
    const auto& c = dqpsk();
    Rng rng(13);
    std::vector<GaussianVecMessage> f, p;
    for (int l = 0; l < 2; ++l) {
        f.push_back({complex_gaussian(3, 5, 1.0, rng), RMatrix::Constant(3, 5, 0.4)});
        p.push_back({complex_gaussian(3, 5, 1.0, rng), RMatrix::Constant(3, 5, 0.7)});
    }
    const auto base = symbol_weights(symbol_log_likelihoods(f, p, c), 3, 5);
    const Complex s(2.5, -1.5);
    for (int l = 0; l < 2; ++l) {
        f[static_cast<std::size_t>(l)].mean *= s;
        f[static_cast<std::size_t>(l)].var *= std::norm(s);
        p[static_cast<std::size_t>(l)].mean *= s;
        p[static_cast<std::size_t>(l)].var *= std::norm(s);
    }
    const auto scaled = symbol_weights(symbol_log_likelihoods(f, p, c), 3, 5);
    CHECK((base.table() - scaled.table()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("EP mixture projection") {
    const auto& c = dqpsk();
    RVector xi(4);
    xi << 0.1, 0.2, 0.3, 0.4;
    CHECK((mixture_weights(xi, c) - xi).cwiseAbs().maxCoeff() < 1e-15);

    RVector onehot = RVector::Zero(4);
    onehot(3) = 1.0;
    const ScalarGaussian zp{Complex(0.5, 1.0), 0.2};
    const auto g = backward_to_zn(onehot, zp, c, 1e-12);
    CHECK(std::abs(g.mean - c.symbol(3) * zp.mean) < 1e-15);
    CHECK(g.var == doctest::Approx(0.2));
    const auto gp = backward_to_zprev(onehot, zp, c, 1e-12);
    CHECK(std::abs(gp.mean - zp.mean / c.symbol(3)) < 1e-15);
    CHECK(gp.var == doctest::Approx(0.2));

    // Zero-variance one-hot is floored.
    const auto floored = backward_to_zn(onehot, {Complex(1, 0), 0.0}, c, 1e-12);
    CHECK(floored.var == 1e-12);

    // Moments of the mixture by explicit enumeration.
    Complex m1(0.0, 0.0), m1p(0.0, 0.0);
    double m2 = 0.0, m2p = 0.0;
    for (int q = 0; q < 4; ++q) {
        const Complex a = c.symbol(q) * zp.mean;
        m1 += xi(q) * a;
        m2 += xi(q) * (std::norm(a) + zp.var);
        const Complex b = zp.mean * std::conj(c.symbol(q));
        m1p += xi(q) * b;
        m2p += xi(q) * (std::norm(b) + zp.var);
    }
    const auto mix = backward_to_zn(xi, zp, c, 1e-12);
    CHECK(std::abs(mix.mean - m1) < 1e-10);
    CHECK(std::abs(mix.var - (m2 - std::norm(m1))) < 1e-10);
    const auto mixp = backward_to_zprev(xi, zp, c, 1e-12);
    CHECK(std::abs(mixp.mean - m1p) < 1e-10);
    CHECK(std::abs(mixp.var - (m2p - std::norm(m1p))) < 1e-10);

    // Two-component mixture with unequal weights.
    RVector two = RVector::Zero(4);
    two(0) = 0.25;
    two(2) = 0.75;
    const auto t = backward_to_zn(two, zp, c, 1e-12);
    const Complex a0 = c.symbol(0) * zp.mean, a2 = c.symbol(2) * zp.mean;
    const Complex mean = 0.25 * a0 + 0.75 * a2;
    CHECK(std::abs(t.mean - mean) < 1e-12);
    CHECK(t.var == doctest::Approx(0.25 * std::norm(a0) + 0.75 * std::norm(a2) + zp.var - std::norm(mean)));
}

TEST_CASE("stage-2 z belief") {
    const auto q = single(Complex(1, 0), 2.0);
    const auto absent = GaussianVecMessage::uninformative(1, 1);
    const auto z = combine_z_belief(q, absent, absent);
    CHECK(z.mean(0, 0) == Complex(1, 0));
    CHECK(z.var(0, 0) == 2.0);
    const auto three = combine_z_belief(q, q, q);
    CHECK(three.var(0, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(std::abs(three.mean(0, 0) - Complex(1, 0)) < 1e-15);

    const auto a = single(Complex(0, 2), 0.5);
    const auto b = single(Complex(-1, 1), 4.0);
    const auto mixed = combine_z_belief(q, a, b);
    const double v = 1.0 / (1.0 / 2.0 + 1.0 / 0.5 + 1.0 / 4.0);
    CHECK(mixed.var(0, 0) == doctest::Approx(v));
    CHECK(std::abs(mixed.mean(0, 0) - v * (Complex(1, 0) / 2.0 + Complex(0, 2) / 0.5 + Complex(-1, 1) / 4.0)) < 1e-12);
}

TEST_CASE("hard decisions and bit mapping") {
    SymbolBeliefs psi(2, 3, 4);
    psi.row(0, 1) << 0.0, 1.0, 0.0, 0.0;
    psi.row(0, 2) << 0.25, 0.25, 0.25, 0.25;
    psi.row(1, 1) << 0.1, 0.2, 0.35, 0.35;
    psi.row(1, 2) << 0.4, 0.1, 0.1, 0.4;
    const auto d = hard_decide(psi);
    CHECK(d(0, 0) == 1);
    CHECK(d(0, 1) == 0);
    CHECK(d(1, 0) == 2);
    CHECK(d(1, 1) == 0);
    CHECK_THROWS_AS(psi.row(0, 0), ModelError);

    Rng rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SymbolBeliefs r(3, 6, 4);
    for (Eigen::Index i = 0; i < r.table().size(); ++i) r.table().data()[i] = u(rng);
    const auto dr = hard_decide(r);
    for (int k = 0; k < 3; ++k)
        for (int n = 1; n < 6; ++n) {
            Eigen::Index best;
            r.row(k, n).maxCoeff(&best);
            CHECK(dr(k, n - 1) == best);
        }

    const auto& c = dqpsk();
    const auto bits = draw_bits(3 * 5 * 2, rng);
    const CMatrix s = encode_differential(bits, c, 3, 6);
    Eigen::MatrixXi idx(3, 5);
    for (int k = 0; k < 3; ++k)
        for (int n = 1; n < 6; ++n) idx(k, n - 1) = static_cast<int>(c.nearest_index(s(k, n)));
    CHECK(demodulate_bits(idx, c) == bits);
    CHECK(demodulate_bits(Eigen::MatrixXi::Zero(2, 4), c) == std::vector<std::uint8_t>(16, 0));
    CHECK(demodulate_bits(idx, c).size() == 3u * 5u * 2u);

    SymbolBeliefs uniform(1, 2, 4);
    uniform.table().setConstant(0.25);
    CHECK(mean_symbol_entropy(uniform) == doctest::Approx(2.0));
}

TEST_CASE("noiseless detection on the true support") {
    const auto cfg = small_scenario();
    const auto c = Constellation::make(cfg.constellation);
    const auto dict = build_dictionary(cfg);
    auto T = std::make_shared<const BlockTransform>(unitary_transform(dict.blocks));
    for (int seed = 0; seed < 6; ++seed) {
        ScenarioConfig sc = cfg;
        sc.num_users = 1 + seed % 4;
        Rng rng(static_cast<std::uint64_t>(seed) + 40);
        const auto truth = draw_ground_truth(sc, c, rng);
        const CMatrix Z = assemble_z(truth, dict.num_columns(), 4);
        const CMatrix Y = synthesize(dict, Z, kInf, rng);
        SblOptions opt;
        opt.detection.num_users = sc.num_users;
        const auto stage1 = run_localization(transform_observation(T, Y), opt);
        auto sorted = truth.user_grid_indices;
        std::sort(sorted.begin(), sorted.end());
        const auto pm = prune(dict, sorted, Y);
        const auto det = run_detection(pm, warm_start_from(stage1, sorted), c, DetectorOptions{});
        for (int j = 0; j < sc.num_users; ++j) {
            const auto it = std::find(truth.user_grid_indices.begin(), truth.user_grid_indices.end(),
                                      sorted[static_cast<std::size_t>(j)]);
            const int k = static_cast<int>(it - truth.user_grid_indices.begin());
            for (int n = 1; n < sc.block_length; ++n) {
                CHECK(det.decisions(j, n - 1) == static_cast<int>(c.nearest_index(truth.symbols(k, n))));
                CHECK(det.psi.row(j, n).maxCoeff() > 0.999);
                CHECK(std::abs(det.psi.row(j, n).sum() - 1.0) < 1e-12);
            }
        }
    }
}

TEST_CASE("warm start") {
    LocalizationResult s1;
    s1.gamma_hat = 7.0;
    s1.z_estimate = {CMatrix::Random(5, 3), CMatrix::Random(5, 3)};
    const auto w = warm_start_from(s1, {1, 4});
    CHECK(w.gamma_hat == 7.0);
    REQUIRE(w.q.size() == 2);
    for (std::size_t l = 0; l < 2; ++l) {
        CHECK(w.q[l].mean.row(0) == s1.z_estimate[l].row(1));
        CHECK(w.q[l].mean.row(1) == s1.z_estimate[l].row(4));
        CHECK((w.q[l].var.array() == kWarmStartVariance).all());
    }
    CHECK_THROWS_AS(warm_start_from(s1, {0}, 0.0), ModelError);
}

TEST_CASE("detector agrees with the exhaustive posterior on toys") {
    const auto out = check_detector_posterior(4, 11);
    CHECK(out.pass);
    CHECK(out.value < 0.05);
}

TEST_CASE("detector trace") {
    const auto cfg = toy_scenario();
    const auto c = Constellation::make(cfg.constellation);
    const auto dict = build_dictionary(cfg);
    Rng rng(8);
    ScenarioConfig sc = cfg;
    sc.num_users = 1;
    sc.block_length = 4;
    const auto truth = draw_ground_truth(sc, c, rng);
    const CMatrix Z = assemble_z(truth, dict.num_columns(), 2);
    const CMatrix Y = synthesize(dict, Z, 10.0 * snr_to_noise_precision(dict, Z, 1, 0.0), rng);
    SblOptions opt;
    opt.detection.num_users = 1;
    auto T = std::make_shared<const BlockTransform>(unitary_transform(dict.blocks));
    const auto s1 = run_localization(transform_observation(T, Y), opt);
    DetectorOptions dopt;
    int calls = 0;
    dopt.trace = [&](const DetectorTraceRecord& r) {
        ++calls;
        CHECK(r.iteration == calls);
        CHECK(format_trace(r).rfind("detector iter=", 0) == 0);
    };
    const auto det = run_detection(prune(dict, s1.active_grid_indices, Y), warm_start_from(s1, s1.active_grid_indices), c, dopt);
    CHECK(calls == det.iterations_used);
    CHECK(det.state.gamma_hat > 0.0);
}
