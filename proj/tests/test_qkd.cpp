#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "attack_oracle.hpp"
#include "qkdlab/qkd.hpp"
#include "support.hpp"

using namespace qkdlab;
using namespace qkdlab::qkd;
using testsupport::within_sigma;

namespace {

std::vector<std::uint8_t> random_bits(std::size_t n, Rng& rng) {
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_bit());
    return bits;
}

ProtocolConfig small_config(std::uint64_t n) {
    ProtocolConfig c;
    c.n_pulses = n;
    return c;
}

// Independent binary entropy for the worked privacy-amplification numbers.
double h2_oracle(double q) { return -q * std::log2(q) - (1.0 - q) * std::log2(1.0 - q); }

} // namespace

TEST_CASE("sift keeps matching detected positions in order") {
    using qsim::Basis;
    const std::vector<Basis> alice{Basis::Rectilinear, Basis::Diagonal, Basis::Diagonal,
                                   Basis::Rectilinear};
    const std::vector<Basis> bob{Basis::Rectilinear, Basis::Diagonal, Basis::Rectilinear,
                                 Basis::Rectilinear};
    const std::vector<std::uint64_t> detected{0, 1, 2, 3};
    CHECK(sift(alice, bob, detected) == std::vector<std::uint64_t>{0, 1, 3});
    CHECK(sift(alice, alice, detected) == detected);
    CHECK(sift(alice, bob, {2}) == std::vector<std::uint64_t>{});
    CHECK_THROWS_AS((void)sift(alice, {Basis::Rectilinear}, detected), std::invalid_argument);
}

TEST_CASE("sift is symmetric in the two basis lists") {
    Rng rng(21);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<qsim::Basis> a, b;
        std::vector<std::uint64_t> detected;
        for (std::uint64_t i = 0; i < 100; ++i) {
            a.push_back(rng.next_bool() ? qsim::Basis::Diagonal : qsim::Basis::Rectilinear);
            b.push_back(rng.next_bool() ? qsim::Basis::Diagonal : qsim::Basis::Rectilinear);
            if (rng.next_bool()) detected.push_back(i);
        }
        CHECK(sift(a, b, detected) == sift(b, a, detected));
    }
}

TEST_CASE("independent uniform bases keep about half") {
    Rng rng(22);
    const std::uint64_t n = 100000;
    std::vector<qsim::Basis> a, b;
    std::vector<std::uint64_t> detected(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        a.push_back(rng.next_bool() ? qsim::Basis::Diagonal : qsim::Basis::Rectilinear);
        b.push_back(rng.next_bool() ? qsim::Basis::Diagonal : qsim::Basis::Rectilinear);
        detected[i] = i;
    }
    const double frac = static_cast<double>(sift(a, b, detected).size()) / n;
    CHECK(within_sigma(frac, 0.5, n, 3.0));
}

TEST_CASE("qber estimation counts sample mismatches and removes the sample") {
    const std::vector<std::uint8_t> alice{0, 1, 0, 1};
    const std::vector<std::uint8_t> bob{0, 1, 1, 1};
    const auto est = estimate_qber(alice, bob, {0, 1, 2, 3});
    CHECK(est.qber == doctest::Approx(0.25));
    CHECK(est.remaining.empty());

    const auto est2 = estimate_qber(alice, alice, {1, 3});
    CHECK(est2.qber == 0.0);
    CHECK(est2.remaining == std::vector<std::uint64_t>{0, 2});

    CHECK_THROWS_AS((void)estimate_qber(alice, bob, {}), std::invalid_argument);
    CHECK_THROWS_AS((void)estimate_qber(alice, {0, 1}, {0}), std::invalid_argument);
}

TEST_CASE("abort rule is a strict threshold comparison") {
    CHECK(check_abort(0.12, 0.10) == Verdict::Abort);
    CHECK(check_abort(0.0, 0.10) == Verdict::Proceed);
    CHECK(check_abort(0.10, 0.10) == Verdict::Proceed);
    CHECK(check_abort(0.03, 0.10) == Verdict::Proceed);
}

TEST_CASE("reconciliation of identical keys leaks exactly the block parities") {
    Rng rng(23);
    const auto bits = random_bits(1024, rng);
    // qber 0.046 puts the first-pass block size at ceil(0.73/0.046) = 16.
    const auto res = reconcile(bits, bits, 0.046, 2, Rng(7));
    CHECK(res.bob_corrected == bits);
    CHECK(res.leak_bits == 1024 / 16 + 1024 / 32);
    CHECK(res.exchanges.size() == res.leak_bits);
    for (const auto& ex : res.exchanges) CHECK(ex.alice_parity == ex.bob_parity);
}

TEST_CASE("a single error costs one bisection of log2(block) parities") {
    Rng rng(24);
    const auto alice = random_bits(1024, rng);
    auto bob = alice;
    bob[137] ^= 1;
    // qber 0.0115 gives k1 = ceil(0.73/0.0115) = 64.
    const auto res = reconcile(alice, bob, 0.0115, 2, Rng(9));
    CHECK(res.bob_corrected == alice);
    std::uint64_t pass1 = 0;
    std::uint64_t pass2 = 0;
    for (const auto& ex : res.exchanges) {
        if (ex.pass == 1) ++pass1;
        else ++pass2;
    }
    // 16 block parities + ceil(log2 64) = 6 bisection steps, then a clean
    // second pass of 8 doubled blocks.
    CHECK(pass1 == 16 + 6);
    CHECK(pass2 == 8);
    CHECK(res.leak_bits == 30);
}

TEST_CASE("corrections cascade back into earlier passes") {
    Rng rng(25);
    const auto alice = random_bits(1024, rng);
    std::uint64_t fixed = 0;
    const int runs = 50;
    for (int s = 0; s < runs; ++s) {
        auto bob = alice;
        // Two errors inside one first-pass block survive pass 1 and are only
        // separable through the permuted second pass.
        bob[32] ^= 1;
        bob[40] ^= 1;
        const auto res = reconcile(alice, bob, 0.046, 2, Rng(static_cast<std::uint64_t>(s)));
        if (res.bob_corrected == alice) ++fixed;
    }
    CHECK(fixed >= 45);
}

TEST_CASE("reconciliation succeeds in almost every noisy run") {
    Rng master(26);
    int equal_runs = 0;
    for (int s = 0; s < 50; ++s) {
        Rng rng = master.child("mc-" + std::to_string(s));
        const auto alice = random_bits(10000, rng);
        auto bob = alice;
        std::uint64_t planted = 0;
        for (auto& b : bob) {
            if (rng.next_double() < 0.05) {
                b ^= 1;
                ++planted;
            }
        }
        const double qber = static_cast<double>(planted) / 10000.0;
        const auto res = reconcile(alice, bob, qber, 4, rng.child("perm"));
        if (res.bob_corrected == alice) ++equal_runs;
    }
    CHECK(equal_runs >= 49);
}

TEST_CASE("fingerprint verification") {
    Rng rng(27);
    const auto bits = random_bits(4096, rng);
    CHECK(verify_equal(bits, bits, 12345));
    CHECK(verify_equal({}, {}, 99));

    std::uint64_t false_accepts = 0;
    for (int t = 0; t < 10000; ++t) {
        auto flipped = bits;
        flipped[rng.next_below(flipped.size())] ^= 1;
        if (verify_equal(bits, flipped, rng.next_u64())) ++false_accepts;
    }
    CHECK(false_accepts == 0);
    CHECK_THROWS_AS((void)verify_equal(bits, {}, 1), std::invalid_argument);
}

TEST_CASE("privacy amplification output length formula") {
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(0.5) == doctest::Approx(1.0));
    // Worked instance: independent numeric evaluation.
    const double h = h2_oracle(0.03);
    CHECK(static_cast<std::uint64_t>(std::ceil(1000.0 * h)) == 195);
    CHECK(pa_output_len(1000, 120, 0.03, 30) == 1000 - 120 - 195 - 30);
    CHECK(pa_output_len(1000, 120, 0.03, 30) == 655);
    // No subtraction at all keeps the full length.
    CHECK(pa_output_len(512, 0, 0.0, 0) == 512);
    // Saturation at zero.
    CHECK(pa_output_len(100, 90, 0.25, 30) == 0);
    // Estimates beyond one half clamp to maximum entropy.
    CHECK(pa_output_len(1000, 0, 0.9, 0) == 0);
}

TEST_CASE("privacy amplification worked instance and determinism") {
    Rng rng(28);
    const auto bits = random_bits(1000, rng);
    const KeyMaterial k1 = privacy_amplify(bits, 120, 0.03, 30, 777);
    CHECK(k1.bits.size() == 655);
    const KeyMaterial k2 = privacy_amplify(bits, 120, 0.03, 30, 777);
    CHECK(k1.bits == k2.bits);
    const KeyMaterial k3 = privacy_amplify(bits, 120, 0.03, 30, 778);
    CHECK(k1.bits != k3.bits);
    const KeyMaterial empty = privacy_amplify(bits, 1000, 0.03, 30, 777);
    CHECK(empty.bits.empty());
}

TEST_CASE("the compression matches a naive Toeplitz multiplication") {
    // Independent oracle: rebuild the diagonal bit stream with the public
    // generator convention (64-bit words, least significant bit first) and
    // multiply T[i][j] = t[i + (n-1-j)] row by row.
    Rng rng(290);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 1 + rng.next_below(300);
        const auto bits = random_bits(n, rng);
        const std::uint64_t leak = rng.next_below(static_cast<std::uint64_t>(n));
        const double q = 0.02 * static_cast<double>(rng.next_below(5));
        const std::uint64_t seed = rng.next_u64();
        const auto got = privacy_amplify(bits, leak, q, 5, seed).bits;
        const std::uint64_t out_len = pa_output_len(n, leak, q, 5);
        REQUIRE(got.size() == out_len);

        Rng diag = Rng(seed).child("toeplitz");
        std::vector<std::uint8_t> t;
        while (t.size() < n + out_len) {
            std::uint64_t w = diag.next_u64();
            for (int k = 0; k < 64; ++k) t.push_back(static_cast<std::uint8_t>((w >> k) & 1));
        }
        for (std::uint64_t i = 0; i < out_len; ++i) {
            int acc = 0;
            for (std::size_t j = 0; j < n; ++j) {
                acc ^= bits[j] & t[i + (n - 1 - j)];
            }
            REQUIRE(static_cast<int>(got[i]) == acc);
        }
    }
}

TEST_CASE("the hash is linear over GF(2)") {
    Rng rng(29);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 64 + rng.next_below(512);
        const auto x = random_bits(n, rng);
        const auto y = random_bits(n, rng);
        std::vector<std::uint8_t> xy(n);
        for (std::size_t i = 0; i < n; ++i) xy[i] = x[i] ^ y[i];
        const std::uint64_t seed = rng.next_u64();
        const auto hx = privacy_amplify(x, 0, 0.0, 0, seed).bits;
        const auto hy = privacy_amplify(y, 0, 0.0, 0, seed).bits;
        const auto hxy = privacy_amplify(xy, 0, 0.0, 0, seed).bits;
        REQUIRE(hx.size() == n);
        for (std::size_t i = 0; i < n; ++i) CHECK(static_cast<int>(hxy[i]) == (hx[i] ^ hy[i]));
    }
}

TEST_CASE("final length is monotone in the estimate and the leak") {
    for (std::uint64_t n : {200ULL, 1000ULL}) {
        std::uint64_t prev = n + 1;
        for (double q = 0.0; q <= 0.5001; q += 0.01) {
            const std::uint64_t len = pa_output_len(n, 40, q, 30);
            CHECK(len <= prev);
            prev = len;
        }
        prev = n + 1;
        for (std::uint64_t leak = 0; leak <= n; leak += 10) {
            const std::uint64_t len = pa_output_len(n, leak, 0.02, 30);
            CHECK(len <= prev);
            prev = len;
        }
    }
}

TEST_CASE("clean bb84 session: no errors, half the detections sift") {
    const ProtocolConfig config = small_config(100000);
    const auto result = run_bb84(config, channel::SourceConfig::ideal(), channel::ChannelConfig{},
                                 channel::EveStrategy::none(), Rng(4242));
    CHECK(result.stats.qber_true.value() == 0.0);
    CHECK(result.stats.qber_est == 0.0);
    CHECK_FALSE(result.stats.aborted);
    const double ratio = static_cast<double>(result.stats.sifted_len) /
                         static_cast<double>(result.stats.n_detected);
    CHECK(std::abs(ratio - 0.5) <= 0.006);
    REQUIRE(result.alice_key.has_value());
    REQUIRE(result.bob_key.has_value());
    CHECK(result.alice_key->bits == result.bob_key->bits);
    CHECK(result.stats.final_len > 0);
    CHECK_FALSE(result.stats.eve_accuracy.has_value());
}

TEST_CASE("intercept-resend drives the error rate to the oracle value and aborts") {
    const auto oracle = attack_oracle::bb84_intercept_resend({0.5, 0.5});
    const ProtocolConfig config = small_config(100000);
    const auto result = run_bb84(config, channel::SourceConfig::ideal(), channel::ChannelConfig{},
                                 channel::EveStrategy::intercept_resend(
                                     channel::EveStrategy::Policy::RandomBasis),
                                 Rng(515));
    CHECK(result.stats.aborted);
    CHECK(result.stats.final_len == 0);
    CHECK_FALSE(result.alice_key.has_value());
    CHECK(std::abs(result.stats.qber_est - oracle.p_error_given_sift) <= 0.01);
    CHECK(std::abs(result.stats.qber_true.value() - oracle.p_error_given_sift) <= 0.01);
    REQUIRE(result.stats.eve_accuracy.has_value());
    CHECK(std::abs(*result.stats.eve_accuracy - oracle.p_eve_correct_given_sift) <= 0.01);
}

TEST_CASE("a few percent of noise passes the threshold and still yields a key") {
    ProtocolConfig config = small_config(100000);
    config.ec_passes = 4;
    const channel::ChannelConfig noisy{1.0, 0.03, 0.03};
    const auto result = run_bb84(config, channel::SourceConfig::ideal(), noisy,
                                 channel::EveStrategy::none(), Rng(616));
    CHECK_FALSE(result.stats.aborted);
    CHECK(std::abs(result.stats.qber_est - 0.03) <= 0.005);
    CHECK(result.stats.final_len > 0);
    REQUIRE(result.alice_key.has_value());
    CHECK(result.alice_key->bits == result.bob_key->bits);
}

TEST_CASE("total loss degenerates into a graceful abort") {
    const ProtocolConfig config = small_config(500);
    const auto result = run_bb84(config, channel::SourceConfig::ideal(),
                                 channel::ChannelConfig{0.0, 0.0, 0.0},
                                 channel::EveStrategy::none(), Rng(77));
    CHECK(result.stats.n_detected == 0);
    CHECK(result.stats.sifted_len == 0);
    CHECK(result.stats.aborted); // nothing to estimate from
    CHECK(result.stats.final_len == 0);
    CHECK_FALSE(result.alice_key.has_value());
}

TEST_CASE("session invariants hold across an ensemble of seeds") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL, 6ULL, 7ULL, 8ULL}) {
        ProtocolConfig config = small_config(4000);
        config.ec_passes = 4;
        const channel::ChannelConfig noisy{0.9, 0.02, 0.02};
        const auto result = run_bb84(config, channel::SourceConfig::ideal(), noisy,
                                     channel::EveStrategy::none(), Rng(seed));
        // Completed sessions agree bit for bit.
        if (!result.stats.aborted) {
            REQUIRE(result.alice_key.has_value());
            CHECK(result.alice_key->bits == result.bob_key->bits);
        }
        // Replay reproduces the public pipeline quantities exactly.
        const ReplaySummary rep = replay(result.transcript, config);
        CHECK(rep.sifted_len == result.stats.sifted_len);
        CHECK(rep.qber_est == result.stats.qber_est);
        CHECK(rep.leak_ranges == result.stats.ec_leak_bits);
        CHECK(rep.final_len == result.stats.final_len);
        CHECK(rep.aborted == result.stats.aborted);
        if (!result.stats.aborted) CHECK(rep.fingerprint_bits == 64);
        // Estimation converges on the ground truth.
        const auto m = static_cast<double>(rep.sampled);
        const double q = result.stats.qber_true.value();
        CHECK(std::abs(result.stats.qber_est - q) <=
              4.0 * std::sqrt(std::max(q * (1.0 - q), 1e-4) / m));
    }
}

TEST_CASE("the transcript carries every public exchange") {
    ProtocolConfig config = small_config(3000);
    config.ec_passes = 2;
    const channel::ChannelConfig noisy{1.0, 0.01, 0.01};
    const auto result = run_bb84(config, channel::SourceConfig::ideal(), noisy,
                                 channel::EveStrategy::none(), Rng(33));
    using wire::WireMessage;
    std::map<std::tuple<int, std::uint64_t, std::uint64_t>, int> parity_count;
    int hello = 0, bases = 0, sift_msgs = 0, sample = 0, sample_v = 0, qber = 0, fp = 0, pa = 0,
        done = 0;
    std::uint64_t last_pulse = 0;
    bool first_pulse = true;
    for (const auto& msg : result.transcript) {
        switch (msg.t) {
            case WireMessage::Type::Hello: ++hello; break;
            case WireMessage::Type::Pulse:
                if (!first_pulse) CHECK(msg.id == last_pulse + 1);
                last_pulse = msg.id;
                first_pulse = false;
                break;
            case WireMessage::Type::Bases: ++bases; CHECK(msg.bits.size() == 3000); break;
            case WireMessage::Type::Sift: ++sift_msgs; break;
            case WireMessage::Type::Sample: ++sample; break;
            case WireMessage::Type::SampleV: ++sample_v; break;
            case WireMessage::Type::Qber: ++qber; break;
            case WireMessage::Type::Parity:
                ++parity_count[{msg.pass, msg.lo, msg.hi}];
                break;
            case WireMessage::Type::Fp: ++fp; break;
            case WireMessage::Type::Pa: ++pa; break;
            case WireMessage::Type::Done: ++done; break;
        }
    }
    CHECK(hello == 2);
    CHECK(bases == 2);
    CHECK(sift_msgs == 1);
    CHECK(sample == 1);
    CHECK(sample_v == 2);
    CHECK(qber == 1);
    CHECK(fp == 2);
    CHECK(pa == 1);
    CHECK(done == 2);
    // Each compared range appears once per side and counts once toward leak.
    CHECK(parity_count.size() == result.stats.ec_leak_bits);
    for (const auto& [range, count] : parity_count) CHECK(count == 2);
}

TEST_CASE("b92 concludes on a quarter of the pulses with zero errors") {
    const auto oracle = attack_oracle::b92(false);
    CHECK(oracle.p_conclusive == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(oracle.p_error_given_conclusive == 0.0);

    const ProtocolConfig config = small_config(100000);
    const auto result = run_b92(config, channel::SourceConfig::ideal(), channel::ChannelConfig{},
                                channel::EveStrategy::none(), Rng(818));
    CHECK(result.stats.qber_true.value() == 0.0);
    CHECK_FALSE(result.stats.aborted);
    const double frac = static_cast<double>(result.stats.sifted_len) / 100000.0;
    CHECK(within_sigma(frac, 0.25, 100000, 3.0));
    CHECK(result.alice_key->bits == result.bob_key->bits);

    const ReplaySummary rep = replay(result.transcript, config);
    CHECK(rep.sifted_len == result.stats.sifted_len);
    CHECK(rep.qber_est == result.stats.qber_est);
    CHECK(rep.leak_ranges == result.stats.ec_leak_bits);
    CHECK(rep.final_len == result.stats.final_len);
}

TEST_CASE("b92 under intercept-resend matches the enumeration oracle and aborts") {
    const auto oracle = attack_oracle::b92(true);
    CHECK(oracle.p_conclusive == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(oracle.p_error_given_conclusive == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    const ProtocolConfig config = small_config(100000);
    const auto result = run_b92(config, channel::SourceConfig::ideal(), channel::ChannelConfig{},
                                channel::EveStrategy::intercept_resend(
                                    channel::EveStrategy::Policy::RandomBasis),
                                Rng(919));
    CHECK(result.stats.aborted);
    CHECK(std::abs(result.stats.qber_est - oracle.p_error_given_conclusive) <= 0.012);
    const double frac = static_cast<double>(result.stats.sifted_len) / 100000.0;
    CHECK(within_sigma(frac, oracle.p_conclusive, 100000, 4.0));
}

TEST_CASE("b92 with a weak-coherent lossy source") {
    const ProtocolConfig config = small_config(100000);
    const auto result =
        run_b92(config, channel::SourceConfig::weak_coherent(0.1), channel::ChannelConfig{0.5, 0, 0},
                channel::EveStrategy::none(), Rng(1020));
    // Conclusiveness is independent of detection.
    const double detected = static_cast<double>(result.stats.n_detected);
    const double conclusive = static_cast<double>(result.stats.sifted_len);
    CHECK(std::abs(conclusive - 0.25 * detected) <= 3.0 * std::sqrt(0.25 * 0.75 * detected));
    CHECK(result.stats.qber_true.value() == 0.0);
}

TEST_CASE("epr sessions violate the Bell bound without Eve") {
    ProtocolConfig config = small_config(150000);
    config.chsh_fraction = 0.5;
    const auto result =
        run_epr(config, channel::ChannelConfig{}, channel::EveStrategy::none(), Rng(1121));
    CHECK(result.stats.qber_true.value() == 0.0);
    CHECK_FALSE(result.stats.aborted);
    REQUIRE(result.stats.chsh.has_value());
    CHECK(std::abs(std::abs(*result.stats.chsh) - 2.0 * std::sqrt(2.0)) <= 0.1);
    CHECK(result.alice_key->bits == result.bob_key->bits);
    const ReplaySummary rep = replay(result.transcript, config);
    CHECK(rep.final_len == result.stats.final_len);
    CHECK(rep.leak_ranges == result.stats.ec_leak_bits);
}

TEST_CASE("intercept-resend collapses the Bell violation and raises errors") {
    // The enumerated post-attack expectation is -sqrt(2) at these angles,
    // safely inside the classical bound.
    const double s_oracle = attack_oracle::epr_intercept_resend_chsh(0, 45, 22.5, 67.5);
    CHECK(std::abs(s_oracle + std::sqrt(2.0)) < 1e-12);

    ProtocolConfig config = small_config(150000);
    config.chsh_fraction = 0.5;
    const auto result = run_epr(config, channel::ChannelConfig{},
                                channel::EveStrategy::intercept_resend(
                                    channel::EveStrategy::Policy::RandomBasis),
                                Rng(1222));
    REQUIRE(result.stats.chsh.has_value());
    CHECK(std::abs(*result.stats.chsh - s_oracle) <= 0.05);
    CHECK(std::abs(*result.stats.chsh) <= 2.05);
    CHECK(std::abs(result.stats.qber_est - 0.25) <= 0.015);
    CHECK(result.stats.aborted);
    REQUIRE(result.stats.eve_accuracy.has_value());
    CHECK(std::abs(*result.stats.eve_accuracy - 0.75) <= 0.015);
}

TEST_CASE("epr survives loss by discarding undetected pairs") {
    ProtocolConfig config = small_config(60000);
    config.chsh_fraction = 0.2;
    config.ec_passes = 4;
    const auto result = run_epr(config, channel::ChannelConfig{0.6, 0.0, 0.0},
                                channel::EveStrategy::none(), Rng(1424));
    CHECK(within_sigma(static_cast<double>(result.stats.n_detected) / (60000.0 * 0.8), 0.6,
                       48000, 4.0));
    CHECK(result.stats.qber_true.value() == 0.0);
    CHECK_FALSE(result.stats.aborted);
    CHECK(result.alice_key->bits == result.bob_key->bits);
}

TEST_CASE("epr with channel noise shows the configured error rate") {
    ProtocolConfig config = small_config(60000);
    config.chsh_fraction = 0.1;
    config.ec_passes = 4;
    const auto result = run_epr(config, channel::ChannelConfig{1.0, 0.03, 0.03},
                                channel::EveStrategy::none(), Rng(1323));
    CHECK(std::abs(result.stats.qber_est - 0.03) <= 0.006);
    CHECK_FALSE(result.stats.aborted);
    CHECK(result.alice_key->bits == result.bob_key->bits);
}

TEST_CASE("residual reconciliation errors abort at the fingerprint check") {
    // One pass at 8% noise almost always leaves residual errors; the
    // fingerprint comparison must catch them and the session must end
    // aborted with no key, even though the estimate passed the threshold.
    ProtocolConfig config = small_config(4000);
    config.ec_passes = 1;
    const channel::ChannelConfig noisy{1.0, 0.08, 0.08};
    int fp_aborts = 0;
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const auto result = run_bb84(config, channel::SourceConfig::ideal(), noisy,
                                     channel::EveStrategy::none(), Rng(seed));
        if (result.stats.qber_est > config.abort_threshold) continue; // threshold abort instead
        if (result.stats.aborted) {
            ++fp_aborts;
            CHECK(result.stats.final_len == 0);
            CHECK_FALSE(result.alice_key.has_value());
            CHECK(result.stats.ec_leak_bits > 0); // reconciliation did run
        }
    }
    CHECK(fp_aborts >= 8);
}

TEST_CASE("vacuum pulses reach Bob as missing detections") {
    ProtocolConfig config = small_config(50000);
    config.ec_passes = 4;
    const auto result = run_bb84(config, channel::SourceConfig::weak_coherent(0.2),
                                 channel::ChannelConfig{0.8, 0.0, 0.0},
                                 channel::EveStrategy::none(), Rng(2024));
    // P(detected) = 1 - e^(-mu * t) for Poisson emission with per-photon loss.
    const double p_det = 1.0 - std::exp(-0.2 * 0.8);
    CHECK(within_sigma(static_cast<double>(result.stats.n_detected) / 50000.0, p_det, 50000, 4.0));
    const double ratio = static_cast<double>(result.stats.sifted_len) /
                         static_cast<double>(result.stats.n_detected);
    CHECK(std::abs(ratio - 0.5) <= 0.02);
    CHECK(result.stats.qber_true.value() == 0.0);
    CHECK(result.alice_key->bits == result.bob_key->bits);
}

TEST_CASE("small sessions reproduce the enumerated joint distribution") {
    // Per pulse under random-basis intercept-resend: P(sifted) = 1/2 and
    // P(error | sifted) = 1/4, both proven by the enumeration oracle. With
    // n = 4 pulses the pair (sifted_len, errors) follows the product of
    // binomials below.
    const auto oracle = attack_oracle::bb84_intercept_resend({0.5, 0.5});
    const double p_sift = oracle.p_sift;
    const double p_err = oracle.p_error_given_sift;

    const int kSessions = 20000;
    std::map<std::pair<int, int>, int> counts;
    const ProtocolConfig config = small_config(4);
    for (int s = 0; s < kSessions; ++s) {
        const auto result = run_bb84(config, channel::SourceConfig::ideal(),
                                     channel::ChannelConfig{},
                                     channel::EveStrategy::intercept_resend(
                                         channel::EveStrategy::Policy::RandomBasis),
                                     Rng(90000 + static_cast<std::uint64_t>(s)));
        const int k = static_cast<int>(result.stats.sifted_len);
        const int m = static_cast<int>(
            std::lround(result.stats.qber_true.value() * static_cast<double>(k)));
        ++counts[{k, m}];
    }
    auto choose = [](int n, int k) {
        double c = 1;
        for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
        return c;
    };
    for (int k = 0; k <= 4; ++k) {
        for (int m = 0; m <= k; ++m) {
            const double p = choose(4, k) * std::pow(p_sift, k) * std::pow(1 - p_sift, 4 - k) *
                             choose(k, m) * std::pow(p_err, m) * std::pow(1 - p_err, k - m);
            const double freq =
                static_cast<double>(counts[{k, m}]) / static_cast<double>(kSessions);
            CHECK(std::abs(freq - p) <=
                  4.0 * std::sqrt(p * (1.0 - p) / kSessions) + 1e-12);
        }
    }
}

TEST_CASE("configuration validation") {
    ProtocolConfig bad = small_config(0);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = small_config(10);
    bad.sample_fraction = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = small_config(10);
    bad.abort_threshold = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = small_config(10);
    bad.ec_passes = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("key material renders as lowercase hex") {
    CHECK(key_to_hex({}) == "");
    CHECK(key_to_hex({1, 0, 1, 0}) == "a");
    CHECK(key_to_hex({1, 1, 1, 1, 0, 0, 0, 0}) == "f0");
    CHECK(key_to_hex({1}) == "8"); // short tail pads with zeros
}
