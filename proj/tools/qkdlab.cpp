#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qkdlab/classical.hpp"
#include "qkdlab/errors.hpp"
#include "qkdlab/harness.hpp"
#include "qkdlab/net.hpp"

namespace {

using namespace qkdlab;

struct ProtocolFlags {
    std::string config_file;
    std::optional<std::string> protocol;
    std::optional<std::uint64_t> pulses;
    std::optional<std::string> eve;
    std::optional<double> noise;
    std::optional<double> loss;
    std::optional<double> mu;
    std::optional<double> threshold;
    std::optional<double> sample_fraction;
    std::optional<std::uint32_t> pa_safety;
    std::optional<int> ec_passes;
    std::optional<double> chsh_fraction;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

void add_protocol_flags(CLI::App* cmd, ProtocolFlags& f) {
    cmd->add_option("--config", f.config_file, "JSON config file mirroring the run spec");
    cmd->add_option("--protocol", f.protocol, "bb84, b92 or epr");
    cmd->add_option("--pulses", f.pulses, "number of pulses per session");
    cmd->add_option("--eve", f.eve,
                    "none, intercept-rect, intercept-diag, intercept-random or pns");
    cmd->add_option("--noise", f.noise, "channel flip probability (X and Z)");
    cmd->add_option("--loss", f.loss, "per-photon loss probability (1 - survival)");
    cmd->add_option("--mu", f.mu, "weak-coherent mean photon number (default: ideal source)");
    cmd->add_option("--threshold", f.threshold, "QBER abort threshold");
    cmd->add_option("--sample-fraction", f.sample_fraction, "sifted-key share used for QBER");
    cmd->add_option("--pa-safety", f.pa_safety, "privacy-amplification safety margin bits");
    cmd->add_option("--ec-passes", f.ec_passes, "reconciliation passes");
    cmd->add_option("--chsh-fraction", f.chsh_fraction, "EPR pulses diverted to the Bell test");
    cmd->add_option("--seed", f.seed, "master seed (required, no wall-clock seeding)");
    cmd->add_option("--out", f.out, "output prefix for stats and key files");
    cmd->add_option("--format", f.format, "stats format: json or csv");
}

harness::RunSpec build_spec(const ProtocolFlags& f) {
    harness::RunSpec spec;
    bool have_seed = false;
    if (!f.config_file.empty()) {
        spec = harness::load_spec_file(f.config_file);
        have_seed = true; // config either set it or left the explicit default 0
    }
    if (f.protocol) spec.protocol = *f.protocol;
    if (f.pulses) spec.config.n_pulses = *f.pulses;
    if (f.eve) spec.eve = harness::eve_from_string(*f.eve);
    if (f.noise) {
        spec.chan.flip_x_prob = *f.noise;
        spec.chan.flip_z_prob = *f.noise;
    }
    if (f.loss) spec.chan.survive_prob = 1.0 - *f.loss;
    if (f.mu) spec.source = channel::SourceConfig::weak_coherent(*f.mu);
    if (f.threshold) spec.config.abort_threshold = *f.threshold;
    if (f.sample_fraction) spec.config.sample_fraction = *f.sample_fraction;
    if (f.pa_safety) spec.config.pa_safety = *f.pa_safety;
    if (f.ec_passes) spec.config.ec_passes = *f.ec_passes;
    if (f.chsh_fraction) spec.config.chsh_fraction = *f.chsh_fraction;
    if (f.seed) {
        spec.seed = *f.seed;
        have_seed = true;
    }
    if (f.out) spec.out = *f.out;
    if (f.format) spec.format = *f.format;
    if (!have_seed) throw CLI::ValidationError("--seed", "a seed is required");
    spec.validate();
    return spec;
}

qkd::PartyConfig party_config(const harness::RunSpec& spec) {
    if (spec.protocol == "epr") {
        throw std::invalid_argument("the networked mode supports bb84 and b92 only");
    }
    qkd::PartyConfig party;
    party.protocol = spec.protocol;
    party.config = spec.config;
    party.source = spec.source;
    party.chan = spec.chan;
    party.seed = spec.seed;
    return party;
}

void emit_party_result(const harness::RunSpec& spec, const qkd::PartyResult& result) {
    harness::StatsRecord record{spec, result.stats};
    const std::string stats = spec.format == "csv"
                                  ? harness::stats_csv_header() + "\n" +
                                        harness::stats_to_csv_row(record) + "\n"
                                  : harness::stats_to_json(record) + "\n";
    if (spec.out.empty()) {
        std::cout << stats;
    } else {
        harness::write_text_file(spec.out + ".stats." + spec.format, stats);
        if (result.key) harness::write_key_file(spec.out + ".key", *result.key);
    }
}

std::vector<std::uint8_t> parse_hex(const std::string& hex) {
    if (hex.size() % 2 != 0) throw CLI::ValidationError("hex", "hex input needs an even length");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw CLI::ValidationError("hex", "not a hex digit");
    };
    std::vector<std::uint8_t> out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        out.push_back(static_cast<std::uint8_t>(nibble(hex[i]) * 16 + nibble(hex[i + 1])));
    }
    return out;
}

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

int run_app(int argc, char** argv) {
    CLI::App app{"qkdlab: a seeded laboratory for quantum key distribution,"
                 " quantum bit commitment and their classical companions"};
    app.require_subcommand(1);

    // run
    auto* cmd_run = app.add_subcommand("run", "run one protocol session in-process");
    ProtocolFlags run_flags;
    add_protocol_flags(cmd_run, run_flags);
    cmd_run->callback([&] {
        const harness::RunSpec spec = build_spec(run_flags);
        const auto t0 = std::chrono::steady_clock::now();
        const harness::StatsRecord record = harness::run(spec);
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        if (spec.out.empty()) {
            std::cout << (spec.format == "csv"
                              ? harness::stats_csv_header() + "\n" +
                                    harness::stats_to_csv_row(record) + "\n"
                              : harness::stats_to_json(record) + "\n");
        }
        std::cerr << "session " << (record.stats.aborted ? "aborted" : "completed") << " in "
                  << ms << " ms\n";
    });

    // sweep
    auto* cmd_sweep = app.add_subcommand("sweep", "run one session per parameter value");
    ProtocolFlags sweep_flags;
    add_protocol_flags(cmd_sweep, sweep_flags);
    std::string sweep_param;
    std::vector<double> sweep_values;
    cmd_sweep->add_option("--param", sweep_param, "noise, mu, t, threshold or n_pulses")
        ->required();
    cmd_sweep->add_option("--values", sweep_values, "values, comma separated")
        ->delimiter(',')
        ->required();
    cmd_sweep->callback([&] {
        const harness::RunSpec spec = build_spec(sweep_flags);
        if (!harness::is_sweepable(sweep_param)) {
            throw CLI::ValidationError("--param", "unknown sweep parameter: " + sweep_param);
        }
        const auto records = harness::sweep(spec, sweep_param, sweep_values);
        std::string csv = harness::stats_csv_header() + "\n";
        for (const auto& r : records) csv += harness::stats_to_csv_row(r) + "\n";
        if (spec.out.empty()) std::cout << csv;
        else harness::write_text_file(spec.out + ".sweep.csv", csv);
    });

    // serve-bob
    auto* cmd_bob = app.add_subcommand("serve-bob", "run Bob's side over TCP (one session)");
    ProtocolFlags bob_flags;
    add_protocol_flags(cmd_bob, bob_flags);
    std::string listen_ep;
    cmd_bob->add_option("--listen", listen_ep, "host:port to listen on")->required();
    cmd_bob->callback([&] {
        const harness::RunSpec spec = build_spec(bob_flags);
        const qkd::PartyResult result =
            net::serve_bob(party_config(spec), net::parse_endpoint(listen_ep));
        emit_party_result(spec, result);
        std::cerr << "session " << (result.stats.aborted ? "aborted" : "completed") << "\n";
    });

    // alice
    auto* cmd_alice = app.add_subcommand("alice", "run Alice's side over TCP (one session)");
    ProtocolFlags alice_flags;
    add_protocol_flags(cmd_alice, alice_flags);
    std::string connect_ep;
    cmd_alice->add_option("--connect", connect_ep, "host:port of Bob or the proxy")->required();
    cmd_alice->callback([&] {
        const harness::RunSpec spec = build_spec(alice_flags);
        const qkd::PartyResult result =
            net::connect_alice(party_config(spec), net::parse_endpoint(connect_ep));
        emit_party_result(spec, result);
        std::cerr << "session " << (result.stats.aborted ? "aborted" : "completed") << "\n";
    });

    // eve-proxy
    auto* cmd_eve = app.add_subcommand("eve-proxy", "man-in-the-middle proxy for one session");
    std::string eve_listen;
    std::string eve_forward;
    std::string eve_strategy = "intercept-random";
    std::uint64_t eve_seed = 0;
    cmd_eve->add_option("--listen", eve_listen, "host:port to listen on")->required();
    cmd_eve->add_option("--forward", eve_forward, "host:port of Bob")->required();
    cmd_eve->add_option("--eve", eve_strategy, "eavesdropping strategy");
    cmd_eve->add_option("--seed", eve_seed, "seed for Eve's measurements")->required();
    cmd_eve->callback([&] {
        const net::ProxyReport report =
            net::eve_proxy(net::parse_endpoint(eve_listen), net::parse_endpoint(eve_forward),
                           harness::eve_from_string(eve_strategy), eve_seed);
        std::cerr << "proxied " << report.pulses << " pulses and " << report.classical_messages
                  << " classical messages; intercepted " << report.intercepted << ", captured "
                  << report.photons_captured << " photons\n";
    });

    // commit-demo
    auto* cmd_commit = app.add_subcommand("commit-demo", "bit-commitment demonstration");
    harness::CommitDemoSpec commit_spec;
    cmd_commit->add_option("--cheat", commit_spec.cheat, "none, classical or epr");
    cmd_commit->add_option("--photons", commit_spec.photons, "photons per commitment");
    cmd_commit->add_option("--trials", commit_spec.trials, "repetitions");
    cmd_commit->add_option("--bit", commit_spec.bit, "committed bit for honest/classical modes");
    cmd_commit->add_option("--seed", commit_spec.seed, "master seed")->required();
    std::string commit_out;
    cmd_commit->add_option("--out", commit_out, "output path for the JSON report");
    cmd_commit->callback([&] {
        const harness::CommitDemoReport report = harness::commit_demo(commit_spec);
        const std::string json = harness::commit_report_to_json(report) + "\n";
        if (commit_out.empty()) std::cout << json;
        else harness::write_text_file(commit_out, json);
    });

    // crypto
    auto* cmd_crypto = app.add_subcommand("crypto", "classical cryptography companions");
    cmd_crypto->require_subcommand(1);

    {
        auto* otp = cmd_crypto->add_subcommand("otp", "one-time pad (XOR), hex in, hex out");
        static std::string msg_hex, key_hex;
        otp->add_option("--message", msg_hex, "message bytes as hex")->required();
        otp->add_option("--key", key_hex, "key bytes as hex")->required();
        otp->callback([&] {
            std::cout << to_hex(classical::otp_apply(parse_hex(msg_hex), parse_hex(key_hex)))
                      << "\n";
        });
    }
    {
        auto* ttp = cmd_crypto->add_subcommand(
            "two-time-pad", "XOR two ciphertexts that reused a pad: returns m1 XOR m2");
        static std::string c1_hex, c2_hex;
        ttp->add_option("--c1", c1_hex, "first ciphertext as hex")->required();
        ttp->add_option("--c2", c2_hex, "second ciphertext as hex")->required();
        ttp->callback([&] {
            std::cout << to_hex(classical::two_time_pad(parse_hex(c1_hex), parse_hex(c2_hex)))
                      << "\n";
        });
    }
    {
        auto* caesar = cmd_crypto->add_subcommand("caesar", "cyclic alphabet shift");
        static std::string text;
        static int shift = 3;
        static bool decode = false;
        caesar->add_option("text", text, "text to transform")->required();
        caesar->add_option("--shift", shift, "places to shift (default 3)");
        caesar->add_flag("--decode", decode, "decode instead of encode");
        caesar->callback([&] {
            std::cout << classical::caesar(text, shift,
                                           decode ? classical::CaesarDirection::Decode
                                                  : classical::CaesarDirection::Encode)
                      << "\n";
        });
    }
    {
        auto* keygen = cmd_crypto->add_subcommand("rsa-keygen", "textbook RSA key pair");
        static std::uint64_t p = 0, q = 0, e = 0;
        keygen->add_option("--p", p, "first prime")->required();
        keygen->add_option("--q", q, "second prime")->required();
        keygen->add_option("--e", e, "public exponent")->required();
        keygen->callback([&] {
            const classical::RsaKeyPair kp = classical::rsa_keygen(p, q, e);
            std::cout << "N=" << kp.pub.n << " e=" << kp.pub.e << " d=" << kp.priv.d << "\n";
        });
    }
    {
        auto* enc = cmd_crypto->add_subcommand("rsa-encrypt", "m^e mod N");
        static std::uint64_t m = 0, n = 0, e = 0;
        enc->add_option("--m", m, "message, 0 <= m < N")->required();
        enc->add_option("--N", n, "modulus")->required();
        enc->add_option("--e", e, "public exponent")->required();
        enc->callback([&] { std::cout << classical::rsa_encrypt(m, {n, e}) << "\n"; });
    }
    {
        auto* dec = cmd_crypto->add_subcommand("rsa-decrypt", "y^d mod N");
        static std::uint64_t y = 0, n = 0, d = 0;
        dec->add_option("--y", y, "ciphertext")->required();
        dec->add_option("--N", n, "modulus")->required();
        dec->add_option("--d", d, "private exponent")->required();
        dec->callback([&] { std::cout << classical::rsa_decrypt(y, {d, n}) << "\n"; });
    }
    {
        auto* crack = cmd_crypto->add_subcommand("rsa-crack",
                                                 "factor N and recover the private exponent");
        static std::uint64_t n = 0, e = 0;
        crack->add_option("--N", n, "modulus (product of two distinct primes)")->required();
        crack->add_option("--e", e, "public exponent")->required();
        crack->callback([&] {
            const classical::RsaPrivateKey priv = classical::rsa_crack({n, e});
            std::cout << "d=" << priv.d << "\n";
        });
    }
    {
        auto* cost = cmd_crypto->add_subcommand("search-cost",
                                                "exhaustive key-search query counts");
        static unsigned bits = 56;
        cost->add_option("--bits", bits, "key length in bits (<= 128)")->required();
        cost->callback([&] {
            const classical::SearchCost c = classical::search_cost(bits);
            std::cout << "classical=" << c.classical_str() << " grover=" << c.grover_str() << "\n";
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_app(argc, argv);
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return 2;
    } catch (const ProtocolViolation& e) {
        std::cerr << "protocol violation: " << e.what() << "\n";
        return 2;
    } catch (const NegotiationError& e) {
        std::cerr << "negotiation error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
