#include <algorithm>
#include <exception>
#include <thread>

#include "qkdlab/cascade.hpp"
#include "qkdlab/party.hpp"
#include "qkdlab/qkd.hpp"

namespace qkdlab::qkd {

namespace {

using wire::WireMessage;

// Per-pulse eavesdropper guess, coin-filled where Eve has no record.
// Accuracy is reported over the whole sifted key so that weak attacks
// (photon-number splitting at low mu) score between 0.5 and 1.
double eve_accuracy_over_sifted(const std::string& protocol, const channel::EveLog& log,
                                const std::vector<Basis>& announced,
                                const std::vector<std::uint64_t>& sifted_ids,
                                const std::vector<std::uint8_t>& alice_sifted_bits, Rng& eve_rng) {
    if (sifted_ids.empty()) return 0.5;
    std::map<std::uint64_t, int> guesses = channel::eve_finalize(log, announced, eve_rng);
    if (protocol == "b92") {
        // Intercept records hold outcomes in Eve's measurement basis; map
        // them onto signal bits: V -> 1 and H -> best guess 0 in the
        // rectilinear basis, 135 -> 0 and 45 -> best guess 1 in the diagonal.
        for (const auto& [id, rec] : log.intercepts) {
            guesses[id] = rec.basis == Basis::Rectilinear ? rec.outcome : 1 - rec.outcome;
        }
    }
    Rng fill = eve_rng.child("guess-fill");
    std::uint64_t correct = 0;
    for (std::size_t i = 0; i < sifted_ids.size(); ++i) {
        const auto it = guesses.find(sifted_ids[i]);
        const int guess = it != guesses.end() ? it->second : fill.next_bit();
        if (guess == alice_sifted_bits[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(sifted_ids.size());
}

SessionResult run_wire_session(const std::string& protocol, const ProtocolConfig& config,
                               const channel::SourceConfig& source,
                               const channel::ChannelConfig& chan,
                               const channel::EveStrategy& eve, const Rng& rng) {
    PartyConfig party;
    party.protocol = protocol;
    party.config = config;
    party.source = source;
    party.chan = chan;
    party.seed = rng.seed();

    EveBox box(eve, Rng(rng.seed()).child("eve"));
    wire::InMemoryDuplex::Interceptor interceptor;
    if (eve.kind != channel::EveStrategy::Kind::None) {
        interceptor = [&box](WireMessage msg, bool a_to_b) {
            return box.transform(std::move(msg), a_to_b);
        };
    }
    wire::InMemoryDuplex duplex(std::move(interceptor));

    PartyResult bob;
    std::exception_ptr bob_error;
    std::thread bob_thread([&] {
        try {
            bob = run_bob(party, duplex.end_b());
        } catch (...) {
            bob_error = std::current_exception();
        }
        duplex.end_b().close();
    });

    PartyResult alice;
    std::exception_ptr alice_error;
    try {
        alice = run_alice(party, duplex.end_a());
    } catch (...) {
        alice_error = std::current_exception();
    }
    duplex.end_a().close();
    bob_thread.join();
    if (alice_error) std::rethrow_exception(alice_error);
    if (bob_error) std::rethrow_exception(bob_error);

    SessionResult result;
    result.stats = bob.stats;
    result.stats.protocol = protocol;
    result.stats.seed = rng.seed();
    if (eve.kind != channel::EveStrategy::Kind::None) {
        result.stats.eve_accuracy = eve_accuracy_over_sifted(
            protocol, box.log(), box.announced_bases(), alice.sifted.pulse_ids, alice.sifted.bits,
            box.rng());
    }
    result.alice_key = std::move(alice.key);
    result.bob_key = std::move(bob.key);
    result.transcript = std::move(alice.transcript);
    return result;
}

} // namespace

SessionResult run_bb84(const ProtocolConfig& config, const channel::SourceConfig& source,
                       const channel::ChannelConfig& chan, const channel::EveStrategy& eve,
                       const Rng& rng) {
    return run_wire_session("bb84", config, source, chan, eve, rng);
}

SessionResult run_b92(const ProtocolConfig& config, const channel::SourceConfig& source,
                      const channel::ChannelConfig& chan, const channel::EveStrategy& eve,
                      const Rng& rng) {
    return run_wire_session("b92", config, source, chan, eve, rng);
}

SessionResult run_epr(const ProtocolConfig& config, const channel::ChannelConfig& chan,
                      const channel::EveStrategy& eve, const Rng& rng) {
    config.validate();
    chan.validate();
    const std::uint64_t n = config.n_pulses;

    Rng base(rng.seed());
    Rng alice_rng = base.child("alice");
    Rng bob_rng = base.child("bob");
    Rng eve_rng = base.child("eve");
    Rng pub = base.child("public");

    SessionResult result;
    result.stats.protocol = "epr";
    result.stats.seed = rng.seed();
    result.stats.n_pulses = n;
    auto& transcript = result.transcript;
    transcript.push_back(WireMessage::hello("epr", n));
    transcript.push_back(WireMessage::hello("epr", n));

    // CHSH test settings: Alice 0/45 degrees, Bob 22.5/67.5 degrees.
    const double angles_a[2] = {0.0, 45.0};
    const double angles_b[2] = {22.5, 67.5};
    double corr_sum[4] = {0, 0, 0, 0};
    std::uint64_t corr_n[4] = {0, 0, 0, 0};
    std::uint64_t test_emitted = 0;

    constexpr std::uint8_t kNoBit = 0xff;
    std::vector<std::uint8_t> alice_bit_by_id(n, kNoBit);
    std::vector<std::uint8_t> bob_bit_by_id(n, kNoBit);
    std::vector<std::uint8_t> alice_announce(n, 0);
    std::vector<std::uint8_t> bob_announce(n, 0);
    std::vector<std::uint8_t> is_test(n, 0);
    std::vector<std::uint64_t> detected;
    struct EveRecord {
        Basis basis;
        int outcome;
    };
    std::map<std::uint64_t, EveRecord> eve_records;

    for (std::uint64_t id = 0; id < n; ++id) {
        const bool divert = pub.next_double() < config.chsh_fraction;
        is_test[id] = divert ? 1 : 0;
        qsim::TwoQubitState pair = qsim::singlet();

        // Eve intercepts Bob's half in flight. Photon-number splitting finds
        // only single photons here and never acts.
        if (eve.kind == channel::EveStrategy::Kind::InterceptResend) {
            Basis eb;
            switch (eve.policy) {
                case channel::EveStrategy::Policy::AlwaysRect: eb = Basis::Rectilinear; break;
                case channel::EveStrategy::Policy::AlwaysDiag: eb = Basis::Diagonal; break;
                default: eb = eve_rng.next_bool() ? Basis::Diagonal : Basis::Rectilinear; break;
            }
            const qsim::QubitOutcome out = qsim::measure_qubit(pair, 1, eb, eve_rng);
            eve_records[id] = {eb, out.bit};
            pair = out.collapsed;
        }

        // Physical channel on Bob's half, mirroring transmit(): survival,
        // then X, then Z.
        const bool lost = bob_rng.next_double() >= chan.survive_prob;
        if (!lost) {
            if (bob_rng.next_double() < chan.flip_x_prob) qsim::apply_x(pair, 1);
            if (bob_rng.next_double() < chan.flip_z_prob) qsim::apply_z(pair, 1);
        }

        if (divert) {
            const int pair_idx = static_cast<int>(test_emitted % 4);
            ++test_emitted;
            const int ia = pair_idx >> 1;
            const int ib = pair_idx & 1;
            alice_announce[id] = static_cast<std::uint8_t>(ia);
            const qsim::QubitOutcome oa = qsim::measure_qubit_angle(pair, 0, angles_a[ia], alice_rng);
            if (lost) continue;
            bob_announce[id] = static_cast<std::uint8_t>(ib);
            const qsim::QubitOutcome ob =
                qsim::measure_qubit_angle(oa.collapsed, 1, angles_b[ib], bob_rng);
            corr_sum[pair_idx] += (oa.bit == ob.bit) ? 1.0 : -1.0;
            ++corr_n[pair_idx];
            continue;
        }

        const Basis abasis = alice_rng.next_bit() ? Basis::Diagonal : Basis::Rectilinear;
        const Basis bbasis = bob_rng.next_bit() ? Basis::Diagonal : Basis::Rectilinear;
        alice_announce[id] = abasis == Basis::Diagonal ? 1 : 0;
        bob_announce[id] = bbasis == Basis::Diagonal ? 1 : 0;
        const qsim::QubitOutcome oa = qsim::measure_qubit(pair, 0, abasis, alice_rng);
        alice_bit_by_id[id] = static_cast<std::uint8_t>(oa.bit);
        if (lost) continue;
        result.stats.n_detected += 1;
        detected.push_back(id);
        const qsim::QubitOutcome ob = qsim::measure_qubit(oa.collapsed, 1, bbasis, bob_rng);
        // Singlet halves anti-correlate in a shared basis; Bob flips.
        bob_bit_by_id[id] = static_cast<std::uint8_t>(1 - ob.bit);
    }

    if (test_emitted >= 4 && corr_n[0] && corr_n[1] && corr_n[2] && corr_n[3]) {
        double e[4];
        for (int i = 0; i < 4; ++i) e[i] = corr_sum[i] / static_cast<double>(corr_n[i]);
        result.stats.chsh = e[0] - e[1] + e[2] + e[3];
    }

    transcript.push_back(WireMessage::bases(bob_announce));
    transcript.push_back(WireMessage::bases(alice_announce));

    std::vector<std::uint64_t> keep;
    for (std::uint64_t id : detected) {
        if (alice_announce[id] == bob_announce[id]) keep.push_back(id);
    }
    transcript.push_back(WireMessage::sift(keep));

    std::vector<std::uint8_t> alice_sifted;
    std::vector<std::uint8_t> bob_sifted;
    for (std::uint64_t id : keep) {
        alice_sifted.push_back(alice_bit_by_id[id]);
        bob_sifted.push_back(bob_bit_by_id[id]);
    }
    result.stats.sifted_len = keep.size();
    std::uint64_t true_mismatch = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (alice_sifted[i] != bob_sifted[i]) ++true_mismatch;
    }
    result.stats.qber_true =
        keep.empty() ? 0.0 : static_cast<double>(true_mismatch) / static_cast<double>(keep.size());

    const std::vector<std::uint64_t> sample_idx =
        choose_sample(keep.size(), config.sample_fraction, bob_rng);
    transcript.push_back(WireMessage::sample(sample_idx));
    std::vector<std::uint8_t> bob_sample;
    std::vector<std::uint8_t> alice_sample;
    for (std::uint64_t i : sample_idx) {
        bob_sample.push_back(bob_sifted[i]);
        alice_sample.push_back(alice_sifted[i]);
    }
    transcript.push_back(WireMessage::sample_v(bob_sample));
    transcript.push_back(WireMessage::sample_v(alice_sample));

    double qber = 0.0;
    bool abort = true;
    if (!sample_idx.empty()) {
        std::uint64_t mism = 0;
        for (std::size_t i = 0; i < sample_idx.size(); ++i) {
            if (alice_sample[i] != bob_sample[i]) ++mism;
        }
        qber = static_cast<double>(mism) / static_cast<double>(sample_idx.size());
        abort = check_abort(qber, config.abort_threshold) == Verdict::Abort;
    }
    result.stats.qber_est = qber;
    transcript.push_back(WireMessage::qber_msg(qber, abort));

    if (eve.kind != channel::EveStrategy::Kind::None) {
        // Eve guesses Alice's sifted bit: certain (opposite outcome) when her
        // basis matched the announced one, a coin flip otherwise.
        Rng fill = eve_rng.child("guess-fill");
        std::uint64_t correct = 0;
        for (std::size_t i = 0; i < keep.size(); ++i) {
            const std::uint64_t id = keep[i];
            int guess;
            const auto it = eve_records.find(id);
            if (it != eve_records.end() &&
                it->second.basis == (alice_announce[id] ? Basis::Diagonal : Basis::Rectilinear)) {
                guess = 1 - it->second.outcome;
            } else {
                guess = fill.next_bit();
            }
            if (guess == alice_sifted[i]) ++correct;
        }
        if (!keep.empty()) {
            result.stats.eve_accuracy =
                static_cast<double>(correct) / static_cast<double>(keep.size());
        }
    }

    if (abort) {
        result.stats.aborted = true;
        transcript.push_back(WireMessage::done());
        transcript.push_back(WireMessage::done());
        return result;
    }

    std::vector<std::uint8_t> alice_key;
    std::vector<std::uint8_t> bob_key;
    {
        std::vector<std::uint8_t> sampled(keep.size(), 0);
        for (std::uint64_t i : sample_idx) sampled[i] = 1;
        for (std::uint64_t i = 0; i < keep.size(); ++i) {
            if (!sampled[i]) {
                alice_key.push_back(alice_sifted[i]);
                bob_key.push_back(bob_sifted[i]);
            }
        }
    }

    ReconcileResult rec = reconcile(alice_key, bob_key, qber, config.ec_passes, pub.child("ec-perm"));
    result.stats.ec_leak_bits = rec.leak_bits;
    for (const ParityRecord& pr : rec.exchanges) {
        transcript.push_back(WireMessage::parity_msg(pr.pass, pr.lo, pr.hi, pr.alice_parity));
        transcript.push_back(WireMessage::parity_msg(pr.pass, pr.lo, pr.hi, pr.bob_parity));
    }

    const std::uint64_t fp_seed = pub.child("fp").next_u64();
    const std::uint64_t fp_alice = fingerprint(alice_key, fp_seed);
    const std::uint64_t fp_bob = fingerprint(rec.bob_corrected, fp_seed);
    transcript.push_back(WireMessage::fp_msg(fp_alice));
    transcript.push_back(WireMessage::fp_msg(fp_bob));
    const std::uint64_t total_leak = rec.leak_bits + 64;

    if (fp_alice != fp_bob) {
        result.stats.aborted = true;
        transcript.push_back(WireMessage::done());
        transcript.push_back(WireMessage::done());
        return result;
    }

    const std::uint64_t pa_seed = alice_rng.next_u64();
    const std::uint64_t out_len = pa_output_len(alice_key.size(), total_leak, qber, config.pa_safety);
    transcript.push_back(WireMessage::pa(pa_seed, out_len));
    result.alice_key = privacy_amplify(alice_key, total_leak, qber, config.pa_safety, pa_seed);
    result.bob_key =
        privacy_amplify(rec.bob_corrected, total_leak, qber, config.pa_safety, pa_seed);
    result.stats.final_len = result.alice_key->bits.size();

    transcript.push_back(WireMessage::done());
    transcript.push_back(WireMessage::done());
    return result;
}

} // namespace qkdlab::qkd
