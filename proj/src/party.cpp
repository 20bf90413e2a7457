#include "qkdlab/party.hpp"

#include <algorithm>
#include <stdexcept>

#include "qkdlab/cascade.hpp"
#include "qkdlab/errors.hpp"

namespace qkdlab::qkd {

namespace {

using wire::WireMessage;

// Wraps a channel so every message this party sends or receives lands in its
// transcript, in order.
class Tap {
public:
    Tap(wire::MessageChannel& link, std::vector<WireMessage>& transcript)
        : link_(link), transcript_(transcript) {}

    void send(WireMessage msg) {
        transcript_.push_back(msg);
        link_.send(msg);
    }

    WireMessage recv() {
        WireMessage msg = link_.recv();
        transcript_.push_back(msg);
        return msg;
    }

    WireMessage expect(WireMessage::Type t) {
        WireMessage msg = recv();
        if (msg.t != t) {
            throw ProtocolViolation(std::string("expected ") + wire::type_name(t) + ", got " +
                                    wire::type_name(msg.t));
        }
        return msg;
    }

private:
    wire::MessageChannel& link_;
    std::vector<WireMessage>& transcript_;
};

bool is_b92(const std::string& protocol) { return protocol == "b92"; }

void validate_protocol(const PartyConfig& party) {
    if (party.protocol != "bb84" && party.protocol != "b92") {
        throw std::invalid_argument("wire sessions support bb84 and b92 only");
    }
    party.config.validate();
    party.chan.validate();
}

// Alice's per-pulse source draws. The same routine reconstructs her stream
// on Bob's side (both endpoints hold the master seed), which is how the
// simulator reports ground-truth QBER without extra disclosure.
struct AliceDraw {
    std::uint8_t bit;
    Basis basis;
    channel::Pulse pulse;
};

AliceDraw draw_alice_pulse(const std::string& protocol, const channel::SourceConfig& source,
                           std::uint64_t id, Rng& rng) {
    AliceDraw d;
    d.bit = static_cast<std::uint8_t>(rng.next_bit());
    if (is_b92(protocol)) {
        // |H> encodes 0, |45 deg> encodes 1.
        d.basis = d.bit == 0 ? Basis::Rectilinear : Basis::Diagonal;
        d.pulse = channel::emit(source, id, 0, d.basis, rng);
    } else {
        d.basis = rng.next_bit() == 0 ? Basis::Rectilinear : Basis::Diagonal;
        d.pulse = channel::emit(source, id, d.bit, d.basis, rng);
    }
    return d;
}

struct QberDecision {
    double qber;
    bool abort;
};

// An empty sample cannot certify anything, so the session aborts.
QberDecision decide_qber(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b,
                         double threshold) {
    if (a.size() != b.size()) throw ProtocolViolation("sample announcements differ in length");
    if (a.empty()) return {0.0, true};
    std::uint64_t mismatches = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) ++mismatches;
    }
    const double q = static_cast<double>(mismatches) / static_cast<double>(a.size());
    return {q, check_abort(q, threshold) == Verdict::Abort};
}

std::vector<std::uint8_t> gather(const std::vector<std::uint8_t>& bits,
                                 const std::vector<std::uint64_t>& idx) {
    std::vector<std::uint8_t> out;
    out.reserve(idx.size());
    for (std::uint64_t i : idx) {
        if (i >= bits.size()) throw ProtocolViolation("index out of range");
        out.push_back(bits[i]);
    }
    return out;
}

class AliceParityLink final : public ParityLink {
public:
    explicit AliceParityLink(Tap& tap) : tap_(tap) {}

    int exchange(int pass, std::uint64_t lo, std::uint64_t hi, int mine) override {
        tap_.send(WireMessage::parity_msg(pass, lo, hi, mine));
        const WireMessage reply = tap_.expect(WireMessage::Type::Parity);
        if (reply.pass != pass || reply.lo != lo || reply.hi != hi) {
            throw ProtocolViolation("parity exchange out of step");
        }
        return reply.parity;
    }

private:
    Tap& tap_;
};

class BobParityLink final : public ParityLink {
public:
    explicit BobParityLink(Tap& tap) : tap_(tap) {}

    int exchange(int pass, std::uint64_t lo, std::uint64_t hi, int mine) override {
        const WireMessage theirs = tap_.expect(WireMessage::Type::Parity);
        if (theirs.pass != pass || theirs.lo != lo || theirs.hi != hi) {
            throw ProtocolViolation("parity exchange out of step");
        }
        tap_.send(WireMessage::parity_msg(pass, lo, hi, mine));
        return theirs.parity;
    }

private:
    Tap& tap_;
};

void validate_increasing(const std::vector<std::uint64_t>& ids, std::uint64_t bound,
                         const char* what) {
    std::uint64_t prev = 0;
    bool first = true;
    for (std::uint64_t id : ids) {
        if (id >= bound || (!first && id <= prev)) {
            throw ProtocolViolation(std::string(what) + " not strictly increasing in range");
        }
        prev = id;
        first = false;
    }
}

} // namespace

PartyResult run_alice(const PartyConfig& party, wire::MessageChannel& link) {
    validate_protocol(party);
    const std::uint64_t n = party.config.n_pulses;

    PartyResult result;
    result.stats.protocol = party.protocol;
    result.stats.seed = party.seed;
    result.stats.n_pulses = n;

    Rng base(party.seed);
    Rng self = base.child("alice");
    Rng pub = base.child("public");

    Tap tap(link, result.transcript);

    tap.send(WireMessage::hello(party.protocol, n));
    const WireMessage peer_hello = tap.expect(WireMessage::Type::Hello);
    if (peer_hello.proto != party.protocol || peer_hello.n != n) {
        throw NegotiationError("peer hello disagrees on protocol parameters");
    }

    result.raw_bits.reserve(n);
    result.raw_bases.reserve(n);
    for (std::uint64_t id = 0; id < n; ++id) {
        AliceDraw d = draw_alice_pulse(party.protocol, party.source, id, self);
        result.raw_bits.push_back(d.bit);
        result.raw_bases.push_back(d.basis);
        tap.send(WireMessage::pulse(id, std::move(d.pulse.photons)));
    }

    if (!is_b92(party.protocol)) {
        const WireMessage bob_bases = tap.expect(WireMessage::Type::Bases);
        if (bob_bases.bits.size() != n) throw ProtocolViolation("bases length mismatch");
        std::vector<std::uint8_t> mine(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            mine[i] = result.raw_bases[i] == Basis::Diagonal ? 1 : 0;
        }
        tap.send(WireMessage::bases(std::move(mine)));
    }

    const WireMessage sifted = tap.expect(WireMessage::Type::Sift);
    validate_increasing(sifted.ids, n, "sift ids");
    result.sifted.pulse_ids = sifted.ids;
    for (std::uint64_t id : sifted.ids) result.sifted.bits.push_back(result.raw_bits[id]);
    result.stats.sifted_len = result.sifted.bits.size();

    const WireMessage sample = tap.expect(WireMessage::Type::Sample);
    validate_increasing(sample.ids, std::max<std::uint64_t>(result.sifted.bits.size(), 1),
                        "sample indices");
    const WireMessage bob_sample = tap.expect(WireMessage::Type::SampleV);
    if (bob_sample.bits.size() != sample.ids.size()) {
        throw ProtocolViolation("sample values do not match sample indices");
    }
    const std::vector<std::uint8_t> my_sample = gather(result.sifted.bits, sample.ids);
    tap.send(WireMessage::sample_v(my_sample));
    const QberDecision decision = decide_qber(my_sample, bob_sample.bits, party.config.abort_threshold);
    result.stats.qber_est = decision.qber;
    tap.send(WireMessage::qber_msg(decision.qber, decision.abort));

    if (decision.abort) {
        result.stats.aborted = true;
        tap.send(WireMessage::done());
        tap.expect(WireMessage::Type::Done);
        return result;
    }

    std::vector<std::uint8_t> key_bits;
    {
        std::vector<std::uint8_t> sampled(result.sifted.bits.size(), 0);
        for (std::uint64_t i : sample.ids) sampled[i] = 1;
        for (std::uint64_t i = 0; i < result.sifted.bits.size(); ++i) {
            if (!sampled[i]) key_bits.push_back(result.sifted.bits[i]);
        }
    }

    const CascadePlan plan =
        plan_cascade(key_bits.size(), decision.qber, party.config.ec_passes, pub.child("ec-perm"));
    AliceParityLink parity_link(tap);
    const CascadeOutcome cascade = cascade_run(plan, key_bits, /*correcting_side=*/false, parity_link);
    result.stats.ec_leak_bits = cascade.leak_ranges;

    const std::uint64_t fp_seed = pub.child("fp").next_u64();
    const std::uint64_t my_fp = fingerprint(key_bits, fp_seed);
    tap.send(WireMessage::fp_msg(my_fp));
    const WireMessage bob_fp = tap.expect(WireMessage::Type::Fp);
    const std::uint64_t total_leak = cascade.leak_ranges + 64;

    if (bob_fp.fp != my_fp) {
        result.stats.aborted = true;
        tap.send(WireMessage::done());
        tap.expect(WireMessage::Type::Done);
        return result;
    }

    const std::uint64_t pa_seed = self.next_u64();
    const std::uint64_t out_len =
        pa_output_len(key_bits.size(), total_leak, decision.qber, party.config.pa_safety);
    tap.send(WireMessage::pa(pa_seed, out_len));
    result.key = privacy_amplify(key_bits, total_leak, decision.qber, party.config.pa_safety, pa_seed);
    result.stats.final_len = result.key->bits.size();

    tap.send(WireMessage::done());
    tap.expect(WireMessage::Type::Done);
    return result;
}

PartyResult run_bob(const PartyConfig& party, wire::MessageChannel& link) {
    validate_protocol(party);
    const std::uint64_t n = party.config.n_pulses;

    PartyResult result;
    result.stats.protocol = party.protocol;
    result.stats.seed = party.seed;
    result.stats.n_pulses = n;

    Rng base(party.seed);
    Rng self = base.child("bob");
    Rng pub = base.child("public");

    Tap tap(link, result.transcript);

    const WireMessage peer_hello = tap.expect(WireMessage::Type::Hello);
    if (peer_hello.proto != party.protocol || peer_hello.n != n) {
        throw NegotiationError("peer hello disagrees on protocol parameters");
    }
    tap.send(WireMessage::hello(party.protocol, n));

    constexpr std::uint8_t kNoBit = 0xff;
    std::vector<std::uint8_t> bit_by_id(n, kNoBit);
    std::vector<std::uint64_t> candidates; // detected ids; conclusive ids for B92
    result.raw_bases.reserve(n);

    for (std::uint64_t id = 0; id < n; ++id) {
        const WireMessage msg = tap.expect(WireMessage::Type::Pulse);
        if (msg.id != id) throw ProtocolViolation("pulse ids must increase strictly");
        channel::Pulse pulse{id, msg.photons};
        pulse = channel::transmit(std::move(pulse), party.chan, self);
        const Basis basis = self.next_bit() == 0 ? Basis::Rectilinear : Basis::Diagonal;
        result.raw_bases.push_back(basis);
        if (pulse.empty()) continue;
        result.stats.n_detected += 1;
        const qsim::MeasureOutcome out = qsim::measure(pulse.photons.front(), basis, self);
        if (is_b92(party.protocol)) {
            // Conclusive only when the outcome is orthogonal to one of the
            // two signal states: V implies 1, 135 deg implies 0.
            if (out.bit == 1) {
                bit_by_id[id] = basis == Basis::Rectilinear ? 1 : 0;
                candidates.push_back(id);
            }
        } else {
            bit_by_id[id] = static_cast<std::uint8_t>(out.bit);
            candidates.push_back(id);
        }
    }

    std::vector<std::uint64_t> keep;
    if (!is_b92(party.protocol)) {
        std::vector<std::uint8_t> mine(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            mine[i] = result.raw_bases[i] == Basis::Diagonal ? 1 : 0;
        }
        tap.send(WireMessage::bases(mine));
        const WireMessage alice_bases_msg = tap.expect(WireMessage::Type::Bases);
        if (alice_bases_msg.bits.size() != n) throw ProtocolViolation("bases length mismatch");
        std::vector<Basis> alice_bases(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            alice_bases[i] = alice_bases_msg.bits[i] ? Basis::Diagonal : Basis::Rectilinear;
        }
        keep = sift(alice_bases, result.raw_bases, candidates);
    } else {
        keep = candidates;
    }
    tap.send(WireMessage::sift(keep));

    result.sifted.pulse_ids = keep;
    for (std::uint64_t id : keep) result.sifted.bits.push_back(bit_by_id[id]);
    result.stats.sifted_len = result.sifted.bits.size();

    const std::vector<std::uint64_t> sample_idx =
        choose_sample(result.sifted.bits.size(), party.config.sample_fraction, self);
    tap.send(WireMessage::sample(sample_idx));
    const std::vector<std::uint8_t> my_sample = gather(result.sifted.bits, sample_idx);
    tap.send(WireMessage::sample_v(my_sample));
    const WireMessage alice_sample = tap.expect(WireMessage::Type::SampleV);
    const QberDecision decision =
        decide_qber(alice_sample.bits, my_sample, party.config.abort_threshold);
    const WireMessage qber_msg = tap.expect(WireMessage::Type::Qber);
    if (qber_msg.qber != decision.qber || qber_msg.abort_flag != decision.abort) {
        throw ProtocolViolation("announced qber disagrees with the announced samples");
    }
    result.stats.qber_est = decision.qber;

    // Ground truth: replay Alice's seeded draw stream. Valid because both
    // endpoints are required to share the master seed.
    {
        Rng alice_rng = base.child("alice");
        std::uint64_t mismatches = 0;
        std::uint64_t pos = 0;
        std::vector<std::uint8_t> alice_bits(n);
        for (std::uint64_t id = 0; id < n; ++id) {
            alice_bits[id] = draw_alice_pulse(party.protocol, party.source, id, alice_rng).bit;
        }
        for (std::uint64_t id : keep) {
            if (alice_bits[id] != result.sifted.bits[pos]) ++mismatches;
            ++pos;
        }
        result.stats.qber_true =
            keep.empty() ? 0.0 : static_cast<double>(mismatches) / static_cast<double>(keep.size());
    }

    if (decision.abort) {
        result.stats.aborted = true;
        tap.expect(WireMessage::Type::Done);
        tap.send(WireMessage::done());
        return result;
    }

    std::vector<std::uint8_t> key_bits;
    {
        std::vector<std::uint8_t> sampled(result.sifted.bits.size(), 0);
        for (std::uint64_t i : sample_idx) sampled[i] = 1;
        for (std::uint64_t i = 0; i < result.sifted.bits.size(); ++i) {
            if (!sampled[i]) key_bits.push_back(result.sifted.bits[i]);
        }
    }

    const CascadePlan plan =
        plan_cascade(key_bits.size(), decision.qber, party.config.ec_passes, pub.child("ec-perm"));
    BobParityLink parity_link(tap);
    const CascadeOutcome cascade = cascade_run(plan, key_bits, /*correcting_side=*/true, parity_link);
    result.stats.ec_leak_bits = cascade.leak_ranges;

    const std::uint64_t fp_seed = pub.child("fp").next_u64();
    const WireMessage alice_fp = tap.expect(WireMessage::Type::Fp);
    const std::uint64_t my_fp = fingerprint(key_bits, fp_seed);
    tap.send(WireMessage::fp_msg(my_fp));
    const std::uint64_t total_leak = cascade.leak_ranges + 64;

    if (alice_fp.fp != my_fp) {
        result.stats.aborted = true;
        tap.expect(WireMessage::Type::Done);
        tap.send(WireMessage::done());
        return result;
    }

    const WireMessage pa = tap.expect(WireMessage::Type::Pa);
    const std::uint64_t out_len =
        pa_output_len(key_bits.size(), total_leak, decision.qber, party.config.pa_safety);
    if (pa.pa_len != out_len) throw ProtocolViolation("peer privacy-amplification length mismatch");
    result.key =
        privacy_amplify(key_bits, total_leak, decision.qber, party.config.pa_safety, pa.pa_seed);
    result.stats.final_len = result.key->bits.size();

    tap.expect(WireMessage::Type::Done);
    tap.send(WireMessage::done());
    return result;
}

wire::WireMessage EveBox::transform(wire::WireMessage msg, bool alice_to_bob) {
    if (!alice_to_bob) return msg;
    if (msg.t == wire::WireMessage::Type::Pulse) {
        channel::Pulse pulse{msg.id, std::move(msg.photons)};
        pulse = channel::eve_apply(strategy_, std::move(pulse), rng_, log_);
        msg.photons = std::move(pulse.photons);
        return msg;
    }
    if (msg.t == wire::WireMessage::Type::Bases && !saw_alice_bases_) {
        // The only bases message flowing from Alice to Bob is her public
        // announcement; Eve wiretaps it for her delayed measurements.
        saw_alice_bases_ = true;
        announced_.reserve(msg.bits.size());
        for (std::uint8_t b : msg.bits) {
            announced_.push_back(b ? Basis::Diagonal : Basis::Rectilinear);
        }
    }
    return msg;
}

} // namespace qkdlab::qkd
