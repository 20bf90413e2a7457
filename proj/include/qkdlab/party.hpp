#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qkdlab/channel.hpp"
#include "qkdlab/qkd.hpp"
#include "qkdlab/wire.hpp"

namespace qkdlab::qkd {

// Everything one endpoint needs to run its side of a session. Both parties
// must be launched with the same parameters and master seed; labeled child
// streams keep their private randomness independent while giving them a
// shared public coin for permutations and fingerprints.
struct PartyConfig {
    std::string protocol = "bb84"; // bb84 | b92
    ProtocolConfig config;
    channel::SourceConfig source;  // Alice side
    channel::ChannelConfig chan;   // applied at Bob's input
    std::uint64_t seed = 0;
};

struct PartyResult {
    SessionStats stats;
    SiftedKey sifted; // both parties hold the same pulse_ids by construction
    std::optional<KeyMaterial> key;
    std::vector<wire::WireMessage> transcript; // this party's send/recv order

    // Simulation-side data used by the harness for ground truth.
    std::vector<std::uint8_t> raw_bits;
    std::vector<Basis> raw_bases;
};

// Runs Alice's (sender) side of the lockstep protocol over the channel.
PartyResult run_alice(const PartyConfig& party, wire::MessageChannel& link);

// Runs Bob's (receiver) side; Bob applies the physical channel to incoming
// pulses, chooses the QBER sample, and corrects his key toward Alice's.
PartyResult run_bob(const PartyConfig& party, wire::MessageChannel& link);

// In-transit eavesdropper applied to pulse messages, shared between the
// in-process interceptor and the networked proxy. Classical messages pass
// through untouched; Alice's basis announcement is wiretapped for
// eve_finalize.
class EveBox {
public:
    EveBox(const channel::EveStrategy& strategy, Rng rng)
        : strategy_(strategy), rng_(std::move(rng)) {}

    wire::WireMessage transform(wire::WireMessage msg, bool alice_to_bob);

    const channel::EveLog& log() const { return log_; }
    const std::vector<Basis>& announced_bases() const { return announced_; }
    Rng& rng() { return rng_; }

private:
    channel::EveStrategy strategy_;
    Rng rng_;
    channel::EveLog log_;
    std::vector<Basis> announced_;
    bool saw_alice_bases_ = false;
};

} // namespace qkdlab::qkd
