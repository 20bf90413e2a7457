#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "qkdlab/qsim.hpp"

namespace qkdlab::commit {

using qsim::Basis;
using qsim::PureState;
using qsim::TwoQubitState;

enum class CommitMode : std::uint8_t { Honest, EprCheat };
enum class VerifyResult : std::uint8_t { Accept, Reject };

// Committing to 0 uses the rectilinear basis, to 1 the diagonal one.
inline Basis basis_for_bit(int bit) { return bit == 0 ? Basis::Rectilinear : Basis::Diagonal; }

// Alice's side of one commitment. An honest record remembers the committed
// bit and coin flips; an EPR-cheat record holds the unmeasured halves of the
// entangled pairs (shared with Bob's holding) and no committed bit.
struct CommitRecord {
    CommitMode mode = CommitMode::Honest;
    int committed_bit = -1;
    std::vector<std::uint8_t> coin_flips;
    std::vector<std::shared_ptr<TwoQubitState>> pairs;
    bool opened = false;

    std::size_t size() const {
        return mode == CommitMode::Honest ? coin_flips.size() : pairs.size();
    }
};

// Bob stores the received quantum states unmeasured until opening. Each slot
// is either a free photon or Bob's half (the second qubit) of a shared pair.
struct BobHolding {
    struct Slot {
        std::optional<PureState> pure;
        std::shared_ptr<TwoQubitState> pair;
    };

    std::vector<Slot> slots;

    std::size_t size() const { return slots.size(); }
};

struct Opening {
    Basis claimed_basis;
    std::vector<std::uint8_t> claimed_bits;
};

struct Commitment {
    CommitRecord record;
    BobHolding holding;
};

// Honest commitment: n coin flips encoded in the basis matching the bit.
Commitment commit(int bit, std::size_t n, Rng& rng);

// Unveils the committed values; rejects EPR-cheat records.
Opening open_honest(const CommitRecord& record);

// Bob measures every held state in the claimed basis and accepts only if all
// outcomes match the claimed bits.
VerifyResult verify(BobHolding& holding, const Opening& opening, Rng& rng);

// The classical liar: announce the other basis with the original coin flips.
// Any fixed bit rule gives the same acceptance statistics; this one keeps
// tests deterministic in structure.
Opening cheat_classical(const CommitRecord& record, int desired_bit);

// Alternative announcement rule used to check that acceptance statistics do
// not depend on the claimed bit values.
Opening cheat_classical_flipped(const CommitRecord& record, int desired_bit);

// EPR cheat, commit phase: n singlets, Bob holds the second photons, Alice
// stores the joint states and delays measuring.
Commitment cheat_epr_commit(std::size_t n, Rng& rng);

// EPR cheat, open phase: Alice measures her halves in the basis matching the
// desired bit and claims the opposite outcomes. Consumes the record.
Opening cheat_epr_open(CommitRecord& record, int desired_bit, Rng& rng);

// Trace distance between Bob's average per-photon density matrices over two
// ensembles of holdings.
double bob_distinguish(const std::vector<BobHolding>& ensemble_bit0,
                       const std::vector<BobHolding>& ensemble_bit1);

} // namespace qkdlab::commit
