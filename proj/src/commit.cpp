#include "qkdlab/commit.hpp"

#include <stdexcept>

namespace qkdlab::commit {

Commitment commit(int bit, std::size_t n, Rng& rng) {
    if (n == 0) throw std::invalid_argument("commitment needs at least one photon");
    if (bit != 0 && bit != 1) throw std::invalid_argument("bit must be 0 or 1");
    Commitment c;
    c.record.mode = CommitMode::Honest;
    c.record.committed_bit = bit;
    const Basis basis = basis_for_bit(bit);
    c.record.coin_flips.reserve(n);
    c.holding.slots.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto flip = static_cast<std::uint8_t>(rng.next_bit());
        c.record.coin_flips.push_back(flip);
        BobHolding::Slot slot;
        slot.pure = qsim::prepare(flip, basis);
        c.holding.slots.push_back(std::move(slot));
    }
    return c;
}

Opening open_honest(const CommitRecord& record) {
    if (record.mode != CommitMode::Honest) {
        throw std::invalid_argument("open_honest requires an honest record");
    }
    return {basis_for_bit(record.committed_bit), record.coin_flips};
}

VerifyResult verify(BobHolding& holding, const Opening& opening, Rng& rng) {
    if (holding.size() != opening.claimed_bits.size()) {
        throw std::invalid_argument("opening length does not match holding");
    }
    bool all_match = true;
    for (std::size_t i = 0; i < holding.slots.size(); ++i) {
        BobHolding::Slot& slot = holding.slots[i];
        int outcome;
        if (slot.pair) {
            const qsim::QubitOutcome out = qsim::measure_qubit(*slot.pair, 1, opening.claimed_basis, rng);
            *slot.pair = out.collapsed;
            outcome = out.bit;
        } else if (slot.pure) {
            const qsim::MeasureOutcome out = qsim::measure(*slot.pure, opening.claimed_basis, rng);
            slot.pure = out.collapsed;
            outcome = out.bit;
        } else {
            throw std::invalid_argument("empty holding slot");
        }
        if (outcome != opening.claimed_bits[i]) all_match = false;
    }
    return all_match ? VerifyResult::Accept : VerifyResult::Reject;
}

Opening cheat_classical(const CommitRecord& record, int desired_bit) {
    if (record.mode != CommitMode::Honest) {
        throw std::invalid_argument("the classical cheat starts from an honest record");
    }
    if (desired_bit == record.committed_bit) {
        throw std::invalid_argument("desired bit equals the committed bit; no cheat needed");
    }
    return {basis_for_bit(desired_bit), record.coin_flips};
}

Opening cheat_classical_flipped(const CommitRecord& record, int desired_bit) {
    Opening o = cheat_classical(record, desired_bit);
    for (auto& b : o.claimed_bits) b ^= 1;
    return o;
}

Commitment cheat_epr_commit(std::size_t n, Rng& rng) {
    (void)rng; // pair creation is deterministic; draws happen at opening
    if (n == 0) throw std::invalid_argument("commitment needs at least one photon");
    Commitment c;
    c.record.mode = CommitMode::EprCheat;
    c.record.pairs.reserve(n);
    c.holding.slots.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto pair = std::make_shared<TwoQubitState>(qsim::singlet());
        c.record.pairs.push_back(pair);
        BobHolding::Slot slot;
        slot.pair = pair;
        c.holding.slots.push_back(std::move(slot));
    }
    return c;
}

Opening cheat_epr_open(CommitRecord& record, int desired_bit, Rng& rng) {
    if (record.mode != CommitMode::EprCheat) {
        throw std::invalid_argument("cheat_epr_open requires an EPR-cheat record");
    }
    if (record.opened) throw std::invalid_argument("record already opened; states are consumed");
    record.opened = true;
    const Basis basis = basis_for_bit(desired_bit);
    Opening opening;
    opening.claimed_basis = basis;
    opening.claimed_bits.reserve(record.pairs.size());
    for (auto& pair : record.pairs) {
        const qsim::QubitOutcome out = qsim::measure_qubit(*pair, 0, basis, rng);
        *pair = out.collapsed;
        // The halves anti-correlate in any shared basis, so Bob holds the
        // opposite polarization with certainty.
        opening.claimed_bits.push_back(static_cast<std::uint8_t>(1 - out.bit));
    }
    return opening;
}

double bob_distinguish(const std::vector<BobHolding>& ensemble_bit0,
                       const std::vector<BobHolding>& ensemble_bit1) {
    auto average = [](const std::vector<BobHolding>& ensemble) {
        qsim::Mat2 avg;
        std::size_t count = 0;
        for (const BobHolding& holding : ensemble) {
            for (const BobHolding::Slot& slot : holding.slots) {
                if (slot.pair) {
                    const qsim::Mat2 rho = qsim::reduced_density(*slot.pair, 1);
                    for (int i = 0; i < 4; ++i) avg.m[static_cast<std::size_t>(i)] += rho.m[static_cast<std::size_t>(i)];
                } else if (slot.pure) {
                    const PureState& s = *slot.pure;
                    avg.at(0, 0) += s.a_h * std::conj(s.a_h);
                    avg.at(0, 1) += s.a_h * std::conj(s.a_v);
                    avg.at(1, 0) += s.a_v * std::conj(s.a_h);
                    avg.at(1, 1) += s.a_v * std::conj(s.a_v);
                }
                ++count;
            }
        }
        if (count == 0) throw std::invalid_argument("empty ensemble");
        for (auto& entry : avg.m) entry /= static_cast<double>(count);
        return avg;
    };
    return qsim::trace_distance(average(ensemble_bit0), average(ensemble_bit1));
}

} // namespace qkdlab::commit
