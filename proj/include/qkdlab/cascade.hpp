#pragma once

#include <cstdint>
#include <vector>

#include "qkdlab/rng.hpp"

namespace qkdlab::qkd {

// Shared block/permutation structure for one reconciliation run. Both
// parties derive it from public data (key length, announced QBER, pass
// count, public permutation stream), so no extra negotiation is needed.
struct CascadePlan {
    std::uint64_t n = 0;
    std::uint64_t k1 = 0;
    // perms[p] maps permuted position -> key position for pass p+1; pass 1
    // is the identity.
    std::vector<std::vector<std::uint64_t>> perms;

    std::uint64_t block_size(int pass) const;
};

CascadePlan plan_cascade(std::uint64_t n, double qber_est, int passes, Rng perm_rng);

// One parity comparison. The caller passes its own parity of the permuted
// range [lo, hi) of `pass` and receives the peer's parity.
class ParityLink {
public:
    virtual ~ParityLink() = default;
    virtual int exchange(int pass, std::uint64_t lo, std::uint64_t hi, int mine) = 0;
};

struct CascadeOutcome {
    std::uint64_t leak_ranges = 0; // compared ranges, one leaked bit each
    std::vector<std::uint64_t> corrected_positions;
};

// Runs the deterministic two-party cascade. Both sides execute the same
// agenda; only the correcting side (Bob) flips bits. Each block parity is
// compared once per pass, odd blocks are bisected to a single position, and
// corrections toggle the known diff state of every established pass, which
// is drained before the next pass starts.
CascadeOutcome cascade_run(const CascadePlan& plan, std::vector<std::uint8_t>& bits,
                           bool correcting_side, ParityLink& link);

} // namespace qkdlab::qkd
