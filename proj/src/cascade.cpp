#include "qkdlab/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

namespace qkdlab::qkd {

std::uint64_t CascadePlan::block_size(int pass) const {
    std::uint64_t k = k1;
    for (int p = 1; p < pass; ++p) {
        if (k >= n) break;
        k *= 2;
    }
    return std::min(k, n);
}

CascadePlan plan_cascade(std::uint64_t n, double qber_est, int passes, Rng perm_rng) {
    if (passes < 1) throw std::invalid_argument("cascade needs at least one pass");
    CascadePlan plan;
    plan.n = n;
    if (n == 0) return plan;
    const double q = std::max(qber_est, 1.0 / static_cast<double>(n));
    const auto raw = static_cast<std::uint64_t>(std::ceil(0.73 / q));
    plan.k1 = std::min<std::uint64_t>(n, std::max<std::uint64_t>(4, raw));
    plan.perms.resize(static_cast<std::size_t>(passes));
    for (int p = 0; p < passes; ++p) {
        auto& perm = plan.perms[static_cast<std::size_t>(p)];
        perm.resize(n);
        for (std::uint64_t i = 0; i < n; ++i) perm[i] = i;
        if (p > 0) {
            for (std::uint64_t i = n - 1; i > 0; --i) {
                std::swap(perm[i], perm[perm_rng.next_below(i + 1)]);
            }
        }
    }
    return plan;
}

namespace {

struct PassState {
    const std::vector<std::uint64_t>* perm = nullptr;
    std::vector<std::uint64_t> inverse;
    std::uint64_t block = 0; // block size
    std::vector<std::uint8_t> diff;
};

class Driver {
public:
    Driver(const CascadePlan& plan, std::vector<std::uint8_t>& bits, bool correcting,
           ParityLink& link)
        : plan_(plan), bits_(bits), correcting_(correcting), link_(link) {}

    CascadeOutcome run() {
        const int passes = static_cast<int>(plan_.perms.size());
        for (int p = 1; p <= passes; ++p) {
            establish_pass(p);
            drain();
        }
        return std::move(outcome_);
    }

private:
    int parity_of(const PassState& st, std::uint64_t lo, std::uint64_t hi) const {
        int v = 0;
        for (std::uint64_t i = lo; i < hi; ++i) v ^= bits_[(*st.perm)[i]];
        return v;
    }

    // Exchanges one range and returns whether the parities differ. Compared
    // ranges are remembered: the diff state of a known range is maintained
    // through corrections, so no range is ever disclosed twice.
    bool compare(int pass, std::uint64_t lo, std::uint64_t hi) {
        const auto key = std::make_tuple(pass, lo, hi);
        const auto it = known_.find(key);
        if (it != known_.end()) return it->second != 0;
        const PassState& st = states_[static_cast<std::size_t>(pass - 1)];
        const int mine = parity_of(st, lo, hi);
        const int theirs = link_.exchange(pass, lo, hi, mine);
        ++outcome_.leak_ranges;
        const int diff = mine != theirs ? 1 : 0;
        known_.emplace(key, diff);
        return diff != 0;
    }

    void establish_pass(int pass) {
        PassState st;
        st.perm = &plan_.perms[static_cast<std::size_t>(pass - 1)];
        st.block = plan_.block_size(pass);
        st.inverse.resize(plan_.n);
        for (std::uint64_t i = 0; i < plan_.n; ++i) st.inverse[(*st.perm)[i]] = i;
        const std::uint64_t blocks = (plan_.n + st.block - 1) / st.block;
        st.diff.assign(blocks, 0);
        states_.push_back(std::move(st));
        PassState& ref = states_.back();
        for (std::uint64_t b = 0; b < blocks; ++b) {
            const std::uint64_t lo = b * ref.block;
            const std::uint64_t hi = std::min(plan_.n, lo + ref.block);
            ref.diff[b] = compare(pass, lo, hi) ? 1 : 0;
        }
    }

    // Corrects errors until every established block parity matches again.
    void drain() {
        for (;;) {
            bool any = false;
            for (std::size_t pi = 0; pi < states_.size(); ++pi) {
                PassState& st = states_[pi];
                for (std::uint64_t b = 0; b < st.diff.size(); ++b) {
                    if (!st.diff[b]) continue;
                    any = true;
                    const std::uint64_t lo = b * st.block;
                    const std::uint64_t hi = std::min(plan_.n, lo + st.block);
                    const std::uint64_t pos = bisect(static_cast<int>(pi + 1), lo, hi);
                    apply_correction(pos);
                }
            }
            if (!any) return;
        }
    }

    // Parity-guided binary search inside a range known to hold an odd number
    // of differing positions. Returns the located key position.
    std::uint64_t bisect(int pass, std::uint64_t lo, std::uint64_t hi) {
        const PassState& st = states_[static_cast<std::size_t>(pass - 1)];
        while (hi - lo > 1) {
            const std::uint64_t mid = lo + (hi - lo) / 2;
            if (compare(pass, lo, mid)) hi = mid;
            else lo = mid;
        }
        return (*st.perm)[lo];
    }

    void apply_correction(std::uint64_t pos) {
        if (correcting_) bits_[pos] ^= 1;
        outcome_.corrected_positions.push_back(pos);
        for (PassState& st : states_) {
            st.diff[st.inverse[pos] / st.block] ^= 1;
        }
        for (auto& [key, diff] : known_) {
            const auto& st = states_[static_cast<std::size_t>(std::get<0>(key) - 1)];
            const std::uint64_t idx = st.inverse[pos];
            if (idx >= std::get<1>(key) && idx < std::get<2>(key)) diff ^= 1;
        }
    }

    const CascadePlan& plan_;
    std::vector<std::uint8_t>& bits_;
    bool correcting_;
    ParityLink& link_;
    std::vector<PassState> states_;
    std::map<std::tuple<int, std::uint64_t, std::uint64_t>, int> known_;
    CascadeOutcome outcome_;
};

} // namespace

CascadeOutcome cascade_run(const CascadePlan& plan, std::vector<std::uint8_t>& bits,
                           bool correcting_side, ParityLink& link) {
    if (bits.size() != plan.n) throw std::invalid_argument("bits do not match the cascade plan");
    if (plan.n == 0) return {};
    Driver driver(plan, bits, correcting_side, link);
    return driver.run();
}

} // namespace qkdlab::qkd
