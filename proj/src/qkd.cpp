#include "qkdlab/qkd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "qkdlab/cascade.hpp"

namespace qkdlab::qkd {

void ProtocolConfig::validate() const {
    if (n_pulses < 1) throw std::invalid_argument("n_pulses must be >= 1");
    if (!(sample_fraction > 0.0 && sample_fraction < 1.0)) {
        throw std::invalid_argument("sample_fraction must lie in (0,1)");
    }
    if (!(abort_threshold > 0.0 && abort_threshold < 1.0)) {
        throw std::invalid_argument("abort_threshold must lie in (0,1)");
    }
    if (ec_passes < 1) throw std::invalid_argument("ec_passes must be >= 1");
    if (!(chsh_fraction >= 0.0 && chsh_fraction < 1.0)) {
        throw std::invalid_argument("chsh_fraction must lie in [0,1)");
    }
}

std::vector<std::uint64_t> sift(const std::vector<Basis>& alice_bases,
                                const std::vector<Basis>& bob_bases,
                                const std::vector<std::uint64_t>& detected_ids) {
    if (alice_bases.size() != bob_bases.size()) {
        throw std::invalid_argument("basis lists differ in length");
    }
    std::vector<std::uint64_t> kept;
    kept.reserve(detected_ids.size());
    for (std::uint64_t id : detected_ids) {
        if (id >= alice_bases.size()) throw std::invalid_argument("detected id out of range");
        if (alice_bases[id] == bob_bases[id]) kept.push_back(id);
    }
    return kept;
}

QberEstimate estimate_qber(const std::vector<std::uint8_t>& alice_bits,
                           const std::vector<std::uint8_t>& bob_bits,
                           const std::vector<std::uint64_t>& sample_idx) {
    if (alice_bits.size() != bob_bits.size()) {
        throw std::invalid_argument("bit strings differ in length");
    }
    if (sample_idx.empty()) throw std::invalid_argument("cannot estimate QBER from an empty sample");
    std::uint64_t mismatches = 0;
    std::vector<std::uint8_t> sampled(alice_bits.size(), 0);
    for (std::uint64_t i : sample_idx) {
        if (i >= alice_bits.size()) throw std::invalid_argument("sample index out of range");
        if (sampled[i]) throw std::invalid_argument("duplicate sample index");
        sampled[i] = 1;
        if (alice_bits[i] != bob_bits[i]) ++mismatches;
    }
    QberEstimate est;
    est.qber = static_cast<double>(mismatches) / static_cast<double>(sample_idx.size());
    for (std::uint64_t i = 0; i < alice_bits.size(); ++i) {
        if (!sampled[i]) est.remaining.push_back(i);
    }
    return est;
}

std::vector<std::uint64_t> choose_sample(std::uint64_t sifted_len, double fraction, Rng& rng) {
    if (sifted_len == 0) return {};
    auto m = static_cast<std::uint64_t>(std::floor(fraction * static_cast<double>(sifted_len)));
    m = std::max<std::uint64_t>(1, std::min(m, sifted_len));
    std::vector<std::uint64_t> idx(sifted_len);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::uint64_t i = 0; i < m; ++i) {
        const std::uint64_t j = i + rng.next_below(sifted_len - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    return idx;
}

Verdict check_abort(double qber_est, double threshold) {
    return qber_est > threshold ? Verdict::Abort : Verdict::Proceed;
}

namespace {

// Direct in-process parity link: the peer's parities are computed from
// Alice's (uncorrected) bits against the same plan.
class DirectLink final : public ParityLink {
public:
    DirectLink(const CascadePlan& plan, const std::vector<std::uint8_t>& alice_bits,
               std::vector<ParityRecord>& records)
        : plan_(plan), alice_bits_(alice_bits), records_(records) {}

    int exchange(int pass, std::uint64_t lo, std::uint64_t hi, int mine) override {
        const auto& perm = plan_.perms[static_cast<std::size_t>(pass - 1)];
        int theirs = 0;
        for (std::uint64_t i = lo; i < hi; ++i) theirs ^= alice_bits_[perm[i]];
        records_.push_back({pass, lo, hi, theirs, mine});
        return theirs;
    }

private:
    const CascadePlan& plan_;
    const std::vector<std::uint8_t>& alice_bits_;
    std::vector<ParityRecord>& records_;
};

} // namespace

ReconcileResult reconcile(const std::vector<std::uint8_t>& alice_bits,
                          std::vector<std::uint8_t> bob_bits, double qber_est, int ec_passes,
                          Rng perm_rng) {
    if (alice_bits.size() != bob_bits.size()) {
        throw std::invalid_argument("bit strings differ in length");
    }
    ReconcileResult result;
    const CascadePlan plan = plan_cascade(bob_bits.size(), qber_est, ec_passes, perm_rng);
    DirectLink link(plan, alice_bits, result.exchanges);
    const CascadeOutcome outcome = cascade_run(plan, bob_bits, /*correcting_side=*/true, link);
    result.bob_corrected = std::move(bob_bits);
    result.leak_bits = outcome.leak_ranges;
    return result;
}

namespace {

constexpr std::uint64_t kFingerprintModulus = (1ULL << 61) - 1; // Mersenne prime

std::uint64_t mulmod_m61(std::uint64_t a, std::uint64_t b) {
    const unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
    std::uint64_t lo = static_cast<std::uint64_t>(prod & kFingerprintModulus);
    std::uint64_t hi = static_cast<std::uint64_t>(prod >> 61);
    std::uint64_t s = lo + hi;
    if (s >= kFingerprintModulus) s -= kFingerprintModulus;
    return s;
}

} // namespace

std::uint64_t fingerprint(const std::vector<std::uint8_t>& bits, std::uint64_t offset_seed) {
    // Polynomial evaluation sum b_i * r^(i+1) mod 2^61-1; r is the seeded
    // public offset.
    const std::uint64_t r = 2 + offset_seed % (kFingerprintModulus - 3);
    std::uint64_t acc = 0;
    std::uint64_t power = 1;
    for (std::uint8_t b : bits) {
        power = mulmod_m61(power, r);
        if (b) {
            acc += power;
            if (acc >= kFingerprintModulus) acc -= kFingerprintModulus;
        }
    }
    return acc;
}

bool verify_equal(const std::vector<std::uint8_t>& alice_bits,
                  const std::vector<std::uint8_t>& bob_bits, std::uint64_t offset_seed) {
    if (alice_bits.size() != bob_bits.size()) {
        throw std::invalid_argument("bit strings differ in length");
    }
    return fingerprint(alice_bits, offset_seed) == fingerprint(bob_bits, offset_seed);
}

double binary_entropy(double q) {
    if (q <= 0.0 || q >= 1.0) return 0.0;
    return -q * std::log2(q) - (1.0 - q) * std::log2(1.0 - q);
}

std::uint64_t pa_output_len(std::uint64_t n, std::uint64_t leak_bits, double qber_est,
                            std::uint32_t safety) {
    const double q = std::min(std::max(qber_est, 0.0), 0.5);
    const auto eve_info =
        static_cast<std::uint64_t>(std::ceil(static_cast<double>(n) * binary_entropy(q)));
    const std::uint64_t removed = leak_bits + eve_info + safety;
    return n > removed ? n - removed : 0;
}

KeyMaterial privacy_amplify(const std::vector<std::uint8_t>& bits, std::uint64_t leak_bits,
                            double qber_est, std::uint32_t safety, std::uint64_t pa_seed) {
    const std::uint64_t n = bits.size();
    const std::uint64_t out_len = pa_output_len(n, leak_bits, qber_est, safety);
    KeyMaterial key;
    if (out_len == 0) return key;

    // Toeplitz matrix T[i][j] = t[i + (n-1-j)]; row i is then the window
    // t[i .. i+n) against the reversed key, which packs into 64-bit words.
    const std::uint64_t t_bits = n + out_len - 1;
    const std::uint64_t t_words = (t_bits + 63) / 64 + 1;
    Rng diag_rng = Rng(pa_seed).child("toeplitz");
    std::vector<std::uint64_t> t(t_words);
    for (auto& w : t) w = diag_rng.next_u64();

    const std::uint64_t n_words = (n + 63) / 64;
    std::vector<std::uint64_t> rev(n_words, 0);
    for (std::uint64_t j = 0; j < n; ++j) {
        if (bits[j]) rev[(n - 1 - j) / 64] |= 1ULL << ((n - 1 - j) % 64);
    }

    key.bits.resize(out_len);
    for (std::uint64_t i = 0; i < out_len; ++i) {
        const std::uint64_t word = i / 64;
        const unsigned shift = static_cast<unsigned>(i % 64);
        int acc = 0;
        for (std::uint64_t w = 0; w < n_words; ++w) {
            std::uint64_t window = t[word + w] >> shift;
            if (shift) window |= t[word + w + 1] << (64 - shift);
            std::uint64_t masked = window & rev[w];
            if (w == n_words - 1 && n % 64) masked &= (1ULL << (n % 64)) - 1;
            acc ^= __builtin_parityll(masked);
        }
        key.bits[i] = static_cast<std::uint8_t>(acc);
    }
    return key;
}

ReplaySummary replay(const std::vector<wire::WireMessage>& transcript,
                     const ProtocolConfig& config) {
    ReplaySummary out;
    std::vector<std::uint8_t> first_sample_bits;
    bool have_first_sample = false;
    std::uint64_t mismatches = 0;
    double announced_qber = 0.0;
    bool saw_qber = false;
    std::set<std::tuple<int, std::uint64_t, std::uint64_t>> ranges;
    bool saw_fp = false;
    bool saw_pa = false;
    std::uint64_t pa_len = 0;
    for (const auto& msg : transcript) {
        switch (msg.t) {
            case wire::WireMessage::Type::Sift:
                out.sifted_len = msg.ids.size();
                break;
            case wire::WireMessage::Type::Sample:
                out.sampled = msg.ids.size();
                break;
            case wire::WireMessage::Type::SampleV:
                if (!have_first_sample) {
                    first_sample_bits = msg.bits;
                    have_first_sample = true;
                } else {
                    if (msg.bits.size() != first_sample_bits.size()) {
                        throw ProtocolViolation("sample announcements differ in length");
                    }
                    for (std::size_t i = 0; i < msg.bits.size(); ++i) {
                        if (msg.bits[i] != first_sample_bits[i]) ++mismatches;
                    }
                }
                break;
            case wire::WireMessage::Type::Qber:
                saw_qber = true;
                announced_qber = msg.qber;
                out.aborted = msg.abort_flag;
                break;
            case wire::WireMessage::Type::Parity:
                ranges.insert({msg.pass, msg.lo, msg.hi});
                break;
            case wire::WireMessage::Type::Fp:
                saw_fp = true;
                break;
            case wire::WireMessage::Type::Pa:
                saw_pa = true;
                pa_len = msg.pa_len;
                break;
            default:
                break;
        }
    }
    if (out.sampled > 0) {
        out.qber_est = static_cast<double>(mismatches) / static_cast<double>(out.sampled);
        if (saw_qber && announced_qber != out.qber_est) {
            throw ProtocolViolation("announced qber does not match the announced sample values");
        }
    }
    out.leak_ranges = ranges.size();
    out.fingerprint_bits = saw_fp ? 64 : 0;
    if (!out.aborted && saw_pa) {
        const std::uint64_t n_key = out.sifted_len - out.sampled;
        out.final_len = pa_output_len(n_key, out.leak_ranges + out.fingerprint_bits, out.qber_est,
                                      config.pa_safety);
        if (out.final_len != pa_len) {
            throw ProtocolViolation("transcript pa length does not match recomputation");
        }
    }
    return out;
}

// Bits pack MSB-first, four per hex digit; a short final nibble pads with
// zeros on the right.
std::string key_to_hex(const std::vector<std::uint8_t>& bits) {
    static const char* digits = "0123456789abcdef";
    std::string hex;
    hex.reserve((bits.size() + 3) / 4);
    for (std::size_t i = 0; i < bits.size(); i += 4) {
        int nibble = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            nibble <<= 1;
            if (i + j < bits.size() && bits[i + j]) nibble |= 1;
        }
        hex.push_back(digits[nibble]);
    }
    return hex;
}

} // namespace qkdlab::qkd
