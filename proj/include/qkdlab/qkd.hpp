#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qkdlab/channel.hpp"
#include "qkdlab/qsim.hpp"
#include "qkdlab/wire.hpp"

namespace qkdlab::qkd {

using qsim::Basis;

struct ProtocolConfig {
    std::uint64_t n_pulses = 1000;
    double sample_fraction = 0.5;  // share of the sifted key announced for QBER estimation
    double abort_threshold = 0.10; // strict: abort iff qber_est > threshold
    std::uint32_t pa_safety = 30;  // extra bits removed by privacy amplification
    int ec_passes = 2;
    double chsh_fraction = 0.25;   // EPR only: share of pulses diverted to the Bell test

    void validate() const;
};

// Bits kept after basis comparison, together with their source pulse ids.
struct SiftedKey {
    std::vector<std::uint8_t> bits;
    std::vector<std::uint64_t> pulse_ids;
};

struct KeyMaterial {
    std::vector<std::uint8_t> bits;
};

struct SessionStats {
    std::string protocol;
    std::uint64_t seed = 0;
    std::uint64_t n_pulses = 0;
    std::uint64_t n_detected = 0;
    std::uint64_t sifted_len = 0;
    double qber_est = 0.0;
    // Simulator ground truth over the full sifted key; absent on the sender
    // side of a networked run, where only public information is available.
    std::optional<double> qber_true;
    bool aborted = false;
    std::uint64_t ec_leak_bits = 0; // disclosed parity ranges (fingerprint bits counted separately)
    std::uint64_t final_len = 0;
    std::optional<double> eve_accuracy;
    std::optional<double> chsh;
};

enum class Verdict : std::uint8_t { Proceed, Abort };

// ------------------------------------------------------------------
// Classical post-processing operations

// Keeps the ids where both bases agree and a detection occurred; order
// preserved. Basis lists must have equal length.
std::vector<std::uint64_t> sift(const std::vector<Basis>& alice_bases,
                                const std::vector<Basis>& bob_bases,
                                const std::vector<std::uint64_t>& detected_ids);

struct QberEstimate {
    double qber;
    std::vector<std::uint64_t> remaining; // positions of the sifted key kept for key material
};

// Mismatch fraction over the sampled positions; sampled positions are
// removed from key material. sample_idx holds positions into the sifted
// arrays and must be non-empty.
QberEstimate estimate_qber(const std::vector<std::uint8_t>& alice_bits,
                           const std::vector<std::uint8_t>& bob_bits,
                           const std::vector<std::uint64_t>& sample_idx);

// Bob's random choice of sample positions: floor(fraction * len) of them,
// at least one when the key is non-empty.
std::vector<std::uint64_t> choose_sample(std::uint64_t sifted_len, double fraction, Rng& rng);

Verdict check_abort(double qber_est, double threshold);

struct ParityRecord {
    int pass;
    std::uint64_t lo;
    std::uint64_t hi;
    int alice_parity;
    int bob_parity;
};

struct ReconcileResult {
    std::vector<std::uint8_t> bob_corrected;
    std::uint64_t leak_bits; // compared parity ranges
    std::vector<ParityRecord> exchanges;
};

// Cascade-style reconciliation: pass 1 on blocks of
// k1 = clamp(ceil(0.73 / max(qber_est, 1/n)), 4, n), each further pass on
// doubled blocks over a fresh seeded permutation; odd blocks are fixed by
// parity bisection and corrections cascade back into earlier passes. Every
// compared range counts one bit toward leak_bits. Positions are never
// discarded.
ReconcileResult reconcile(const std::vector<std::uint8_t>& alice_bits,
                          std::vector<std::uint8_t> bob_bits, double qber_est, int ec_passes,
                          Rng perm_rng);

// 64-bit polynomial fingerprint over a fixed prime modulus, evaluated at a
// point derived from offset_seed.
std::uint64_t fingerprint(const std::vector<std::uint8_t>& bits, std::uint64_t offset_seed);

// Compares public fingerprints; equal-length inputs.
bool verify_equal(const std::vector<std::uint8_t>& alice_bits,
                  const std::vector<std::uint8_t>& bob_bits, std::uint64_t offset_seed);

double binary_entropy(double q);

// Output length max(0, n - leak - ceil(n*h2(clamp(qber,0,0.5))) - safety).
std::uint64_t pa_output_len(std::uint64_t n, std::uint64_t leak_bits, double qber_est,
                            std::uint32_t safety);

// Multiplies the key by a seeded random 0/1 Toeplitz matrix over GF(2),
// shrinking it to pa_output_len bits.
KeyMaterial privacy_amplify(const std::vector<std::uint8_t>& bits, std::uint64_t leak_bits,
                            double qber_est, std::uint32_t safety, std::uint64_t pa_seed);

// ------------------------------------------------------------------
// Full sessions

struct SessionResult {
    SessionStats stats;
    std::optional<KeyMaterial> alice_key;
    std::optional<KeyMaterial> bob_key;
    std::vector<wire::WireMessage> transcript; // Alice's view
};

// Full BB84 pipeline: emit -> eve -> channel -> measure -> sift -> estimate ->
// abort check -> reconcile -> verify -> privacy-amplify. The rng seeds the
// per-party child streams; an aborted run is still a successful run.
SessionResult run_bb84(const ProtocolConfig& config, const channel::SourceConfig& source,
                       const channel::ChannelConfig& chan, const channel::EveStrategy& eve,
                       const Rng& rng);

// B92: |H> encodes 0 and |45 deg> encodes 1; only conclusive outcomes (V or
// 135 deg) enter the sifted key.
SessionResult run_b92(const ProtocolConfig& config, const channel::SourceConfig& source,
                      const channel::ChannelConfig& chan, const channel::EveStrategy& eve,
                      const Rng& rng);

// EPR protocol: a singlet source, Bob's half routed through Eve and the
// channel, a CHSH check on a diverted fraction of the pulses, and the
// standard post-processing on the rest. In-process only.
SessionResult run_epr(const ProtocolConfig& config, const channel::ChannelConfig& chan,
                      const channel::EveStrategy& eve, const Rng& rng);

// ------------------------------------------------------------------
// Transcript replay

struct ReplaySummary {
    std::uint64_t sifted_len = 0;
    std::uint64_t sampled = 0;
    double qber_est = 0.0;
    bool aborted = false;
    std::uint64_t leak_ranges = 0;
    std::uint64_t fingerprint_bits = 0;
    std::uint64_t final_len = 0;
};

// Recomputes the public post-processing quantities from a recorded
// transcript alone.
ReplaySummary replay(const std::vector<wire::WireMessage>& transcript,
                     const ProtocolConfig& config);

// Key bits packed MSB-first, four per lowercase hex digit.
std::string key_to_hex(const std::vector<std::uint8_t>& bits);

} // namespace qkdlab::qkd
