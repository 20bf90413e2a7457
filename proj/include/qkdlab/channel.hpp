#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qkdlab/qsim.hpp"

namespace qkdlab::channel {

using qsim::Basis;
using qsim::PureState;

// A laser pulse: zero or more photons sharing a polarization at emission.
// After the channel acts, surviving photons may differ.
struct Pulse {
    std::uint64_t id = 0;
    std::vector<PureState> photons;

    bool empty() const { return photons.empty(); }
    std::size_t count() const { return photons.size(); }
};

struct SourceConfig {
    enum class Kind : std::uint8_t { IdealSingle, WeakCoherent };

    Kind kind = Kind::IdealSingle;
    double mu = 0.0; // mean photon number, WeakCoherent only

    static SourceConfig ideal() { return {Kind::IdealSingle, 0.0}; }
    static SourceConfig weak_coherent(double mu);
};

struct ChannelConfig {
    double survive_prob = 1.0; // per-photon transmission
    double flip_x_prob = 0.0;
    double flip_z_prob = 0.0;

    void validate() const;
};

struct EveStrategy {
    enum class Kind : std::uint8_t { None, InterceptResend, PhotonNumberSplit };
    enum class Policy : std::uint8_t { AlwaysRect, AlwaysDiag, RandomBasis };

    Kind kind = Kind::None;
    Policy policy = Policy::RandomBasis;

    static EveStrategy none() { return {Kind::None, Policy::RandomBasis}; }
    static EveStrategy intercept_resend(Policy p) { return {Kind::InterceptResend, p}; }
    static EveStrategy photon_number_split() { return {Kind::PhotonNumberSplit, Policy::RandomBasis}; }
};

// Eve's per-pulse records: measurement results for intercept-resend, stolen
// photons for photon-number splitting. At most one record per pulse id.
struct EveLog {
    struct InterceptRecord {
        Basis basis;
        int outcome;
    };

    std::map<std::uint64_t, InterceptRecord> intercepts;
    std::map<std::uint64_t, PureState> stored_photons;

    std::size_t captured_count() const { return stored_photons.size(); }
    void clear() {
        intercepts.clear();
        stored_photons.clear();
    }
};

// Emits one pulse carrying `prepare(bit, basis)` photons: exactly one for an
// ideal source, Poisson(mu) many for a weak-coherent one.
Pulse emit(const SourceConfig& source, std::uint64_t id, int bit, Basis basis, Rng& rng);

// Independent per-photon loss, then an X flip with probability flip_x_prob
// and a Z flip with probability flip_z_prob on each survivor.
Pulse transmit(Pulse pulse, const ChannelConfig& channel, Rng& rng);

// Applies the eavesdropping strategy between emission and the channel.
// InterceptResend measures one photon and replaces the pulse with a single
// fresh photon of the measured polarization; PhotonNumberSplit steals one
// photon from multiphoton pulses and forwards the rest untouched.
Pulse eve_apply(const EveStrategy& strategy, Pulse pulse, Rng& rng, EveLog& log);

// Turns Eve's records into per-pulse bit guesses once the bases are public.
// Stored photons are measured in the announced basis; intercept records
// replay the recorded outcome.
std::map<std::uint64_t, int> eve_finalize(const EveLog& log,
                                          const std::vector<Basis>& announced_bases, Rng& rng);

} // namespace qkdlab::channel
