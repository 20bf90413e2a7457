#include "qkdlab/channel.hpp"

#include <stdexcept>

namespace qkdlab::channel {

SourceConfig SourceConfig::weak_coherent(double mu) {
    if (mu < 0.0) throw std::invalid_argument("mean photon number must be >= 0");
    return {Kind::WeakCoherent, mu};
}

void ChannelConfig::validate() const {
    auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!in_unit(survive_prob) || !in_unit(flip_x_prob) || !in_unit(flip_z_prob)) {
        throw std::invalid_argument("channel probabilities must lie in [0,1]");
    }
}

Pulse emit(const SourceConfig& source, std::uint64_t id, int bit, Basis basis, Rng& rng) {
    if (source.kind == SourceConfig::Kind::WeakCoherent && source.mu < 0.0) {
        throw std::invalid_argument("mean photon number must be >= 0");
    }
    const int count = source.kind == SourceConfig::Kind::IdealSingle ? 1 : rng.poisson(source.mu);
    Pulse pulse;
    pulse.id = id;
    pulse.photons.assign(static_cast<std::size_t>(count), qsim::prepare(bit, basis));
    return pulse;
}

Pulse transmit(Pulse pulse, const ChannelConfig& channel, Rng& rng) {
    channel.validate();
    std::vector<PureState> kept;
    kept.reserve(pulse.photons.size());
    for (const PureState& photon : pulse.photons) {
        if (rng.next_double() >= channel.survive_prob) continue;
        PureState out = photon;
        if (rng.next_double() < channel.flip_x_prob) out = qsim::flip_x(out);
        if (rng.next_double() < channel.flip_z_prob) out = qsim::flip_z(out);
        kept.push_back(out);
    }
    pulse.photons = std::move(kept);
    return pulse;
}

Pulse eve_apply(const EveStrategy& strategy, Pulse pulse, Rng& rng, EveLog& log) {
    switch (strategy.kind) {
        case EveStrategy::Kind::None:
            return pulse;
        case EveStrategy::Kind::InterceptResend: {
            if (pulse.empty()) return pulse;
            Basis basis;
            switch (strategy.policy) {
                case EveStrategy::Policy::AlwaysRect: basis = Basis::Rectilinear; break;
                case EveStrategy::Policy::AlwaysDiag: basis = Basis::Diagonal; break;
                default: basis = rng.next_bool() ? Basis::Diagonal : Basis::Rectilinear; break;
            }
            const qsim::MeasureOutcome out = qsim::measure(pulse.photons.front(), basis, rng);
            log.intercepts[pulse.id] = {basis, out.bit};
            pulse.photons.assign(1, qsim::prepare(out.bit, basis));
            return pulse;
        }
        case EveStrategy::Kind::PhotonNumberSplit: {
            if (pulse.count() >= 2) {
                log.stored_photons.emplace(pulse.id, pulse.photons.back());
                pulse.photons.pop_back();
            }
            return pulse;
        }
    }
    return pulse;
}

std::map<std::uint64_t, int> eve_finalize(const EveLog& log,
                                          const std::vector<Basis>& announced_bases, Rng& rng) {
    std::map<std::uint64_t, int> guesses;
    for (const auto& [id, rec] : log.intercepts) {
        guesses[id] = rec.outcome;
    }
    for (const auto& [id, photon] : log.stored_photons) {
        // Without an announcement (two-state protocols) Eve falls back to a
        // rectilinear readout, which identifies V outcomes with certainty.
        const Basis basis = id < announced_bases.size() ? announced_bases[id] : Basis::Rectilinear;
        guesses[id] = qsim::measure(photon, basis, rng).bit;
    }
    return guesses;
}

} // namespace qkdlab::channel
