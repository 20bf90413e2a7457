#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qkdlab/commit.hpp"
#include "support.hpp"

using namespace qkdlab::commit;
using qkdlab::Rng;
using qkdlab::qsim::Polarization;
using testsupport::within_sigma;
namespace qsim = qkdlab::qsim;

namespace {

bool is_rect_eigen(const PureState& s) {
    return (std::abs(s.a_h - qsim::Complex{1, 0}) < 1e-12 && std::abs(s.a_v) < 1e-12) ||
           (std::abs(s.a_v - qsim::Complex{1, 0}) < 1e-12 && std::abs(s.a_h) < 1e-12);
}

bool is_diag_eigen(const PureState& s) {
    const double r = 1.0 / std::sqrt(2.0);
    return std::abs(std::abs(s.a_h.real()) - r) < 1e-12 && std::abs(std::abs(s.a_v.real()) - r) < 1e-12;
}

} // namespace

TEST_CASE("committing to 0 sends rectilinear photons, to 1 diagonal ones") {
    Rng rng(31);
    const Commitment c0 = qkdlab::commit::commit(0, 50, rng);
    for (const auto& slot : c0.holding.slots) {
        REQUIRE(slot.pure.has_value());
        CHECK(is_rect_eigen(*slot.pure));
    }
    const Commitment c1 = qkdlab::commit::commit(1, 50, rng);
    for (const auto& slot : c1.holding.slots) {
        REQUIRE(slot.pure.has_value());
        CHECK(is_diag_eigen(*slot.pure));
    }
    CHECK_THROWS_AS((void)qkdlab::commit::commit(0, 0, rng), std::invalid_argument);
}

TEST_CASE("coin flips are fair") {
    Rng rng(32);
    const Commitment c = qkdlab::commit::commit(1, 10000, rng);
    std::uint64_t ones = 0;
    for (const auto b : c.record.coin_flips) ones += b;
    CHECK(within_sigma(static_cast<double>(ones) / 10000.0, 0.5, 10000, 3.0));
}

TEST_CASE("honest opening unveils the committed values") {
    Rng rng(33);
    Commitment c = qkdlab::commit::commit(0, 4, rng);
    const Opening o = open_honest(c.record);
    CHECK(o.claimed_basis == Basis::Rectilinear);
    CHECK(o.claimed_bits == c.record.coin_flips);
    CHECK(o.claimed_bits.size() == 4);

    Commitment epr = cheat_epr_commit(4, rng);
    CHECK_THROWS_AS((void)open_honest(epr.record), std::invalid_argument);
}

TEST_CASE("honest commitments always verify") {
    Rng rng(34);
    for (int t = 0; t < 10000; ++t) {
        const int bit = t & 1;
        Commitment c = qkdlab::commit::commit(bit, 1 + (t % 8), rng);
        const Opening o = open_honest(c.record);
        REQUIRE(verify(c.holding, o, rng) == VerifyResult::Accept);
    }
}

TEST_CASE("verify rejects mismatched lengths") {
    Rng rng(35);
    Commitment c = qkdlab::commit::commit(0, 4, rng);
    Opening o = open_honest(c.record);
    o.claimed_bits.pop_back();
    CHECK_THROWS_AS((void)verify(c.holding, o, rng), std::invalid_argument);
}

TEST_CASE("the classical lie survives each photon with probability one half") {
    Rng rng(36);
    const std::uint64_t trials = 100000;
    std::uint64_t accepts = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        Commitment c = qkdlab::commit::commit(0, 1, rng);
        const Opening o = cheat_classical(c.record, 1);
        if (verify(c.holding, o, rng) == VerifyResult::Accept) ++accepts;
    }
    CHECK(within_sigma(static_cast<double>(accepts) / trials, 0.5, trials, 3.0));
}

TEST_CASE("acceptance of the classical lie decays as 2^-n") {
    Rng rng(37);
    for (const std::size_t n : {1ULL, 2ULL, 4ULL, 8ULL}) {
        const std::uint64_t trials = 100000;
        std::uint64_t accepts = 0;
        for (std::uint64_t t = 0; t < trials; ++t) {
            Commitment c = qkdlab::commit::commit(1, n, rng);
            const Opening o = cheat_classical(c.record, 0);
            if (verify(c.holding, o, rng) == VerifyResult::Accept) ++accepts;
        }
        const double p = std::pow(0.5, static_cast<double>(n));
        CHECK(within_sigma(static_cast<double>(accepts) / trials, p, trials, 4.0));
    }
}

TEST_CASE("twenty photons make the classical cheat hopeless") {
    Rng rng(38);
    std::uint64_t accepts = 0;
    for (int t = 0; t < 100000; ++t) {
        Commitment c = qkdlab::commit::commit(0, 20, rng);
        const Opening o = cheat_classical(c.record, 1);
        if (verify(c.holding, o, rng) == VerifyResult::Accept) ++accepts;
    }
    CHECK(accepts == 0);
}

TEST_CASE("acceptance statistics do not depend on the announced bit rule") {
    Rng rng(39);
    const std::uint64_t trials = 100000;
    std::uint64_t accepts_keep = 0;
    std::uint64_t accepts_flip = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        Commitment c1 = qkdlab::commit::commit(0, 2, rng);
        if (verify(c1.holding, cheat_classical(c1.record, 1), rng) == VerifyResult::Accept) {
            ++accepts_keep;
        }
        Commitment c2 = qkdlab::commit::commit(0, 2, rng);
        if (verify(c2.holding, cheat_classical_flipped(c2.record, 1), rng) == VerifyResult::Accept) {
            ++accepts_flip;
        }
    }
    const double fk = static_cast<double>(accepts_keep) / trials;
    const double ff = static_cast<double>(accepts_flip) / trials;
    CHECK(std::abs(fk - ff) <= 4.0 * std::sqrt(2.0 * 0.25 * 0.75 / trials));
}

TEST_CASE("the classical cheat requires an actual lie") {
    Rng rng(40);
    Commitment c = qkdlab::commit::commit(0, 3, rng);
    CHECK_THROWS_AS((void)cheat_classical(c.record, 0), std::invalid_argument);
}

TEST_CASE("EPR-cheat commitments look perfectly random to Bob") {
    Rng rng(41);
    const Commitment c = cheat_epr_commit(16, rng);
    CHECK(c.record.committed_bit == -1);
    CHECK(c.holding.size() == 16);
    for (const auto& slot : c.holding.slots) {
        REQUIRE(slot.pair != nullptr);
        const qsim::Mat2 rho = qsim::reduced_density(*slot.pair, 1);
        CHECK(std::abs(rho.at(0, 0) - qsim::Complex{0.5, 0}) <= 1e-9);
        CHECK(std::abs(rho.at(1, 1) - qsim::Complex{0.5, 0}) <= 1e-9);
        CHECK(std::abs(rho.at(0, 1)) <= 1e-9);
    }
}

TEST_CASE("the delayed measurement opens to either bit with certainty") {
    Rng rng(42);
    for (int desired = 0; desired <= 1; ++desired) {
        for (int t = 0; t < 10000; ++t) {
            Commitment c = cheat_epr_commit(8, rng);
            const Opening o = cheat_epr_open(c.record, desired, rng);
            CHECK(o.claimed_basis == basis_for_bit(desired));
            REQUIRE(verify(c.holding, o, rng) == VerifyResult::Accept);
        }
    }
}

TEST_CASE("an EPR record cannot be opened twice") {
    Rng rng(43);
    Commitment c = cheat_epr_commit(4, rng);
    (void)cheat_epr_open(c.record, 0, rng);
    CHECK_THROWS_AS((void)cheat_epr_open(c.record, 1, rng), std::invalid_argument);
}

TEST_CASE("claimed bits from the EPR cheat are marginally uniform") {
    Rng rng(44);
    std::uint64_t ones = 0;
    const std::uint64_t total = 20000;
    for (std::uint64_t t = 0; t < total / 4; ++t) {
        Commitment c = cheat_epr_commit(4, rng);
        const Opening o = cheat_epr_open(c.record, static_cast<int>(t & 1), rng);
        for (const auto b : o.claimed_bits) ones += b;
    }
    CHECK(within_sigma(static_cast<double>(ones) / static_cast<double>(total), 0.5, total, 4.0));
}

TEST_CASE("Bob cannot tell the two honest ensembles apart") {
    // Analytic ensembles: both average to the maximally mixed state.
    auto pure_holding = [](Polarization p) {
        BobHolding h;
        BobHolding::Slot slot;
        slot.pure = qsim::state_of(p);
        h.slots.push_back(slot);
        return h;
    };
    const std::vector<BobHolding> bit0{pure_holding(Polarization::H), pure_holding(Polarization::V)};
    const std::vector<BobHolding> bit1{pure_holding(Polarization::D45),
                                       pure_holding(Polarization::D135)};
    CHECK(bob_distinguish(bit0, bit1) <= 1e-9);

    // Orthogonal pure ensembles are perfectly distinguishable.
    const std::vector<BobHolding> just_h{pure_holding(Polarization::H)};
    const std::vector<BobHolding> just_v{pure_holding(Polarization::V)};
    CHECK(std::abs(bob_distinguish(just_h, just_v) - 1.0) <= 1e-9);

    CHECK_THROWS_AS((void)bob_distinguish({}, just_v), std::invalid_argument);
}

TEST_CASE("empirical honest ensembles concentrate near indistinguishability") {
    Rng rng(45);
    std::vector<BobHolding> bit0, bit1;
    for (int t = 0; t < 10000; ++t) {
        bit0.push_back(qkdlab::commit::commit(0, 1, rng).holding);
        bit1.push_back(qkdlab::commit::commit(1, 1, rng).holding);
    }
    CHECK(bob_distinguish(bit0, bit1) < 0.02);
}
