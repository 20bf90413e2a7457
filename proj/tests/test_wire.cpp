#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <thread>

#include "qkdlab/wire.hpp"

using namespace qkdlab;
using namespace qkdlab::wire;

TEST_CASE("golden encodings for every message type") {
    CHECK(serialize(WireMessage::hello("bb84", 64)) == R"({"t":"hello","proto":"bb84","n":64})");
    CHECK(serialize(WireMessage::pulse(3, {qsim::PureState{1.0, 0.0}})) ==
          R"({"t":"pulse","id":3,"ph":[[[1.0,0.0],[0.0,0.0]]]})");
    CHECK(serialize(WireMessage::pulse(4, {})) == R"({"t":"pulse","id":4,"ph":[]})");
    CHECK(serialize(WireMessage::bases({0, 1, 1})) == R"({"t":"bases","v":[0,1,1]})");
    CHECK(serialize(WireMessage::sift({0, 2, 5})) == R"({"t":"sift","keep":[0,2,5]})");
    CHECK(serialize(WireMessage::sample({1, 4})) == R"({"t":"sample","idx":[1,4]})");
    CHECK(serialize(WireMessage::sample_v({1, 0})) == R"({"t":"sample_v","bits":[1,0]})");
    CHECK(serialize(WireMessage::qber_msg(0.25, true)) == R"({"t":"qber","v":0.25,"abort":true})");
    CHECK(serialize(WireMessage::parity_msg(1, 0, 16, 1)) ==
          R"({"t":"parity","pass":1,"lo":0,"hi":16,"v":1})");
    CHECK(serialize(WireMessage::fp_msg(0xdeadbeefULL)) == R"({"t":"fp","v":"00000000deadbeef"})");
    CHECK(serialize(WireMessage::pa(42, 655)) == R"({"t":"pa","seed":42,"len":655})");
    CHECK(serialize(WireMessage::done()) == R"({"t":"done"})");
}

TEST_CASE("messages survive a serialize/parse round trip") {
    Rng rng(61);
    for (int t = 0; t < 500; ++t) {
        WireMessage msg;
        switch (rng.next_below(11)) {
            case 0: msg = WireMessage::hello("b92", rng.next_u64()); break;
            case 1: {
                std::vector<qsim::PureState> photons;
                for (std::uint64_t i = 0; i < rng.next_below(4); ++i) {
                    photons.push_back({{rng.next_double(), rng.next_double()},
                                       {rng.next_double(), rng.next_double()}});
                }
                msg = WireMessage::pulse(rng.next_u64(), std::move(photons));
                break;
            }
            case 2: msg = WireMessage::bases({1, 0, 1, 1, 0}); break;
            case 3: msg = WireMessage::sift({rng.next_below(100), 200 + rng.next_below(100)}); break;
            case 4: msg = WireMessage::sample({rng.next_below(50)}); break;
            case 5: msg = WireMessage::sample_v({0, 1, 0}); break;
            case 6: msg = WireMessage::qber_msg(rng.next_double(), rng.next_bool()); break;
            case 7:
                msg = WireMessage::parity_msg(static_cast<int>(1 + rng.next_below(4)),
                                              rng.next_below(512), 512 + rng.next_below(512),
                                              rng.next_bit());
                break;
            case 8: msg = WireMessage::fp_msg(rng.next_u64()); break;
            case 9: msg = WireMessage::pa(rng.next_u64(), rng.next_below(4096)); break;
            default: msg = WireMessage::done(); break;
        }
        const std::string line = serialize(msg);
        const WireMessage back = parse(line);
        CHECK(serialize(back) == line);
    }
}

TEST_CASE("malformed input raises protocol violations") {
    CHECK_THROWS_AS((void)parse("not json at all"), ProtocolViolation);
    CHECK_THROWS_AS((void)parse("[1,2,3]"), ProtocolViolation);
    CHECK_THROWS_AS((void)parse(R"({"t":"warp"})"), ProtocolViolation);
    CHECK_THROWS_AS((void)parse(R"({"t":"hello"})"), ProtocolViolation);
    CHECK_THROWS_AS((void)parse(R"({"t":"bases","v":[0,2]})"), ProtocolViolation);
    CHECK_THROWS_AS((void)parse(R"({"t":"parity","pass":1,"lo":0,"hi":4,"v":3})"), ProtocolViolation);
    CHECK_THROWS_AS((void)parse(R"({"t":"fp","v":"xyz"})"), ProtocolViolation);
    CHECK_THROWS_AS((void)parse(R"({"t":"fp","v":"DEADBEEFDEADBEEF"})"), ProtocolViolation);
    CHECK_THROWS_AS((void)parse(R"({"t":"pulse","id":0,"ph":[[[1,0]]]})"), ProtocolViolation);
}

TEST_CASE("the in-memory duplex moves messages both ways") {
    InMemoryDuplex duplex;
    std::thread peer([&] {
        const WireMessage got = duplex.end_b().recv();
        CHECK(got.t == WireMessage::Type::Hello);
        duplex.end_b().send(WireMessage::done());
    });
    duplex.end_a().send(WireMessage::hello("bb84", 1));
    const WireMessage reply = duplex.end_a().recv();
    CHECK(reply.t == WireMessage::Type::Done);
    peer.join();
}

TEST_CASE("receiving after the peer closes raises a transport error") {
    InMemoryDuplex duplex;
    duplex.end_a().close();
    CHECK_THROWS_AS((void)duplex.end_b().recv(), TransportError);
}

TEST_CASE("an interceptor sees only the configured direction") {
    int seen_a_to_b = 0;
    int seen_b_to_a = 0;
    InMemoryDuplex duplex([&](WireMessage msg, bool a_to_b) {
        if (a_to_b) ++seen_a_to_b;
        else ++seen_b_to_a;
        return msg;
    });
    std::thread peer([&] {
        (void)duplex.end_b().recv();
        duplex.end_b().send(WireMessage::done());
    });
    duplex.end_a().send(WireMessage::hello("bb84", 1));
    (void)duplex.end_a().recv();
    peer.join();
    CHECK(seen_a_to_b == 1);
    CHECK(seen_b_to_a == 1);
}
