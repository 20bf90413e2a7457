#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "qkdlab/errors.hpp"
#include "qkdlab/qsim.hpp"

namespace qkdlab::wire {

// One protocol message, serialized as a single newline-delimited JSON object.
// The "pulse" type carries the simulated quantum payload; every other type is
// classical and is forwarded verbatim by an eavesdropping proxy.
struct WireMessage {
    enum class Type : std::uint8_t { Hello, Pulse, Bases, Sift, Sample, SampleV, Qber, Parity, Fp, Pa, Done };

    Type t = Type::Done;

    std::string proto;                    // hello
    std::uint64_t n = 0;                  // hello
    std::uint64_t id = 0;                 // pulse
    std::vector<qsim::PureState> photons; // pulse
    std::vector<std::uint8_t> bits;       // bases.v, sample_v.bits
    std::vector<std::uint64_t> ids;       // sift.keep, sample.idx
    double qber = 0.0;                    // qber.v
    bool abort_flag = false;              // qber.abort
    int pass = 0;                         // parity
    std::uint64_t lo = 0;                 // parity
    std::uint64_t hi = 0;                 // parity
    int parity = 0;                       // parity.v
    std::uint64_t fp = 0;                 // fp.v, 64-bit value carried as hex16
    std::uint64_t pa_seed = 0;            // pa.seed
    std::uint64_t pa_len = 0;             // pa.len

    static WireMessage hello(std::string proto, std::uint64_t n);
    static WireMessage pulse(std::uint64_t id, std::vector<qsim::PureState> photons);
    static WireMessage bases(std::vector<std::uint8_t> v);
    static WireMessage sift(std::vector<std::uint64_t> keep);
    static WireMessage sample(std::vector<std::uint64_t> idx);
    static WireMessage sample_v(std::vector<std::uint8_t> bits);
    static WireMessage qber_msg(double v, bool abort);
    static WireMessage parity_msg(int pass, std::uint64_t lo, std::uint64_t hi, int v);
    static WireMessage fp_msg(std::uint64_t v);
    static WireMessage pa(std::uint64_t seed, std::uint64_t len);
    static WireMessage done();
};

const char* type_name(WireMessage::Type t);

// Exact one-line JSON encoding (no trailing newline).
std::string serialize(const WireMessage& msg);

// Throws ProtocolViolation on anything outside the schema.
WireMessage parse(const std::string& line);

class MessageChannel {
public:
    virtual ~MessageChannel() = default;
    virtual void send(const WireMessage& msg) = 0;
    virtual WireMessage recv() = 0;
    // Signals end-of-stream to the peer; recv on a drained closed channel
    // throws TransportError.
    virtual void close() {}
};

// Bidirectional in-memory message pipe connecting two parties running on
// separate threads. An optional interceptor sees every message in transit
// (the in-process stand-in for a man-in-the-middle proxy).
class InMemoryDuplex {
public:
    using Interceptor = std::function<WireMessage(WireMessage, bool a_to_b)>;

    explicit InMemoryDuplex(Interceptor interceptor = nullptr);

    MessageChannel& end_a() { return a_; }
    MessageChannel& end_b() { return b_; }

private:
    struct Queue {
        std::deque<WireMessage> items;
        std::mutex m;
        std::condition_variable cv;
        bool closed = false;

        void push(WireMessage msg);
        WireMessage pop();
        void close();
    };

    class End : public MessageChannel {
    public:
        End(InMemoryDuplex* owner, bool is_a) : owner_(owner), is_a_(is_a) {}
        void send(const WireMessage& msg) override;
        WireMessage recv() override;
        void close() override;

    private:
        InMemoryDuplex* owner_;
        bool is_a_;
    };

    Queue a_to_b_;
    Queue b_to_a_;
    Interceptor interceptor_;
    End a_{this, true};
    End b_{this, false};
};

} // namespace qkdlab::wire
