#pragma once

#include <cstdint>
#include <string>

#include "qkdlab/channel.hpp"
#include "qkdlab/party.hpp"
#include "qkdlab/wire.hpp"

namespace qkdlab::net {

struct Endpoint {
    std::string host;
    std::uint16_t port = 0;
};

// "host:port"; throws std::invalid_argument on anything else.
Endpoint parse_endpoint(const std::string& text);

// Line-oriented TCP stream with newline-delimited JSON framing.
class TcpStream {
public:
    TcpStream() = default;
    explicit TcpStream(int fd) : fd_(fd) {}
    ~TcpStream();

    TcpStream(TcpStream&& other) noexcept;
    TcpStream& operator=(TcpStream&& other) noexcept;
    TcpStream(const TcpStream&) = delete;
    TcpStream& operator=(const TcpStream&) = delete;

    static TcpStream connect(const Endpoint& ep);

    void write_line(const std::string& line); // appends '\n'
    // Returns false on clean end-of-stream at a message boundary.
    bool read_line(std::string& line);
    void shutdown_write(); // signals end-of-stream, keeps the read side open
    void close();
    bool valid() const { return fd_ >= 0; }

private:
    int fd_ = -1;
    std::string buffer_;
};

class TcpListener {
public:
    explicit TcpListener(const Endpoint& ep);
    ~TcpListener();

    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    TcpStream accept();
    std::uint16_t port() const { return port_; } // resolved port (useful with port 0)

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

// MessageChannel over a TCP stream.
class JsonLineChannel final : public wire::MessageChannel {
public:
    explicit JsonLineChannel(TcpStream stream) : stream_(std::move(stream)) {}

    void send(const wire::WireMessage& msg) override;
    wire::WireMessage recv() override;
    void close() override { stream_.close(); }

private:
    TcpStream stream_;
};

// Accepts exactly one connection and runs Bob's side of the session.
qkd::PartyResult serve_bob(const qkd::PartyConfig& party, const Endpoint& listen);

// Same, with a caller-provided listener (lets tests bind port 0 first).
qkd::PartyResult serve_bob(const qkd::PartyConfig& party, TcpListener& listener);

// Connects to Bob (or a proxy) and runs Alice's side.
qkd::PartyResult connect_alice(const qkd::PartyConfig& party, const Endpoint& endpoint);

struct ProxyReport {
    std::uint64_t pulses = 0;
    std::uint64_t classical_messages = 0;
    std::uint64_t photons_captured = 0;
    std::uint64_t intercepted = 0;
};

// Man-in-the-middle: accepts one session from Alice, connects onward to Bob,
// applies the strategy to pulse messages and forwards every classical line
// byte for byte.
ProxyReport eve_proxy(const Endpoint& listen, const Endpoint& forward,
                      const channel::EveStrategy& strategy, std::uint64_t seed);

ProxyReport eve_proxy(TcpListener& listener, const Endpoint& forward,
                      const channel::EveStrategy& strategy, std::uint64_t seed);

} // namespace qkdlab::net
