#include "qkdlab/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <thread>

#include "qkdlab/errors.hpp"

namespace qkdlab::net {

namespace {

void set_timeouts(int fd) {
    timeval tv{};
    tv.tv_sec = 60;
    setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

sockaddr_in make_addr(const Endpoint& ep) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    if (inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1) {
        throw std::invalid_argument("endpoint host must be an IPv4 address: " + ep.host);
    }
    return addr;
}

} // namespace

Endpoint parse_endpoint(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= text.size()) {
        throw std::invalid_argument("endpoint must look like host:port");
    }
    Endpoint ep;
    ep.host = text.substr(0, colon);
    const std::string port_str = text.substr(colon + 1);
    char* end = nullptr;
    const long port = std::strtol(port_str.c_str(), &end, 10);
    if (end == nullptr || *end != '\0' || port < 0 || port > 65535) {
        throw std::invalid_argument("bad port: " + port_str);
    }
    ep.port = static_cast<std::uint16_t>(port);
    return ep;
}

TcpStream::~TcpStream() { close(); }

TcpStream::TcpStream(TcpStream&& other) noexcept
    : fd_(other.fd_), buffer_(std::move(other.buffer_)) {
    other.fd_ = -1;
}

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        buffer_ = std::move(other.buffer_);
        other.fd_ = -1;
    }
    return *this;
}

TcpStream TcpStream::connect(const Endpoint& ep) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError("socket: " + std::string(std::strerror(errno)));
    const sockaddr_in addr = make_addr(ep);
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
        const int err = errno;
        ::close(fd);
        throw TransportError("connect: " + std::string(std::strerror(err)));
    }
    set_timeouts(fd);
    return TcpStream(fd);
}

void TcpStream::write_line(const std::string& line) {
    if (fd_ < 0) throw TransportError("stream closed");
    std::string framed = line;
    framed.push_back('\n');
    std::size_t sent = 0;
    while (sent < framed.size()) {
        const ssize_t n = ::send(fd_, framed.data() + sent, framed.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) throw TransportError("send: " + std::string(std::strerror(errno)));
        sent += static_cast<std::size_t>(n);
    }
}

bool TcpStream::read_line(std::string& line) {
    if (fd_ < 0) throw TransportError("stream closed");
    for (;;) {
        const auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            line.assign(buffer_, 0, nl);
            buffer_.erase(0, nl + 1);
            return true;
        }
        char chunk[4096];
        const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
        if (n == 0) {
            if (!buffer_.empty()) throw TransportError("connection closed mid-message");
            return false;
        }
        if (n < 0) throw TransportError("recv: " + std::string(std::strerror(errno)));
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

void TcpStream::shutdown_write() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

void TcpStream::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

TcpListener::TcpListener(const Endpoint& ep) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw TransportError("socket: " + std::string(std::strerror(errno)));
    int one = 1;
    setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr = make_addr(ep);
    if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
        const int err = errno;
        ::close(fd_);
        fd_ = -1;
        throw TransportError("bind: " + std::string(std::strerror(err)));
    }
    socklen_t len = sizeof(addr);
    getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    if (::listen(fd_, 1) != 0) {
        const int err = errno;
        ::close(fd_);
        fd_ = -1;
        throw TransportError("listen: " + std::string(std::strerror(err)));
    }
}

TcpListener::~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
}

TcpStream TcpListener::accept() {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) throw TransportError("accept: " + std::string(std::strerror(errno)));
    set_timeouts(fd);
    return TcpStream(fd);
}

void JsonLineChannel::send(const wire::WireMessage& msg) {
    stream_.write_line(wire::serialize(msg));
}

wire::WireMessage JsonLineChannel::recv() {
    std::string line;
    if (!stream_.read_line(line)) throw TransportError("peer closed the connection");
    return wire::parse(line);
}

qkd::PartyResult serve_bob(const qkd::PartyConfig& party, TcpListener& listener) {
    JsonLineChannel channel(listener.accept());
    return qkd::run_bob(party, channel);
}

qkd::PartyResult serve_bob(const qkd::PartyConfig& party, const Endpoint& listen) {
    TcpListener listener(listen);
    return serve_bob(party, listener);
}

qkd::PartyResult connect_alice(const qkd::PartyConfig& party, const Endpoint& endpoint) {
    JsonLineChannel channel(TcpStream::connect(endpoint));
    return qkd::run_alice(party, channel);
}

ProxyReport eve_proxy(TcpListener& listener, const Endpoint& forward,
                      const channel::EveStrategy& strategy, std::uint64_t seed) {
    TcpStream from_alice = listener.accept();
    TcpStream to_bob = TcpStream::connect(forward);

    qkd::EveBox box(strategy, Rng(seed).child("eve"));
    ProxyReport report;

    // Bob-to-Alice direction is classical-only and forwarded raw.
    std::exception_ptr back_error;
    std::thread backward([&] {
        try {
            std::string line;
            while (to_bob.read_line(line)) from_alice.write_line(line);
        } catch (...) {
            back_error = std::current_exception();
        }
        from_alice.shutdown_write();
    });

    std::exception_ptr fwd_error;
    try {
        std::string line;
        while (from_alice.read_line(line)) {
            // Only the quantum payload is touched; every classical line goes
            // through byte for byte.
            if (line.find("\"t\":\"pulse\"") != std::string::npos) {
                wire::WireMessage msg = wire::parse(line);
                if (msg.t == wire::WireMessage::Type::Pulse) {
                    ++report.pulses;
                    msg = box.transform(std::move(msg), true);
                    to_bob.write_line(wire::serialize(msg));
                    continue;
                }
            }
            ++report.classical_messages;
            if (line.find("\"t\":\"bases\"") != std::string::npos) {
                const wire::WireMessage msg = wire::parse(line);
                if (msg.t == wire::WireMessage::Type::Bases) {
                    box.transform(msg, true); // wiretap the announcement
                }
            }
            to_bob.write_line(line);
        }
    } catch (...) {
        fwd_error = std::current_exception();
    }
    to_bob.shutdown_write();
    backward.join();
    if (fwd_error) std::rethrow_exception(fwd_error);
    if (back_error) std::rethrow_exception(back_error);

    report.photons_captured = box.log().stored_photons.size();
    report.intercepted = box.log().intercepts.size();
    return report;
}

ProxyReport eve_proxy(const Endpoint& listen, const Endpoint& forward,
                      const channel::EveStrategy& strategy, std::uint64_t seed) {
    TcpListener listener(listen);
    return eve_proxy(listener, forward, strategy, seed);
}

} // namespace qkdlab::net
