#pragma once

#include <stdexcept>
#include <string>

namespace qkdlab {

// Peer sent something outside the wire schema or the lockstep protocol.
class ProtocolViolation : public std::runtime_error {
public:
    explicit ProtocolViolation(const std::string& what) : std::runtime_error(what) {}
};

// Connection lost or stream ended mid-session.
class TransportError : public std::runtime_error {
public:
    explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

// Session parameters disagreed during the hello handshake.
class NegotiationError : public std::runtime_error {
public:
    explicit NegotiationError(const std::string& what) : std::runtime_error(what) {}
};

// One-time-pad key shorter than the message.
class KeyExhausted : public std::runtime_error {
public:
    explicit KeyExhausted(const std::string& what) : std::runtime_error(what) {}
};

// Modulus is not a product of two distinct primes.
class NotSemiprime : public std::runtime_error {
public:
    explicit NotSemiprime(const std::string& what) : std::runtime_error(what) {}
};

} // namespace qkdlab
