#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qkdlab::classical {

using ByteString = std::vector<std::uint8_t>;

// XOR with the key prefix; self-inverse. Throws KeyExhausted when the key is
// shorter than the message.
ByteString otp_apply(const ByteString& message, const ByteString& key);

// c1 XOR c2 = m1 XOR m2: what reusing a one-time pad hands the cryptanalyst.
ByteString two_time_pad(const ByteString& c1, const ByteString& c2);

enum class CaesarDirection : std::uint8_t { Encode, Decode };

// Cyclic alphabet shift; letters only, case preserved.
std::string caesar(const std::string& text, int shift, CaesarDirection direction);

struct RsaPublicKey {
    std::uint64_t n;
    std::uint64_t e;
};

struct RsaPrivateKey {
    std::uint64_t d;
    std::uint64_t n;
};

struct RsaKeyPair {
    RsaPublicKey pub;
    RsaPrivateKey priv;
};

bool is_prime(std::uint64_t n);

// Textbook RSA from two distinct primes: n = p*q, d = e^-1 mod (p-1)(q-1).
RsaKeyPair rsa_keygen(std::uint64_t p, std::uint64_t q, std::uint64_t e);

std::uint64_t rsa_encrypt(std::uint64_t m, const RsaPublicKey& pub);
std::uint64_t rsa_decrypt(std::uint64_t y, const RsaPrivateKey& priv);

std::uint64_t mod_pow(std::uint64_t base, std::uint64_t exp, std::uint64_t mod);

// Factors n by trial division (desk scale) and rebuilds the private key.
// Throws NotSemiprime unless n is a product of two distinct primes.
RsaPrivateKey rsa_crack(const RsaPublicKey& pub);

struct SearchCost {
    unsigned key_bits;
    unsigned __int128 grover_queries; // ceil(2^(k/2)), always fits below 2^64 for k <= 128

    // Exact decimal 2^k; exceeds native integer width at k = 128.
    std::string classical_str() const;
    // Throws for key_bits = 128, where 2^k no longer fits in 128 bits.
    unsigned __int128 classical_queries() const;
    std::string grover_str() const;
};

// Exhaustive key search cost: 2^k classically, ceil(2^(k/2)) with the
// quadratic quantum speedup. Constants are deliberately dropped. k <= 128.
SearchCost search_cost(unsigned key_bits);

std::string to_string(unsigned __int128 v);

} // namespace qkdlab::classical
