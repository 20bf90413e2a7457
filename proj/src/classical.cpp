#include "qkdlab/classical.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "qkdlab/errors.hpp"

namespace qkdlab::classical {

ByteString otp_apply(const ByteString& message, const ByteString& key) {
    if (key.size() < message.size()) {
        throw KeyExhausted("one-time-pad key shorter than the message");
    }
    ByteString out(message.size());
    for (std::size_t i = 0; i < message.size(); ++i) {
        out[i] = static_cast<std::uint8_t>(message[i] ^ key[i]);
    }
    return out;
}

ByteString two_time_pad(const ByteString& c1, const ByteString& c2) {
    if (c1.size() != c2.size()) throw std::invalid_argument("ciphertexts differ in length");
    ByteString out(c1.size());
    for (std::size_t i = 0; i < c1.size(); ++i) {
        out[i] = static_cast<std::uint8_t>(c1[i] ^ c2[i]);
    }
    return out;
}

std::string caesar(const std::string& text, int shift, CaesarDirection direction) {
    int s = shift % 26;
    if (s < 0) s += 26;
    if (direction == CaesarDirection::Decode) s = (26 - s) % 26;
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (c >= 'A' && c <= 'Z') {
            out.push_back(static_cast<char>('A' + (c - 'A' + s) % 26));
        } else if (c >= 'a' && c <= 'z') {
            out.push_back(static_cast<char>('a' + (c - 'a' + s) % 26));
        } else {
            out.push_back(c);
        }
    }
    return out;
}

bool is_prime(std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t d : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        if (n % d == 0) return n == d;
    }
    // Deterministic Miller-Rabin for 64-bit integers with the standard base set.
    std::uint64_t d = n - 1;
    int r = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++r;
    }
    auto mulmod = [](std::uint64_t a, std::uint64_t b, std::uint64_t m) {
        return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
    };
    for (std::uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
        std::uint64_t x = 1;
        std::uint64_t base = a % n;
        std::uint64_t exp = d;
        while (exp) {
            if (exp & 1) x = mulmod(x, base, n);
            base = mulmod(base, base, n);
            exp >>= 1;
        }
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (int i = 1; i < r; ++i) {
            x = mulmod(x, x, n);
            if (x == n - 1) {
                witness = false;
                break;
            }
        }
        if (witness) return false;
    }
    return true;
}

namespace {

// Modular inverse of a mod m via extended Euclid, normalized to (0, m).
std::uint64_t mod_inverse(std::uint64_t a, std::uint64_t m) {
    std::int64_t t = 0, new_t = 1;
    std::int64_t r = static_cast<std::int64_t>(m), new_r = static_cast<std::int64_t>(a % m);
    while (new_r != 0) {
        const std::int64_t q = r / new_r;
        std::swap(t, new_t);
        new_t -= q * t;
        std::swap(r, new_r);
        new_r -= q * r;
    }
    if (r != 1) throw std::invalid_argument("value not invertible");
    if (t < 0) t += static_cast<std::int64_t>(m);
    return static_cast<std::uint64_t>(t);
}

} // namespace

RsaKeyPair rsa_keygen(std::uint64_t p, std::uint64_t q, std::uint64_t e) {
    if (!is_prime(p) || !is_prime(q)) throw std::invalid_argument("p and q must be prime");
    if (p == q) throw std::invalid_argument("p and q must be distinct");
    const std::uint64_t totient = (p - 1) * (q - 1);
    if (e == 0 || std::gcd(e, totient) != 1) {
        throw std::invalid_argument("e must be coprime to (p-1)(q-1)");
    }
    const std::uint64_t n = p * q;
    const std::uint64_t d = mod_inverse(e, totient);
    return {{n, e}, {d, n}};
}

std::uint64_t mod_pow(std::uint64_t base, std::uint64_t exp, std::uint64_t mod) {
    if (mod == 0) throw std::invalid_argument("modulus must be nonzero");
    std::uint64_t result = 1 % mod;
    base %= mod;
    while (exp) {
        if (exp & 1) {
            result = static_cast<std::uint64_t>(static_cast<unsigned __int128>(result) * base % mod);
        }
        base = static_cast<std::uint64_t>(static_cast<unsigned __int128>(base) * base % mod);
        exp >>= 1;
    }
    return result;
}

std::uint64_t rsa_encrypt(std::uint64_t m, const RsaPublicKey& pub) {
    if (m >= pub.n) throw std::invalid_argument("message must be smaller than the modulus");
    return mod_pow(m, pub.e, pub.n);
}

std::uint64_t rsa_decrypt(std::uint64_t y, const RsaPrivateKey& priv) {
    if (y >= priv.n) throw std::invalid_argument("ciphertext must be smaller than the modulus");
    return mod_pow(y, priv.d, priv.n);
}

RsaPrivateKey rsa_crack(const RsaPublicKey& pub) {
    const std::uint64_t n = pub.n;
    if (n < 6 || is_prime(n)) throw NotSemiprime("modulus is not a product of two distinct primes");
    std::uint64_t p = 0;
    for (std::uint64_t d = 2; d * d <= n; ++d) {
        if (n % d == 0) {
            p = d;
            break;
        }
    }
    if (p == 0) throw NotSemiprime("modulus is not a product of two distinct primes");
    const std::uint64_t q = n / p;
    if (p == q || !is_prime(q)) {
        throw NotSemiprime("modulus is not a product of two distinct primes");
    }
    const std::uint64_t totient = (p - 1) * (q - 1);
    if (pub.e == 0 || std::gcd(pub.e, totient) != 1) {
        throw std::invalid_argument("public exponent not invertible modulo the totient");
    }
    return {mod_inverse(pub.e, totient), n};
}

namespace {

std::string pow2_decimal(unsigned k) {
    std::string digits = "1"; // little-endian
    for (unsigned i = 0; i < k; ++i) {
        int carry = 0;
        for (char& c : digits) {
            const int d = (c - '0') * 2 + carry;
            c = static_cast<char>('0' + d % 10);
            carry = d / 10;
        }
        if (carry) digits.push_back(static_cast<char>('0' + carry));
    }
    std::reverse(digits.begin(), digits.end());
    return digits;
}

} // namespace

std::string SearchCost::classical_str() const { return pow2_decimal(key_bits); }

unsigned __int128 SearchCost::classical_queries() const {
    if (key_bits >= 128) throw std::overflow_error("2^128 exceeds 128-bit integers");
    return static_cast<unsigned __int128>(1) << key_bits;
}

std::string SearchCost::grover_str() const { return to_string(grover_queries); }

SearchCost search_cost(unsigned key_bits) {
    if (key_bits > 128) throw std::invalid_argument("key_bits must be <= 128");
    SearchCost cost{key_bits, 0};
    if (key_bits % 2 == 0) {
        cost.grover_queries = static_cast<unsigned __int128>(1) << (key_bits / 2);
    } else {
        // ceil(sqrt(2^k)); 2^k is never a perfect square for odd k.
        const unsigned __int128 target = static_cast<unsigned __int128>(1) << key_bits;
        unsigned __int128 lo = 0;
        unsigned __int128 hi = static_cast<unsigned __int128>(1) << (key_bits / 2 + 1);
        while (lo < hi) {
            const unsigned __int128 mid = lo + (hi - lo + 1) / 2;
            if (mid * mid <= target) lo = mid;
            else hi = mid - 1;
        }
        cost.grover_queries = lo + 1;
    }
    return cost;
}

std::string to_string(unsigned __int128 v) {
    if (v == 0) return "0";
    std::string out;
    while (v) {
        out.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

} // namespace qkdlab::classical
