#ifndef FABRID_CRYPTO_HPP
#define FABRID_CRYPTO_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "fabrid/bytes.hpp"

namespace fabrid::crypto {

struct InputTooLong : std::runtime_error {
    InputTooLong() : std::runtime_error("prf input exceeds 2^16 bytes") {}
};

// 16-byte symmetric key. Deliberately has no serialization into wire formats.
struct SymKey {
    Block16 bytes{};

    bool operator==(const SymKey&) const = default;
};

struct Digest16 {
    Block16 bytes{};

    bool operator==(const Digest16&) const = default;
};

// Keyed PRF / MAC: AES-CBC-MAC over `data` padded with 0x80 then zeros to a
// 16-byte multiple. The single primitive behind key derivation, HVFs and
// control-message authentication.
Block16 prf(const SymKey& key, std::span<const uint8_t> data);

// One AES block applied to the canonical timestamp block (8-byte big-endian
// timestamp followed by 8 zero bytes). The one-time pad for policy indices;
// the CTR counter is always zero.
Block16 keystream(const SymKey& key, uint64_t ts);

// First 16 bytes of SHA-256.
Digest16 digest16(std::span<const uint8_t> data);

// Ed25519 signatures; stands in for the control-plane PKI.
using Signature = Bytes;

struct PubKey {
    Bytes bytes;  // 32-byte raw Ed25519 public key
    bool operator==(const PubKey&) const = default;
};

struct SigKeyPair {
    Bytes signing_key;  // 32-byte raw Ed25519 seed
    PubKey pub;
};

SigKeyPair generate_keypair();
SigKeyPair keypair_from_seed(std::span<const uint8_t> seed32);
Signature sign(const SigKeyPair& kp, std::span<const uint8_t> msg);
// Returns false on any verification failure, including malformed signatures.
bool verify(const PubKey& pk, std::span<const uint8_t> msg, std::span<const uint8_t> sig);

bool constant_time_equal(std::span<const uint8_t> a, std::span<const uint8_t> b);

}  // namespace fabrid::crypto

#endif
