#include "fabrid/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <cstring>
#include <memory>

namespace fabrid {

std::string to_hex(std::span<const uint8_t> data) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

Bytes from_hex(const std::string& hex) {
    if (hex.size() % 2) throw std::invalid_argument("odd-length hex string");
    auto nibble = [](char c) -> uint8_t {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw std::invalid_argument("bad hex digit");
    };
    Bytes out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2)
        out.push_back(static_cast<uint8_t>(nibble(hex[i]) << 4 | nibble(hex[i + 1])));
    return out;
}

}  // namespace fabrid

namespace fabrid::crypto {

namespace {

struct CtxDeleter {
    void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
    void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
    void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};

template <typename T>
using Ptr = std::unique_ptr<T, CtxDeleter>;

Block16 aes_block(const SymKey& key, const Block16& in) {
    Ptr<EVP_CIPHER_CTX> ctx(EVP_CIPHER_CTX_new());
    if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_ecb(), nullptr,
                                   key.bytes.data(), nullptr) != 1)
        throw std::runtime_error("AES init failed");
    EVP_CIPHER_CTX_set_padding(ctx.get(), 0);
    Block16 out;
    int len = 0;
    if (EVP_EncryptUpdate(ctx.get(), out.data(), &len, in.data(), 16) != 1 || len != 16)
        throw std::runtime_error("AES block failed");
    return out;
}

Ptr<EVP_PKEY> load_private(std::span<const uint8_t> seed) {
    Ptr<EVP_PKEY> key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                                   seed.data(), seed.size()));
    if (!key) throw std::runtime_error("bad Ed25519 private key");
    return key;
}

}  // namespace

Block16 prf(const SymKey& key, std::span<const uint8_t> data) {
    if (data.size() > (1u << 16)) throw InputTooLong{};
    Block16 state{};
    size_t pos = 0;
    bool pad_emitted = false;
    // CBC-MAC over data || 0x80 || 0x00... to a block boundary, zero IV.
    while (!pad_emitted) {
        Block16 block{};
        size_t n = std::min<size_t>(16, data.size() - pos);
        std::memcpy(block.data(), data.data() + pos, n);
        pos += n;
        if (n < 16) {
            block[n] = 0x80;
            pad_emitted = true;
        }
        for (size_t i = 0; i < 16; ++i) block[i] ^= state[i];
        state = aes_block(key, block);
    }
    return state;
}

Block16 keystream(const SymKey& key, uint64_t ts) {
    Block16 block{};
    for (int i = 0; i < 8; ++i) block[i] = static_cast<uint8_t>(ts >> (56 - 8 * i));
    return aes_block(key, block);
}

Digest16 digest16(std::span<const uint8_t> data) {
    std::array<uint8_t, SHA256_DIGEST_LENGTH> full;
    SHA256(data.data(), data.size(), full.data());
    Digest16 out;
    std::memcpy(out.bytes.data(), full.data(), 16);
    return out;
}

SigKeyPair keypair_from_seed(std::span<const uint8_t> seed32) {
    if (seed32.size() != 32) throw std::invalid_argument("Ed25519 seed must be 32 bytes");
    auto key = load_private(seed32);
    SigKeyPair kp;
    kp.signing_key.assign(seed32.begin(), seed32.end());
    size_t publen = 32;
    kp.pub.bytes.resize(publen);
    if (EVP_PKEY_get_raw_public_key(key.get(), kp.pub.bytes.data(), &publen) != 1)
        throw std::runtime_error("public key extraction failed");
    return kp;
}

SigKeyPair generate_keypair() {
    std::array<uint8_t, 32> seed;
    if (RAND_bytes(seed.data(), seed.size()) != 1)
        throw std::runtime_error("RNG failure");
    return keypair_from_seed(seed);
}

Signature sign(const SigKeyPair& kp, std::span<const uint8_t> msg) {
    auto key = load_private(kp.signing_key);
    Ptr<EVP_MD_CTX> ctx(EVP_MD_CTX_new());
    if (!ctx ||
        EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1)
        throw std::runtime_error("sign init failed");
    size_t siglen = 64;
    Signature sig(siglen);
    if (EVP_DigestSign(ctx.get(), sig.data(), &siglen, msg.data(), msg.size()) != 1)
        throw std::runtime_error("sign failed");
    sig.resize(siglen);
    return sig;
}

bool verify(const PubKey& pk, std::span<const uint8_t> msg, std::span<const uint8_t> sig) {
    if (pk.bytes.size() != 32 || sig.size() != 64) return false;
    Ptr<EVP_PKEY> key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr,
                                                  pk.bytes.data(), pk.bytes.size()));
    if (!key) return false;
    Ptr<EVP_MD_CTX> ctx(EVP_MD_CTX_new());
    if (!ctx ||
        EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1)
        return false;
    return EVP_DigestVerify(ctx.get(), sig.data(), sig.size(), msg.data(), msg.size()) == 1;
}

bool constant_time_equal(std::span<const uint8_t> a, std::span<const uint8_t> b) {
    if (a.size() != b.size()) return false;
    return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace fabrid::crypto
