#include <doctest.h>

#include "fabrid/crypto.hpp"

using namespace fabrid;
using crypto::SymKey;

namespace {

SymKey key_from_hex(const std::string& hex) {
    SymKey k;
    Bytes b = from_hex(hex);
    std::copy(b.begin(), b.end(), k.bytes.begin());
    return k;
}

std::string prf_hex(const SymKey& k, const Bytes& data) {
    return to_hex(crypto::prf(k, data));
}

}  // namespace

TEST_CASE("prf matches the independent reference vectors") {
    SymKey zero;
    CHECK(prf_hex(zero, {}) == "3ad78e726c1ec02b7ebfe92b23d9ec34");

    SymKey seq = key_from_hex("000102030405060708090a0b0c0d0e0f");
    CHECK(prf_hex(seq, {}) == "4399572cd6ea5341b8d35876a7098af7");
    CHECK(prf_hex(seq, {'a', 'b', 'c'}) == "dbd0b134c556c3779d5f113fd277b3d8");

    Bytes block16;
    for (int i = 0; i < 16; ++i) block16.push_back(static_cast<uint8_t>(i));
    CHECK(prf_hex(seq, block16) == "3a3807ffe3cb3e978953017210335f0f");

    Bytes block48;
    for (int i = 0; i < 48; ++i) block48.push_back(static_cast<uint8_t>(i));
    CHECK(prf_hex(seq, block48) == "c5b089e3e4710856581f28b42824c651");
}

TEST_CASE("prf output differs across keys, inputs and padding boundaries") {
    SymKey a = key_from_hex("000102030405060708090a0b0c0d0e0f");
    SymKey b = key_from_hex("000102030405060708090a0b0c0d0e10");
    Bytes msg = {1, 2, 3};
    CHECK(crypto::prf(a, msg) != crypto::prf(b, msg));
    CHECK(crypto::prf(a, msg) != crypto::prf(a, Bytes{1, 2, 3, 0}));
    // a 15-byte message and its 16-byte zero-extension pad differently
    Bytes m15(15, 0x42), m16(16, 0x42);
    m16[15] = 0;
    CHECK(crypto::prf(a, m15) != crypto::prf(a, m16));
}

TEST_CASE("prf rejects oversized input") {
    SymKey k;
    Bytes big(65537, 0);
    CHECK_THROWS_AS((void)crypto::prf(k, big), crypto::InputTooLong);
    Bytes max(65536, 0);
    CHECK_NOTHROW((void)crypto::prf(k, max));
}

TEST_CASE("keystream matches the reference and varies with ts") {
    SymKey zero;
    CHECK(to_hex(crypto::keystream(zero, 0)) ==
          "66e94bd4ef8a2c3b884cfa59ca342b2e");
    CHECK(to_hex(crypto::keystream(zero, 1)) ==
          "788bcd111ecf73d4e78d2e21bef55460");
    CHECK(crypto::keystream(zero, 2) != crypto::keystream(zero, 3));
}

TEST_CASE("digest16 is the truncated SHA-256") {
    Bytes abc = {'a', 'b', 'c'};
    CHECK(to_hex(crypto::digest16(abc).bytes) == "ba7816bf8f01cfea414140de5dae2223");
    CHECK(to_hex(crypto::digest16({}).bytes) == "e3b0c44298fc1c149afbf4c8996fb924");
}

TEST_CASE("signatures verify and reject tampering") {
    Bytes seed(32, 7);
    auto kp = crypto::keypair_from_seed(seed);
    auto kp2 = crypto::keypair_from_seed(seed);
    CHECK(kp.pub == kp2.pub);  // deterministic from seed

    Bytes msg = {'p', 'c', 'b'};
    auto sig = crypto::sign(kp, msg);
    CHECK(crypto::verify(kp.pub, msg, sig));

    auto bad_sig = sig;
    bad_sig[0] ^= 1;
    CHECK_FALSE(crypto::verify(kp.pub, msg, bad_sig));

    Bytes other = {'p', 'c', 'c'};
    CHECK_FALSE(crypto::verify(kp.pub, other, sig));

    CHECK_FALSE(crypto::verify(kp.pub, msg, Bytes{1, 2, 3}));  // malformed
    crypto::PubKey junk{Bytes(32, 0xee)};
    CHECK_FALSE(crypto::verify(junk, msg, sig));

    auto fresh = crypto::generate_keypair();
    CHECK(crypto::verify(fresh.pub, msg, crypto::sign(fresh, msg)));
}

TEST_CASE("constant_time_equal") {
    Bytes a = {1, 2, 3, 4}, b = {1, 2, 3, 4}, c = {1, 2, 3, 5};
    CHECK(crypto::constant_time_equal(a, b));
    CHECK_FALSE(crypto::constant_time_equal(a, c));
    CHECK_FALSE(crypto::constant_time_equal(a, Bytes{1, 2, 3}));
}

TEST_CASE("hex round trip") {
    Bytes b = {0x00, 0xff, 0x10, 0xab};
    CHECK(to_hex(b) == "00ff10ab");
    CHECK(from_hex("00ff10ab") == b);
}
