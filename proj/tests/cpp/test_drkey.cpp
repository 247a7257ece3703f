#include <doctest.h>

#include "fabrid/drkey.hpp"

using namespace fabrid;
using drkey::AsId;
using drkey::HostAddr;

namespace {

drkey::AsSecret secret_of(uint8_t fill, AsId owner) {
    crypto::SymKey k;
    k.bytes.fill(fill);
    return {k, owner};
}

}  // namespace

TEST_CASE("AsId encoding and parsing") {
    AsId a{1, 0xFF0000000001ull};
    auto enc = a.encode();
    CHECK(to_hex(enc) == "0001ff0000000001");
    CHECK(AsId::decode(enc) == a);

    CHECK(AsId::parse("1-12") == AsId{1, 12});
    CHECK(AsId{1, 12}.str() == "1-12");
    CHECK(AsId::parse(AsId{42, 0x1234}.str()) == AsId{42, 0x1234});
    CHECK_THROWS((void)AsId::parse("nonsense"));
}

TEST_CASE("HostAddr round trip") {
    HostAddr h{{10, 0, 3, 9}};
    CHECK(h.str() == "10.0.3.9");
    CHECK(HostAddr::parse("10.0.3.9") == h);
    CHECK_THROWS((void)HostAddr::parse("10.0.3"));
    CHECK_THROWS((void)HostAddr::parse("10.0.3.999"));
}

TEST_CASE("hierarchy levels compose") {
    auto secret = secret_of(0x11, AsId{1, 5});
    AsId peer{2, 9};
    HostAddr ha{{192, 168, 0, 1}}, hb{{10, 1, 2, 3}};

    auto as_level = drkey::derive_as_level(secret, peer);
    CHECK(as_level.level == drkey::KeyLevel::as_level);
    CHECK(as_level.src_as == AsId{1, 5});
    CHECK(as_level.dst_as == peer);

    auto host_as = drkey::derive_host_as(as_level, hb);
    CHECK(host_as.level == drkey::KeyLevel::host_as);

    auto host_host = drkey::derive_host_host(as_level, ha, hb);
    CHECK(host_host.level == drkey::KeyLevel::host_host);

    // distinct levels and inputs give distinct keys
    CHECK(as_level.key != host_as.key);
    CHECK(host_as.key != host_host.key);
    CHECK(drkey::derive_host_host(as_level, hb, ha).key != host_host.key);
    CHECK(drkey::derive_as_level(secret, AsId{2, 10}).key != as_level.key);
}

TEST_CASE("router rederivation equals the two-step derivation") {
    auto secret = secret_of(0x2f, AsId{3, 77});
    AsId src{1, 42};
    HostAddr src_host{{172, 16, 0, 4}};

    auto two_step =
        drkey::derive_host_as(drkey::derive_as_level(secret, src), src_host);
    auto direct = drkey::router_rederive(secret, src, src_host);
    CHECK(direct.key == two_step.key);
    CHECK(direct.level == drkey::KeyLevel::host_as);
}

TEST_CASE("host derivations demand an AS-level key") {
    auto secret = secret_of(0x01, AsId{1, 1});
    auto as_level = drkey::derive_as_level(secret, AsId{1, 2});
    auto host_as = drkey::derive_host_as(as_level, HostAddr{{1, 2, 3, 4}});
    CHECK_THROWS_AS((void)drkey::derive_host_as(host_as, HostAddr{{1, 2, 3, 4}}),
                    drkey::LevelMismatch);
    CHECK_THROWS_AS((void)drkey::derive_host_host(host_as, HostAddr{{1, 2, 3, 4}},
                                                  HostAddr{{5, 6, 7, 8}}),
                    drkey::LevelMismatch);
}

TEST_CASE("derivation is deterministic") {
    auto secret = secret_of(0xaa, AsId{1, 1});
    auto k1 = drkey::derive_as_level(secret, AsId{9, 9});
    auto k2 = drkey::derive_as_level(secret, AsId{9, 9});
    CHECK(k1.key == k2.key);
}
