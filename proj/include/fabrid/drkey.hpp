#ifndef FABRID_DRKEY_HPP
#define FABRID_DRKEY_HPP

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "fabrid/crypto.hpp"

namespace fabrid::drkey {

struct LevelMismatch : std::runtime_error {
    LevelMismatch() : std::runtime_error("derivation requires an AS-level key") {}
};

struct AsId {
    uint16_t isd = 0;
    uint64_t as_num = 0;  // 48-bit

    auto operator<=>(const AsId&) const = default;

    // canonical 8-byte encoding: 2-byte ISD, 6-byte AS number, big-endian
    std::array<uint8_t, 8> encode() const;
    static AsId decode(std::span<const uint8_t> bytes8);

    std::string str() const;           // "isd-as" form, e.g. "1-12"
    static AsId parse(const std::string& text);
};

struct HostAddr {
    std::array<uint8_t, 4> octets{};  // IPv4

    auto operator<=>(const HostAddr&) const = default;

    std::string str() const;
    static HostAddr parse(const std::string& dotted);
};

struct AsSecret {
    crypto::SymKey key;
    AsId owner;
};

enum class KeyLevel { as_level, host_as, host_host };

struct DerivedKey {
    crypto::SymKey key;
    KeyLevel level = KeyLevel::as_level;
    AsId src_as;  // the deriving AS (key owner side)
    AsId dst_as;
    std::optional<HostAddr> host_a;
    std::optional<HostAddr> host_b;
};

// AS-level derivation: K_{A->B} from A's secret.
DerivedKey derive_as_level(const AsSecret& secret, const AsId& b);

// host-AS derivation: K_{A->B:H_B}.
DerivedKey derive_host_as(const DerivedKey& as_key, const HostAddr& h_b);

// host-host derivation: K_{A:H_A->B:H_B}; host encodings are concatenated in order.
DerivedKey derive_host_host(const DerivedKey& as_key, const HostAddr& h_a,
                            const HostAddr& h_b);

// Stateless border-router derivation of K_{A->src_as:src_host} from the AS
// secret only; definitionally equal to the two-step derivation.
DerivedKey router_rederive(const AsSecret& secret, const AsId& src_as,
                           const HostAddr& src_host);

}  // namespace fabrid::drkey

#endif
