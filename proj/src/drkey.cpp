#include "fabrid/drkey.hpp"

#include <charconv>
#include <cstdio>

namespace fabrid::drkey {

std::array<uint8_t, 8> AsId::encode() const {
    std::array<uint8_t, 8> out{};
    out[0] = static_cast<uint8_t>(isd >> 8);
    out[1] = static_cast<uint8_t>(isd);
    for (int i = 0; i < 6; ++i)
        out[2 + i] = static_cast<uint8_t>(as_num >> (40 - 8 * i));
    return out;
}

AsId AsId::decode(std::span<const uint8_t> b) {
    if (b.size() != 8) throw std::invalid_argument("AsId needs 8 bytes");
    AsId id;
    id.isd = static_cast<uint16_t>(b[0]) << 8 | b[1];
    for (int i = 0; i < 6; ++i) id.as_num = id.as_num << 8 | b[2 + i];
    return id;
}

std::string AsId::str() const {
    return std::to_string(isd) + "-" + std::to_string(as_num);
}

AsId AsId::parse(const std::string& text) {
    auto dash = text.find('-');
    if (dash == std::string::npos) throw std::invalid_argument("AsId: expected isd-as");
    AsId id;
    unsigned long isd = std::stoul(text.substr(0, dash));
    unsigned long long asn = std::stoull(text.substr(dash + 1));
    if (isd > 0xffff || asn > 0xffffffffffffULL)
        throw std::invalid_argument("AsId out of range");
    id.isd = static_cast<uint16_t>(isd);
    id.as_num = asn;
    return id;
}

std::string HostAddr::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", octets[0], octets[1], octets[2],
                  octets[3]);
    return buf;
}

HostAddr HostAddr::parse(const std::string& dotted) {
    HostAddr h;
    unsigned a, b, c, d;
    if (std::sscanf(dotted.c_str(), "%u.%u.%u.%u", &a, &b, &c, &d) != 4 ||
        a > 255 || b > 255 || c > 255 || d > 255)
        throw std::invalid_argument("bad IPv4 address: " + dotted);
    h.octets = {static_cast<uint8_t>(a), static_cast<uint8_t>(b),
                static_cast<uint8_t>(c), static_cast<uint8_t>(d)};
    return h;
}

DerivedKey derive_as_level(const AsSecret& secret, const AsId& b) {
    DerivedKey out;
    out.key.bytes = crypto::prf(secret.key, b.encode());
    out.level = KeyLevel::as_level;
    out.src_as = secret.owner;
    out.dst_as = b;
    return out;
}

DerivedKey derive_host_as(const DerivedKey& as_key, const HostAddr& h_b) {
    if (as_key.level != KeyLevel::as_level) throw LevelMismatch{};
    DerivedKey out = as_key;
    out.key.bytes = crypto::prf(as_key.key, h_b.octets);
    out.level = KeyLevel::host_as;
    out.host_b = h_b;
    return out;
}

DerivedKey derive_host_host(const DerivedKey& as_key, const HostAddr& h_a,
                            const HostAddr& h_b) {
    if (as_key.level != KeyLevel::as_level) throw LevelMismatch{};
    std::array<uint8_t, 8> input;
    std::copy(h_a.octets.begin(), h_a.octets.end(), input.begin());
    std::copy(h_b.octets.begin(), h_b.octets.end(), input.begin() + 4);
    DerivedKey out = as_key;
    out.key.bytes = crypto::prf(as_key.key, input);
    out.level = KeyLevel::host_host;
    out.host_a = h_a;
    out.host_b = h_b;
    return out;
}

DerivedKey router_rederive(const AsSecret& secret, const AsId& src_as,
                           const HostAddr& src_host) {
    return derive_host_as(derive_as_level(secret, src_as), src_host);
}

}  // namespace fabrid::drkey
