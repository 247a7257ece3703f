#include <algorithm>

#include "fabrid/control.hpp"

namespace fabrid::control {

IpRange IpRange::v4(const drkey::HostAddr& h, uint8_t prefix) {
    IpRange r;
    std::copy(h.octets.begin(), h.octets.end(), r.addr.begin() + 4);
    r.prefix_len = prefix;
    return r;
}

IfIpPair IfIpPair::if_if(InterfaceId l, InterfaceId r) {
    IfIpPair p;
    p.left_if = l;
    p.right_if = r;
    return p;
}

IfIpPair IfIpPair::ip_if(IpRange l, InterfaceId r) {
    IfIpPair p;
    p.left_ip = l;
    p.right_if = r;
    return p;
}

IfIpPair IfIpPair::if_ip(InterfaceId l, IpRange r) {
    IfIpPair p;
    p.left_if = l;
    p.right_ip = r;
    return p;
}

namespace {

std::vector<PolicyIndex> normalized(std::vector<PolicyIndex> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

void check_invariants(const PolicyMaps& maps, const drkey::AsId& owner) {
    for (const auto& [pair, indices] : maps.imap) {
        if (pair.left_ip && pair.right_ip)
            throw MapInvariantViolation("IP x IP interface pairs are excluded");
        if (indices.size() > 255) throw TooManyIndices{};
        for (PolicyIndex idx : indices)
            if (!maps.dmap.count(idx))
                throw MapInvariantViolation("announced index " + std::to_string(idx) +
                                            " has no D-map entry");
    }
    for (const auto& [idx, pid] : maps.dmap) {
        if (idx == 0) throw MapInvariantViolation("D-map keys must be non-zero");
        if (pid.scope && *pid.scope != owner)
            throw MapInvariantViolation("local policy id owned by a different AS");
    }
}

void encode_if_ip_entry(Bytes& out, const IfIpPair& pair,
                        const std::vector<PolicyIndex>& indices) {
    bool ip_left = pair.left_ip.has_value();
    const IpRange& ip = ip_left ? *pair.left_ip : *pair.right_ip;
    InterfaceId iface = ip_left ? *pair.right_if : *pair.left_if;
    put_u16(out, iface);
    out.insert(out.end(), ip.addr.begin(), ip.addr.end());
    out.push_back(static_cast<uint8_t>(ip.prefix_len | (ip_left ? 0x80 : 0)));
    auto idx = normalized(indices);
    out.push_back(static_cast<uint8_t>(idx.size()));
    for (PolicyIndex i : idx) put_u16(out, i);
}

}  // namespace

Bytes encode_imap(const PolicyMaps& maps) {
    Bytes out;
    // IF-IF entries first, then IF-IP; map order is already canonical
    for (const auto& [pair, indices] : maps.imap) {
        if (!pair.is_if_if()) continue;
        if (indices.size() > 255) throw TooManyIndices{};
        put_u16(out, *pair.left_if);
        put_u16(out, *pair.right_if);
        auto idx = normalized(indices);
        out.push_back(static_cast<uint8_t>(idx.size()));
        for (PolicyIndex i : idx) put_u16(out, i);
    }
    for (const auto& [pair, indices] : maps.imap) {
        if (pair.is_if_if()) continue;
        if (indices.size() > 255) throw TooManyIndices{};
        encode_if_ip_entry(out, pair, indices);
    }
    return out;
}

Bytes encode_dmap(const PolicyMaps& maps, const drkey::AsId& owner) {
    Bytes out;
    for (const auto& [idx, pid] : maps.dmap) {
        put_u16(out, idx);
        out.push_back(pid.scope ? 1 : 0);
        put_u32(out, pid.pid);
        out.push_back(0);  // reserved
    }
    (void)owner;
    return out;
}

Bytes encode_maps_framed(const PolicyMaps& maps, const drkey::AsId& owner) {
    check_invariants(maps, owner);
    size_t n_ifif = 0, n_ifip = 0;
    for (const auto& [pair, _] : maps.imap) (pair.is_if_if() ? n_ifif : n_ifip)++;
    Bytes out;
    put_u16(out, static_cast<uint16_t>(n_ifif));
    put_u16(out, static_cast<uint16_t>(n_ifip));
    put_u16(out, static_cast<uint16_t>(maps.dmap.size()));
    Bytes imap = encode_imap(maps);
    Bytes dmap = encode_dmap(maps, owner);
    out.insert(out.end(), imap.begin(), imap.end());
    out.insert(out.end(), dmap.begin(), dmap.end());
    return out;
}

PolicyMaps decode_maps(std::span<const uint8_t> framed, const drkey::AsId& owner) {
    ByteReader r(framed);
    uint16_t n_ifif = r.u16(), n_ifip = r.u16(), n_d = r.u16();
    PolicyMaps maps;
    for (uint16_t e = 0; e < n_ifif; ++e) {
        InterfaceId l = r.u16(), rt = r.u16();
        uint8_t count = r.u8();
        std::vector<PolicyIndex> idx(count);
        for (auto& i : idx) i = r.u16();
        maps.imap[IfIpPair::if_if(l, rt)] = std::move(idx);
    }
    for (uint16_t e = 0; e < n_ifip; ++e) {
        InterfaceId iface = r.u16();
        IpRange ip;
        auto addr = r.take(8);
        std::copy(addr.begin(), addr.end(), ip.addr.begin());
        uint8_t pfx = r.u8();
        bool ip_left = pfx & 0x80;
        ip.prefix_len = pfx & 0x7f;
        uint8_t count = r.u8();
        std::vector<PolicyIndex> idx(count);
        for (auto& i : idx) i = r.u16();
        maps.imap[ip_left ? IfIpPair::ip_if(ip, iface) : IfIpPair::if_ip(iface, ip)] =
            std::move(idx);
    }
    for (uint16_t e = 0; e < n_d; ++e) {
        PolicyIndex idx = r.u16();
        uint8_t scope = r.u8();
        uint32_t pid = r.u32();
        r.u8();  // reserved
        registry::PolicyId id;
        if (scope) id.scope = owner;
        id.pid = pid;
        maps.dmap[idx] = id;
    }
    if (!r.done()) throw std::invalid_argument("trailing bytes after policy maps");
    return maps;
}

crypto::Digest16 maps_digest(const PolicyMaps& maps, const drkey::AsId& owner) {
    Bytes buf = encode_imap(maps);
    Bytes dmap = encode_dmap(maps, owner);
    buf.insert(buf.end(), dmap.begin(), dmap.end());
    return crypto::digest16(buf);
}

IntraAsQueryResult query_intra_as_policies(const AsServiceConfig& svc,
                                           const drkey::HostAddr& src,
                                           const drkey::HostAddr& dst) {
    if (!svc.local_hosts.count(src) || !svc.local_hosts.count(dst)) throw NotLocal{};
    for (const auto& route : svc.internal_routes) {
        if ((route.a == src && route.b == dst) || (route.a == dst && route.b == src))
            return {route.pids, route.validity};
    }
    return {{}, svc.default_validity};
}

}  // namespace fabrid::control
