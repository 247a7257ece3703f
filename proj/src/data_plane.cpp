#include "fabrid/data_plane.hpp"

#include <algorithm>
#include <cstring>

namespace fabrid::data {

namespace {

void append(Bytes& out, std::span<const uint8_t> b) {
    out.insert(out.end(), b.begin(), b.end());
}

// hop validation MAC input: ts || src_as || src_host || sigma || enc_index
Bytes hvf_input(PacketTimestamp ts, const drkey::AsId& src_as,
                const drkey::HostAddr& src_host, const Block16& sigma,
                std::span<const uint8_t, kIndexLen> enc_index) {
    Bytes msg;
    put_u64(msg, ts);
    append(msg, src_as.encode());
    append(msg, src_host.octets);
    append(msg, sigma);
    append(msg, enc_index);
    return msg;
}

Block16 hvf_mac(const crypto::SymKey& key, const PacketHeader& h,
                const PacketHop& hop) {
    return crypto::prf(key, hvf_input(h.ts, h.src_as, h.src_host, hop.field.sigma,
                                      hop.enc_index));
}

std::array<uint8_t, kHvfLen> dvf_value(const crypto::SymKey& key, PacketTimestamp ts,
                                       std::span<const uint8_t> payload) {
    Bytes msg;
    put_u64(msg, ts);
    append(msg, crypto::digest16(payload).bytes);
    Block16 mac = crypto::prf(key, msg);
    std::array<uint8_t, kHvfLen> out;
    std::copy_n(mac.begin(), kHvfLen, out.begin());
    return out;
}

uint64_t fnv1a(std::span<const uint8_t> data) {
    uint64_t h = 14695981039346656037ull;
    for (uint8_t b : data) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

Bytes encode_hop_field(const drkey::AsId& as_id, control::InterfaceId ingress,
                       control::InterfaceId egress) {
    Bytes out;
    append(out, as_id.encode());
    put_u16(out, ingress);
    put_u16(out, egress);
    return out;
}

Block16 compute_sigma(const drkey::AsSecret& secret, const HopField& hf) {
    return crypto::prf(secret.key,
                       encode_hop_field(hf.as_id, hf.ingress_if, hf.egress_if));
}

size_t PacketHeader::wire_size(size_t hop_count) {
    return 8 + 8 + 4 + 8 + 4 + 1 + hop_count * (8 + 2 + 2 + 16 + kIndexLen + kHvfLen) +
           kHvfLen;
}

Bytes PacketHeader::serialize() const {
    Bytes out;
    out.reserve(wire_size(hops.size()));
    put_u64(out, ts);
    append(out, src_as.encode());
    append(out, src_host.octets);
    append(out, dst_as.encode());
    append(out, dst_host.octets);
    out.push_back(static_cast<uint8_t>(hops.size()));
    for (const auto& hop : hops) {
        append(out, hop.field.as_id.encode());
        put_u16(out, hop.field.ingress_if);
        put_u16(out, hop.field.egress_if);
        append(out, hop.field.sigma);
        append(out, hop.enc_index);
        append(out, hop.hvf);
    }
    append(out, dvf);
    return out;
}

PacketHeader PacketHeader::deserialize(std::span<const uint8_t> data) {
    ByteReader r(data);
    PacketHeader h;
    h.ts = r.u64();
    h.src_as = drkey::AsId::decode(r.take(8));
    auto copy_to = [&](auto& arr, size_t n) {
        auto b = r.take(n);
        std::copy(b.begin(), b.end(), arr.begin());
    };
    copy_to(h.src_host.octets, 4);
    h.dst_as = drkey::AsId::decode(r.take(8));
    copy_to(h.dst_host.octets, 4);
    uint8_t n = r.u8();
    for (uint8_t i = 0; i < n; ++i) {
        PacketHop hop;
        hop.field.as_id = drkey::AsId::decode(r.take(8));
        hop.field.ingress_if = r.u16();
        hop.field.egress_if = r.u16();
        copy_to(hop.field.sigma, 16);
        copy_to(hop.enc_index, kIndexLen);
        copy_to(hop.hvf, kHvfLen);
        h.hops.push_back(hop);
    }
    copy_to(h.dvf, kHvfLen);
    if (!r.done()) throw std::invalid_argument("trailing bytes after packet header");
    return h;
}

// ---------------------------------------------------------------------------
// Source
// ---------------------------------------------------------------------------

void SourceState::retain(PacketTimestamp ts, RetainedPacket p) {
    retained_[ts] = std::move(p);
}

const RetainedPacket* SourceState::find(PacketTimestamp ts) const {
    auto it = retained_.find(ts);
    return it == retained_.end() ? nullptr : &it->second;
}

void SourceState::expire(uint64_t now_ns) {
    while (!retained_.empty()) {
        auto it = retained_.begin();
        if (now_ns < it->first || now_ns - it->first <= retention_ns_) break;
        retained_.erase(it);
    }
}

Packet build_packet(const SenderConfig& cfg, PacketTimestamp ts,
                    std::span<const HopKey> keys,
                    const crypto::SymKey& dest_host_host_key,
                    std::span<const PolicyIndex> indices,
                    std::span<const uint8_t> payload, SourceState* retain) {
    if (keys.empty()) throw MissingKey(0);
    if (indices.size() + 1 != keys.size()) throw IndexCountMismatch{};

    Packet pkt;
    pkt.header.ts = ts;
    pkt.header.src_as = cfg.src_as;
    pkt.header.src_host = cfg.src_host;
    pkt.header.dst_as = cfg.dst_as;
    pkt.header.dst_host = cfg.dst_host;
    pkt.payload.assign(payload.begin(), payload.end());

    RetainedPacket retained;
    for (size_t i = 0; i < keys.size(); ++i) {
        PacketHop hop;
        hop.field = keys[i].field;
        PolicyIndex index = i == 0 ? 0 : indices[i - 1];
        Block16 pad = crypto::keystream(keys[i].key, ts);
        hop.enc_index[0] = static_cast<uint8_t>(index >> 8) ^ pad[0];
        hop.enc_index[1] = static_cast<uint8_t>(index) ^ pad[1];
        Block16 mac = hvf_mac(keys[i].key, pkt.header, hop);
        std::copy_n(mac.begin(), kHvfLen, hop.hvf.begin());
        std::array<uint8_t, kHvfLen> update;
        std::copy_n(mac.begin() + kHvfLen, kHvfLen, update.begin());
        retained.expected_updates.push_back(update);
        pkt.header.hops.push_back(hop);
    }
    pkt.header.dvf = dvf_value(dest_host_host_key, ts, payload);
    if (retain) retain->retain(ts, std::move(retained));
    return pkt;
}

// ---------------------------------------------------------------------------
// Duplicate suppression
// ---------------------------------------------------------------------------

DuplicateWindow::Result DuplicateWindow::check(const drkey::AsId& src_as,
                                               const drkey::HostAddr& src_host,
                                               PacketTimestamp ts, uint64_t now_ns) {
    std::string src = src_as.str() + "/" + src_host.str();
    Shard& shard = shards_[std::hash<std::string>{}(src) % kShards];
    std::lock_guard lock(shard.mu);
    // evict expired keys
    while (!shard.by_expiry.empty() && shard.by_expiry.begin()->first <= now_ns) {
        shard.seen.erase(shard.by_expiry.begin()->second);
        shard.by_expiry.erase(shard.by_expiry.begin());
    }
    auto key = std::make_pair(src, ts);
    if (shard.seen.count(key)) return Result::Replay;
    uint64_t expiry = std::max(now_ns, ts) + window_ns_;
    shard.seen[key] = expiry;
    shard.by_expiry.emplace(expiry, key);
    return Result::Fresh;
}

size_t DuplicateWindow::size() const {
    size_t total = 0;
    for (const auto& s : shards_) {
        std::lock_guard lock(s.mu);
        total += s.seen.size();
    }
    return total;
}

// ---------------------------------------------------------------------------
// Router
// ---------------------------------------------------------------------------

void RouterContext::set_table(ForwardingTable table) {
    auto fresh = std::make_shared<const ForwardingTable>(std::move(table));
    std::unique_lock lock(table_mu_);
    table_ = std::move(fresh);
}

std::shared_ptr<const ForwardingTable> RouterContext::table() const {
    std::shared_lock lock(table_mu_);
    return table_;
}

uint64_t RouterContext::drops(DropReason r) const {
    return drop_counts_[static_cast<size_t>(r)].load();
}

void RouterContext::count_drop(DropReason r) {
    drop_counts_[static_cast<size_t>(r)].fetch_add(1);
}

RouterDecision router_process(RouterContext& ctx, Packet& packet, uint64_t now_ns) {
    const PacketHeader& h = packet.header;
    const drkey::AsId& self = ctx.config().secret.owner;

    auto drop = [&](DropReason reason) {
        ctx.count_drop(reason);
        RouterDecision d;
        d.kind = RouterDecision::Kind::Drop;
        d.reason = reason;
        return d;
    };

    // (1) timestamp freshness
    if (h.ts > now_ns + ctx.config().max_clock_skew_ns ||
        (h.ts < now_ns && now_ns - h.ts > ctx.config().packet_lifetime_ns))
        return drop(DropReason::Stale);

    // (2) duplicate suppression
    if (ctx.duplicates().check(h.src_as, h.src_host, h.ts, now_ns) ==
        DuplicateWindow::Result::Replay)
        return drop(DropReason::Replay);

    auto hop_it = std::find_if(
        packet.header.hops.begin(), packet.header.hops.end(),
        [&](const PacketHop& hop) { return hop.field.as_id == self; });
    if (hop_it == packet.header.hops.end()) return drop(DropReason::BadHvf);
    PacketHop& hop = *hop_it;

    // (3) stateless key rederivation
    drkey::DerivedKey key =
        drkey::router_rederive(ctx.config().secret, h.src_as, h.src_host);

    // (4) HVF verification; mismatch halts all further processing
    Block16 mac = hvf_mac(key.key, h, hop);
    if (!crypto::constant_time_equal({mac.data(), kHvfLen}, hop.hvf))
        return drop(DropReason::BadHvf);

    // (5) index decryption
    Block16 pad = crypto::keystream(key.key, h.ts);
    PolicyIndex index = static_cast<PolicyIndex>(
        static_cast<uint16_t>((hop.enc_index[0] ^ pad[0])) << 8 |
        (hop.enc_index[1] ^ pad[1]));

    // (6) intra-AS route lookup
    auto table = ctx.table();
    auto routes = table->routes.find(index);
    if (routes == table->routes.end() || routes->second.empty()) {
        RouterDecision d;
        d.kind = RouterDecision::Kind::ControlReply;
        d.index = index;
        ControlMessage msg;
        msg.ts = h.ts;
        msg.index = index;
        msg.as_id = self;
        msg.mac = control_message_mac(key.key, msg);
        d.control = msg;
        return d;
    }

    // proof of traversal: replace the HVF with MAC bytes [l_val : 2*l_val]
    std::copy_n(mac.begin() + kHvfLen, kHvfLen, hop.hvf.begin());

    // flow-stable route choice within the compliant set
    Bytes flow;
    append(flow, h.src_as.encode());
    append(flow, h.src_host.octets);
    append(flow, h.dst_as.encode());
    append(flow, h.dst_host.octets);
    RouterDecision d;
    d.kind = RouterDecision::Kind::Forward;
    d.index = index;
    d.route_id = routes->second[fnv1a(flow) % routes->second.size()];
    return d;
}

// ---------------------------------------------------------------------------
// Destination and validation
// ---------------------------------------------------------------------------

namespace {

Bytes confirmation_mac_input(const Confirmation& conf) {
    Bytes msg;
    put_u64(msg, conf.ts);
    for (const auto& h : conf.hvfs) append(msg, h);
    return msg;
}

}  // namespace

DestResult dest_process(const DestConfig& cfg, const Packet& packet) {
    auto expected = dvf_value(cfg.host_host_key, packet.header.ts, packet.payload);
    if (!crypto::constant_time_equal(expected, packet.header.dvf)) return {};
    Confirmation conf;
    conf.ts = packet.header.ts;
    for (const auto& hop : packet.header.hops) conf.hvfs.push_back(hop.hvf);
    Block16 mac = crypto::prf(cfg.host_host_key, confirmation_mac_input(conf));
    std::copy_n(mac.begin(), kHvfLen, conf.mac.begin());
    return {true, conf};
}

bool verify_confirmation_mac(const crypto::SymKey& key, const Confirmation& conf) {
    Block16 mac = crypto::prf(key, confirmation_mac_input(conf));
    return crypto::constant_time_equal({mac.data(), kHvfLen}, conf.mac);
}

PathValidation source_validate(const SourceState& state, const Confirmation& conf) {
    const RetainedPacket* retained = state.find(conf.ts);
    if (!retained) return {PathValidation::Kind::UnknownTimestamp, {}};
    PathValidation result;
    size_t n = retained->expected_updates.size();
    for (size_t i = 0; i < n; ++i) {
        if (i >= conf.hvfs.size() ||
            conf.hvfs[i] != retained->expected_updates[i])
            result.mismatched_hops.push_back(i);
    }
    result.kind = result.mismatched_hops.empty() ? PathValidation::Kind::PathValid
                                                 : PathValidation::Kind::PathInvalid;
    return result;
}

std::array<uint8_t, kHvfLen> control_message_mac(const crypto::SymKey& hop_key,
                                                 const ControlMessage& msg) {
    Bytes input;
    input.push_back(0x01);  // message kind: UnsupportedPolicyIndex
    put_u64(input, msg.ts);
    put_u16(input, msg.index);
    append(input, msg.as_id.encode());
    Block16 mac = crypto::prf(hop_key, input);
    std::array<uint8_t, kHvfLen> out;
    std::copy_n(mac.begin(), kHvfLen, out.begin());
    return out;
}

bool verify_control_message(const SourceState& state, const crypto::SymKey& hop_key,
                            const ControlMessage& msg) {
    if (!state.find(msg.ts)) return false;
    auto expected = control_message_mac(hop_key, msg);
    return crypto::constant_time_equal(expected, msg.mac);
}

}  // namespace fabrid::data
