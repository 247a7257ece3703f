#ifndef FABRID_DATA_PLANE_HPP
#define FABRID_DATA_PLANE_HPP

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "fabrid/control.hpp"
#include "fabrid/crypto.hpp"
#include "fabrid/drkey.hpp"

namespace fabrid::data {

using PacketTimestamp = uint64_t;  // nanoseconds, unique per source host
using control::PolicyIndex;

constexpr size_t kIndexLen = 2;  // l_pol
constexpr size_t kHvfLen = 4;    // l_val

// ---------------------------------------------------------------------------
// Packet format
// ---------------------------------------------------------------------------

struct HopField {
    drkey::AsId as_id;
    control::InterfaceId ingress_if = 0;
    control::InterfaceId egress_if = 0;
    Block16 sigma{};  // opaque path-authorization value
};

// canonical hop-field encoding (as_id || ingress || egress), the sigma input
Bytes encode_hop_field(const drkey::AsId& as_id, control::InterfaceId ingress,
                       control::InterfaceId egress);
Block16 compute_sigma(const drkey::AsSecret& secret, const HopField& hf);

struct PacketHop {
    HopField field;
    std::array<uint8_t, kIndexLen> enc_index{};
    std::array<uint8_t, kHvfLen> hvf{};
};

// Wire layout (big-endian):
//   ts(8) src_as(8) src_host(4) dst_as(8) dst_host(4) n(1)
//   per hop: as_id(8) ingress(2) egress(2) sigma(16) enc_index(2) hvf(4)
//   dvf(4)
struct PacketHeader {
    PacketTimestamp ts = 0;
    drkey::AsId src_as;
    drkey::HostAddr src_host;
    drkey::AsId dst_as;
    drkey::HostAddr dst_host;
    std::vector<PacketHop> hops;  // source AS first
    std::array<uint8_t, kHvfLen> dvf{};

    Bytes serialize() const;
    static PacketHeader deserialize(std::span<const uint8_t> data);
    static size_t wire_size(size_t hop_count);
};

struct Packet {
    PacketHeader header;
    Bytes payload;
};

struct MissingKey : std::runtime_error {
    explicit MissingKey(size_t hop)
        : std::runtime_error("no host-level key for hop " + std::to_string(hop)) {}
};
struct IndexCountMismatch : std::runtime_error {
    IndexCountMismatch()
        : std::runtime_error("policy index list must cover every hop but the first") {}
};

// ---------------------------------------------------------------------------
// Source side
// ---------------------------------------------------------------------------

struct HopKey {
    HopField field;
    crypto::SymKey key;  // K_i = K_{A_i -> A_0:H_S}
};

// per-packet state retained for path validation
struct RetainedPacket {
    std::vector<std::array<uint8_t, kHvfLen>> expected_updates;  // MAC bytes [4:8]
};

class SourceState {
  public:
    explicit SourceState(uint64_t retention_ns = 10'000'000'000ull)
        : retention_ns_(retention_ns) {}

    void retain(PacketTimestamp ts, RetainedPacket p);
    const RetainedPacket* find(PacketTimestamp ts) const;
    void expire(uint64_t now_ns);

  private:
    uint64_t retention_ns_;
    std::map<PacketTimestamp, RetainedPacket> retained_;
};

struct SenderConfig {
    drkey::AsId src_as;
    drkey::HostAddr src_host;
    drkey::AsId dst_as;
    drkey::HostAddr dst_host;
};

// indices has one entry per hop except the first (the source AS rides at
// index zero); keys must cover every hop
Packet build_packet(const SenderConfig& cfg, PacketTimestamp ts,
                    std::span<const HopKey> keys,
                    const crypto::SymKey& dest_host_host_key,
                    std::span<const PolicyIndex> indices,
                    std::span<const uint8_t> payload, SourceState* retain);

// ---------------------------------------------------------------------------
// Router side
// ---------------------------------------------------------------------------

struct ForwardingTable {
    // policy index -> intra-AS routes satisfying it; index 0 is the default
    std::unordered_map<PolicyIndex, std::vector<std::string>> routes;
};

enum class DropReason { Stale, Replay, BadHvf, BadDvf };

struct ControlMessage {
    PacketTimestamp ts = 0;
    PolicyIndex index = 0;  // the unsupported index, plaintext
    drkey::AsId as_id;
    std::array<uint8_t, kHvfLen> mac{};
};

// sharded sliding-window replay filter keyed on (src_as, src_host, ts)
class DuplicateWindow {
  public:
    explicit DuplicateWindow(uint64_t window_ns = 2'000'000'000ull)
        : window_ns_(window_ns) {}

    enum class Result { Fresh, Replay };
    Result check(const drkey::AsId& src_as, const drkey::HostAddr& src_host,
                 PacketTimestamp ts, uint64_t now_ns);
    size_t size() const;

  private:
    struct Shard {
        mutable std::mutex mu;
        std::map<std::pair<std::string, PacketTimestamp>, uint64_t> seen;  // -> expiry
        std::multimap<uint64_t, std::pair<std::string, PacketTimestamp>> by_expiry;
    };
    static constexpr size_t kShards = 16;
    uint64_t window_ns_;
    std::array<Shard, kShards> shards_;
};

struct RouterConfig {
    drkey::AsSecret secret;
    uint64_t max_clock_skew_ns = 500'000'000;   // future-dated tolerance
    uint64_t packet_lifetime_ns = 1'000'000'000;
};

class RouterContext {
  public:
    explicit RouterContext(RouterConfig cfg) : cfg_(std::move(cfg)) {}

    // control-plane update: swaps the whole table atomically
    void set_table(ForwardingTable table);
    std::shared_ptr<const ForwardingTable> table() const;

    const RouterConfig& config() const { return cfg_; }
    DuplicateWindow& duplicates() { return dupes_; }

    uint64_t drops(DropReason r) const;
    void count_drop(DropReason r);

  private:
    RouterConfig cfg_;
    DuplicateWindow dupes_;
    mutable std::shared_mutex table_mu_;
    std::shared_ptr<const ForwardingTable> table_ =
        std::make_shared<ForwardingTable>();
    std::array<std::atomic<uint64_t>, 4> drop_counts_{};
};

struct RouterDecision {
    enum class Kind { Forward, Drop, ControlReply };
    Kind kind = Kind::Drop;
    DropReason reason = DropReason::BadHvf;
    std::string route_id;          // Forward
    PolicyIndex index = 0;         // decrypted index
    std::optional<ControlMessage> control;
};

// Full ingress pipeline: freshness, duplicate check, key rederivation, HVF
// verification, index decryption, table lookup. On Forward the packet's HVF
// for this hop is overwritten with MAC bytes [4:8].
RouterDecision router_process(RouterContext& ctx, Packet& packet, uint64_t now_ns);

// ---------------------------------------------------------------------------
// Destination side and path validation
// ---------------------------------------------------------------------------

struct Confirmation {
    PacketTimestamp ts = 0;
    std::vector<std::array<uint8_t, kHvfLen>> hvfs;
    std::array<uint8_t, kHvfLen> mac{};
};

struct DestConfig {
    crypto::SymKey host_host_key;  // K_{A_l:H_D -> A_0:H_S}
};

struct DestResult {
    bool accepted = false;
    std::optional<Confirmation> confirmation;
};

DestResult dest_process(const DestConfig& cfg, const Packet& packet);

bool verify_confirmation_mac(const crypto::SymKey& host_host_key,
                             const Confirmation& conf);

struct PathValidation {
    enum class Kind { PathValid, PathInvalid, UnknownTimestamp };
    Kind kind = Kind::PathValid;
    std::vector<size_t> mismatched_hops;
};

PathValidation source_validate(const SourceState& state, const Confirmation& conf);

// ok iff the MAC verifies under K_i for the issuing AS and ts matches a
// packet still in retention
bool verify_control_message(const SourceState& state, const crypto::SymKey& hop_key,
                            const ControlMessage& msg);

std::array<uint8_t, kHvfLen> control_message_mac(const crypto::SymKey& hop_key,
                                                 const ControlMessage& msg);

}  // namespace fabrid::data

#endif
