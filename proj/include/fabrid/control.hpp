#ifndef FABRID_CONTROL_HPP
#define FABRID_CONTROL_HPP

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "fabrid/crypto.hpp"
#include "fabrid/drkey.hpp"
#include "fabrid/policy.hpp"
#include "fabrid/registry.hpp"

namespace fabrid::control {

using PolicyIndex = uint16_t;  // 0 = no specific desired policy
using InterfaceId = uint16_t;

// ---------------------------------------------------------------------------
// Policy maps I and D
// ---------------------------------------------------------------------------

struct IpRange {
    std::array<uint8_t, 8> addr{};  // IPv4 in the low 4 bytes
    uint8_t prefix_len = 32;

    auto operator<=>(const IpRange&) const = default;
    static IpRange v4(const drkey::HostAddr& h, uint8_t prefix);
};

// Ordered (ingress, egress) pair where each side is an interface or an IP
// range; IP x IP pairs are excluded.
struct IfIpPair {
    std::optional<InterfaceId> left_if, right_if;
    std::optional<IpRange> left_ip, right_ip;

    static IfIpPair if_if(InterfaceId l, InterfaceId r);
    static IfIpPair ip_if(IpRange l, InterfaceId r);
    static IfIpPair if_ip(InterfaceId l, IpRange r);

    bool is_if_if() const { return left_if && right_if; }
    auto operator<=>(const IfIpPair&) const = default;
};

struct PolicyMaps {
    std::map<IfIpPair, std::vector<PolicyIndex>> imap;
    std::map<PolicyIndex, registry::PolicyId> dmap;
};

struct TooManyIndices : std::runtime_error {
    TooManyIndices() : std::runtime_error("more than 255 indices per entry") {}
};
struct MapInvariantViolation : std::runtime_error {
    explicit MapInvariantViolation(const std::string& w) : std::runtime_error(w) {}
};

// Fixed wire layouts (entries only, no framing):
//   IF-IF entry: 2B ingress + 2B egress + 1B count + 2B per index
//   IF-IP entry: 2B interface + 8B address + 1B prefix/direction + 1B count
//                + 2B per index
//   D entry:     2B index + 1B scope flag + 4B pid + 1B reserved
Bytes encode_imap(const PolicyMaps& maps);
Bytes encode_dmap(const PolicyMaps& maps, const drkey::AsId& owner);
// framed form (entry counts up front); the exact inverse of decode_maps
Bytes encode_maps_framed(const PolicyMaps& maps, const drkey::AsId& owner);
PolicyMaps decode_maps(std::span<const uint8_t> framed, const drkey::AsId& owner);
// digest over the two encoded maps; entries digest the framed blob instead
// so that every byte of the detachable data is pinned
crypto::Digest16 maps_digest(const PolicyMaps& maps, const drkey::AsId& owner);

constexpr size_t kDetachedMarkerSize = 18;  // 16B digest + 2B flags

// ---------------------------------------------------------------------------
// PCBs and path segments
// ---------------------------------------------------------------------------

struct ValidityWindow {
    uint64_t not_before = 0;  // seconds
    uint64_t not_after = 0;

    bool contains(uint64_t t) const { return not_before <= t && t <= not_after; }
    bool overlaps(const ValidityWindow& o) const {
        return not_before <= o.not_after && o.not_before <= not_after;
    }
};

struct AsEntry {
    drkey::AsId as_id;
    InterfaceId ingress_if = 0;  // 0 for the originating core AS
    InterfaceId egress_if = 0;   // 0 for the terminal AS
    ValidityWindow validity;
    crypto::Digest16 maps_digest;
    std::optional<Bytes> extension;  // framed maps; nullopt when detached
    crypto::Signature signature;
};

struct Pcb {
    std::vector<AsEntry> entries;

    Bytes serialize() const;
    static Pcb deserialize(std::span<const uint8_t> data);
};

using TrustStore = std::map<std::string, crypto::PubKey>;  // AS id -> key

enum class PcbError { Ok, SignatureInvalid, Expired, DigestMismatch };

struct PcbVerifyResult {
    PcbError code = PcbError::Ok;
    int hop = -1;

    bool ok() const { return code == PcbError::Ok; }
};

struct UpstreamSignatureInvalid : std::runtime_error {
    UpstreamSignatureInvalid()
        : std::runtime_error("upstream PCB signature does not verify") {}
};
struct UnsupportedAnnouncement : std::runtime_error {
    explicit UnsupportedAnnouncement(PolicyIndex idx)
        : std::runtime_error("no configured intra-AS route for announced index " +
                             std::to_string(idx)) {}
};
struct IndexRemapped : std::runtime_error {
    explicit IndexRemapped(PolicyIndex idx)
        : std::runtime_error("index " + std::to_string(idx) +
                             " already maps to a different policy id within an "
                             "overlapping validity period") {}
};
struct DigestMismatch : std::runtime_error {
    DigestMismatch() : std::runtime_error("extension digest mismatch") {}
};
struct JoinMismatch : std::runtime_error {
    JoinMismatch() : std::runtime_error("segments do not share a join AS") {}
};

// Per-AS beaconing context: keys, announced maps and the intra-AS routes that
// back the announcements.
struct AsContext {
    drkey::AsId as_id;
    crypto::SigKeyPair sig_key;
    PolicyMaps maps;
    std::set<PolicyIndex> supported_indices;  // configured intra-AS routes

    // index -> (pid, validity) of previously issued announcements; guards the
    // no-remap-within-overlapping-validity invariant
    std::map<PolicyIndex, std::vector<std::pair<registry::PolicyId, ValidityWindow>>>
        issued;
};

Pcb originate_pcb(AsContext& ctx, InterfaceId egress_if, ValidityWindow validity);
Pcb extend_pcb(const Pcb& pcb, AsContext& ctx, InterfaceId ingress_if,
               InterfaceId egress_if, ValidityWindow validity,
               const TrustStore& trust);

// Removes every attached extension, leaving 18-byte markers; returns the
// per-hop blobs in entry order (empty where already detached).
std::pair<Pcb, std::vector<Bytes>> detach_extension(const Pcb& pcb);
Pcb reattach_extension(const Pcb& pcb, const std::vector<Bytes>& blobs);

PcbVerifyResult verify_pcb(const Pcb& pcb, const TrustStore& trust, uint64_t now);

// ---------------------------------------------------------------------------
// End-to-end paths
// ---------------------------------------------------------------------------

struct PathHop {
    drkey::AsId as;
    InterfaceId ingress_if = 0;  // 0 = local endpoint side
    InterfaceId egress_if = 0;
    PolicyMaps maps;
    ValidityWindow validity;
};

struct EndToEndPath {
    std::vector<PathHop> hops;  // source AS first
};

// Combines an up-segment (traversed against beaconing direction), an optional
// core-segment and a down-segment; adjacent segments must share their join AS.
EndToEndPath combine_segments(const Pcb& up, const std::optional<Pcb>& core,
                              const Pcb& down);

enum class HopVerdict { Compliant, NonCompliant, Untrusted, NoAnnouncement };

struct HopAssessment {
    drkey::AsId as;
    HopVerdict verdict = HopVerdict::NoAnnouncement;
    PolicyIndex index = 0;  // the compliant announced index, when any
    bool resolver_warning = false;
};

struct PathAssessment {
    EndToEndPath path;
    std::vector<HopAssessment> hops;

    bool has_untrusted() const;
    size_t compliant_count() const;
};

std::vector<PathAssessment> filter_paths(
    const std::vector<EndToEndPath>& paths, const policy::Policy& pref_pol,
    const std::set<drkey::AsId>& trusted, registry::PolicyResolver& resolver,
    const policy::ContainmentBounds& bounds = {});

// One index per on-path AS except the first; zero where the AS does not
// announce the chosen policy.
std::vector<PolicyIndex> assign_indices(
    const EndToEndPath& path,
    const std::map<drkey::AsId, registry::PolicyId>& choices);

// the announced indices matching a hop's traversal: exact interface pair
// first, then IF-IP entries on the endpoint-facing side of first/last hops
std::vector<PolicyIndex> announced_indices(const PathHop& hop);

// ---------------------------------------------------------------------------
// Intra-AS policy queries
// ---------------------------------------------------------------------------

struct IntraAsRouteInfo {
    drkey::HostAddr a, b;
    std::vector<registry::PolicyId> pids;
    ValidityWindow validity;
};

struct AsServiceConfig {
    drkey::AsId as_id;
    std::set<drkey::HostAddr> local_hosts;
    std::vector<IntraAsRouteInfo> internal_routes;
    ValidityWindow default_validity;
};

struct NotLocal : std::runtime_error {
    NotLocal() : std::runtime_error("host pair is not local to this AS") {}
};

struct IntraAsQueryResult {
    std::vector<registry::PolicyId> pids;
    ValidityWindow validity;
};

IntraAsQueryResult query_intra_as_policies(const AsServiceConfig& svc,
                                           const drkey::HostAddr& src,
                                           const drkey::HostAddr& dst);

}  // namespace fabrid::control

#endif
