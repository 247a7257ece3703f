#ifndef FABRID_SIM_HPP
#define FABRID_SIM_HPP

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "fabrid/control.hpp"
#include "fabrid/data_plane.hpp"
#include "fabrid/drkey.hpp"
#include "fabrid/registry.hpp"

namespace fabrid::sim {

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& field, const std::string& reason)
        : std::runtime_error("config error in '" + field + "': " + reason) {}
};
struct UnknownAs : std::runtime_error {
    explicit UnknownAs(const std::string& as)
        : std::runtime_error("no such AS in topology: " + as) {}
};

enum class FaultKind { SkipHvfUpdate, TamperIndex, WrongRoute };

// intra-AS route with a latency model; traversed once per direction
struct SimRoute {
    std::string route_id;
    double latency_ms = 0;
    double jitter_ms = 0;     // mean of the log-normal jitter draw; 0 = none
    double jitter_sigma = 0;  // shape parameter
    std::vector<control::PolicyIndex> indices;  // satisfied policy indices
    std::vector<registry::PolicyId> pids;
};

struct SimLink {
    std::string a, b;  // AS ids in "isd-as" form; for parent links a is the parent
    control::InterfaceId a_if = 0, b_if = 0;
    double latency_ms = 0;
    double jitter_ms = 0;
    double jitter_sigma = 0;
    bool core = false;  // core link (beaconed between core ASes)
};

struct SimAs {
    drkey::AsId id;
    bool core = false;
    drkey::AsSecret secret;
    crypto::SigKeyPair sig_key;
    std::vector<SimRoute> routes;
    std::vector<control::PolicyIndex> announce_indices;  // non-zero, sorted
    std::map<control::PolicyIndex, registry::PolicyId> dmap;
    std::set<control::PolicyIndex> supported;  // union of route indices
    // announcement history, persisted across extensions (no-remap guard)
    std::map<control::PolicyIndex,
             std::vector<std::pair<registry::PolicyId, control::ValidityWindow>>>
        issued;
    // injected faults
    bool skip_hvf_update = false;
    bool tamper_index = false;
    bool wrong_route = false;
};

struct Topology {
    uint64_t seed = 0;
    control::ValidityWindow validity{0, 4'000'000'000ull};
    std::map<std::string, SimAs> ases;  // by "isd-as"
    std::vector<SimLink> links;
    control::TrustStore trust;  // PCB verification keys for trusted ASes
    std::shared_ptr<registry::Registry> registry;
    std::map<std::string, crypto::PubKey> registry_trust;  // scope name -> key

    SimAs& as_at(const std::string& id);
    const SimAs& as_at(const std::string& id) const;
    const SimLink* find_link(const std::string& x, const std::string& y) const;
};

Topology load_topology(const std::string& path);
Topology load_topology_text(const std::string& text);

void inject_fault(Topology& topo, const std::string& as, FaultKind fault);

// ---------------------------------------------------------------------------
// Beaconing
// ---------------------------------------------------------------------------

struct BeaconResult {
    // terminated segments from a core AS down to the keyed AS (up/down dual use)
    std::map<std::string, std::vector<control::Pcb>> segments;
    // terminated core segments, keyed by the receiving core AS
    std::map<std::string, std::vector<control::Pcb>> core_segments;
    std::vector<std::string> diagnostics;  // per-AS extension failures
};

BeaconResult run_beaconing(Topology& topo, int rounds);

// All end-to-end candidate paths src -> dst assemblable from the segment
// stores (up + optional core + down).
std::vector<control::EndToEndPath> candidate_paths(const BeaconResult& beacons,
                                                   const std::string& src,
                                                   const std::string& dst);

// ---------------------------------------------------------------------------
// RTT experiment
// ---------------------------------------------------------------------------

struct RttScenario {
    std::vector<std::string> path;  // AS ids, source first
    control::PolicyIndex index = 0;  // requested at every hop after the first
    int count = 60;
    double interval_ms = 10;
    drkey::HostAddr src_host{{10, 0, 0, 1}};
    drkey::HostAddr dst_host{{10, 0, 0, 2}};
};

struct RttSample {
    int seq = 0;
    control::PolicyIndex index = 0;
    double rtt_ms = 0;
};

struct RttResult {
    std::vector<RttSample> samples;
    std::vector<data::PathValidation> validations;  // one per sample
    uint64_t delivered = 0;
    uint64_t dropped = 0;
};

struct HonestDrop : std::runtime_error {
    HonestDrop(const std::string& as, data::DropReason reason)
        : std::runtime_error("honest router " + as + " dropped a packet (reason " +
                             std::to_string(static_cast<int>(reason)) + ")") {}
};

RttResult run_rtt_experiment(const Topology& topo, const RttScenario& scenario);

// ---------------------------------------------------------------------------
// Micro-benchmarks
// ---------------------------------------------------------------------------

struct BenchPoint {
    size_t param = 0;  // table size or hop count
    double ns_per_op = 0;
    double ops_per_sec = 0;
};

std::vector<BenchPoint> bench_router_process(const std::vector<size_t>& table_sizes,
                                             int iters = 2000);
std::vector<BenchPoint> bench_build_packet(const std::vector<size_t>& hop_counts,
                                           int iters = 2000);
BenchPoint bench_containment(int iters = 200);

}  // namespace fabrid::sim

#endif
