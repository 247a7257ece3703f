#include <doctest.h>

#include "fabrid/sim.hpp"

using namespace fabrid;
using namespace fabrid::sim;

namespace {

// one core AS with a three-AS chain hanging off it
const char* kChain = R"json({
  "seed": 7,
  "ases": [
    {"id": "1-1", "core": true,
     "routes": [{"route_id": "std", "latency_ms": 10, "indices": [0, 1]}],
     "announce": [1], "dmap": {"1": {"scope": "global", "pid": 1}}},
    {"id": "1-2",
     "routes": [{"route_id": "std", "latency_ms": 10, "indices": [0, 1]}],
     "announce": [1], "dmap": {"1": {"scope": "global", "pid": 1}}},
    {"id": "1-3",
     "routes": [{"route_id": "std", "latency_ms": 10, "indices": [0, 1]}],
     "announce": [1], "dmap": {"1": {"scope": "global", "pid": 1}}},
    {"id": "1-4",
     "routes": [{"route_id": "std", "latency_ms": 10, "indices": [0, 1]}],
     "announce": [1], "dmap": {"1": {"scope": "global", "pid": 1}}}
  ],
  "links": [
    {"a": "1-1", "b": "1-2", "a_if": 1, "b_if": 1, "latency_ms": 5},
    {"a": "1-2", "b": "1-3", "a_if": 2, "b_if": 1, "latency_ms": 5},
    {"a": "1-3", "b": "1-4", "a_if": 2, "b_if": 1, "latency_ms": 5}
  ],
  "policies": [
    {"scope": "global", "pid": 1,
     "text": "const i1: I = \"https://a.example\"\nexists c: C. (software(r, c) & issuer(tag(c)) = i1)"}
  ]
})json";

// two cores joined by a core link, one leaf under each
const char* kTwoCores = R"json({
  "seed": 11,
  "ases": [
    {"id": "1-1", "core": true,
     "routes": [{"route_id": "std", "latency_ms": 10, "indices": [0, 1]}],
     "announce": [1], "dmap": {"1": {"scope": "global", "pid": 1}}},
    {"id": "1-2", "core": true,
     "routes": [{"route_id": "std", "latency_ms": 10, "indices": [0, 1]}],
     "announce": [1], "dmap": {"1": {"scope": "global", "pid": 1}}},
    {"id": "1-3",
     "routes": [{"route_id": "std", "latency_ms": 10, "indices": [0, 1]}],
     "announce": [1], "dmap": {"1": {"scope": "global", "pid": 1}}},
    {"id": "1-4",
     "routes": [{"route_id": "std", "latency_ms": 10, "indices": [0, 1]}],
     "announce": [1], "dmap": {"1": {"scope": "global", "pid": 1}}}
  ],
  "links": [
    {"a": "1-1", "b": "1-2", "a_if": 9, "b_if": 9, "latency_ms": 8, "core": true},
    {"a": "1-1", "b": "1-3", "a_if": 1, "b_if": 1, "latency_ms": 5},
    {"a": "1-2", "b": "1-4", "a_if": 1, "b_if": 1, "latency_ms": 5}
  ],
  "policies": [
    {"scope": "global", "pid": 1,
     "text": "const i1: I = \"https://a.example\"\nexists c: C. (software(r, c) & issuer(tag(c)) = i1)"}
  ]
})json";

// deterministic latency model: jitter disabled, two routes per AS
const char* kRtt = R"json({
  "seed": 3,
  "ases": [
    {"id": "1-1", "core": true,
     "routes": [
       {"route_id": "std", "latency_ms": 10, "indices": [0]},
       {"route_id": "fast", "latency_ms": 5, "indices": [1]}
     ],
     "announce": [1], "dmap": {"1": {"scope": "global", "pid": 1}}},
    {"id": "1-2",
     "routes": [
       {"route_id": "std", "latency_ms": 10, "indices": [0]},
       {"route_id": "fast", "latency_ms": 5, "indices": [1]}
     ],
     "announce": [1], "dmap": {"1": {"scope": "global", "pid": 1}}},
    {"id": "1-3",
     "routes": [
       {"route_id": "std", "latency_ms": 10, "indices": [0]},
       {"route_id": "fast", "latency_ms": 5, "indices": [1]}
     ],
     "announce": [1], "dmap": {"1": {"scope": "global", "pid": 1}}}
  ],
  "links": [
    {"a": "1-1", "b": "1-2", "a_if": 1, "b_if": 1, "latency_ms": 5},
    {"a": "1-2", "b": "1-3", "a_if": 2, "b_if": 1, "latency_ms": 5}
  ],
  "policies": [
    {"scope": "global", "pid": 1,
     "text": "const i1: I = \"https://a.example\"\nexists c: C. (software(r, c) & issuer(tag(c)) = i1)"}
  ]
})json";

std::string replace_once(std::string text, const std::string& from,
                         const std::string& to) {
    auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

RttScenario three_hop(control::PolicyIndex index, int count = 5) {
    RttScenario s;
    s.path = {"1-1", "1-2", "1-3"};
    s.index = index;
    s.count = count;
    return s;
}

}  // namespace

TEST_CASE("topology loading rejects inconsistent configurations") {
    CHECK_THROWS_AS((void)load_topology_text("{\"ases\": []}"), ConfigError);
    CHECK_THROWS_AS((void)load_topology_text("not json"), ConfigError);
    CHECK_THROWS_AS((void)load_topology("/no/such/file.json"), ConfigError);

    // duplicate AS id
    CHECK_THROWS_AS(
        (void)load_topology_text(replace_once(kChain, "\"id\": \"1-2\"",
                                              "\"id\": \"1-1\"")),
        ConfigError);
    // link to an AS that does not exist
    CHECK_THROWS_AS(
        (void)load_topology_text(replace_once(kChain, "\"b\": \"1-4\"",
                                              "\"b\": \"1-9\"")),
        ConfigError);
    // every AS needs a default (index 0) route
    CHECK_THROWS_AS(
        (void)load_topology_text(replace_once(kChain, "\"indices\": [0, 1]",
                                              "\"indices\": [1]")),
        ConfigError);
    // announced indices need a policy id in the dmap
    CHECK_THROWS_AS(
        (void)load_topology_text(replace_once(kChain, "\"announce\": [1]",
                                              "\"announce\": [1, 2]")),
        ConfigError);
    // disconnected topology
    std::string disconnected = kChain;
    disconnected = replace_once(
        disconnected, "{\"a\": \"1-3\", \"b\": \"1-4\", \"a_if\": 2, \"b_if\": 1, "
                      "\"latency_ms\": 5}",
        "{\"a\": \"1-2\", \"b\": \"1-3\", \"a_if\": 3, \"b_if\": 2, "
        "\"latency_ms\": 5}");
    CHECK_THROWS_AS((void)load_topology_text(disconnected), ConfigError);
}

TEST_CASE("keys are deterministic functions of the seed") {
    Topology a = load_topology_text(kChain);
    Topology b = load_topology_text(kChain);
    CHECK(a.as_at("1-2").secret.key == b.as_at("1-2").secret.key);
    CHECK(a.as_at("1-2").sig_key.pub == b.as_at("1-2").sig_key.pub);
    CHECK(a.registry_trust.at("global") == b.registry_trust.at("global"));

    Topology c = load_topology_text(replace_once(kChain, "\"seed\": 7",
                                                 "\"seed\": 8"));
    CHECK(a.as_at("1-2").secret.key != c.as_at("1-2").secret.key);
    CHECK(a.as_at("1-2").secret.key != a.as_at("1-3").secret.key);

    CHECK_THROWS_AS((void)a.as_at("9-9"), UnknownAs);
    CHECK_THROWS_AS(inject_fault(a, "9-9", FaultKind::TamperIndex), UnknownAs);
}

TEST_CASE("beaconing floods verifiable segments down a chain") {
    Topology topo = load_topology_text(kChain);
    BeaconResult beacons = run_beaconing(topo, 2);
    CHECK(beacons.diagnostics.empty());

    REQUIRE(beacons.segments.count("1-4"));
    const control::Pcb& leaf = beacons.segments.at("1-4").front();
    REQUIRE(leaf.entries.size() == 4);
    CHECK(leaf.entries[0].as_id.str() == "1-1");
    CHECK(leaf.entries[3].as_id.str() == "1-4");
    CHECK(leaf.entries[3].egress_if == 0);  // terminated at the receiving AS
    CHECK(control::verify_pcb(leaf, topo.trust, 100).ok());

    CHECK(beacons.segments.at("1-2").front().entries.size() == 2);
    CHECK(beacons.core_segments.empty());  // single core, nothing to exchange
}

TEST_CASE("candidate paths cover up, down and cross-core traversals") {
    Topology chain = load_topology_text(kChain);
    BeaconResult beacons = run_beaconing(chain, 1);

    auto up = candidate_paths(beacons, "1-4", "1-1");
    REQUIRE(up.size() == 1);
    REQUIRE(up[0].hops.size() == 4);
    CHECK(up[0].hops.front().as.str() == "1-4");
    CHECK(up[0].hops.back().as.str() == "1-1");
    // announcements ride along: the map carries the announced index
    CHECK(up[0].hops[1].maps.dmap.count(1));

    auto down = candidate_paths(beacons, "1-1", "1-4");
    REQUIRE(down.size() == 1);
    CHECK(down[0].hops.front().as.str() == "1-1");
    CHECK(down[0].hops.back().as.str() == "1-4");

    CHECK(candidate_paths(beacons, "1-4", "1-4").empty());

    Topology cores = load_topology_text(kTwoCores);
    BeaconResult cb = run_beaconing(cores, 1);
    REQUIRE(cb.core_segments.count("1-2"));
    auto cross = candidate_paths(cb, "1-3", "1-4");
    REQUIRE(cross.size() == 1);
    REQUIRE(cross[0].hops.size() == 4);
    CHECK(cross[0].hops[0].as.str() == "1-3");
    CHECK(cross[0].hops[1].as.str() == "1-1");
    CHECK(cross[0].hops[2].as.str() == "1-2");
    CHECK(cross[0].hops[3].as.str() == "1-4");
}

TEST_CASE("announcing an index no route supports is diagnosed, not fatal") {
    std::string text = replace_once(
        kChain, "{\"id\": \"1-2\",\n     \"routes\": [{\"route_id\": \"std\", "
                "\"latency_ms\": 10, \"indices\": [0, 1]}],\n     \"announce\": [1]",
        "{\"id\": \"1-2\",\n     \"routes\": [{\"route_id\": \"std\", "
        "\"latency_ms\": 10, \"indices\": [0]}],\n     \"announce\": [1]");
    Topology topo = load_topology_text(text);
    BeaconResult beacons = run_beaconing(topo, 1);
    REQUIRE_FALSE(beacons.diagnostics.empty());
    CHECK(beacons.diagnostics.front().rfind("1-2:", 0) == 0);
    // the beacon still reached the leaf, just without 1-2's announcements
    REQUIRE(beacons.segments.count("1-4"));
    const control::Pcb& leaf = beacons.segments.at("1-4").front();
    CHECK(leaf.entries.size() == 4);
    auto maps = control::decode_maps(*leaf.entries[1].extension,
                                     leaf.entries[1].as_id);
    CHECK(maps.dmap.empty());
}

TEST_CASE("jitter-free round trips are exact latency sums") {
    Topology topo = load_topology_text(kRtt);

    auto std_run = run_rtt_experiment(topo, three_hop(0));
    REQUIRE(std_run.delivered == 5);
    CHECK(std_run.dropped == 0);
    // two link traversals each way (2 * 2 * 5) plus three routes twice (2 * 30)
    for (const auto& s : std_run.samples) CHECK(s.rtt_ms == doctest::Approx(80.0));
    for (const auto& v : std_run.validations)
        CHECK(v.kind == data::PathValidation::Kind::PathValid);

    // the source hop always rides at index 0, so only hops 1 and 2 speed up
    auto fast_run = run_rtt_experiment(topo, three_hop(1));
    REQUIRE(fast_run.delivered == 5);
    for (const auto& s : fast_run.samples) CHECK(s.rtt_ms == doctest::Approx(60.0));
}

TEST_CASE("jittered round trips are deterministic per seed and exceed the base") {
    std::string jittery = kRtt;
    for (int i = 0; i < 2; ++i)
        jittery = replace_once(jittery, "\"latency_ms\": 5}",
                               "\"latency_ms\": 5, \"jitter_ms\": 0.5, "
                               "\"jitter_sigma\": 0.3}");
    Topology a = load_topology_text(jittery);
    Topology b = load_topology_text(jittery);
    auto ra = run_rtt_experiment(a, three_hop(0, 10));
    auto rb = run_rtt_experiment(b, three_hop(0, 10));
    REQUIRE(ra.samples.size() == 10);
    bool varied = false;
    for (size_t i = 0; i < ra.samples.size(); ++i) {
        CHECK(ra.samples[i].rtt_ms == rb.samples[i].rtt_ms);
        CHECK(ra.samples[i].rtt_ms > 80.0);  // log-normal jitter is positive
        if (i && ra.samples[i].rtt_ms != ra.samples[0].rtt_ms) varied = true;
    }
    CHECK(varied);
}

TEST_CASE("scenario validation") {
    Topology topo = load_topology_text(kRtt);
    RttScenario bad;
    bad.path = {"1-1"};
    CHECK_THROWS_AS((void)run_rtt_experiment(topo, bad), ConfigError);
    RttScenario unlinked;
    unlinked.path = {"1-1", "1-3"};
    CHECK_THROWS_AS((void)run_rtt_experiment(topo, unlinked), ConfigError);
}

TEST_CASE("an index no hop supports produces control replies, not delivery") {
    Topology topo = load_topology_text(kRtt);
    auto res = run_rtt_experiment(topo, three_hop(9));
    CHECK(res.delivered == 0);
    CHECK(res.dropped == 5);
    CHECK(res.samples.empty());
}

TEST_CASE("a hop that skips its update is localized by validation") {
    Topology topo = load_topology_text(kRtt);
    inject_fault(topo, "1-2", FaultKind::SkipHvfUpdate);
    auto res = run_rtt_experiment(topo, three_hop(0));
    REQUIRE(res.delivered == 5);  // payload binding is unaffected
    for (const auto& v : res.validations) {
        CHECK(v.kind == data::PathValidation::Kind::PathInvalid);
        CHECK(v.mismatched_hops == std::vector<size_t>{1});
    }
}

TEST_CASE("index tampering after a hop's own check does not break downstream") {
    Topology topo = load_topology_text(kRtt);
    inject_fault(topo, "1-2", FaultKind::TamperIndex);
    auto res = run_rtt_experiment(topo, three_hop(0));
    CHECK(res.delivered == 5);
    for (const auto& v : res.validations)
        CHECK(v.kind == data::PathValidation::Kind::PathValid);
}

TEST_CASE("misrouting shifts the latency distribution measurably") {
    Topology topo = load_topology_text(kRtt);
    inject_fault(topo, "1-2", FaultKind::WrongRoute);
    auto res = run_rtt_experiment(topo, three_hop(1));
    REQUIRE(res.delivered == 5);
    // 1-2 silently uses the 10 ms route instead of the requested 5 ms one
    for (const auto& s : res.samples) CHECK(s.rtt_ms == doctest::Approx(70.0));
}

TEST_CASE("micro-benchmarks produce sane positive figures") {
    auto table = bench_router_process({4, 16}, 50);
    REQUIRE(table.size() == 2);
    for (const auto& p : table) {
        CHECK(p.ns_per_op > 0);
        CHECK(p.ops_per_sec > 0);
    }
    auto build = bench_build_packet({2, 4}, 50);
    REQUIRE(build.size() == 2);
    CHECK(build[0].param == 2);
    CHECK(build[1].ns_per_op > build[0].ns_per_op * 0.5);  // more hops, more work
    auto cont = bench_containment(5);
    CHECK(cont.ns_per_op > 0);
}
