#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fabrid/control.hpp"
#include "fabrid/policy.hpp"
#include "fabrid/sim.hpp"

namespace {

using namespace fabrid;

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw sim::ConfigError("file", "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

uint64_t effective_seed(const std::optional<uint64_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("FABRID_SEED")) return std::stoull(env);
    return 0;
}

sim::Topology load_topo(const std::string& path,
                        const std::optional<uint64_t>& seed) {
    sim::Topology topo = sim::load_topology(path);
    if (seed || std::getenv("FABRID_SEED")) {
        // a seed flag overrides the file; reload with keys from that seed
        auto text = slurp(path);
        auto j = nlohmann::json::parse(text);
        j["seed"] = effective_seed(seed);
        topo = sim::load_topology_text(j.dump());
    }
    return topo;
}

std::string segment_chain(const control::Pcb& pcb) {
    std::string s;
    for (const auto& e : pcb.entries) {
        if (!s.empty()) s += "-";
        s += e.as_id.str();
    }
    return s;
}

int cmd_beacon(const std::string& topology, std::optional<uint64_t> seed,
               const std::string& format) {
    sim::Topology topo = load_topo(topology, seed);
    sim::BeaconResult res = sim::run_beaconing(topo, 1);
    bool csv = format == "csv";
    if (csv) std::cout << "as,kind,segment,hops\n";
    auto emit = [&](const std::string& as, const std::string& kind,
                    const control::Pcb& pcb) {
        if (csv)
            std::cout << as << "," << kind << "," << segment_chain(pcb) << ","
                      << pcb.entries.size() << "\n";
        else
            std::cout << as << "  " << kind << "  " << segment_chain(pcb) << " ("
                      << pcb.entries.size() << " hops)\n";
    };
    for (const auto& [as, segs] : res.segments)
        for (const auto& pcb : segs) emit(as, "segment", pcb);
    for (const auto& [as, segs] : res.core_segments)
        for (const auto& pcb : segs) emit(as, "core", pcb);
    for (const auto& d : res.diagnostics) std::cerr << "diagnostic: " << d << "\n";
    return kOk;
}

const char* verdict_name(control::HopVerdict v) {
    switch (v) {
        case control::HopVerdict::Compliant: return "Compliant";
        case control::HopVerdict::NonCompliant: return "NonCompliant";
        case control::HopVerdict::Untrusted: return "Untrusted";
        case control::HopVerdict::NoAnnouncement: return "NoAnnouncement";
    }
    return "?";
}

std::set<drkey::AsId> load_trust_list(const std::string& path) {
    std::set<drkey::AsId> out;
    std::ifstream in(path);
    if (!in) throw sim::ConfigError("trust", "cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        out.insert(drkey::AsId::parse(line));
    }
    return out;
}

int cmd_paths(const std::string& topology, const std::string& src,
              const std::string& dst, const std::string& pref_file,
              const std::string& trust_file, size_t k,
              std::optional<uint64_t> seed, const std::string& format) {
    sim::Topology topo = load_topo(topology, seed);

    policy::Policy pref;
    try {
        pref = policy::parse_policy(slurp(pref_file));
    } catch (const std::exception& e) {
        std::cerr << "preference policy: " << e.what() << "\n";
        return kUsageError;
    }
    std::set<drkey::AsId> trusted;
    if (!trust_file.empty())
        trusted = load_trust_list(trust_file);
    else
        for (const auto& [id, as] : topo.ases) trusted.insert(as.id);

    (void)topo.as_at(src);  // reject unknown endpoints up front
    (void)topo.as_at(dst);
    sim::BeaconResult beacons = sim::run_beaconing(topo, 1);
    auto paths = sim::candidate_paths(beacons, src, dst);
    if (paths.empty()) {
        std::cerr << "no paths between " << src << " and " << dst << "\n";
        return kDomainError;
    }
    registry::PolicyResolver resolver(topo.registry.get(), topo.registry_trust);
    policy::ContainmentBounds bounds;
    bounds.max_stack = k;
    auto ranked = control::filter_paths(paths, pref, trusted, resolver, bounds);

    bool csv = format == "csv";
    if (csv) std::cout << "rank,path,verdicts,indices\n";
    int rank = 0;
    for (const auto& pa : ranked) {
        std::string chain, verdicts, idxs;
        for (size_t i = 0; i < pa.hops.size(); ++i) {
            if (i) chain += "-", verdicts += ";";
            chain += pa.hops[i].as.str();
            verdicts += verdict_name(pa.hops[i].verdict);
            if (i > 0) {
                if (i > 1) idxs += ";";
                idxs += std::to_string(
                    pa.hops[i].verdict == control::HopVerdict::Compliant
                        ? pa.hops[i].index
                        : 0);
            }
        }
        if (csv)
            std::cout << rank << "," << chain << "," << verdicts << "," << idxs
                      << "\n";
        else {
            std::cout << "#" << rank << "  " << chain << "\n";
            for (const auto& h : pa.hops)
                std::cout << "    " << h.as.str() << "  " << verdict_name(h.verdict)
                          << (h.verdict == control::HopVerdict::Compliant
                                  ? "  index " + std::to_string(h.index)
                                  : "")
                          << (h.resolver_warning ? "  (resolver warning)" : "")
                          << "\n";
            std::cout << "    indices: [" << idxs << "]\n";
        }
        ++rank;
    }
    return kOk;
}

int cmd_send(const std::string& topology, const std::string& src,
             const std::string& dst, uint16_t index, int count,
             double interval_ms, std::optional<uint64_t> seed,
             const std::string& format) {
    sim::Topology topo = load_topo(topology, seed);
    (void)topo.as_at(src);  // reject unknown endpoints up front
    (void)topo.as_at(dst);
    sim::BeaconResult beacons = sim::run_beaconing(topo, 1);
    auto paths = sim::candidate_paths(beacons, src, dst);
    if (paths.empty()) {
        std::cerr << "no paths between " << src << " and " << dst << "\n";
        return kDomainError;
    }
    sim::RttScenario scenario;
    for (const auto& hop : paths.front().hops) scenario.path.push_back(hop.as.str());
    scenario.index = index;
    scenario.count = count;
    scenario.interval_ms = interval_ms;
    sim::RttResult res = sim::run_rtt_experiment(topo, scenario);

    if (format == "csv") {
        std::cout << "seq,index,rtt_ms\n";
        for (const auto& s : res.samples)
            std::cout << s.seq << "," << s.index << "," << s.rtt_ms << "\n";
    } else {
        for (const auto& s : res.samples)
            std::cout << "seq " << s.seq << "  index " << s.index << "  rtt "
                      << s.rtt_ms << " ms\n";
        double mean = 0;
        for (const auto& s : res.samples) mean += s.rtt_ms;
        if (!res.samples.empty()) mean /= res.samples.size();
        std::cout << "delivered " << res.delivered << "/" << count << ", mean rtt "
                  << mean << " ms\n";
    }
    return res.dropped == 0 ? kOk : kDomainError;
}

int cmd_policy_check(const std::string& policy_file, const std::string& pref_file,
                     size_t k) {
    policy::Policy path_pol, pref_pol;
    try {
        path_pol = policy::parse_policy(slurp(policy_file));
        pref_pol = policy::parse_policy(slurp(pref_file));
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kUsageError;
    }
    policy::ContainmentBounds bounds;
    bounds.max_stack = k;
    if (k == 0)
        std::cout << "note: k=0 decides over empty software stacks only\n";
    auto res = policy::check_containment(path_pol, pref_pol, bounds);
    switch (res.kind) {
        case policy::ContainmentKind::Contained:
            std::cout << "Contained\n";
            break;
        case policy::ContainmentKind::NotContained:
            std::cout << "NotContained\n";
            if (res.witness)
                std::cout << "witness: " << policy::encode_router_setup(*res.witness)
                          << "\n";
            break;
        case policy::ContainmentKind::Unknown:
            std::cout << "Unknown(budget)\n";
            break;
    }
    return kOk;
}

int cmd_sizes(size_t n_ifif, size_t n_ifip, size_t n_d, size_t per_entry,
              const std::string& format) {
    control::PolicyMaps maps;
    registry::PolicyId pid;  // global scope
    pid.pid = 1;
    uint16_t next = 1;
    std::vector<control::PolicyIndex> indices;
    for (size_t i = 0; i < per_entry; ++i) indices.push_back(next++);
    for (control::PolicyIndex i : indices) maps.dmap[i] = pid;
    for (size_t e = 0; e < n_ifif; ++e)
        maps.imap[control::IfIpPair::if_if(static_cast<uint16_t>(e + 1),
                                           static_cast<uint16_t>(e + 2))] = indices;
    Bytes imap_ifif = encode_imap(maps);

    control::PolicyMaps ip_maps;
    for (control::PolicyIndex i : indices) ip_maps.dmap[i] = pid;
    for (size_t e = 0; e < n_ifip; ++e)
        ip_maps.imap[control::IfIpPair::if_ip(
            static_cast<uint16_t>(e + 1),
            control::IpRange::v4({{10, 0, uint8_t(e >> 8), uint8_t(e)}}, 24))] =
            indices;
    Bytes imap_ifip = encode_imap(ip_maps);

    control::PolicyMaps d_maps;
    for (size_t e = 0; e < n_d; ++e)
        d_maps.dmap[static_cast<uint16_t>(e + 1)] = pid;
    Bytes dmap = encode_dmap(d_maps, drkey::AsId{1, 1});

    if (format == "csv") {
        std::cout << "map,entries,bytes\n";
        std::cout << "ifif," << n_ifif << "," << imap_ifif.size() << "\n";
        std::cout << "ifip," << n_ifip << "," << imap_ifip.size() << "\n";
        std::cout << "d," << n_d << "," << dmap.size() << "\n";
        std::cout << "detached_marker,1," << control::kDetachedMarkerSize << "\n";
    } else {
        std::cout << "IF-IF map (" << n_ifif << " entries x " << per_entry
                  << " indices): " << imap_ifif.size() << " B\n";
        std::cout << "IF-IP map (" << n_ifip << " entries x " << per_entry
                  << " indices): " << imap_ifip.size() << " B\n";
        std::cout << "D map (" << n_d << " entries): " << dmap.size() << " B\n";
        std::cout << "detached marker: " << control::kDetachedMarkerSize << " B\n";
    }
    return kOk;
}

int cmd_bench(const std::string& component, int count, const std::string& format) {
    bool csv = format == "csv";
    if (csv) std::cout << "component,param,ns_per_op,ops_per_sec\n";
    auto emit = [&](const std::string& name, const sim::BenchPoint& p) {
        if (csv)
            std::cout << name << "," << p.param << "," << p.ns_per_op << ","
                      << p.ops_per_sec << "\n";
        else
            std::cout << name << " @" << p.param << ": " << p.ns_per_op
                      << " ns/op (" << p.ops_per_sec << " ops/s)\n";
    };
    if (component == "router_process" || component == "all")
        for (const auto& p : sim::bench_router_process({10, 1000}, count))
            emit("router_process", p);
    if (component == "build_packet" || component == "all")
        for (const auto& p : sim::bench_build_packet({2, 4, 8, 16}, count))
            emit("build_packet", p);
    if (component == "containment" || component == "all")
        emit("containment", sim::bench_containment(std::min(count, 500)));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fabrid: policy-aware path selection and data-plane tools"};
    app.require_subcommand(1);

    std::string topology, policy_file, pref_file, trust_file, format = "text";
    std::optional<uint64_t> seed;
    size_t k = 2;
    int count = 60;
    double interval_ms = 10;
    std::string src, dst, component = "all";
    uint16_t index = 0;
    size_t n_ifif = 500, n_ifip = 100, n_d = 100, per_entry = 5;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "override the topology seed");
        sub->add_option("--format", format, "output format")
            ->check(CLI::IsMember({"text", "csv"}));
    };

    auto* beacon = app.add_subcommand("beacon", "run one beaconing round");
    beacon->add_option("--topology", topology, "topology file")->required();
    add_common(beacon);

    auto* paths = app.add_subcommand("paths", "rank paths under a preference policy");
    paths->add_option("src", src, "source AS")->required();
    paths->add_option("dst", dst, "destination AS")->required();
    paths->add_option("--topology", topology, "topology file")->required();
    paths->add_option("--pref", pref_file, "preference policy file")->required();
    paths->add_option("--trust", trust_file, "trusted AS list (one id per line)");
    paths->add_option("--k", k, "containment bound (max components per setup)");
    add_common(paths);

    auto* send = app.add_subcommand("send", "run the RTT experiment on the best path");
    send->add_option("src", src, "source AS")->required();
    send->add_option("dst", dst, "destination AS")->required();
    send->add_option("--topology", topology, "topology file")->required();
    send->add_option("--index", index, "policy index for every hop");
    send->add_option("--count", count, "number of packets");
    send->add_option("--interval-ms", interval_ms, "send interval");
    add_common(send);

    auto* check = app.add_subcommand("policy-check", "containment verdict");
    check->add_option("--policy", policy_file, "announced policy file")->required();
    check->add_option("--pref", pref_file, "preference policy file")->required();
    check->add_option("--k", k, "containment bound");
    add_common(check);

    auto* sizes = app.add_subcommand("sizes", "wire sizes of the policy maps");
    sizes->add_option("--ifif", n_ifif, "IF-IF entry count");
    sizes->add_option("--ifip", n_ifip, "IF-IP entry count");
    sizes->add_option("--d", n_d, "D entry count");
    sizes->add_option("--per-entry", per_entry, "indices per interface entry");
    add_common(sizes);

    auto* bench = app.add_subcommand("bench", "micro-benchmarks");
    bench->add_option("--component", component, "what to benchmark")
        ->check(CLI::IsMember({"all", "build_packet", "router_process",
                               "containment"}));
    bench->add_option("--count", count, "iterations");
    add_common(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (beacon->parsed()) return cmd_beacon(topology, seed, format);
        if (paths->parsed())
            return cmd_paths(topology, src, dst, pref_file, trust_file, k, seed,
                             format);
        if (send->parsed())
            return cmd_send(topology, src, dst, index, count, interval_ms, seed,
                            format);
        if (check->parsed()) return cmd_policy_check(policy_file, pref_file, k);
        if (sizes->parsed()) return cmd_sizes(n_ifif, n_ifip, n_d, per_entry, format);
        if (bench->parsed()) return cmd_bench(component, count, format);
    } catch (const sim::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 2;
}
