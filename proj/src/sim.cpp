#include "fabrid/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fabrid::sim {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Topology loading
// ---------------------------------------------------------------------------

namespace {

// deterministic key material: every key is a labeled digest of the seed
Bytes seed_material(uint64_t seed, const std::string& label) {
    Bytes buf;
    put_u64(buf, seed);
    buf.insert(buf.end(), label.begin(), label.end());
    return buf;
}

crypto::SymKey derive_sym_key(uint64_t seed, const std::string& label) {
    return {crypto::digest16(seed_material(seed, label)).bytes};
}

crypto::SigKeyPair derive_sig_key(uint64_t seed, const std::string& label) {
    Bytes seed32;
    auto a = crypto::digest16(seed_material(seed, label + "/a")).bytes;
    auto b = crypto::digest16(seed_material(seed, label + "/b")).bytes;
    seed32.insert(seed32.end(), a.begin(), a.end());
    seed32.insert(seed32.end(), b.begin(), b.end());
    return crypto::keypair_from_seed(seed32);
}

registry::PolicyId parse_pid(const json& j) {
    registry::PolicyId id;
    std::string scope = j.value("scope", "global");
    if (scope != "global") id.scope = drkey::AsId::parse(scope);
    id.pid = j.at("pid").get<uint32_t>();
    return id;
}

SimRoute parse_route(const json& j) {
    SimRoute r;
    r.route_id = j.at("route_id").get<std::string>();
    r.latency_ms = j.value("latency_ms", 0.0);
    r.jitter_ms = j.value("jitter_ms", 0.0);
    r.jitter_sigma = j.value("jitter_sigma", 0.0);
    for (const auto& i : j.value("indices", json::array()))
        r.indices.push_back(i.get<uint16_t>());
    for (const auto& p : j.value("pids", json::array()))
        r.pids.push_back(parse_pid(p));
    return r;
}

void check_connected(const Topology& topo) {
    if (topo.ases.empty()) throw ConfigError("ases", "empty topology");
    std::set<std::string> seen{topo.ases.begin()->first};
    std::queue<std::string> work;
    work.push(topo.ases.begin()->first);
    while (!work.empty()) {
        std::string cur = work.front();
        work.pop();
        for (const auto& l : topo.links) {
            std::string other;
            if (l.a == cur) other = l.b;
            else if (l.b == cur) other = l.a;
            else continue;
            if (seen.insert(other).second) work.push(other);
        }
    }
    if (seen.size() != topo.ases.size())
        throw ConfigError("links", "topology is not connected");
}

}  // namespace

SimAs& Topology::as_at(const std::string& id) {
    auto it = ases.find(id);
    if (it == ases.end()) throw UnknownAs(id);
    return it->second;
}

const SimAs& Topology::as_at(const std::string& id) const {
    auto it = ases.find(id);
    if (it == ases.end()) throw UnknownAs(id);
    return it->second;
}

const SimLink* Topology::find_link(const std::string& x, const std::string& y) const {
    for (const auto& l : links)
        if ((l.a == x && l.b == y) || (l.a == y && l.b == x)) return &l;
    return nullptr;
}

Topology load_topology_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("file", e.what());
    }

    Topology topo;
    topo.seed = j.value("seed", uint64_t{0});
    if (j.contains("validity")) {
        topo.validity.not_before = j["validity"].value("not_before", uint64_t{0});
        topo.validity.not_after =
            j["validity"].value("not_after", uint64_t{4'000'000'000ull});
    }
    topo.registry = std::make_shared<registry::Registry>();

    try {
        for (const auto& aj : j.at("ases")) {
            SimAs as;
            std::string id = aj.at("id").get<std::string>();
            as.id = drkey::AsId::parse(id);
            as.core = aj.value("core", false);
            as.secret = {derive_sym_key(topo.seed, "as-secret/" + id), as.id};
            as.sig_key = derive_sig_key(topo.seed, "as-sig/" + id);
            for (const auto& rj : aj.value("routes", json::array()))
                as.routes.push_back(parse_route(rj));
            for (const auto& r : as.routes)
                as.supported.insert(r.indices.begin(), r.indices.end());
            for (const auto& i : aj.value("announce", json::array()))
                as.announce_indices.push_back(i.get<uint16_t>());
            std::sort(as.announce_indices.begin(), as.announce_indices.end());
            if (aj.contains("dmap"))
                for (const auto& [key, pj] : aj["dmap"].items())
                    as.dmap[static_cast<uint16_t>(std::stoul(key))] = parse_pid(pj);
            if (!topo.ases.emplace(id, std::move(as)).second)
                throw ConfigError("ases", "duplicate AS id " + id);
        }
        for (const auto& lj : j.value("links", json::array())) {
            SimLink l;
            l.a = lj.at("a").get<std::string>();
            l.b = lj.at("b").get<std::string>();
            l.a_if = lj.at("a_if").get<uint16_t>();
            l.b_if = lj.at("b_if").get<uint16_t>();
            l.latency_ms = lj.value("latency_ms", 0.0);
            l.jitter_ms = lj.value("jitter_ms", 0.0);
            l.jitter_sigma = lj.value("jitter_sigma", 0.0);
            if (!topo.ases.count(l.a) || !topo.ases.count(l.b))
                throw ConfigError("links", "unknown AS endpoint " + l.a + "/" + l.b);
            l.core = lj.value("core",
                              topo.ases[l.a].core && topo.ases[l.b].core);
            topo.links.push_back(std::move(l));
        }
    } catch (const json::exception& e) {
        throw ConfigError("file", e.what());
    }

    for (const auto& [id, as] : topo.ases) {
        bool has_default = std::any_of(
            as.routes.begin(), as.routes.end(), [](const SimRoute& r) {
                return std::find(r.indices.begin(), r.indices.end(), 0) !=
                       r.indices.end();
            });
        if (!has_default)
            throw ConfigError("routes", "AS " + id + " has no default (index 0) route");
        for (control::PolicyIndex idx : as.announce_indices)
            if (!as.dmap.count(idx))
                throw ConfigError("dmap", "AS " + id + " announces index " +
                                              std::to_string(idx) +
                                              " without a policy id");
    }
    check_connected(topo);

    // trust: listed ASes, or everyone when absent
    if (j.contains("trust")) {
        for (const auto& t : j["trust"]) {
            std::string id = t.get<std::string>();
            topo.trust[id] = topo.as_at(id).sig_key.pub;
        }
    } else {
        for (const auto& [id, as] : topo.ases) topo.trust[id] = as.sig_key.pub;
    }

    // registries: one global scope plus one per AS, keys from the seed
    topo.registry->add_scope(std::nullopt, derive_sig_key(topo.seed, "registry/global"));
    topo.registry_trust["global"] = topo.registry->scope_pubkey(std::nullopt);
    for (const auto& [id, as] : topo.ases) {
        topo.registry->add_scope(as.id, derive_sig_key(topo.seed, "registry/" + id));
        topo.registry_trust[id] = topo.registry->scope_pubkey(as.id);
    }
    for (const auto& pj : j.value("policies", json::array())) {
        registry::PolicyId id = parse_pid(pj);
        topo.registry->register_policy(id.scope, id, pj.at("text").get<std::string>());
    }
    return topo;
}

Topology load_topology(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("file", "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return load_topology_text(buf.str());
}

void inject_fault(Topology& topo, const std::string& as, FaultKind fault) {
    SimAs& a = topo.as_at(as);
    switch (fault) {
        case FaultKind::SkipHvfUpdate: a.skip_hvf_update = true; break;
        case FaultKind::TamperIndex: a.tamper_index = true; break;
        case FaultKind::WrongRoute: a.wrong_route = true; break;
    }
}

// ---------------------------------------------------------------------------
// Beaconing
// ---------------------------------------------------------------------------

namespace {

// full announcement map: every ordered interface pair plus endpoint-facing
// wildcard entries, so any traversal direction finds its entry
control::PolicyMaps full_maps(const Topology& topo, const SimAs& as) {
    control::PolicyMaps m;
    if (as.announce_indices.empty()) return m;
    std::set<control::InterfaceId> ifaces;
    for (const auto& l : topo.links) {
        if (l.a == as.id.str()) ifaces.insert(l.a_if);
        if (l.b == as.id.str()) ifaces.insert(l.b_if);
    }
    control::IpRange any{{}, 0};
    for (control::InterfaceId i : ifaces) {
        m.imap[control::IfIpPair::ip_if(any, i)] = as.announce_indices;
        m.imap[control::IfIpPair::if_ip(i, any)] = as.announce_indices;
        for (control::InterfaceId e : ifaces)
            if (i != e) m.imap[control::IfIpPair::if_if(i, e)] = as.announce_indices;
    }
    for (control::PolicyIndex idx : as.announce_indices) m.dmap[idx] = as.dmap.at(idx);
    return m;
}

control::AsContext make_ctx(const Topology& topo, SimAs& as) {
    control::AsContext ctx;
    ctx.as_id = as.id;
    ctx.sig_key = as.sig_key;
    ctx.maps = full_maps(topo, as);
    ctx.supported_indices = as.supported;
    ctx.issued = as.issued;
    return ctx;
}

struct Beaconer {
    Topology& topo;
    BeaconResult& result;

    // extend with the AS's announcements; on an announcement error fall back
    // to extending without them so the beacon still propagates
    control::Pcb extend(const control::Pcb& pcb, SimAs& as,
                        control::InterfaceId ingress, control::InterfaceId egress) {
        auto ctx = make_ctx(topo, as);
        try {
            control::Pcb out =
                control::extend_pcb(pcb, ctx, ingress, egress, topo.validity, topo.trust);
            as.issued = ctx.issued;
            return out;
        } catch (const control::UnsupportedAnnouncement& e) {
            result.diagnostics.push_back(as.id.str() + ": " + e.what());
        } catch (const control::IndexRemapped& e) {
            result.diagnostics.push_back(as.id.str() + ": " + e.what());
        }
        ctx = make_ctx(topo, as);
        ctx.maps = {};
        control::Pcb out =
            control::extend_pcb(pcb, ctx, ingress, egress, topo.validity, topo.trust);
        as.issued = ctx.issued;
        return out;
    }

    bool on_pcb(const control::Pcb& pcb, const drkey::AsId& as) {
        for (const auto& e : pcb.entries)
            if (e.as_id == as) return true;
        return false;
    }

    // non-core dissemination: store a terminated copy, extend toward children
    void propagate_down(const control::Pcb& pcb, const std::string& at,
                        control::InterfaceId ingress) {
        SimAs& as = topo.as_at(at);
        result.segments[at].push_back(extend(pcb, as, ingress, 0));
        for (const auto& l : topo.links) {
            if (l.core) continue;
            if (l.a != at) continue;  // parent side only: beacons flow a -> b
            propagate_down(extend(pcb, as, ingress, l.a_if), l.b, l.b_if);
        }
    }

    void propagate_core(const control::Pcb& pcb, const std::string& at,
                        control::InterfaceId ingress) {
        SimAs& as = topo.as_at(at);
        result.core_segments[at].push_back(extend(pcb, as, ingress, 0));
        for (const auto& l : topo.links) {
            if (!l.core) continue;
            std::string other = l.a == at ? l.b : l.b == at ? l.a : "";
            if (other.empty() || on_pcb(pcb, topo.as_at(other).id)) continue;
            control::InterfaceId egress = l.a == at ? l.a_if : l.b_if;
            control::InterfaceId other_in = l.a == at ? l.b_if : l.a_if;
            propagate_core(extend(pcb, as, ingress, egress), other, other_in);
        }
    }
};

}  // namespace

BeaconResult run_beaconing(Topology& topo, int rounds) {
    BeaconResult result;
    Beaconer b{topo, result};
    for (int round = 0; round < rounds; ++round) {
        // stores are rebuilt each round; announcement history persists
        result.segments.clear();
        result.core_segments.clear();
        for (auto& [id, as] : topo.ases) {
            if (!as.core) continue;
            for (const auto& l : topo.links) {
                if (l.core) {
                    std::string other = l.a == id ? l.b : l.b == id ? l.a : "";
                    if (other.empty()) continue;
                    control::InterfaceId egress = l.a == id ? l.a_if : l.b_if;
                    control::InterfaceId other_in = l.a == id ? l.b_if : l.a_if;
                    auto ctx = make_ctx(topo, as);
                    control::Pcb pcb = control::originate_pcb(ctx, egress, topo.validity);
                    as.issued = ctx.issued;
                    b.propagate_core(pcb, other, other_in);
                } else if (l.a == id) {
                    auto ctx = make_ctx(topo, as);
                    control::Pcb pcb =
                        control::originate_pcb(ctx, l.a_if, topo.validity);
                    as.issued = ctx.issued;
                    b.propagate_down(pcb, l.b, l.b_if);
                }
            }
        }
    }
    return result;
}

namespace {

// a one-segment path (the destination is the segment's originating core AS)
control::EndToEndPath up_only(const control::Pcb& up) {
    control::EndToEndPath path;
    for (auto it = up.entries.rbegin(); it != up.entries.rend(); ++it) {
        control::PathHop h;
        h.as = it->as_id;
        h.ingress_if = it->egress_if;
        h.egress_if = it->ingress_if;
        if (it->extension) h.maps = control::decode_maps(*it->extension, it->as_id);
        h.validity = it->validity;
        path.hops.push_back(std::move(h));
    }
    return path;
}

control::EndToEndPath down_only(const control::Pcb& down) {
    control::EndToEndPath path;
    for (const auto& e : down.entries) {
        control::PathHop h;
        h.as = e.as_id;
        h.ingress_if = e.ingress_if;
        h.egress_if = e.egress_if;
        if (e.extension) h.maps = control::decode_maps(*e.extension, e.as_id);
        h.validity = e.validity;
        path.hops.push_back(std::move(h));
    }
    return path;
}

}  // namespace

std::vector<control::EndToEndPath> candidate_paths(const BeaconResult& beacons,
                                                   const std::string& src,
                                                   const std::string& dst) {
    std::vector<control::EndToEndPath> out;
    if (src == dst) return out;
    auto seg_of = [&](const std::map<std::string, std::vector<control::Pcb>>& m,
                      const std::string& key) -> const std::vector<control::Pcb>* {
        auto it = m.find(key);
        return it == m.end() ? nullptr : &it->second;
    };

    const auto* ups = seg_of(beacons.segments, src);
    const auto* downs = seg_of(beacons.segments, dst);

    if (ups)
        for (const auto& up : *ups)
            if (up.entries.front().as_id.str() == dst) out.push_back(up_only(up));
    if (downs)
        for (const auto& down : *downs)
            if (down.entries.front().as_id.str() == src)
                out.push_back(down_only(down));
    if (ups && downs) {
        for (const auto& up : *ups) {
            std::string c1 = up.entries.front().as_id.str();
            for (const auto& down : *downs) {
                std::string c2 = down.entries.front().as_id.str();
                if (c1 == c2) {
                    out.push_back(control::combine_segments(up, std::nullopt, down));
                    continue;
                }
                if (const auto* cores = seg_of(beacons.core_segments, c2)) {
                    for (const auto& core : *cores)
                        if (core.entries.front().as_id.str() == c1)
                            out.push_back(control::combine_segments(up, core, down));
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// RTT experiment
// ---------------------------------------------------------------------------

namespace {

double jitter_draw(double mean, double sigma, std::mt19937_64& rng) {
    if (mean <= 0) return 0;
    if (sigma <= 0) return mean;
    std::normal_distribution<double> n(0, 1);
    // log-normal scaled so the draw's expectation equals `mean`
    return mean * std::exp(sigma * n(rng) - sigma * sigma / 2);
}

const SimRoute* route_for(const SimAs& as, const std::string& route_id) {
    for (const auto& r : as.routes)
        if (r.route_id == route_id) return &r;
    return nullptr;
}

const SimRoute* misroute_for(const SimAs& as, const std::string& honest_route) {
    for (const auto& r : as.routes)
        if (r.route_id != honest_route) return &r;
    return route_for(as, honest_route);
}

}  // namespace

RttResult run_rtt_experiment(const Topology& topo, const RttScenario& scenario) {
    if (scenario.path.size() < 2)
        throw ConfigError("scenario", "path needs at least two ASes");
    const size_t n = scenario.path.size();

    // resolve the hop fields from the links along the path
    std::vector<data::HopField> fields(n);
    std::vector<const SimLink*> path_links;
    for (size_t i = 0; i < n; ++i) {
        const SimAs& as = topo.as_at(scenario.path[i]);
        fields[i].as_id = as.id;
    }
    for (size_t i = 0; i + 1 < n; ++i) {
        const SimLink* l = topo.find_link(scenario.path[i], scenario.path[i + 1]);
        if (!l)
            throw ConfigError("scenario", "no link between " + scenario.path[i] +
                                              " and " + scenario.path[i + 1]);
        path_links.push_back(l);
        bool fwd = l->a == scenario.path[i];
        fields[i].egress_if = fwd ? l->a_if : l->b_if;
        fields[i + 1].ingress_if = fwd ? l->b_if : l->a_if;
    }

    const SimAs& src_as = topo.as_at(scenario.path.front());
    const SimAs& dst_as = topo.as_at(scenario.path.back());

    std::vector<data::HopKey> keys(n);
    for (size_t i = 0; i < n; ++i) {
        const SimAs& as = topo.as_at(scenario.path[i]);
        fields[i].sigma = data::compute_sigma(as.secret, fields[i]);
        keys[i].field = fields[i];
        keys[i].key =
            drkey::router_rederive(as.secret, src_as.id, scenario.src_host).key;
    }
    crypto::SymKey k_hh = drkey::derive_host_host(
                              drkey::derive_as_level(dst_as.secret, src_as.id),
                              scenario.dst_host, scenario.src_host)
                              .key;

    // per-hop routers; forwarding tables from the configured routes
    std::vector<std::unique_ptr<data::RouterContext>> routers;
    for (size_t i = 0; i < n; ++i) {
        const SimAs& as = topo.as_at(scenario.path[i]);
        data::ForwardingTable table;
        for (const auto& r : as.routes)
            for (control::PolicyIndex idx : r.indices)
                table.routes[idx].push_back(r.route_id);
        auto ctx = std::make_unique<data::RouterContext>(
            data::RouterConfig{as.secret});
        ctx->set_table(std::move(table));
        routers.push_back(std::move(ctx));
    }

    std::vector<control::PolicyIndex> indices(
        n - 1, scenario.index);
    data::SenderConfig sender{src_as.id, scenario.src_host, dst_as.id,
                              scenario.dst_host};

    std::mt19937_64 rng(topo.seed);
    RttResult result;
    data::SourceState state(uint64_t{1} << 62);  // retain everything for the run
    const uint64_t base_ts = 1'000'000'000'000'000ull;
    const uint64_t interval_ns =
        static_cast<uint64_t>(scenario.interval_ms * 1e6);

    for (int seq = 0; seq < scenario.count; ++seq) {
        uint64_t ts = base_ts + seq * interval_ns;
        Bytes payload = {uint8_t(seq >> 8), uint8_t(seq)};
        data::Packet pkt =
            data::build_packet(sender, ts, keys, k_hh, indices, payload, &state);

        double rtt = 0;
        for (const auto* l : path_links) {
            // one traversal per direction, each with its own jitter draw
            rtt += l->latency_ms + jitter_draw(l->jitter_ms, l->jitter_sigma, rng);
            rtt += l->latency_ms + jitter_draw(l->jitter_ms, l->jitter_sigma, rng);
        }
        bool dropped = false;
        for (size_t i = 0; i < n && !dropped; ++i) {
            const SimAs& as = topo.as_at(scenario.path[i]);
            auto saved_hvf = pkt.header.hops[i].hvf;
            data::RouterDecision d = data::router_process(*routers[i], pkt, ts);
            if (d.kind == data::RouterDecision::Kind::Drop) {
                if (!as.tamper_index && !as.skip_hvf_update && !as.wrong_route)
                    throw HonestDrop(scenario.path[i], d.reason);
                dropped = true;
                break;
            }
            if (d.kind == data::RouterDecision::Kind::ControlReply) {
                dropped = true;
                break;
            }
            if (as.skip_hvf_update) pkt.header.hops[i].hvf = saved_hvf;
            if (as.tamper_index) pkt.header.hops[i].enc_index[1] ^= 0x01;
            const SimRoute* route = as.wrong_route
                                        ? misroute_for(as, d.route_id)
                                        : route_for(as, d.route_id);
            if (!route) throw ConfigError("routes", "route vanished: " + d.route_id);
            // intra-AS traversal, both directions of the round trip
            rtt += route->latency_ms +
                   jitter_draw(route->jitter_ms, route->jitter_sigma, rng);
            rtt += route->latency_ms +
                   jitter_draw(route->jitter_ms, route->jitter_sigma, rng);
        }
        if (dropped) {
            result.dropped++;
            continue;
        }
        data::DestResult dest = data::dest_process({k_hh}, pkt);
        if (!dest.accepted) {
            result.dropped++;
            continue;
        }
        result.delivered++;
        result.validations.push_back(data::source_validate(state, *dest.confirmation));
        result.samples.push_back({seq, scenario.index, rtt});
    }
    return result;
}

}  // namespace fabrid::sim
