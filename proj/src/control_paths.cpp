#include <algorithm>

#include "fabrid/control.hpp"

namespace fabrid::control {

namespace {

PolicyMaps entry_maps(const AsEntry& e) {
    if (!e.extension) return {};
    return decode_maps(*e.extension, e.as_id);
}

// up-segments are traversed leaf-to-core: reverse the entry order and swap
// the interface roles
std::vector<PathHop> up_hops(const Pcb& up) {
    std::vector<PathHop> hops;
    for (auto it = up.entries.rbegin(); it != up.entries.rend(); ++it) {
        PathHop h;
        h.as = it->as_id;
        h.ingress_if = it->egress_if;
        h.egress_if = it->ingress_if;
        h.maps = entry_maps(*it);
        h.validity = it->validity;
        hops.push_back(std::move(h));
    }
    return hops;
}

std::vector<PathHop> down_hops(const Pcb& seg) {
    std::vector<PathHop> hops;
    for (const auto& e : seg.entries) {
        PathHop h;
        h.as = e.as_id;
        h.ingress_if = e.ingress_if;
        h.egress_if = e.egress_if;
        h.maps = entry_maps(e);
        h.validity = e.validity;
        hops.push_back(std::move(h));
    }
    return hops;
}

// joins two hop lists sharing one AS: the shared hop keeps the ingress of the
// first list and the egress (and maps) of the second
void join(std::vector<PathHop>& acc, std::vector<PathHop> next) {
    if (acc.empty() || next.empty() || acc.back().as != next.front().as)
        throw JoinMismatch{};
    acc.back().egress_if = next.front().egress_if;
    if (!next.front().maps.imap.empty() || !next.front().maps.dmap.empty())
        acc.back().maps = next.front().maps;
    acc.insert(acc.end(), std::make_move_iterator(next.begin() + 1),
               std::make_move_iterator(next.end()));
}

}  // namespace

EndToEndPath combine_segments(const Pcb& up, const std::optional<Pcb>& core,
                              const Pcb& down) {
    EndToEndPath path;
    path.hops = up_hops(up);
    if (core) join(path.hops, down_hops(*core));
    join(path.hops, down_hops(down));
    return path;
}

std::vector<PolicyIndex> announced_indices(const PathHop& hop) {
    std::vector<PolicyIndex> out;
    auto add = [&](const std::vector<PolicyIndex>& v) {
        for (PolicyIndex i : v)
            if (std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
    };
    // exact interface pair takes precedence
    if (auto it = hop.maps.imap.find(IfIpPair::if_if(hop.ingress_if, hop.egress_if));
        it != hop.maps.imap.end())
        add(it->second);
    // endpoint-facing hops additionally match IF-IP entries on the internal side
    if (hop.ingress_if == 0) {
        for (const auto& [pair, indices] : hop.maps.imap)
            if (pair.left_ip && pair.right_if && *pair.right_if == hop.egress_if)
                add(indices);
    }
    if (hop.egress_if == 0) {
        for (const auto& [pair, indices] : hop.maps.imap)
            if (pair.right_ip && pair.left_if && *pair.left_if == hop.ingress_if)
                add(indices);
    }
    return out;
}

bool PathAssessment::has_untrusted() const {
    return std::any_of(hops.begin(), hops.end(), [](const HopAssessment& h) {
        return h.verdict == HopVerdict::Untrusted;
    });
}

size_t PathAssessment::compliant_count() const {
    return std::count_if(hops.begin(), hops.end(), [](const HopAssessment& h) {
        return h.verdict == HopVerdict::Compliant;
    });
}

std::vector<PathAssessment> filter_paths(const std::vector<EndToEndPath>& paths,
                                         const policy::Policy& pref_pol,
                                         const std::set<drkey::AsId>& trusted,
                                         registry::PolicyResolver& resolver,
                                         const policy::ContainmentBounds& bounds) {
    std::vector<PathAssessment> out;
    for (const auto& path : paths) {
        PathAssessment pa;
        pa.path = path;
        for (const auto& hop : path.hops) {
            HopAssessment ha;
            ha.as = hop.as;
            if (!trusted.count(hop.as)) {
                ha.verdict = HopVerdict::Untrusted;
                pa.hops.push_back(ha);
                continue;
            }
            auto indices = announced_indices(hop);
            if (indices.empty()) {
                ha.verdict = HopVerdict::NoAnnouncement;
                pa.hops.push_back(ha);
                continue;
            }
            ha.verdict = HopVerdict::NonCompliant;
            for (PolicyIndex idx : indices) {
                auto pid = hop.maps.dmap.find(idx);
                if (pid == hop.maps.dmap.end()) continue;
                try {
                    auto entry = resolver.resolve(pid->second);
                    auto announced = policy::parse_policy(entry.description);
                    auto verdict = policy::check_containment(announced, pref_pol, bounds);
                    if (verdict.kind == policy::ContainmentKind::Contained) {
                        ha.verdict = HopVerdict::Compliant;
                        ha.index = idx;
                        break;
                    }
                } catch (const std::exception&) {
                    ha.verdict = HopVerdict::NoAnnouncement;
                    ha.resolver_warning = true;
                }
            }
            pa.hops.push_back(ha);
        }
        out.push_back(std::move(pa));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const PathAssessment& a, const PathAssessment& b) {
                         if (a.has_untrusted() != b.has_untrusted())
                             return !a.has_untrusted();
                         if (a.compliant_count() != b.compliant_count())
                             return a.compliant_count() > b.compliant_count();
                         if (a.path.hops.size() != b.path.hops.size())
                             return a.path.hops.size() < b.path.hops.size();
                         auto key = [](const PathAssessment& p) {
                             std::string k;
                             for (const auto& h : p.path.hops) k += h.as.str() + "|";
                             return k;
                         };
                         return key(a) < key(b);
                     });
    return out;
}

std::vector<PolicyIndex> assign_indices(
    const EndToEndPath& path,
    const std::map<drkey::AsId, registry::PolicyId>& choices) {
    std::vector<PolicyIndex> out;
    for (size_t i = 1; i < path.hops.size(); ++i) {
        const PathHop& hop = path.hops[i];
        PolicyIndex chosen = 0;
        auto choice = choices.find(hop.as);
        if (choice != choices.end()) {
            for (PolicyIndex idx : announced_indices(hop)) {
                auto pid = hop.maps.dmap.find(idx);
                if (pid != hop.maps.dmap.end() && pid->second == choice->second) {
                    chosen = idx;
                    break;
                }
            }
        }
        out.push_back(chosen);
    }
    return out;
}

}  // namespace fabrid::control
