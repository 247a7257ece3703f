#include <algorithm>
#include <functional>
#include <set>

#include "fabrid/policy.hpp"

namespace fabrid::policy {

namespace {

struct SortedConstants {
    std::set<uint32_t> manufacturers;
    std::set<std::string> tags, issuers, names, versions;
};

void collect_constants(const Policy& pol, SortedConstants& out) {
    for (const auto& [name, c] : pol.constants) {
        switch (c.sort) {
            case Sort::M: out.manufacturers.insert(c.num); break;
            case Sort::T: out.tags.insert(c.str); break;
            case Sort::I: out.issuers.insert(c.str); break;
            case Sort::N: out.names.insert(c.str); break;
            case Sort::V: out.versions.insert(c.str); break;
            default: break;
        }
    }
}

// version strictly above every element of `versions`
std::string fresh_high_version(const std::set<std::string>& versions) {
    std::string cand = "1000000000";
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& v : versions) {
            if (compare_versions(v, cand) != Ordering::Less) {
                cand = v + ".1";
                changed = true;
            }
        }
    }
    return cand;
}

std::optional<std::string> fresh_low_version(const std::set<std::string>& versions) {
    std::string cand = "0";
    for (const auto& v : versions)
        if (compare_versions(v, cand) != Ordering::Greater) return std::nullopt;
    return cand;
}

}  // namespace

bool is_conjunctive_fragment(const Policy& pol) {
    // atoms: manufacturer(r) = const, attribute(c) = const (either orientation),
    // software(r, c); connectives: conjunction and guarded C-existentials only
    std::function<bool(const Formula&)> walk = [&](const Formula& f) -> bool {
        switch (f.kind) {
            case Formula::Kind::And:
                return walk(*f.a) && walk(*f.b);
            case Formula::Kind::Exists:
                return f.var_sort == Sort::C && walk(*f.a);
            case Formula::Kind::Software:
                return f.lhs.kind == Term::Kind::Var && f.rhs.kind == Term::Kind::Var;
            case Formula::Kind::Eq: {
                const Term* app = &f.lhs;
                const Term* con = &f.rhs;
                if (app->kind == Term::Kind::Const && con->kind == Term::Kind::Apply)
                    std::swap(app, con);
                if (app->kind != Term::Kind::Apply || con->kind != Term::Kind::Const)
                    return false;
                const Term* inner = app;
                while (inner->kind == Term::Kind::Apply) inner = &inner->args[0];
                return inner->kind == Term::Kind::Var;
            }
            default:
                return false;
        }
    };
    return walk(*pol.body);
}

namespace {

// Canonical (frozen) model of a conjunctive policy: one component per
// existential variable, attributes taken from the equality atoms, everything
// unconstrained filled with values distinct from all constants in play.
RouterSetup canonical_model(const Policy& pol, const SortedConstants& all) {
    RouterSetup setup;
    setup.router_id = "canonical";
    std::map<std::string, SoftwareComponent> comps;  // keyed by variable
    std::optional<uint32_t> manu;

    std::map<std::string, std::map<std::string, std::string>> attrs;  // var -> fn -> value
    std::function<void(const Formula&)> walk = [&](const Formula& f) {
        switch (f.kind) {
            case Formula::Kind::And:
                walk(*f.a);
                walk(*f.b);
                return;
            case Formula::Kind::Exists:
                attrs.try_emplace(f.var);
                walk(*f.a);
                return;
            case Formula::Kind::Software:
                attrs.try_emplace(f.rhs.name);
                return;
            case Formula::Kind::Eq: {
                const Term* app = &f.lhs;
                const Term* con = &f.rhs;
                if (app->kind == Term::Kind::Const) std::swap(app, con);
                const ConstValue& cv = pol.constants.at(con->name);
                if (app->name == "manufacturer") {
                    manu = cv.num;
                    return;
                }
                // issuer(tag(c)) bottoms out at the same component variable
                const Term* inner = &app->args[0];
                while (inner->kind == Term::Kind::Apply) inner = &inner->args[0];
                attrs[inner->name][app->name] = cv.str;
                return;
            }
            default:
                return;
        }
    };
    walk(*pol.body);

    uint32_t fresh_manu = 1;
    if (!all.manufacturers.empty()) fresh_manu = *all.manufacturers.rbegin() + 1;
    setup.manufacturer = manu.value_or(fresh_manu);

    int idx = 0;
    for (auto& [var, m] : attrs) {
        SoftwareComponent c;
        std::string suffix = std::to_string(idx++);
        c.tag = m.count("tag") ? m["tag"] : "\x01" "fresh-tag-" + suffix;
        c.issuer = m.count("issuer") ? m["issuer"] : "\x01" "fresh-issuer-" + suffix;
        c.name = m.count("name") ? m["name"] : "\x01" "fresh-name-" + suffix;
        c.version.text =
            m.count("version") ? m["version"] : "424242424242." + suffix;
        setup.software.push_back(std::move(c));
    }
    return setup;
}

}  // namespace

ContainmentResult check_containment_enumerate(const Policy& path_pol,
                                              const Policy& pref_pol,
                                              const ContainmentBounds& bounds) {
    SortedConstants all;
    collect_constants(path_pol, all);
    collect_constants(pref_pol, all);

    // universes: the constants of both formulas plus fresh elements. The
    // version sort additionally gets a fresh element above (and, when
    // possible, below) all constants so order atoms can be witnessed.
    std::vector<uint32_t> manus(all.manufacturers.begin(), all.manufacturers.end());
    manus.push_back(all.manufacturers.empty() ? 1 : *all.manufacturers.rbegin() + 1);

    // enough fresh tags to fill a maximal stack (tags are pairwise distinct)
    std::vector<std::string> tags(all.tags.begin(), all.tags.end());
    size_t fresh_tags = std::max<size_t>(1, bounds.max_stack);
    for (size_t i = 0; i < fresh_tags; ++i)
        tags.push_back("\x01" "fresh-tag-" + std::to_string(i));

    std::vector<std::string> issuers(all.issuers.begin(), all.issuers.end());
    issuers.push_back("\x01" "fresh-issuer");
    std::vector<std::string> names(all.names.begin(), all.names.end());
    names.push_back("\x01" "fresh-name");
    std::vector<std::string> versions(all.versions.begin(), all.versions.end());
    versions.push_back(fresh_high_version(all.versions));
    if (auto low = fresh_low_version(all.versions)) versions.push_back(*low);

    std::vector<SoftwareComponent> comps;
    for (const auto& t : tags)
        for (const auto& i : issuers)
            for (const auto& n : names)
                for (const auto& v : versions)
                    comps.push_back({t, i, n, {v, "multipartnumeric"}});

    size_t evaluated = 0;
    ContainmentResult res;

    // enumerate stacks of up to max_stack components with pairwise distinct tags
    std::vector<const SoftwareComponent*> stack;
    std::function<bool(size_t)> enumerate = [&](size_t from) -> bool {
        RouterSetup setup;
        setup.router_id = "enum";
        for (auto* c : stack) setup.software.push_back(*c);
        for (uint32_t m : manus) {
            if (++evaluated > bounds.node_budget) {
                res.kind = ContainmentKind::Unknown;
                return true;
            }
            setup.manufacturer = m;
            if (eval_router_policy(path_pol, setup) &&
                !eval_router_policy(pref_pol, setup)) {
                res.kind = ContainmentKind::NotContained;
                res.witness = setup;
                return true;
            }
        }
        if (stack.size() >= bounds.max_stack) return false;
        for (size_t i = from; i < comps.size(); ++i) {
            bool tag_clash = false;
            for (auto* c : stack)
                if (c->tag == comps[i].tag) tag_clash = true;
            if (tag_clash) continue;
            stack.push_back(&comps[i]);
            bool done = enumerate(i + 1);
            stack.pop_back();
            if (done) return true;
        }
        return false;
    };
    enumerate(0);
    return res;
}

ContainmentResult check_containment(const Policy& path_pol, const Policy& pref_pol,
                                    const ContainmentBounds& bounds) {
    if (is_conjunctive_fragment(path_pol) && is_conjunctive_fragment(pref_pol)) {
        SortedConstants all;
        collect_constants(path_pol, all);
        collect_constants(pref_pol, all);
        RouterSetup canon = canonical_model(path_pol, all);
        ContainmentResult res;
        res.used_fast_path = true;
        if (!eval_router_policy(path_pol, canon)) {
            // conflicting equality atoms: the path policy accepts no setup
            res.kind = ContainmentKind::Contained;
            return res;
        }
        if (eval_router_policy(pref_pol, canon)) {
            res.kind = ContainmentKind::Contained;
        } else {
            res.kind = ContainmentKind::NotContained;
            res.witness = canon;
        }
        return res;
    }
    return check_containment_enumerate(path_pol, pref_pol, bounds);
}

}  // namespace fabrid::policy
