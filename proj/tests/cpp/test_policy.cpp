#include <doctest.h>

#include "fabrid/policy.hpp"

using namespace fabrid::policy;

namespace {

const char* kPathExample =
    "const m1: M = 100\n"
    "const s: N = \"critical-os\"\n"
    "const i: I = \"https://issuer.example\"\n"
    "const v: V = \"3.2.0\"\n"
    "manu(r) = m1 & exists c: C. (software(r, c) & name(c) = s & "
    "issuer(tag(c)) = i & version(c) = v)";

const char* kPrefExample =
    "const m1: M = 100\n"
    "const m2: M = 101\n"
    "const s: N = \"critical-os\"\n"
    "const i: I = \"https://issuer.example\"\n"
    "const vmin: V = \"3.0.0\"\n"
    "(manu(r) = m1 | manu(r) = m2) & forall c: C. ((software(r, c) & "
    "name(c) = s & issuer(tag(c)) = i) -> version(c) >= vmin)";

RouterSetup setup_with(uint32_t manu,
                       std::vector<SoftwareComponent> comps) {
    RouterSetup s;
    s.router_id = "test";
    s.manufacturer = manu;
    s.software = std::move(comps);
    return s;
}

}  // namespace

TEST_CASE("version comparison") {
    CHECK(compare_versions("1.2.3", "1.2.3") == Ordering::Equal);
    CHECK(compare_versions("1.2.3", "1.10.0") == Ordering::Less);
    CHECK(compare_versions("2.0", "10.0") == Ordering::Less);  // numeric, not lexical
    CHECK(compare_versions("1.2", "1.2.1") == Ordering::Less);  // shorter prefix
    CHECK(compare_versions("1.2.1", "1.2") == Ordering::Greater);
    CHECK(compare_versions("1.alpha", "1.beta") == Ordering::Less);  // lexical fallback
    CHECK(compare_versions("0", "0.0.1") == Ordering::Less);
}

TEST_CASE("parse, pretty-print, reparse round trip") {
    Policy p = parse_policy(kPrefExample);
    CHECK(p.free_var == "r");
    CHECK(p.constants.size() == 5);
    Policy again = parse_policy(pretty_print(p));
    CHECK(p.body->equals(*again.body));
    CHECK(p.constants.at("vmin").str == "3.0.0");
}

TEST_CASE("parser rejections") {
    // free variable must be unique and of sort R
    CHECK_THROWS_AS((void)parse_policy("manu(r) = manu(r2)"), SortError);
    // unbound constant
    CHECK_THROWS_AS(
        (void)parse_policy("exists c: C. (software(r, c) & name(c) = ghost)"),
        std::runtime_error);
    // unguarded C-quantifier
    CHECK_THROWS_AS((void)parse_policy("exists c: C. (name(c) = name(c))"),
                    SortError);
    CHECK_THROWS_AS(
        (void)parse_policy("forall c: C. (name(c) = name(c) -> name(c) = name(c))"),
        SortError);
    // quantification over paths and onPath atoms are not router-policy material
    CHECK_THROWS_AS((void)parse_policy("forall p: P. (manu(r) = manu(r))"),
                    SortError);
    CHECK_THROWS_AS((void)parse_policy("onPath(p, r)"), SortError);
    // comparisons are version-only
    CHECK_THROWS_AS(
        (void)parse_policy("exists c: C. (software(r, c) & name(c) >= name(c))"),
        SortError);
    // plain syntax error with a position
    CHECK_THROWS_AS((void)parse_policy("manu(r) = "), SyntaxError);
    // malformed constant header
    CHECK_THROWS_AS((void)parse_policy("const m: M = \"nope\"\nmanu(r) = m"),
                    SyntaxError);
    CHECK_THROWS_AS((void)parse_policy("const m: M = 0\nmanu(r) = m"), SyntaxError);
}

TEST_CASE("router policy evaluation on the running examples") {
    Policy path_pol = parse_policy(kPathExample);
    Policy pref_pol = parse_policy(kPrefExample);

    SoftwareComponent good{"t1", "https://issuer.example", "critical-os", {"3.2.0"}};
    SoftwareComponent stale{"t2", "https://issuer.example", "critical-os", {"2.0.0"}};
    SoftwareComponent other{"t3", "https://other.example", "helper", {"0.1"}};

    CHECK(eval_router_policy(path_pol, setup_with(100, {good})));
    CHECK(eval_router_policy(path_pol, setup_with(100, {good, other})));
    CHECK_FALSE(eval_router_policy(path_pol, setup_with(101, {good})));   // manu
    CHECK_FALSE(eval_router_policy(path_pol, setup_with(100, {stale})));  // version
    CHECK_FALSE(eval_router_policy(path_pol, setup_with(100, {})));

    CHECK(eval_router_policy(pref_pol, setup_with(101, {good})));
    CHECK(eval_router_policy(pref_pol, setup_with(100, {other})));  // vacuous forall
    CHECK_FALSE(eval_router_policy(pref_pol, setup_with(100, {good, stale})));
    CHECK_FALSE(eval_router_policy(pref_pol, setup_with(77, {good})));
}

TEST_CASE("path policy evaluation reports violating routers") {
    Policy pref = parse_policy(kPrefExample);
    PathModel path;
    path.path_id = "p";
    path.routers.push_back(setup_with(100, {}));
    path.routers.back().router_id = "ok";
    path.routers.push_back(setup_with(
        100, {{"t2", "https://issuer.example", "critical-os", {"2.0.0"}}}));
    path.routers.back().router_id = "bad";
    auto res = eval_path_policy(pref, path);
    CHECK_FALSE(res.satisfied);
    CHECK(res.violating_routers == std::vector<std::string>{"bad"});
}

TEST_CASE("router setup JSON round trip") {
    RouterSetup s = setup_with(
        7, {{"tag-a", "https://a.example", "osd", {"1.2.3", "multipartnumeric"}}});
    s.router_id = "r1";
    RouterSetup back = decode_router_setup(encode_router_setup(s));
    CHECK(back.manufacturer == 7);
    CHECK(back.software.size() == 1);
    CHECK(back.software[0].tag == "tag-a");
    CHECK(back.software[0].version.text == "1.2.3");
    CHECK_THROWS((void)encode_router_setup(setup_with(0, {})));
}

TEST_CASE("containment is reflexive and respects strengthening") {
    Policy p = parse_policy(kPathExample);
    auto self = check_containment(p, p);
    CHECK(self.kind == ContainmentKind::Contained);
    CHECK(self.used_fast_path);

    // the path policy announces strictly more than "some component from i"
    Policy weaker = parse_policy(
        "const i: I = \"https://issuer.example\"\n"
        "exists c: C. (software(r, c) & issuer(tag(c)) = i)");
    CHECK(check_containment(p, weaker).kind == ContainmentKind::Contained);
    auto rev = check_containment(weaker, p);
    CHECK(rev.kind == ContainmentKind::NotContained);
    REQUIRE(rev.witness.has_value());
    CHECK(eval_router_policy(weaker, *rev.witness));
    CHECK_FALSE(eval_router_policy(p, *rev.witness));
}

TEST_CASE("example policy pair is not contained, with a checkable witness") {
    Policy path_pol = parse_policy(kPathExample);
    Policy pref_pol = parse_policy(kPrefExample);
    CHECK_FALSE(is_conjunctive_fragment(pref_pol));

    auto res = check_containment(path_pol, pref_pol);
    CHECK(res.kind == ContainmentKind::NotContained);
    CHECK_FALSE(res.used_fast_path);
    REQUIRE(res.witness.has_value());
    // two components: the announced one plus a stale copy of the critical software
    CHECK(res.witness->software.size() == 2);
    CHECK(eval_router_policy(path_pol, *res.witness));
    CHECK_FALSE(eval_router_policy(pref_pol, *res.witness));
}

TEST_CASE("unsatisfiable conjunctive announcements are vacuously contained") {
    Policy contradictory = parse_policy(
        "const n1: N = \"a\"\n"
        "const n2: N = \"b\"\n"
        "exists c: C. (software(r, c) & name(c) = n1 & name(c) = n2)");
    Policy anything = parse_policy(
        "const n3: N = \"z\"\n"
        "exists c: C. (software(r, c) & name(c) = n3)");
    auto res = check_containment(contradictory, anything);
    CHECK(res.kind == ContainmentKind::Contained);
    CHECK(res.used_fast_path);
    CHECK(check_containment_enumerate(contradictory, anything).kind ==
          ContainmentKind::Contained);
}

TEST_CASE("fast path and enumeration agree on conjunctive pairs") {
    auto pol = [](const std::string& body) {
        return parse_policy("const i1: I = \"a\"\nconst i2: I = \"b\"\n"
                            "const n1: N = \"x\"\nconst n2: N = \"y\"\n" +
                            body);
    };
    std::vector<Policy> pols = {
        pol("exists c: C. (software(r, c) & issuer(tag(c)) = i1)"),
        pol("exists c: C. (software(r, c) & issuer(tag(c)) = i1 & name(c) = n1)"),
        pol("exists c: C. (software(r, c) & issuer(tag(c)) = i2)"),
        pol("exists c: C. (software(r, c) & name(c) = n1) & "
            "exists d: C. (software(r, d) & name(d) = n2)"),
    };
    for (const auto& a : pols)
        for (const auto& b : pols) {
            auto fast = check_containment(a, b);
            auto slow = check_containment_enumerate(a, b);
            CHECK(fast.used_fast_path);
            CHECK(fast.kind == slow.kind);
        }
}

TEST_CASE("tiny budget yields Unknown on non-conjunctive pairs") {
    Policy path_pol = parse_policy(kPathExample);
    Policy pref_pol = parse_policy(kPrefExample);
    ContainmentBounds bounds;
    bounds.node_budget = 1;
    CHECK(check_containment(path_pol, pref_pol, bounds).kind ==
          ContainmentKind::Unknown);
}

TEST_CASE("k = 0 decides over empty stacks only") {
    Policy path_pol = parse_policy(kPathExample);
    Policy pref_pol = parse_policy(kPrefExample);
    ContainmentBounds bounds;
    bounds.max_stack = 0;
    // no setup with an empty stack satisfies the existential announcement
    CHECK(check_containment_enumerate(path_pol, pref_pol, bounds).kind ==
          ContainmentKind::Contained);
}
