#ifndef FABRID_POLICY_HPP
#define FABRID_POLICY_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace fabrid::policy {

// ---------------------------------------------------------------------------
// Sorts and carrier values
// ---------------------------------------------------------------------------

enum class Sort { M, C, T, I, N, V, R, P };

std::string sort_name(Sort s);
std::optional<Sort> sort_from_name(const std::string& name);

enum class Ordering { Less, Equal, Greater };

// Version text under a (named) scheme. The default scheme is a three-part
// numeric version; all schemes compare as dot-separated components, numeric
// where both sides are numeric, lexicographic otherwise.
struct Version {
    std::string text = "1.0.0";
    std::string scheme = "multipartnumeric";
};

Ordering compare_versions(const std::string& a, const std::string& b,
                          const std::string& scheme = "multipartnumeric");

struct SoftwareComponent {
    std::string tag;     // globally unique within a model
    std::string issuer;  // URI
    std::string name;
    Version version;
};

struct RouterSetup {
    std::string router_id;
    uint32_t manufacturer = 0;  // IANA private enterprise number, > 0
    std::vector<SoftwareComponent> software;
};

struct PathModel {
    std::string path_id;
    std::vector<RouterSetup> routers;  // set semantics
};

// SWID-style structured record per router setup (JSON).
std::string encode_router_setup(const RouterSetup& r);
RouterSetup decode_router_setup(const std::string& json_text);

// ---------------------------------------------------------------------------
// AST
// ---------------------------------------------------------------------------

struct Term {
    enum class Kind { Var, Const, Apply };
    Kind kind = Kind::Var;
    Sort sort = Sort::R;
    std::string name;         // variable / constant / function symbol
    std::vector<Term> args;   // Apply only

    bool operator==(const Term&) const = default;
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

enum class CmpOp { Lt, Le, Ge, Gt };

struct Formula {
    enum class Kind {
        Eq, Cmp, Software, OnPath, Not, And, Or, Implies, Forall, Exists
    };
    Kind kind;
    // Eq / Cmp / Software / OnPath
    CmpOp op = CmpOp::Le;
    Term lhs, rhs;
    // connectives / quantifier body
    FormulaPtr a, b;
    // quantifiers
    std::string var;
    Sort var_sort = Sort::C;

    bool equals(const Formula& other) const;
};

// Constant binding values from the policy header.
struct ConstValue {
    Sort sort = Sort::M;
    uint32_t num = 0;    // M
    std::string str;     // T / I / N / R / P, or version text for V
};

struct Policy {
    std::map<std::string, ConstValue> constants;
    std::string free_var;   // the single free variable, sort R
    FormulaPtr body;
};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct SyntaxError : std::runtime_error {
    size_t position;
    SyntaxError(size_t pos, const std::string& what)
        : std::runtime_error("syntax error at offset " + std::to_string(pos) +
                             ": " + what),
          position(pos) {}
};

struct SortError : std::runtime_error {
    SortError(const std::string& term, Sort expected, Sort found)
        : std::runtime_error("sort error on '" + term + "': expected " +
                             sort_name(expected) + ", found " + sort_name(found)) {}
    explicit SortError(const std::string& what) : std::runtime_error(what) {}
};

struct UnboundConstant : std::runtime_error {
    explicit UnboundConstant(const std::string& name)
        : std::runtime_error("constant '" + name + "' has no binding") {}
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Concrete grammar: optional `const name: S = value` header lines followed by
// one formula. Connective precedence not > and > or > ->; quantifiers are
// written `forall c: C. body` / `exists c: C. body`. C-quantifiers must be
// guarded by a software(r, c) atom.
Policy parse_policy(const std::string& text);

std::string pretty_print(const Policy& pol);

bool eval_router_policy(const Policy& pol, const RouterSetup& r);

struct PathEvalResult {
    bool satisfied = true;
    std::vector<std::string> violating_routers;
};
PathEvalResult eval_path_policy(const Policy& pol, const PathModel& p);

// ---------------------------------------------------------------------------
// Containment
// ---------------------------------------------------------------------------

struct ContainmentBounds {
    size_t max_stack = 2;          // k: max software components per setup
    size_t node_budget = 2'000'000;  // enumerated setups before Unknown
};

enum class ContainmentKind { Contained, NotContained, Unknown };

struct ContainmentResult {
    ContainmentKind kind = ContainmentKind::Contained;
    std::optional<RouterSetup> witness;  // NotContained only
    bool used_fast_path = false;
};

// Bounded containment: Contained iff no setup within bounds satisfies
// path_pol but not pref_pol. Negation-free conjunctive pairs are decided by
// a canonical-model homomorphism check and never return Unknown.
ContainmentResult check_containment(const Policy& path_pol, const Policy& pref_pol,
                                    const ContainmentBounds& bounds = {});

// The exhaustive bounded enumeration on its own; the oracle side of the
// fast-path/enumeration agreement checks.
ContainmentResult check_containment_enumerate(const Policy& path_pol,
                                              const Policy& pref_pol,
                                              const ContainmentBounds& bounds = {});

bool is_conjunctive_fragment(const Policy& pol);

}  // namespace fabrid::policy

#endif
