#include <algorithm>
#include <set>

#include "fabrid/policy.hpp"
#include "json.hpp"

namespace fabrid::policy {

namespace {

bool all_digits(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isdigit(c);
    });
}

std::vector<std::string> split_components(const std::string& v) {
    std::vector<std::string> parts;
    size_t start = 0;
    while (true) {
        size_t dot = v.find('.', start);
        if (dot == std::string::npos) {
            parts.push_back(v.substr(start));
            return parts;
        }
        parts.push_back(v.substr(start, dot - start));
        start = dot + 1;
    }
}

}  // namespace

Ordering compare_versions(const std::string& a, const std::string& b,
                          const std::string& /*scheme*/) {
    auto pa = split_components(a);
    auto pb = split_components(b);
    for (size_t i = 0; i < std::max(pa.size(), pb.size()); ++i) {
        if (i >= pa.size()) return Ordering::Less;
        if (i >= pb.size()) return Ordering::Greater;
        const auto& ca = pa[i];
        const auto& cb = pb[i];
        if (all_digits(ca) && all_digits(cb)) {
            unsigned long long na = std::stoull(ca), nb = std::stoull(cb);
            if (na != nb) return na < nb ? Ordering::Less : Ordering::Greater;
        } else if (ca != cb) {
            return ca < cb ? Ordering::Less : Ordering::Greater;
        }
    }
    return Ordering::Equal;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

struct Value {
    Sort sort = Sort::M;
    uint32_t num = 0;                          // M
    std::string str;                           // T/I/N/R/P; version text for V
    std::string scheme;                        // V
    const SoftwareComponent* comp = nullptr;   // C

    static Value manufacturer(uint32_t pen) { return {Sort::M, pen, {}, {}, nullptr}; }
    static Value string_of(Sort s, std::string v) {
        return {s, 0, std::move(v), {}, nullptr};
    }
    static Value version_of(const Version& v) {
        return {Sort::V, 0, v.text, v.scheme, nullptr};
    }
    static Value component(const SoftwareComponent* c) {
        return {Sort::C, 0, c->tag, {}, c};
    }
};

bool value_equal(const Value& a, const Value& b) {
    if (a.sort != b.sort) return false;
    switch (a.sort) {
        case Sort::M: return a.num == b.num;
        case Sort::V: return compare_versions(a.str, b.str) == Ordering::Equal;
        default: return a.str == b.str;  // C compares by unique tag
    }
}

struct EvalCtx {
    const Policy& pol;
    const RouterSetup& setup;
    std::map<std::string, Value> env;
};

Value const_value(const EvalCtx& ctx, const std::string& name) {
    auto it = ctx.pol.constants.find(name);
    if (it == ctx.pol.constants.end()) throw UnboundConstant(name);
    const ConstValue& c = it->second;
    switch (c.sort) {
        case Sort::M: return Value::manufacturer(c.num);
        case Sort::V: return Value::version_of({c.str, "multipartnumeric"});
        default: return Value::string_of(c.sort, c.str);
    }
}

const SoftwareComponent* find_component(const RouterSetup& setup,
                                        const std::string& tag) {
    for (const auto& c : setup.software)
        if (c.tag == tag) return &c;
    return nullptr;
}

Value eval_term(const EvalCtx& ctx, const Term& t) {
    switch (t.kind) {
        case Term::Kind::Const:
            return const_value(ctx, t.name);
        case Term::Kind::Var: {
            auto it = ctx.env.find(t.name);
            if (it != ctx.env.end()) return it->second;
            if (t.name == ctx.pol.free_var)
                return Value::string_of(Sort::R, ctx.setup.router_id);
            throw UnboundConstant(t.name);
        }
        case Term::Kind::Apply: {
            Value arg = eval_term(ctx, t.args[0]);
            if (t.name == "manufacturer")
                return Value::manufacturer(ctx.setup.manufacturer);
            if (t.name == "issuer") {
                // issuer of a tag, looked up among the setup's components;
                // unknown tags map to a value distinct from every constant
                const SoftwareComponent* c = find_component(ctx.setup, arg.str);
                return Value::string_of(Sort::I,
                                        c ? c->issuer : "\x01no-issuer:" + arg.str);
            }
            const SoftwareComponent* c =
                arg.comp ? arg.comp : find_component(ctx.setup, arg.str);
            if (!c) {
                // component id not present in this setup: fresh attribute values
                if (t.name == "tag") return Value::string_of(Sort::T, arg.str);
                return Value::string_of(t.name == "name" ? Sort::N : Sort::V,
                                        "\x01unknown:" + arg.str);
            }
            if (t.name == "tag") return Value::string_of(Sort::T, c->tag);
            if (t.name == "name") return Value::string_of(Sort::N, c->name);
            if (t.name == "version") return Value::version_of(c->version);
            throw std::logic_error("unknown function symbol " + t.name);
        }
    }
    throw std::logic_error("unreachable");
}

// Quantifier universes: components range over the setup's software stack;
// the value sorts range over the policy's constants plus the setup's values.
std::vector<Value> universe(const EvalCtx& ctx, Sort sort) {
    std::vector<Value> out;
    auto add_unique = [&](const Value& v) {
        for (const auto& u : out)
            if (value_equal(u, v)) return;
        out.push_back(v);
    };
    if (sort == Sort::C) {
        for (const auto& c : ctx.setup.software) out.push_back(Value::component(&c));
        return out;
    }
    if (sort == Sort::R) {
        out.push_back(Value::string_of(Sort::R, ctx.setup.router_id));
        return out;
    }
    for (const auto& [name, c] : ctx.pol.constants) {
        if (c.sort != sort) continue;
        if (sort == Sort::M)
            add_unique(Value::manufacturer(c.num));
        else if (sort == Sort::V)
            add_unique(Value::version_of({c.str, "multipartnumeric"}));
        else
            add_unique(Value::string_of(sort, c.str));
    }
    if (sort == Sort::M) add_unique(Value::manufacturer(ctx.setup.manufacturer));
    for (const auto& c : ctx.setup.software) {
        if (sort == Sort::T) add_unique(Value::string_of(Sort::T, c.tag));
        if (sort == Sort::I) add_unique(Value::string_of(Sort::I, c.issuer));
        if (sort == Sort::N) add_unique(Value::string_of(Sort::N, c.name));
        if (sort == Sort::V) add_unique(Value::version_of(c.version));
    }
    return out;
}

bool eval_formula(EvalCtx& ctx, const Formula& f) {
    switch (f.kind) {
        case Formula::Kind::Eq:
            return value_equal(eval_term(ctx, f.lhs), eval_term(ctx, f.rhs));
        case Formula::Kind::Cmp: {
            Value a = eval_term(ctx, f.lhs);
            Value b = eval_term(ctx, f.rhs);
            Ordering ord = compare_versions(a.str, b.str, a.scheme);
            switch (f.op) {
                case CmpOp::Lt: return ord == Ordering::Less;
                case CmpOp::Le: return ord != Ordering::Greater;
                case CmpOp::Ge: return ord != Ordering::Less;
                case CmpOp::Gt: return ord == Ordering::Greater;
            }
            return false;
        }
        case Formula::Kind::Software: {
            Value c = eval_term(ctx, f.rhs);
            return find_component(ctx.setup, c.str) != nullptr;
        }
        case Formula::Kind::OnPath:
            throw std::logic_error("onPath cannot appear in a router policy");
        case Formula::Kind::Not:
            return !eval_formula(ctx, *f.a);
        case Formula::Kind::And:
            return eval_formula(ctx, *f.a) && eval_formula(ctx, *f.b);
        case Formula::Kind::Or:
            return eval_formula(ctx, *f.a) || eval_formula(ctx, *f.b);
        case Formula::Kind::Implies:
            return !eval_formula(ctx, *f.a) || eval_formula(ctx, *f.b);
        case Formula::Kind::Forall:
        case Formula::Kind::Exists: {
            bool universal = f.kind == Formula::Kind::Forall;
            for (const Value& v : universe(ctx, f.var_sort)) {
                ctx.env[f.var] = v;
                bool holds = eval_formula(ctx, *f.a);
                ctx.env.erase(f.var);
                if (universal && !holds) return false;
                if (!universal && holds) return true;
            }
            return universal;
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace

bool eval_router_policy(const Policy& pol, const RouterSetup& r) {
    EvalCtx ctx{pol, r, {}};
    return eval_formula(ctx, *pol.body);
}

PathEvalResult eval_path_policy(const Policy& pol, const PathModel& p) {
    PathEvalResult res;
    for (const auto& r : p.routers) {
        if (!eval_router_policy(pol, r)) {
            res.satisfied = false;
            res.violating_routers.push_back(r.router_id);
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// JSON encoding of router setups as SWID-style records
// ---------------------------------------------------------------------------

std::string encode_router_setup(const RouterSetup& r) {
    if (r.manufacturer == 0)
        throw std::invalid_argument("manufacturer PEN must be positive");
    nlohmann::json j;
    j["routerId"] = r.router_id;
    j["manufacturer"] = r.manufacturer;
    j["software"] = nlohmann::json::array();
    for (const auto& c : r.software) {
        j["software"].push_back({{"tagId", c.tag},
                                 {"tagIssuer", c.issuer},
                                 {"name", c.name},
                                 {"version", c.version.text},
                                 {"versionScheme", c.version.scheme}});
    }
    return j.dump();
}

RouterSetup decode_router_setup(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    RouterSetup r;
    r.router_id = j.value("routerId", "");
    r.manufacturer = j.at("manufacturer").get<uint32_t>();
    if (r.manufacturer == 0)
        throw std::invalid_argument("manufacturer PEN must be positive");
    for (const auto& s : j.value("software", nlohmann::json::array())) {
        SoftwareComponent c;
        if (!s.contains("tagId"))
            throw std::invalid_argument("software record missing tagId");
        c.tag = s.at("tagId").get<std::string>();
        c.issuer = s.value("tagIssuer", "");
        c.name = s.value("name", "");
        c.version.text = s.value("version", "1.0.0");
        c.version.scheme = s.value("versionScheme", "multipartnumeric");
        r.software.push_back(std::move(c));
    }
    return r;
}

}  // namespace fabrid::policy
