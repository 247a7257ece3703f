#include <cctype>
#include <optional>

#include "fabrid/policy.hpp"

namespace fabrid::policy {

std::string sort_name(Sort s) {
    switch (s) {
        case Sort::M: return "M";
        case Sort::C: return "C";
        case Sort::T: return "T";
        case Sort::I: return "I";
        case Sort::N: return "N";
        case Sort::V: return "V";
        case Sort::R: return "R";
        case Sort::P: return "P";
    }
    return "?";
}

std::optional<Sort> sort_from_name(const std::string& name) {
    if (name.size() != 1) return std::nullopt;
    switch (name[0]) {
        case 'M': return Sort::M;
        case 'C': return Sort::C;
        case 'T': return Sort::T;
        case 'I': return Sort::I;
        case 'N': return Sort::N;
        case 'V': return Sort::V;
        case 'R': return Sort::R;
        case 'P': return Sort::P;
    }
    return std::nullopt;
}

bool Formula::equals(const Formula& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
        case Kind::Eq:
        case Kind::Software:
        case Kind::OnPath:
            return lhs == o.lhs && rhs == o.rhs;
        case Kind::Cmp:
            return op == o.op && lhs == o.lhs && rhs == o.rhs;
        case Kind::Not:
            return a->equals(*o.a);
        case Kind::And:
        case Kind::Or:
        case Kind::Implies:
            return a->equals(*o.a) && b->equals(*o.b);
        case Kind::Forall:
        case Kind::Exists:
            return var == o.var && var_sort == o.var_sort && a->equals(*o.a);
    }
    return false;
}

namespace {

struct Token {
    enum class Kind { Ident, Int, Str, Sym, End };
    Kind kind = Kind::End;
    std::string text;
    uint64_t num = 0;
    size_t pos = 0;
};

class Lexer {
  public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }
    Token next() {
        Token t = tok_;
        advance();
        return t;
    }

  private:
    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
        tok_ = Token{};
        tok_.pos = pos_;
        if (pos_ >= src_.size()) return;
        char c = src_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                    src_[pos_] == '_'))
                ++pos_;
            tok_.kind = Token::Kind::Ident;
            tok_.text = src_.substr(start, pos_ - start);
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t start = pos_;
            while (pos_ < src_.size() &&
                   std::isdigit(static_cast<unsigned char>(src_[pos_])))
                ++pos_;
            tok_.kind = Token::Kind::Int;
            tok_.text = src_.substr(start, pos_ - start);
            tok_.num = std::stoull(tok_.text);
            return;
        }
        if (c == '"') {
            ++pos_;
            size_t start = pos_;
            while (pos_ < src_.size() && src_[pos_] != '"') ++pos_;
            if (pos_ >= src_.size()) throw SyntaxError(start, "unterminated string");
            tok_.kind = Token::Kind::Str;
            tok_.text = src_.substr(start, pos_ - start);
            ++pos_;
            return;
        }
        // multi-char symbols first
        for (const char* sym : {"->", "<=", ">="}) {
            if (src_.compare(pos_, 2, sym) == 0) {
                tok_.kind = Token::Kind::Sym;
                tok_.text = sym;
                pos_ += 2;
                return;
            }
        }
        static const std::string singles = "()=<>,:.!&|";
        if (singles.find(c) != std::string::npos) {
            tok_.kind = Token::Kind::Sym;
            tok_.text = std::string(1, c);
            ++pos_;
            return;
        }
        throw SyntaxError(pos_, std::string("unexpected character '") + c + "'");
    }

    const std::string& src_;
    size_t pos_ = 0;
    Token tok_;
};

struct FnSig {
    Sort arg;
    Sort result;
};

std::optional<FnSig> function_signature(const std::string& name) {
    if (name == "tag") return FnSig{Sort::C, Sort::T};
    if (name == "issuer") return FnSig{Sort::T, Sort::I};
    if (name == "name") return FnSig{Sort::C, Sort::N};
    if (name == "version") return FnSig{Sort::C, Sort::V};
    if (name == "manufacturer" || name == "manu") return FnSig{Sort::R, Sort::M};
    return std::nullopt;
}

class Parser {
  public:
    explicit Parser(const std::string& src) : lex_(src) {}

    Policy parse() {
        Policy pol;
        while (lex_.peek().kind == Token::Kind::Ident && lex_.peek().text == "const")
            parse_const(pol);
        constants_ = &pol.constants;
        pol.body = parse_formula();
        if (lex_.peek().kind != Token::Kind::End)
            throw SyntaxError(lex_.peek().pos, "trailing input after formula");

        // exactly one free variable, of sort R
        if (free_vars_.empty())
            throw SortError("policy has no free router variable");
        if (free_vars_.size() > 1)
            throw SortError("policy has more than one free variable");
        auto& [fname, fsort] = *free_vars_.begin();
        if (!fsort) throw SortError("cannot infer the sort of '" + fname + "'");
        if (*fsort != Sort::R) throw SortError(fname, Sort::R, **&fsort);
        pol.free_var = fname;
        check_guards(*pol.body);
        return pol;
    }

  private:
    void parse_const(Policy& pol) {
        lex_.next();  // const
        Token name = expect_ident("constant name");
        expect_sym(":");
        Token sname = expect_ident("sort name");
        auto sort = sort_from_name(sname.text);
        if (!sort) throw SyntaxError(sname.pos, "unknown sort '" + sname.text + "'");
        expect_sym("=");
        ConstValue v;
        v.sort = *sort;
        Token val = lex_.next();
        if (*sort == Sort::M) {
            if (val.kind != Token::Kind::Int)
                throw SyntaxError(val.pos, "manufacturer constant must be an integer");
            if (val.num == 0 || val.num > 0xffffffffULL)
                throw SyntaxError(val.pos, "PEN must be a positive 32-bit integer");
            v.num = static_cast<uint32_t>(val.num);
        } else {
            if (val.kind != Token::Kind::Str)
                throw SyntaxError(val.pos, "constant of sort " + sort_name(*sort) +
                                               " must be a quoted string");
            v.str = val.text;
        }
        if (!pol.constants.emplace(name.text, v).second)
            throw SyntaxError(name.pos, "duplicate constant '" + name.text + "'");
    }

    FormulaPtr parse_formula() {  // implication, right-assoc
        FormulaPtr lhs = parse_disjunction();
        if (accept_sym("->")) {
            auto f = std::make_shared<Formula>();
            f->kind = Formula::Kind::Implies;
            f->a = lhs;
            f->b = parse_formula();
            return f;
        }
        return lhs;
    }

    FormulaPtr parse_disjunction() {
        FormulaPtr lhs = parse_conjunction();
        while (accept_sym("|") || accept_kw("or")) {
            auto f = std::make_shared<Formula>();
            f->kind = Formula::Kind::Or;
            f->a = lhs;
            f->b = parse_conjunction();
            lhs = f;
        }
        return lhs;
    }

    FormulaPtr parse_conjunction() {
        FormulaPtr lhs = parse_unary();
        while (accept_sym("&") || accept_kw("and")) {
            auto f = std::make_shared<Formula>();
            f->kind = Formula::Kind::And;
            f->a = lhs;
            f->b = parse_unary();
            lhs = f;
        }
        return lhs;
    }

    FormulaPtr parse_unary() {
        if (accept_sym("!") || accept_kw("not")) {
            auto f = std::make_shared<Formula>();
            f->kind = Formula::Kind::Not;
            f->a = parse_unary();
            return f;
        }
        if (lex_.peek().kind == Token::Kind::Ident &&
            (lex_.peek().text == "forall" || lex_.peek().text == "exists")) {
            bool universal = lex_.next().text == "forall";
            Token name = expect_ident("quantified variable");
            expect_sym(":");
            Token sname = expect_ident("sort name");
            auto sort = sort_from_name(sname.text);
            if (!sort) throw SyntaxError(sname.pos, "unknown sort '" + sname.text + "'");
            if (*sort == Sort::P)
                throw SortError("quantification over paths is not allowed in router policies");
            expect_sym(".");
            bound_.push_back({name.text, *sort});
            auto f = std::make_shared<Formula>();
            f->kind = universal ? Formula::Kind::Forall : Formula::Kind::Exists;
            f->var = name.text;
            f->var_sort = *sort;
            f->a = parse_formula();
            bound_.pop_back();
            return f;
        }
        if (lex_.peek().kind == Token::Kind::Sym && lex_.peek().text == "(") {
            // lookahead-free approach: a '(' here always opens a formula,
            // since atoms never start with '('
            lex_.next();
            FormulaPtr f = parse_formula();
            expect_sym(")");
            return f;
        }
        return parse_atom();
    }

    FormulaPtr parse_atom() {
        Token head = lex_.peek();
        if (head.kind == Token::Kind::Ident &&
            (head.text == "software" || head.text == "onPath")) {
            if (head.text == "onPath")
                throw SortError("onPath atoms are not allowed in router policies");
            lex_.next();
            expect_sym("(");
            Term r = parse_term(Sort::R);
            expect_sym(",");
            Term c = parse_term(Sort::C);
            expect_sym(")");
            auto f = std::make_shared<Formula>();
            f->kind = Formula::Kind::Software;
            f->lhs = r;
            f->rhs = c;
            return f;
        }
        Term lhs = parse_term(std::nullopt);
        Token op = lex_.next();
        if (op.kind != Token::Kind::Sym ||
            (op.text != "=" && op.text != "<" && op.text != "<=" && op.text != ">=" &&
             op.text != ">"))
            throw SyntaxError(op.pos, "expected comparison operator");
        auto f = std::make_shared<Formula>();
        if (op.text == "=") {
            f->kind = Formula::Kind::Eq;
            std::optional<Sort> demand = term_sort(lhs);
            Term rhs = parse_term(demand);
            if (!demand) {
                // right side determined the sort; re-resolve the left side
                auto rsort = term_sort(rhs);
                if (!rsort)
                    throw SortError("cannot infer the sort of '" + lhs.name + "'");
                resolve_ident(lhs, *rsort);
            }
            f->lhs = lhs;
            f->rhs = rhs;
        } else {
            f->kind = Formula::Kind::Cmp;
            f->op = op.text == "<"    ? CmpOp::Lt
                    : op.text == "<=" ? CmpOp::Le
                    : op.text == ">=" ? CmpOp::Ge
                                      : CmpOp::Gt;
            if (auto s = term_sort(lhs); s && *s != Sort::V)
                throw SortError(lhs.name, Sort::V, *s);
            resolve_ident(lhs, Sort::V);
            f->lhs = lhs;
            f->rhs = parse_term(Sort::V);
        }
        return f;
    }

    // Parses a term; `demand` is the sort required by context, if known.
    Term parse_term(std::optional<Sort> demand) {
        Token head = expect_ident("term");
        if (auto sig = function_signature(head.text)) {
            if (demand && sig->result != *demand)
                throw SortError(head.text, *demand, sig->result);
            expect_sym("(");
            Term arg = parse_term(sig->arg);
            expect_sym(")");
            Term t;
            t.kind = Term::Kind::Apply;
            t.sort = sig->result;
            t.name = head.text == "manu" ? "manufacturer" : head.text;
            t.args.push_back(std::move(arg));
            return t;
        }
        // identifier: bound variable, declared constant, or free variable
        Term t;
        t.name = head.text;
        for (auto it = bound_.rbegin(); it != bound_.rend(); ++it) {
            if (it->first == head.text) {
                if (demand && it->second != *demand)
                    throw SortError(head.text, *demand, it->second);
                t.kind = Term::Kind::Var;
                t.sort = it->second;
                return t;
            }
        }
        if (auto it = constants_->find(head.text); it != constants_->end()) {
            if (demand && it->second.sort != *demand)
                throw SortError(head.text, *demand, it->second.sort);
            t.kind = Term::Kind::Const;
            t.sort = it->second.sort;
            return t;
        }
        t.kind = Term::Kind::Var;
        auto [it, fresh] = free_vars_.try_emplace(head.text, demand);
        if (!fresh && demand) {
            if (it->second && *it->second != *demand)
                throw SortError(head.text, *demand, *it->second);
            it->second = demand;
        }
        t.sort = demand.value_or(Sort::R);
        return t;
    }

    std::optional<Sort> term_sort(const Term& t) {
        if (t.kind != Term::Kind::Var) return t.sort;
        for (auto it = bound_.rbegin(); it != bound_.rend(); ++it)
            if (it->first == t.name) return it->second;
        auto it = free_vars_.find(t.name);
        if (it != free_vars_.end()) return it->second;
        return std::nullopt;
    }

    void resolve_ident(Term& t, Sort sort) {
        if (t.kind != Term::Kind::Var) return;
        for (auto& [n, s] : bound_)
            if (n == t.name) return;  // bound vars already carry their sort
        auto it = free_vars_.find(t.name);
        if (it != free_vars_.end()) {
            if (it->second && *it->second != sort)
                throw SortError(t.name, sort, *it->second);
            it->second = sort;
        }
        t.sort = sort;
    }

    // C-quantifiers must be guarded: exists by a software(_, c) conjunct,
    // forall by a software(_, c) conjunct in the antecedent of an implication.
    void check_guards(const Formula& f) {
        switch (f.kind) {
            case Formula::Kind::Forall:
            case Formula::Kind::Exists: {
                if (f.var_sort == Sort::C) {
                    bool ok = false;
                    if (f.kind == Formula::Kind::Exists) {
                        ok = conjunction_has_guard(*f.a, f.var);
                    } else if (f.a->kind == Formula::Kind::Implies) {
                        ok = conjunction_has_guard(*f.a->a, f.var);
                    }
                    if (!ok)
                        throw SortError("quantifier over '" + f.var +
                                        "' of sort C is not guarded by software(_, " +
                                        f.var + ")");
                }
                check_guards(*f.a);
                return;
            }
            case Formula::Kind::Not:
                check_guards(*f.a);
                return;
            case Formula::Kind::And:
            case Formula::Kind::Or:
            case Formula::Kind::Implies:
                check_guards(*f.a);
                check_guards(*f.b);
                return;
            default:
                return;
        }
    }

    static bool conjunction_has_guard(const Formula& f, const std::string& var) {
        if (f.kind == Formula::Kind::And)
            return conjunction_has_guard(*f.a, var) || conjunction_has_guard(*f.b, var);
        return f.kind == Formula::Kind::Software && f.rhs.kind == Term::Kind::Var &&
               f.rhs.name == var;
    }

    Token expect_ident(const std::string& what) {
        Token t = lex_.next();
        if (t.kind != Token::Kind::Ident)
            throw SyntaxError(t.pos, "expected " + what);
        return t;
    }

    void expect_sym(const std::string& sym) {
        Token t = lex_.next();
        if (t.kind != Token::Kind::Sym || t.text != sym)
            throw SyntaxError(t.pos, "expected '" + sym + "'");
    }

    bool accept_sym(const std::string& sym) {
        if (lex_.peek().kind == Token::Kind::Sym && lex_.peek().text == sym) {
            lex_.next();
            return true;
        }
        return false;
    }

    bool accept_kw(const std::string& kw) {
        if (lex_.peek().kind == Token::Kind::Ident && lex_.peek().text == kw) {
            lex_.next();
            return true;
        }
        return false;
    }

    Lexer lex_;
    std::vector<std::pair<std::string, Sort>> bound_;
    std::map<std::string, std::optional<Sort>> free_vars_;
    const std::map<std::string, ConstValue>* constants_ = nullptr;
};

void print_term(std::string& out, const Term& t) {
    out += t.name;
    if (t.kind == Term::Kind::Apply) {
        out += '(';
        print_term(out, t.args[0]);
        out += ')';
    }
}

void print_formula(std::string& out, const Formula& f) {
    switch (f.kind) {
        case Formula::Kind::Eq:
            print_term(out, f.lhs);
            out += " = ";
            print_term(out, f.rhs);
            return;
        case Formula::Kind::Cmp:
            print_term(out, f.lhs);
            out += f.op == CmpOp::Lt    ? " < "
                   : f.op == CmpOp::Le  ? " <= "
                   : f.op == CmpOp::Ge  ? " >= "
                                        : " > ";
            print_term(out, f.rhs);
            return;
        case Formula::Kind::Software:
            out += "software(";
            print_term(out, f.lhs);
            out += ", ";
            print_term(out, f.rhs);
            out += ')';
            return;
        case Formula::Kind::OnPath:
            out += "onPath(";
            print_term(out, f.lhs);
            out += ", ";
            print_term(out, f.rhs);
            out += ')';
            return;
        case Formula::Kind::Not:
            out += "!(";
            print_formula(out, *f.a);
            out += ')';
            return;
        case Formula::Kind::And:
        case Formula::Kind::Or:
        case Formula::Kind::Implies: {
            const char* op = f.kind == Formula::Kind::And   ? " & "
                             : f.kind == Formula::Kind::Or  ? " | "
                                                            : " -> ";
            out += '(';
            print_formula(out, *f.a);
            out += op;
            print_formula(out, *f.b);
            out += ')';
            return;
        }
        case Formula::Kind::Forall:
        case Formula::Kind::Exists:
            out += f.kind == Formula::Kind::Forall ? "forall " : "exists ";
            out += f.var;
            out += ": ";
            out += sort_name(f.var_sort);
            out += ". (";
            print_formula(out, *f.a);
            out += ')';
            return;
    }
}

}  // namespace

Policy parse_policy(const std::string& text) {
    return Parser(text).parse();
}

std::string pretty_print(const Policy& pol) {
    std::string out;
    for (const auto& [name, v] : pol.constants) {
        out += "const " + name + ": " + sort_name(v.sort) + " = ";
        if (v.sort == Sort::M)
            out += std::to_string(v.num);
        else
            out += '"' + v.str + '"';
        out += '\n';
    }
    print_formula(out, *pol.body);
    out += '\n';
    return out;
}

}  // namespace fabrid::policy
