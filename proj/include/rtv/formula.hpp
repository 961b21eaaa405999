#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "rtv/schema.hpp"
#include "rtv/sexpr.hpp"

namespace rtv {

enum class Op {
    Forall,
    Exists,
    And,
    Or,
    Not,
    Implies,
    Eq,
    Ite,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Apply,
    Var,
    LitBool,
    LitInt,
    LitReal,
    LitEnum,
};

// Exact decimal: value = units / 10^frac, canonical (no trailing zeros in
// the fractional part).
struct Decimal {
    long long units = 0;
    int frac = 0;

    static Decimal make(long long units, int frac) {
        while (frac > 0 && units % 10 == 0) {
            units /= 10;
            --frac;
        }
        return Decimal{units, frac};
    }

    bool operator==(const Decimal&) const = default;

    std::string to_smt() const {
        std::string digits = std::to_string(units < 0 ? -units : units);
        std::string sign = units < 0 ? "-" : "";
        if (frac == 0) return sign + digits + ".0";
        while (static_cast<int>(digits.size()) <= frac) digits.insert(0, "0");
        digits.insert(digits.size() - static_cast<size_t>(frac), ".");
        return sign + digits;
    }
};

struct Binding {
    std::string name;
    std::string sort;

    bool operator==(const Binding&) const = default;
};

struct FormulaNode;
using NodePtr = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
    Op op = Op::LitBool;
    std::vector<Binding> bindings;  // Forall / Exists
    std::string name;               // Apply: signature; Var: variable; LitEnum: constructor
    bool bool_value = false;        // LitBool
    long long int_value = 0;        // LitInt
    Decimal real_value;             // LitReal
    std::string sort;               // result sort name
    std::vector<NodePtr> children;
};

namespace detail {

inline bool node_equal(const FormulaNode& a, const FormulaNode& b) {
    if (a.op != b.op || a.name != b.name || a.bindings != b.bindings ||
        a.children.size() != b.children.size()) {
        return false;
    }
    switch (a.op) {
        case Op::LitBool:
            if (a.bool_value != b.bool_value) return false;
            break;
        case Op::LitInt:
            if (a.int_value != b.int_value) return false;
            break;
        case Op::LitReal:
            if (!(a.real_value == b.real_value)) return false;
            break;
        default:
            break;
    }
    for (size_t i = 0; i < a.children.size(); ++i) {
        if (!node_equal(*a.children[i], *b.children[i])) return false;
    }
    return true;
}

}  // namespace detail

// A closed, well-sorted formula over a Schema. Immutable; copies share the
// underlying tree.
class Formula {
  public:
    Formula() = default;
    explicit Formula(NodePtr root) : root_(std::move(root)) {}

    static Formula parse(const std::string& text, const Schema& schema);

    bool valid() const { return root_ != nullptr; }
    const FormulaNode& root() const { return *root_; }
    NodePtr root_ptr() const { return root_; }

    std::string render() const { return render_node(*root_); }

    std::set<std::string> free_symbols() const {
        std::set<std::string> out;
        collect_symbols(*root_, out);
        return out;
    }

    bool structurally_equal(const Formula& other) const {
        if (!root_ || !other.root_) return root_ == other.root_;
        return detail::node_equal(*root_, *other.root_);
    }

    static std::string render_node(const FormulaNode& n) {
        switch (n.op) {
            case Op::LitBool:
                return n.bool_value ? "true" : "false";
            case Op::LitInt:
                return std::to_string(n.int_value);
            case Op::LitReal:
                return n.real_value.to_smt();
            case Op::LitEnum:
            case Op::Var:
                return n.name;
            case Op::Apply: {
                if (n.children.empty()) return n.name;
                std::string out = "(" + n.name;
                for (const NodePtr& c : n.children) out += " " + render_node(*c);
                return out + ")";
            }
            case Op::Forall:
            case Op::Exists: {
                std::string out = n.op == Op::Forall ? "(forall (" : "(exists (";
                for (size_t i = 0; i < n.bindings.size(); ++i) {
                    if (i > 0) out += " ";
                    out += "(" + n.bindings[i].name + " " + n.bindings[i].sort + ")";
                }
                return out + ") " + render_node(*n.children[0]) + ")";
            }
            default: {
                std::string out = "(" + std::string(op_token(n.op));
                for (const NodePtr& c : n.children) out += " " + render_node(*c);
                return out + ")";
            }
        }
    }

    static std::string_view op_token(Op op) {
        switch (op) {
            case Op::And: return "and";
            case Op::Or: return "or";
            case Op::Not: return "not";
            case Op::Implies: return "=>";
            case Op::Eq: return "=";
            case Op::Ite: return "ite";
            case Op::Lt: return "<";
            case Op::Le: return "<=";
            case Op::Gt: return ">";
            case Op::Ge: return ">=";
            case Op::Add: return "+";
            case Op::Sub: return "-";
            default: return "?";
        }
    }

  private:
    static void collect_symbols(const FormulaNode& n, std::set<std::string>& out) {
        if (n.op == Op::Apply) out.insert(n.name);
        for (const NodePtr& c : n.children) collect_symbols(*c, out);
    }

    NodePtr root_;
};

namespace detail {

class FormulaBuilder {
  public:
    explicit FormulaBuilder(const Schema& schema) : schema_(schema) {}

    NodePtr build_root(const SExpr& e) {
        NodePtr root = build(e);
        if (root->sort != "Bool") {
            throw ParseError("formula must have sort Bool, got " + root->sort, e.pos);
        }
        return root;
    }

  private:
    NodePtr build(const SExpr& e) {
        if (e.is_atom()) return build_atom(e);
        if (e.items.empty()) {
            throw ParseError("empty application", e.pos);
        }
        if (!e.items[0].is_atom()) {
            throw ParseError("operator must be a symbol", e.items[0].pos);
        }
        const std::string& head = e.items[0].atom;
        if (head == "forall" || head == "exists") return build_quantifier(e);
        if (head == "let") {
            throw ParseError("let-bindings are not supported in this subset", e.pos);
        }
        if (head == "and" || head == "or") return build_nary_bool(e, head);
        if (head == "not") return build_not(e);
        if (head == "=>") return build_implies(e);
        if (head == "=") return build_eq(e);
        if (head == "ite") return build_ite(e);
        if (head == "<" || head == "<=" || head == ">" || head == ">=") {
            return build_compare(e, head);
        }
        if (head == "+" || head == "-") return build_arith(e, head);
        return build_application(e);
    }

    NodePtr build_atom(const SExpr& e) {
        const std::string& a = e.atom;
        if (a == "true" || a == "false") {
            return leaf(Op::LitBool, "Bool", [&](FormulaNode& n) {
                n.bool_value = (a == "true");
            });
        }
        if (is_numeral(a)) {
            return leaf(Op::LitInt, "Int", [&](FormulaNode& n) {
                n.int_value = to_ll(a, e.pos);
            });
        }
        if (is_decimal(a)) {
            return leaf(Op::LitReal, "Real", [&](FormulaNode& n) {
                n.real_value = parse_decimal(a, e.pos);
            });
        }
        // Innermost binding wins (shadowing).
        for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
            if (it->name == a) {
                return leaf(Op::Var, it->sort, [&](FormulaNode& n) { n.name = a; });
            }
        }
        if (const Sort* s = schema_.find_constructor_sort(a)) {
            return leaf(Op::LitEnum, s->name, [&](FormulaNode& n) { n.name = a; });
        }
        if (const Signature* sig = schema_.find_signature(a)) {
            if (!sig->arg_sorts.empty()) {
                throw ParseError("'" + a + "' expects " +
                                     std::to_string(sig->arg_sorts.size()) + " arguments",
                                 e.pos);
            }
            return leaf(Op::Apply, sig->result_sort, [&](FormulaNode& n) { n.name = a; });
        }
        if (is_identifier(a)) {
            throw ParseError("unbound variable or unknown symbol '" + a + "'", e.pos);
        }
        throw ParseError("unrecognized token '" + a + "'", e.pos);
    }

    NodePtr build_quantifier(const SExpr& e) {
        if (e.items.size() != 3 || !e.items[1].is_list()) {
            throw ParseError("quantifier expects (forall ((v Sort) ...) body)", e.pos);
        }
        if (e.items[1].items.empty()) {
            throw ParseError("quantifier needs at least one bound variable", e.items[1].pos);
        }
        FormulaNode node;
        node.op = e.items[0].atom == "forall" ? Op::Forall : Op::Exists;
        node.sort = "Bool";
        std::set<std::string> seen;
        for (const SExpr& b : e.items[1].items) {
            if (!b.is_list() || b.items.size() != 2 || !b.items[0].is_atom() ||
                !b.items[1].is_atom()) {
                throw ParseError("bound variable must be (name Sort)", b.pos);
            }
            const std::string& vname = b.items[0].atom;
            const std::string& vsort = b.items[1].atom;
            if (!is_identifier(vname) || is_reserved_word(vname)) {
                throw ParseError("invalid variable name '" + vname + "'", b.items[0].pos);
            }
            if (!seen.insert(vname).second) {
                throw ParseError("duplicate bound variable '" + vname +
                                     "' in one binding list",
                                 b.items[0].pos);
            }
            if (!schema_.find_sort(vsort)) {
                throw ParseError("unknown sort '" + vsort + "'", b.items[1].pos);
            }
            node.bindings.push_back(Binding{vname, vsort});
        }
        for (const Binding& b : node.bindings) scope_.push_back(b);
        node.children.push_back(build(e.items[2]));
        scope_.resize(scope_.size() - node.bindings.size());
        if (node.children[0]->sort != "Bool") {
            throw ParseError("quantifier body must have sort Bool, got " +
                                 node.children[0]->sort,
                             e.items[2].pos);
        }
        return std::make_shared<const FormulaNode>(std::move(node));
    }

    NodePtr build_nary_bool(const SExpr& e, const std::string& head) {
        require_args(e, 2, -1, head);
        FormulaNode node;
        node.op = head == "and" ? Op::And : Op::Or;
        node.sort = "Bool";
        for (size_t i = 1; i < e.items.size(); ++i) {
            node.children.push_back(require_bool(build(e.items[i]), e.items[i].pos, head));
        }
        return std::make_shared<const FormulaNode>(std::move(node));
    }

    NodePtr build_not(const SExpr& e) {
        require_args(e, 1, 1, "not");
        FormulaNode node;
        node.op = Op::Not;
        node.sort = "Bool";
        node.children.push_back(require_bool(build(e.items[1]), e.items[1].pos, "not"));
        return std::make_shared<const FormulaNode>(std::move(node));
    }

    NodePtr build_implies(const SExpr& e) {
        require_args(e, 2, -1, "=>");
        FormulaNode node;
        node.op = Op::Implies;
        node.sort = "Bool";
        for (size_t i = 1; i < e.items.size(); ++i) {
            node.children.push_back(require_bool(build(e.items[i]), e.items[i].pos, "=>"));
        }
        return std::make_shared<const FormulaNode>(std::move(node));
    }

    NodePtr build_eq(const SExpr& e) {
        require_args(e, 2, 2, "=");
        FormulaNode node;
        node.op = Op::Eq;
        node.sort = "Bool";
        NodePtr lhs = build(e.items[1]);
        NodePtr rhs = build(e.items[2]);
        if (lhs->sort != rhs->sort) {
            throw ParseError("sort mismatch: '=' operands have sorts " + lhs->sort +
                                 " and " + rhs->sort,
                             e.pos);
        }
        node.children = {std::move(lhs), std::move(rhs)};
        return std::make_shared<const FormulaNode>(std::move(node));
    }

    NodePtr build_ite(const SExpr& e) {
        require_args(e, 3, 3, "ite");
        FormulaNode node;
        node.op = Op::Ite;
        node.sort = "Bool";
        node.children.push_back(require_bool(build(e.items[1]), e.items[1].pos, "ite"));
        node.children.push_back(require_bool(build(e.items[2]), e.items[2].pos, "ite"));
        node.children.push_back(require_bool(build(e.items[3]), e.items[3].pos, "ite"));
        return std::make_shared<const FormulaNode>(std::move(node));
    }

    NodePtr build_compare(const SExpr& e, const std::string& head) {
        require_args(e, 2, 2, head);
        FormulaNode node;
        node.op = head == "<"    ? Op::Lt
                  : head == "<=" ? Op::Le
                  : head == ">"  ? Op::Gt
                                 : Op::Ge;
        node.sort = "Bool";
        NodePtr lhs = build(e.items[1]);
        NodePtr rhs = build(e.items[2]);
        require_numeric(*lhs, e.items[1].pos, head);
        if (lhs->sort != rhs->sort) {
            throw ParseError("sort mismatch: '" + head + "' operands have sorts " +
                                 lhs->sort + " and " + rhs->sort,
                             e.pos);
        }
        node.children = {std::move(lhs), std::move(rhs)};
        return std::make_shared<const FormulaNode>(std::move(node));
    }

    NodePtr build_arith(const SExpr& e, const std::string& head) {
        int min_args = head == "-" ? 1 : 2;
        require_args(e, min_args, -1, head);
        FormulaNode node;
        node.op = head == "+" ? Op::Add : Op::Sub;
        for (size_t i = 1; i < e.items.size(); ++i) {
            NodePtr c = build(e.items[i]);
            require_numeric(*c, e.items[i].pos, head);
            if (i > 1 && c->sort != node.children[0]->sort) {
                throw ParseError("sort mismatch: '" + head + "' operands have sorts " +
                                     node.children[0]->sort + " and " + c->sort,
                                 e.items[i].pos);
            }
            node.children.push_back(std::move(c));
        }
        node.sort = node.children[0]->sort;
        return std::make_shared<const FormulaNode>(std::move(node));
    }

    NodePtr build_application(const SExpr& e) {
        const std::string& name = e.items[0].atom;
        const Signature* sig = schema_.find_signature(name);
        if (!sig) {
            throw ParseError("unknown symbol '" + name + "'", e.items[0].pos);
        }
        if (e.items.size() - 1 != sig->arg_sorts.size()) {
            throw ParseError("'" + name + "' expects " +
                                 std::to_string(sig->arg_sorts.size()) + " arguments, got " +
                                 std::to_string(e.items.size() - 1),
                             e.pos);
        }
        FormulaNode node;
        node.op = Op::Apply;
        node.name = name;
        node.sort = sig->result_sort;
        for (size_t i = 1; i < e.items.size(); ++i) {
            NodePtr arg = build(e.items[i]);
            if (arg->sort != sig->arg_sorts[i - 1]) {
                throw ParseError("sort mismatch: argument " + std::to_string(i) + " of '" +
                                     name + "' expects " + sig->arg_sorts[i - 1] + ", got " +
                                     arg->sort,
                                 e.items[i].pos);
            }
            node.children.push_back(std::move(arg));
        }
        return std::make_shared<const FormulaNode>(std::move(node));
    }

    template <typename F>
    NodePtr leaf(Op op, const std::string& sort, F&& fill) {
        FormulaNode node;
        node.op = op;
        node.sort = sort;
        fill(node);
        return std::make_shared<const FormulaNode>(std::move(node));
    }

    NodePtr require_bool(NodePtr n, SourcePos pos, const std::string& ctx) {
        if (n->sort != "Bool") {
            throw ParseError("sort mismatch: '" + ctx + "' expects Bool operands, got " +
                                 n->sort,
                             pos);
        }
        return n;
    }

    void require_numeric(const FormulaNode& n, SourcePos pos, const std::string& ctx) {
        if (n.sort != "Int" && n.sort != "Real") {
            throw ParseError("sort mismatch: '" + ctx +
                                 "' expects Int or Real operands, got " + n.sort,
                             pos);
        }
    }

    void require_args(const SExpr& e, int min_args, int max_args, const std::string& ctx) {
        int got = static_cast<int>(e.items.size()) - 1;
        if (got < min_args || (max_args >= 0 && got > max_args)) {
            throw ParseError("'" + ctx + "' expects " +
                                 (max_args == min_args
                                      ? std::to_string(min_args)
                                      : (max_args < 0 ? "at least " + std::to_string(min_args)
                                                      : std::to_string(min_args) + ".." +
                                            std::to_string(max_args))) +
                                 " arguments, got " + std::to_string(got),
                             e.pos);
        }
    }

    static bool is_numeral(const std::string& s) {
        if (s.empty()) return false;
        for (char c : s) {
            if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        }
        return true;
    }

    static bool is_decimal(const std::string& s) {
        size_t dot = s.find('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == s.size()) return false;
        return is_numeral(s.substr(0, dot)) && is_numeral(s.substr(dot + 1));
    }

    static Decimal parse_decimal(const std::string& s, SourcePos pos) {
        size_t dot = s.find('.');
        std::string digits = s.substr(0, dot) + s.substr(dot + 1);
        return Decimal::make(to_ll(digits, pos), static_cast<int>(s.size() - dot - 1));
    }

    static long long to_ll(const std::string& s, SourcePos pos) {
        try {
            return std::stoll(s);
        } catch (const std::exception&) {
            throw ParseError("numeric literal out of range: '" + s + "'", pos);
        }
    }

    const Schema& schema_;
    std::vector<Binding> scope_;
};

}  // namespace detail

inline Formula Formula::parse(const std::string& text, const Schema& schema) {
    SExpr e = read_one_sexpr(text);
    return Formula(detail::FormulaBuilder(schema).build_root(e));
}

}  // namespace rtv
