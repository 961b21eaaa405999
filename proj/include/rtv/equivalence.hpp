#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rtv/formula.hpp"
#include "rtv/schema.hpp"

namespace rtv {

enum class EquivStatus { Equivalent, NotEquivalent, Unknown };
enum class EquivBackend { ExternalSolver, Enumeration, None };

inline std::string to_string(EquivStatus s) {
    switch (s) {
        case EquivStatus::Equivalent: return "equivalent";
        case EquivStatus::NotEquivalent: return "not_equivalent";
        default: return "unknown";
    }
}

inline std::string to_string(EquivBackend b) {
    switch (b) {
        case EquivBackend::ExternalSolver: return "external-solver";
        case EquivBackend::Enumeration: return "enumeration";
        default: return "none";
    }
}

// A single evaluation value: Bool/Int use num with frac=0, Real is the
// decimal num/10^frac, enumerated and uninterpreted sorts store an index.
struct DomValue {
    long long num = 0;
    int frac = 0;

    bool operator==(const DomValue&) const = default;
};

namespace detail {

inline __int128 scaled(const DomValue& v, int target_frac) {
    __int128 x = v.num;
    for (int i = v.frac; i < target_frac; ++i) x *= 10;
    return x;
}

inline int compare_values(const DomValue& a, const DomValue& b) {
    int f = a.frac > b.frac ? a.frac : b.frac;
    __int128 x = scaled(a, f), y = scaled(b, f);
    return x < y ? -1 : (x > y ? 1 : 0);
}

inline DomValue add_values(const DomValue& a, const DomValue& b, int sign) {
    int f = a.frac > b.frac ? a.frac : b.frac;
    long long x = static_cast<long long>(scaled(a, f));
    long long y = static_cast<long long>(scaled(b, f));
    long long units = sign > 0 ? x + y : x - y;
    while (f > 0 && units % 10 == 0) {
        units /= 10;
        --f;
    }
    return DomValue{units, f};
}

}  // namespace detail

// A total assignment of tables to the free symbols of a formula pair over
// bounded domains. Uninterpreted sorts get domain_sizes elements; Int (and
// Real-valued results) range over int_window.
struct Interpretation {
    struct Table {
        std::vector<std::string> arg_sorts;
        std::string result_sort;
        std::vector<DomValue> values;  // row-major over the argument space
    };

    std::map<std::string, int> domain_sizes;  // uninterpreted sorts only
    long long int_lo = 0;
    long long int_hi = 1;
    std::map<std::string, Table> tables;

    std::string describe(const Schema& schema) const {
        std::string out;
        for (const auto& [name, table] : tables) {
            std::vector<long long> idx(table.arg_sorts.size(), 0);
            size_t rows = table.values.size();
            for (size_t row = 0; row < rows; ++row) {
                out += name;
                if (!idx.empty()) {
                    out += "(";
                    for (size_t i = 0; i < idx.size(); ++i) {
                        if (i > 0) out += ", ";
                        out += value_name(schema, table.arg_sorts[i], arg_value(schema, table.arg_sorts[i], idx[i]));
                    }
                    out += ")";
                }
                out += " = " + value_name(schema, table.result_sort, table.values[row]) + "\n";
                for (size_t i = 0; i < idx.size(); ++i) {
                    if (++idx[i] < domain_card(schema, table.arg_sorts[i])) break;
                    idx[i] = 0;
                }
            }
        }
        return out;
    }

    long long domain_card(const Schema& schema, const std::string& sort_name) const {
        const Sort* s = schema.find_sort(sort_name);
        switch (s->kind) {
            case SortKind::Bool: return 2;
            case SortKind::Int:
            case SortKind::Real: return int_hi - int_lo + 1;
            case SortKind::Enumerated: return static_cast<long long>(s->constructors.size());
            case SortKind::Uninterpreted: {
                auto it = domain_sizes.find(sort_name);
                return it == domain_sizes.end() ? 0 : it->second;
            }
        }
        return 0;
    }

    DomValue arg_value(const Schema& schema, const std::string& sort_name, long long idx) const {
        const Sort* s = schema.find_sort(sort_name);
        if (s->kind == SortKind::Int || s->kind == SortKind::Real) {
            return DomValue{int_lo + idx, 0};
        }
        return DomValue{idx, 0};
    }

    static std::string value_name(const Schema& schema, const std::string& sort_name,
                                  const DomValue& v) {
        const Sort* s = schema.find_sort(sort_name);
        switch (s->kind) {
            case SortKind::Bool: return v.num ? "true" : "false";
            case SortKind::Int: return std::to_string(v.num);
            case SortKind::Real: return Decimal{v.num, v.frac}.to_smt();
            case SortKind::Enumerated: return s->constructors[static_cast<size_t>(v.num)];
            case SortKind::Uninterpreted:
                return sort_name + "#" + std::to_string(v.num);
        }
        return "?";
    }
};

struct EnumerationBudget {
    int max_domain_size = 2;
    long long int_lo = 0;
    long long int_hi = 1;
    long long max_interpretations = 10'000'000;
};

struct EquivalenceVerdict {
    EquivStatus status = EquivStatus::Unknown;
    std::optional<Interpretation> counterexample;
    EquivBackend backend = EquivBackend::None;
    std::chrono::milliseconds elapsed{0};
    bool bounded = false;  // equivalence proved only over the finite bounds
    std::string note;
};

// ---------------------------------------------------------------------------
// Query construction: schema declarations + satisfiability of the negated
// equality, byte-deterministic for fixed inputs.
// ---------------------------------------------------------------------------

inline std::string build_equivalence_query(const Formula& phi, const Formula& psi,
                                           const Schema& schema) {
    for (const Formula* f : {&phi, &psi}) {
        for (const std::string& sym : f->free_symbols()) {
            if (!schema.find_signature(sym)) {
                throw SchemaError("formula references symbol outside schema: '" + sym + "'");
            }
        }
    }
    std::string out = schema.render_declarations();
    out += "(assert (not (= " + phi.render() + " " + psi.render() + ")))\n";
    out += "(check-sat)\n";
    return out;
}

// ---------------------------------------------------------------------------
// Finite-model enumeration
// ---------------------------------------------------------------------------

namespace detail {

struct EnumerationUnsupported {
    std::string reason;
};

// Evaluates formulas against the current table assignment; quantifiers
// range over the bounded domains.
class Evaluator {
  public:
    Evaluator(const Schema& schema, const Interpretation& interp)
        : schema_(schema), interp_(interp) {}

    bool eval_bool(const FormulaNode& n) { return eval(n).num != 0; }

    DomValue eval(const FormulaNode& n) {
        switch (n.op) {
            case Op::LitBool: return DomValue{n.bool_value ? 1 : 0, 0};
            case Op::LitInt: return DomValue{n.int_value, 0};
            case Op::LitReal: return DomValue{n.real_value.units, n.real_value.frac};
            case Op::LitEnum: {
                const Sort* s = schema_.find_constructor_sort(n.name);
                const auto& ctors = s->constructors;
                for (size_t i = 0; i < ctors.size(); ++i) {
                    if (ctors[i] == n.name) return DomValue{static_cast<long long>(i), 0};
                }
                throw EnumerationUnsupported{"unknown constructor " + n.name};
            }
            case Op::Var: {
                for (auto it = env_.rbegin(); it != env_.rend(); ++it) {
                    if (it->first == n.name) return it->second;
                }
                throw EnumerationUnsupported{"unbound variable " + n.name};
            }
            case Op::Not: return DomValue{eval(*n.children[0]).num ? 0ll : 1ll, 0};
            case Op::And: {
                for (const NodePtr& c : n.children) {
                    if (eval(*c).num == 0) return DomValue{0, 0};
                }
                return DomValue{1, 0};
            }
            case Op::Or: {
                for (const NodePtr& c : n.children) {
                    if (eval(*c).num != 0) return DomValue{1, 0};
                }
                return DomValue{0, 0};
            }
            case Op::Implies: {
                // Right-associative n-ary implication.
                for (size_t i = 0; i + 1 < n.children.size(); ++i) {
                    if (eval(*n.children[i]).num == 0) return DomValue{1, 0};
                }
                return eval(*n.children.back());
            }
            case Op::Eq: {
                DomValue a = eval(*n.children[0]);
                DomValue b = eval(*n.children[1]);
                return DomValue{compare_values(a, b) == 0 ? 1ll : 0ll, 0};
            }
            case Op::Ite:
                return eval(*n.children[0]).num != 0 ? eval(*n.children[1])
                                                     : eval(*n.children[2]);
            case Op::Lt:
            case Op::Le:
            case Op::Gt:
            case Op::Ge: {
                int cmp = compare_values(eval(*n.children[0]), eval(*n.children[1]));
                bool r = n.op == Op::Lt   ? cmp < 0
                         : n.op == Op::Le ? cmp <= 0
                         : n.op == Op::Gt ? cmp > 0
                                          : cmp >= 0;
                return DomValue{r ? 1ll : 0ll, 0};
            }
            case Op::Add: {
                DomValue acc = eval(*n.children[0]);
                for (size_t i = 1; i < n.children.size(); ++i) {
                    acc = add_values(acc, eval(*n.children[i]), +1);
                }
                return acc;
            }
            case Op::Sub: {
                if (n.children.size() == 1) {
                    return add_values(DomValue{0, 0}, eval(*n.children[0]), -1);
                }
                DomValue acc = eval(*n.children[0]);
                for (size_t i = 1; i < n.children.size(); ++i) {
                    acc = add_values(acc, eval(*n.children[i]), -1);
                }
                return acc;
            }
            case Op::Apply: return eval_apply(n);
            case Op::Forall:
            case Op::Exists: return eval_quantifier(n);
        }
        throw EnumerationUnsupported{"unhandled node"};
    }

  private:
    DomValue eval_apply(const FormulaNode& n) {
        auto it = interp_.tables.find(n.name);
        if (it == interp_.tables.end()) {
            throw EnumerationUnsupported{"no table for symbol " + n.name};
        }
        const Interpretation::Table& table = it->second;
        long long flat = 0;
        for (size_t i = 0; i < n.children.size(); ++i) {
            DomValue v = eval(*n.children[i]);
            long long card = interp_.domain_card(schema_, table.arg_sorts[i]);
            long long idx = value_index(table.arg_sorts[i], v);
            if (idx < 0 || idx >= card) {
                throw EnumerationUnsupported{"argument of " + n.name +
                                             " falls outside the enumeration window"};
            }
            flat = flat * card + idx;
        }
        return table.values[static_cast<size_t>(flat)];
    }

    long long value_index(const std::string& sort_name, const DomValue& v) const {
        const Sort* s = schema_.find_sort(sort_name);
        if (s->kind == SortKind::Int || s->kind == SortKind::Real) {
            if (v.frac != 0) return -1;
            return v.num - interp_.int_lo;
        }
        return v.num;
    }

    DomValue eval_quantifier(const FormulaNode& n) {
        return DomValue{quantify(n, 0) ? 1ll : 0ll, 0};
    }

    bool quantify(const FormulaNode& n, size_t binding_idx) {
        if (binding_idx == n.bindings.size()) {
            return eval(*n.children[0]).num != 0;
        }
        const Binding& b = n.bindings[binding_idx];
        const Sort* s = schema_.find_sort(b.sort);
        if (s->kind == SortKind::Real) {
            throw EnumerationUnsupported{"cannot enumerate quantification over Real"};
        }
        long long card = interp_.domain_card(schema_, b.sort);
        if (card <= 0) {
            throw EnumerationUnsupported{"no bounded domain for sort " + b.sort};
        }
        bool is_forall = n.op == Op::Forall;
        for (long long i = 0; i < card; ++i) {
            env_.emplace_back(b.name, interp_.arg_value(schema_, b.sort, i));
            bool sub = quantify(n, binding_idx + 1);
            env_.pop_back();
            if (is_forall && !sub) return false;
            if (!is_forall && sub) return true;
        }
        return is_forall;
    }

    const Schema& schema_;
    const Interpretation& interp_;
    std::vector<std::pair<std::string, DomValue>> env_;
};

}  // namespace detail

// Evaluates a closed Bool formula under an interpretation. Throws Error if
// the interpretation does not cover the formula.
inline bool evaluate_under(const Formula& f, const Schema& schema,
                           const Interpretation& interp) {
    try {
        return detail::Evaluator(schema, interp).eval_bool(f.root());
    } catch (const detail::EnumerationUnsupported& u) {
        throw Error("cannot evaluate formula under interpretation: " + u.reason);
    }
}

// Exhaustive check over every interpretation of the free symbols within
// budget. Sound refuter; equivalence verdicts are bounded (except for the
// structural-identity case, which needs no sweep).
inline EquivalenceVerdict check_by_enumeration(const Formula& phi, const Formula& psi,
                                               const Schema& schema,
                                               const EnumerationBudget& budget = {}) {
    auto start = std::chrono::steady_clock::now();
    auto finish = [&](EquivalenceVerdict v) {
        v.backend = EquivBackend::Enumeration;
        v.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        return v;
    };

    if (phi.structurally_equal(psi)) {
        EquivalenceVerdict v;
        v.status = EquivStatus::Equivalent;
        v.bounded = false;
        v.note = "structurally identical";
        return finish(v);
    }

    Interpretation interp;
    interp.int_lo = budget.int_lo;
    interp.int_hi = budget.int_hi;

    std::set<std::string> symbols = phi.free_symbols();
    for (const std::string& s : psi.free_symbols()) symbols.insert(s);

    // Build empty tables and count the interpretation space.
    unsigned __int128 total = 1;
    const unsigned __int128 cap =
        static_cast<unsigned __int128>(budget.max_interpretations);
    std::vector<Interpretation::Table*> table_order;
    std::vector<long long> result_cards;
    for (const std::string& name : symbols) {
        const Signature* sig = schema.find_signature(name);
        if (!sig) {
            EquivalenceVerdict v;
            v.status = EquivStatus::Unknown;
            v.note = "symbol outside schema: " + name;
            return finish(v);
        }
        Interpretation::Table table;
        table.arg_sorts = sig->arg_sorts;
        table.result_sort = sig->result_sort;
        long long argspace = 1;
        bool overflow = false;
        for (const std::string& as : sig->arg_sorts) {
            const Sort* s = schema.find_sort(as);
            if (s->kind == SortKind::Uninterpreted &&
                !interp.domain_sizes.count(as)) {
                interp.domain_sizes[as] = budget.max_domain_size;
            }
            long long card = interp.domain_card(schema, as);
            if (card <= 0) {
                EquivalenceVerdict v;
                v.status = EquivStatus::Unknown;
                v.note = "no bounded domain for argument sort " + as;
                return finish(v);
            }
            if (argspace > budget.max_interpretations / card) overflow = true;
            argspace *= card;
            if (overflow) break;
        }
        const Sort* rs = schema.find_sort(sig->result_sort);
        if (rs->kind == SortKind::Uninterpreted && !interp.domain_sizes.count(sig->result_sort)) {
            interp.domain_sizes[sig->result_sort] = budget.max_domain_size;
        }
        long long result_card = interp.domain_card(schema, sig->result_sort);
        if (overflow) {
            EquivalenceVerdict v;
            v.status = EquivStatus::Unknown;
            v.note = "budget-exceeded: argument space of " + name + " above cap";
            return finish(v);
        }
        for (long long i = 0; i < argspace; ++i) {
            total *= static_cast<unsigned __int128>(result_card);
            if (total > cap) {
                EquivalenceVerdict v;
                v.status = EquivStatus::Unknown;
                v.note = "budget-exceeded: more than " +
                         std::to_string(budget.max_interpretations) +
                         " interpretations";
                return finish(v);
            }
        }
        table.values.assign(static_cast<size_t>(argspace), DomValue{0, 0});
        interp.tables[name] = std::move(table);
        result_cards.push_back(result_card);
    }
    // Quantified sorts not appearing in any signature still need domains.
    std::vector<const FormulaNode*> stack = {&phi.root(), &psi.root()};
    while (!stack.empty()) {
        const FormulaNode* n = stack.back();
        stack.pop_back();
        for (const Binding& b : n->bindings) {
            const Sort* s = schema.find_sort(b.sort);
            if (s && s->kind == SortKind::Uninterpreted && !interp.domain_sizes.count(b.sort)) {
                interp.domain_sizes[b.sort] = budget.max_domain_size;
            }
        }
        for (const NodePtr& c : n->children) stack.push_back(c.get());
    }
    for (auto& [name, table] : interp.tables) {
        (void)name;
        table_order.push_back(&table);
    }

    // Odometer sweep over all table cell assignments.
    detail::Evaluator evaluator(schema, interp);
    auto result_value = [&](size_t t, long long idx) {
        const Interpretation::Table& table = *table_order[t];
        const Sort* rs = schema.find_sort(table.result_sort);
        if (rs->kind == SortKind::Int || rs->kind == SortKind::Real) {
            return DomValue{interp.int_lo + idx, 0};
        }
        return DomValue{idx, 0};
    };
    // Sweep downward from the all-max assignment so Bool tables start at
    // all-true.
    std::vector<std::vector<long long>> cursor(table_order.size());
    for (size_t t = 0; t < table_order.size(); ++t) {
        cursor[t].assign(table_order[t]->values.size(), result_cards[t] - 1);
        for (auto& v : table_order[t]->values) v = result_value(t, result_cards[t] - 1);
    }

    try {
        for (;;) {
            bool a = evaluator.eval_bool(phi.root());
            bool b = evaluator.eval_bool(psi.root());
            if (a != b) {
                EquivalenceVerdict v;
                v.status = EquivStatus::NotEquivalent;
                v.counterexample = interp;
                return finish(v);
            }
            // Decrement the odometer; stop when it wraps.
            bool done = true;
            for (size_t t = 0; t < table_order.size() && done; ++t) {
                for (size_t c = 0; c < cursor[t].size(); ++c) {
                    if (--cursor[t][c] >= 0) {
                        table_order[t]->values[c] = result_value(t, cursor[t][c]);
                        done = false;
                        break;
                    }
                    cursor[t][c] = result_cards[t] - 1;
                    table_order[t]->values[c] = result_value(t, cursor[t][c]);
                }
            }
            if (done) break;
        }
    } catch (const detail::EnumerationUnsupported& u) {
        EquivalenceVerdict v;
        v.status = EquivStatus::Unknown;
        v.note = u.reason;
        return finish(v);
    }

    EquivalenceVerdict v;
    v.status = EquivStatus::Equivalent;
    v.bounded = true;
    return finish(v);
}

}  // namespace rtv
