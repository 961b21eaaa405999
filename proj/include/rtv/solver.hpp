#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "rtv/equivalence.hpp"
#include "rtv/process.hpp"

namespace rtv {

// External SMT solver reached over its standard streams, one process per
// query. Empty command means no solver configured.
struct SolverConfig {
    std::string command;
    std::vector<std::string> args = {"-in"};
    double timeout_seconds = 10.0;
    bool request_model = true;
};

enum class EquivalenceOrder { SolverThenEnumeration, EnumerationOnly, SolverOnly };

struct EquivalenceConfig {
    EquivalenceOrder order = EquivalenceOrder::SolverThenEnumeration;
    SolverConfig solver;
    EnumerationBudget budget;
};

namespace detail {

// Best-effort model parse: handles nullary define-funs with literal
// values. Anything richer leaves the counterexample absent.
inline std::optional<Interpretation> parse_model_text(const std::string& text,
                                                      const Schema& schema) {
    std::vector<SExpr> forms;
    try {
        forms = read_sexprs(text);
    } catch (const ParseError&) {
        return std::nullopt;
    }
    if (forms.empty()) return std::nullopt;
    const SExpr* model = &forms[0];
    Interpretation interp;
    size_t start = 0;
    if (!model->items.empty() && model->items[0].is_atom("model")) start = 1;
    for (size_t i = start; i < model->items.size(); ++i) {
        const SExpr& entry = model->items[i];
        if (!entry.is_list() || entry.items.size() != 5 ||
            !entry.items[0].is_atom("define-fun") || !entry.items[1].is_atom() ||
            !entry.items[2].is_list() || !entry.items[2].items.empty() ||
            !entry.items[3].is_atom()) {
            return std::nullopt;
        }
        const std::string& name = entry.items[1].atom;
        const Signature* sig = schema.find_signature(name);
        if (!sig || !sig->arg_sorts.empty()) return std::nullopt;
        const SExpr& value = entry.items[4];
        DomValue v;
        const Sort* rs = schema.find_sort(sig->result_sort);
        if (!rs) return std::nullopt;
        if (value.is_atom("true")) {
            v = DomValue{1, 0};
        } else if (value.is_atom("false")) {
            v = DomValue{0, 0};
        } else if (value.is_atom() && rs->kind == SortKind::Enumerated) {
            auto it = std::find(rs->constructors.begin(), rs->constructors.end(), value.atom);
            if (it == rs->constructors.end()) return std::nullopt;
            v = DomValue{it - rs->constructors.begin(), 0};
        } else if (value.is_atom()) {
            try {
                v = DomValue{std::stoll(value.atom), 0};
            } catch (const std::exception&) {
                return std::nullopt;
            }
        } else if (value.items.size() == 2 && value.items[0].is_atom("-") &&
                   value.items[1].is_atom()) {
            try {
                v = DomValue{-std::stoll(value.items[1].atom), 0};
            } catch (const std::exception&) {
                return std::nullopt;
            }
        } else {
            return std::nullopt;
        }
        Interpretation::Table table;
        table.result_sort = sig->result_sort;
        table.values = {v};
        interp.tables[name] = std::move(table);
    }
    return interp;
}

}  // namespace detail

// Runs one solver process over the script, maps unsat/sat/unknown onto the
// verdict, and (on sat) asks for a model.
inline EquivalenceVerdict check_with_solver(const std::string& script,
                                            const SolverConfig& cfg,
                                            const Schema* schema_for_model = nullptr) {
    auto start = std::chrono::steady_clock::now();
    auto finish = [&](EquivalenceVerdict v) {
        v.backend = EquivBackend::ExternalSolver;
        v.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        return v;
    };
    if (cfg.command.empty()) {
        throw ProcessError("solver-not-found: no solver command configured");
    }
    auto deadline = start + std::chrono::milliseconds(
                                static_cast<long long>(cfg.timeout_seconds * 1000.0));
    std::vector<std::string> argv = {cfg.command};
    argv.insert(argv.end(), cfg.args.begin(), cfg.args.end());
    ChildProcess child(argv);
    child.write_stdin(script);
    if (script.empty() || script.back() != '\n') child.write_stdin("\n");

    std::string answer;
    for (;;) {
        auto line = child.read_line(deadline);
        if (!line) {
            if (child.timed_out()) {
                child.terminate();
                EquivalenceVerdict v;
                v.status = EquivStatus::Unknown;
                v.note = "timeout after " + std::to_string(cfg.timeout_seconds) + "s";
                return finish(v);
            }
            throw ProtocolError("solver-protocol-error: no answer before end of output");
        }
        std::string trimmed = *line;
        size_t b = trimmed.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        trimmed = trimmed.substr(b);
        if (trimmed.empty()) continue;
        answer = trimmed;
        break;
    }

    if (answer == "unsat") {
        child.close_stdin();
        EquivalenceVerdict v;
        v.status = EquivStatus::Equivalent;
        return finish(v);
    }
    if (answer == "unknown") {
        child.close_stdin();
        EquivalenceVerdict v;
        v.status = EquivStatus::Unknown;
        v.note = "solver answered unknown";
        return finish(v);
    }
    if (answer == "sat") {
        EquivalenceVerdict v;
        v.status = EquivStatus::NotEquivalent;
        if (cfg.request_model) {
            child.write_stdin("(get-model)\n");
            child.close_stdin();
            std::string model_text = child.read_all(deadline);
            if (schema_for_model) {
                if (auto interp = detail::parse_model_text(model_text, *schema_for_model)) {
                    v.counterexample = std::move(interp);
                }
            }
        } else {
            child.close_stdin();
        }
        return finish(v);
    }
    throw ProtocolError("solver-protocol-error: unexpected reply '" + answer + "'");
}

// Backend order dispatch: first conclusive verdict wins; an unknown (or a
// solver failure) falls through; never throws for backend trouble.
inline EquivalenceVerdict decide_equivalence(const Formula& phi, const Formula& psi,
                                             const Schema& schema,
                                             const EquivalenceConfig& config = {}) {
    std::string notes;
    auto add_note = [&notes](const std::string& n) {
        if (n.empty()) return;
        if (!notes.empty()) notes += "; ";
        notes += n;
    };

    auto try_solver = [&]() -> std::optional<EquivalenceVerdict> {
        if (config.solver.command.empty()) {
            add_note("no solver configured");
            return std::nullopt;
        }
        try {
            std::string script = build_equivalence_query(phi, psi, schema);
            EquivalenceVerdict v = check_with_solver(script, config.solver, &schema);
            if (v.status == EquivStatus::NotEquivalent && v.counterexample) {
                // Keep the counterexample only if it demonstrably separates
                // the two formulas.
                try {
                    bool a = evaluate_under(phi, schema, *v.counterexample);
                    bool b = evaluate_under(psi, schema, *v.counterexample);
                    if (a == b) v.counterexample.reset();
                } catch (const Error&) {
                    v.counterexample.reset();
                }
            }
            if (v.status == EquivStatus::Unknown) {
                add_note("solver: " + (v.note.empty() ? "unknown" : v.note));
                return std::nullopt;
            }
            return v;
        } catch (const Error& e) {
            add_note(std::string("solver: ") + e.what());
            return std::nullopt;
        }
    };

    auto try_enumeration = [&]() -> std::optional<EquivalenceVerdict> {
        EquivalenceVerdict v = check_by_enumeration(phi, psi, schema, config.budget);
        if (v.status == EquivStatus::Unknown) {
            add_note("enumeration: " + (v.note.empty() ? "unknown" : v.note));
            return std::nullopt;
        }
        return v;
    };

    std::optional<EquivalenceVerdict> verdict;
    switch (config.order) {
        case EquivalenceOrder::SolverThenEnumeration:
            verdict = try_solver();
            if (!verdict) verdict = try_enumeration();
            break;
        case EquivalenceOrder::EnumerationOnly:
            verdict = try_enumeration();
            break;
        case EquivalenceOrder::SolverOnly:
            verdict = try_solver();
            break;
    }
    if (verdict) return *verdict;

    EquivalenceVerdict v;
    v.status = EquivStatus::Unknown;
    v.backend = EquivBackend::None;
    v.note = notes;
    return v;
}

}  // namespace rtv
