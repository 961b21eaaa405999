#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rtv/pipeline.hpp"
#include "rtv/solver.hpp"
#include "rtv/splitmix64.hpp"

namespace rtv {

struct Diagnosis {
    StageId first_failed_stage = StageId::T1;
    std::string explanation;
    std::string raw_reply;
    std::optional<std::string> scope_warning;
    int attempts = 1;
};

enum class RepairKind { None, Random, Full };

inline std::string to_string(RepairKind k) {
    switch (k) {
        case RepairKind::None: return "none";
        case RepairKind::Random: return "random";
        case RepairKind::Full: return "full";
    }
    return "?";
}

inline RepairKind repair_kind_from_string(const std::string& s) {
    if (s == "none") return RepairKind::None;
    if (s == "random") return RepairKind::Random;
    if (s == "full") return RepairKind::Full;
    throw ConfigError("unknown repair condition '" + s + "'");
}

struct RepairCondition {
    RepairKind kind = RepairKind::Full;
    std::uint64_t seed = 0;  // meaningful for Random only
};

struct RepairConfig {
    int max_iterations = 3;  // K
    RepairCondition condition;
};

// Fixed explanation used when the random condition repairs without a
// diagnosis.
inline const char* generic_repair_explanation() {
    return "an error was detected at this stage; regenerate faithfully";
}

// stage = (splitmix64(seed XOR rule_index*golden XOR iteration) mod 3) + 1
inline StageId select_stage_random(std::uint64_t seed, std::uint64_t rule_index,
                                   std::uint64_t iteration) {
    std::uint64_t mixed =
        splitmix64(seed ^ (rule_index * 0x9E3779B97F4A7C15ull) ^ iteration);
    return stage_from_index(static_cast<int>(mixed % 3) + 1);
}

namespace detail {

inline std::optional<std::pair<int, std::string>> parse_diagnosis_reply(
    const std::string& reply) {
    std::istringstream in(reply);
    std::string line;
    int stage = 0;
    while (std::getline(in, line)) {
        size_t at = line.find("FIRST_FAILED_ARROW");
        if (at == std::string::npos) continue;
        size_t colon = line.find(':', at);
        if (colon == std::string::npos) return std::nullopt;
        for (size_t i = colon + 1; i < line.size(); ++i) {
            if (std::isdigit(static_cast<unsigned char>(line[i]))) {
                stage = line[i] - '0';
                break;
            }
        }
        break;
    }
    if (stage < 1 || stage > 3) return std::nullopt;
    std::string explanation;
    size_t reasoning = reply.find("REASONING:");
    if (reasoning != std::string::npos) {
        explanation = reply.substr(reasoning + 10);
    } else {
        explanation = reply;
    }
    size_t b = explanation.find_first_not_of(" \t\r\n[");
    size_t e = explanation.find_last_not_of(" \t\r\n]");
    explanation = b == std::string::npos ? "" : explanation.substr(b, e - b + 1);
    if (explanation.empty()) explanation = "(no reasoning provided)";
    return std::make_pair(stage, explanation);
}

inline std::set<std::string> long_tokens(const std::string& text) {
    std::set<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (cur.size() >= 5) out.insert(cur);
        cur.clear();
    };
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || ch == '_') {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

// Heuristic scoping screen: flags explanation tokens that appear only in
// the artifacts the diagnosed stage must not reference.
inline std::optional<std::string> scope_warning_for(const RoundtripInstance& inst,
                                                    int stage,
                                                    const std::string& explanation) {
    std::string allowed_text, excluded_text;
    const std::string y_orig = inst.y_orig.valid() ? inst.y_orig.render() : "";
    const std::string y_rt = inst.y_rt.valid() ? inst.y_rt.render() : "";
    switch (stage) {
        case 1:
            allowed_text = inst.x + " " + y_orig;
            excluded_text = inst.x_prime + " " + y_rt;
            break;
        case 2:
            allowed_text = y_orig + " " + inst.x_prime;
            excluded_text = inst.x + " " + y_rt;
            break;
        default:
            allowed_text = inst.x_prime + " " + y_rt;
            excluded_text = inst.x + " " + y_orig;
            break;
    }
    std::set<std::string> allowed = long_tokens(allowed_text);
    std::set<std::string> excluded = long_tokens(excluded_text);
    std::set<std::string> expl = long_tokens(explanation);
    std::string offenders;
    int total = 0;
    for (const std::string& tok : expl) {
        if (excluded.count(tok) && !allowed.count(tok)) {
            ++total;
            if (total <= 3) {
                if (total > 1) offenders += ", ";
                offenders += tok;
            }
        }
    }
    if (total == 0) return std::nullopt;
    if (total > 3) offenders += ", ...";
    return "explanation references content outside the diagnosed stage: " + offenders;
}

}  // namespace detail

// Renders the diagnosis prompt over all four artifacts and parses the
// judge's FIRST_FAILED_ARROW / REASONING reply; up to 2 re-asks.
inline Diagnosis diagnose(const RoundtripInstance& inst, TranslatorBackend& judge,
                          const StageContext& ctx) {
    const PromptTemplate& tmpl = ctx.templates->at(Role::D);
    std::map<std::string, std::string> artifacts = {
        {"schema", ctx.schema->source_text()},
        {"original_nl", inst.x},
        {"phase1_smt", inst.y_orig.render()},
        {"reconstructed_nl", inst.x_prime},
        {"phase3_smt", inst.y_rt.render()},
    };
    std::string prompt =
        stamp_marker(render_prompt(tmpl, artifacts), ctx.rule_id, ctx.iteration);
    std::string last_reply;
    const int max_asks = 3;  // one ask plus two re-asks
    for (int attempt = 1; attempt <= max_asks; ++attempt) {
        last_reply = judge.complete(prompt);
        auto parsed = detail::parse_diagnosis_reply(last_reply);
        if (!parsed) continue;
        Diagnosis diag;
        diag.first_failed_stage = stage_from_index(parsed->first);
        diag.explanation = parsed->second;
        diag.raw_reply = last_reply;
        diag.attempts = attempt;
        diag.scope_warning =
            detail::scope_warning_for(inst, parsed->first, diag.explanation);
        return diag;
    }
    throw ProtocolError("unparseable-reply: no valid FIRST_FAILED_ARROW after " +
                        std::to_string(max_asks) + " asks; last reply: " +
                        last_reply.substr(0, 200));
}

namespace detail {

inline Formula run_repair_formal(Role role, const RoundtripInstance& inst,
                                 const std::string& explanation, TranslatorBackend& backend,
                                 const StageContext& ctx, int stage_tag,
                                 RoundtripInstance* out, const char* prov_key) {
    std::map<std::string, std::string> artifacts = {
        {"schema", ctx.schema->source_text()},
        {"diagnostic_feedback", explanation},
    };
    if (role == Role::R1) {
        artifacts["original_nl"] = inst.x;
        artifacts["phase1_smt"] = inst.y_orig.render();
    } else {
        artifacts["reconstructed_nl"] = inst.x_prime;
        artifacts["phase3_smt"] = inst.y_rt.render();
    }
    std::string started = now_iso8601();
    auto result = run_formal_stage(role, backend, std::move(artifacts), ctx, stage_tag);
    emit_artifact(ctx, role, result.formula.render(), result.attempts, backend.name());
    out->provenance[prov_key] = make_provenance(backend.name(), result.attempts, started);
    return result.formula;
}

}  // namespace detail

// Applies R<stage> and regenerates everything downstream of it. Returns a
// new instance; the input is untouched.
inline RoundtripInstance apply_repair(StageId stage, const RoundtripInstance& inst,
                                      const std::string& explanation,
                                      const BackendSet& backends, StageContext ctx) {
    ctx.rule_id = inst.rule_id;
    RoundtripInstance out = inst;
    switch (stage) {
        case StageId::T1: {
            out.y_orig = detail::run_repair_formal(Role::R1, inst, explanation,
                                                   backends.at(Role::R1), ctx, 1, &out,
                                                   "y_orig");
            out.x_prime = run_stage2(out.y_orig, backends.at(Role::T2), ctx, &out);
            out.y_rt = run_stage3(out.x_prime, backends.at(Role::T3), ctx, &out);
            return out;
        }
        case StageId::T2: {
            std::map<std::string, std::string> artifacts = {
                {"schema", ctx.schema->source_text()},
                {"phase1_smt", inst.y_orig.render()},
                {"reconstructed_nl", inst.x_prime},
                {"diagnostic_feedback", explanation},
            };
            std::string started = now_iso8601();
            auto result =
                detail::run_text_stage(Role::R2, backends.at(Role::R2), artifacts, ctx, 2);
            detail::emit_artifact(ctx, Role::R2, result.text, result.attempts,
                                  backends.at(Role::R2).name());
            out.provenance["x_prime"] = detail::make_provenance(
                backends.at(Role::R2).name(), result.attempts, started);
            out.x_prime = result.text;
            out.y_rt = run_stage3(out.x_prime, backends.at(Role::T3), ctx, &out);
            return out;
        }
        case StageId::T3: {
            out.y_rt = detail::run_repair_formal(Role::R3, inst, explanation,
                                                 backends.at(Role::R3), ctx, 3, &out,
                                                 "y_rt");
            return out;
        }
    }
    throw ConfigError("bad repair stage");
}

enum class Chooser { Diagnosis, Random };

inline std::string to_string(Chooser c) {
    return c == Chooser::Diagnosis ? "diagnosis" : "random";
}

struct IterationRecord {
    int iteration = 0;
    int stage = 0;  // 0 when no stage was chosen (diagnosis failed)
    std::optional<Chooser> chooser;
    EquivStatus verdict_after = EquivStatus::Unknown;
    bool bounded = false;
    std::string repair_error;
    std::optional<std::string> scope_warning;
};

struct LoopOutcome {
    bool success = false;
    int iterations_used = 0;
    EquivStatus initial_status = EquivStatus::Unknown;
    std::vector<IterationRecord> per_iteration;
    RoundtripInstance final_instance;
};

// Bounded verification-diagnosis-repair loop: check equivalence, pick a
// stage (judge or random draw), repair, re-check; at most K iterations.
// The none condition performs the initial check only. Unknown verdicts
// steer the loop like non-equivalence but stay recorded as unknown.
inline LoopOutcome repair_loop(RoundtripInstance inst, const RepairConfig& cfg,
                               const BackendSet& backends, const EquivalenceConfig& eq,
                               StageContext ctx, std::uint64_t rule_index) {
    ctx.rule_id = inst.rule_id;
    LoopOutcome outcome;

    auto check = [&](int iteration) {
        EquivalenceVerdict v =
            decide_equivalence(inst.y_orig, inst.y_rt, *ctx.schema, eq);
        detail::emit(ctx, {{"type", "verdict"},
                           {"point", iteration == 0 ? "initial" : "post_repair"},
                           {"iteration", iteration},
                           {"status", rtv::to_string(v.status)},
                           {"backend", rtv::to_string(v.backend)},
                           {"bounded", v.bounded},
                           {"elapsed_ms", v.elapsed.count()},
                           {"note", v.note}});
        return v;
    };

    EquivalenceVerdict verdict = check(0);
    outcome.initial_status = verdict.status;
    if (verdict.status == EquivStatus::Equivalent) {
        outcome.success = true;
        outcome.final_instance = std::move(inst);
        return outcome;
    }
    if (cfg.condition.kind == RepairKind::None) {
        outcome.final_instance = std::move(inst);
        return outcome;
    }

    for (int k = 1; k <= cfg.max_iterations; ++k) {
        ctx.iteration = static_cast<std::uint64_t>(k);
        IterationRecord record;
        record.iteration = k;

        std::optional<StageId> stage;
        std::string explanation;
        if (cfg.condition.kind == RepairKind::Full) {
            record.chooser = Chooser::Diagnosis;
            try {
                Diagnosis diag = diagnose(inst, backends.at(Role::D), ctx);
                stage = diag.first_failed_stage;
                explanation = diag.explanation;
                record.scope_warning = diag.scope_warning;
                nlohmann::json ev = {{"type", "diagnosis"},
                                     {"iteration", k},
                                     {"stage", stage_index(*stage)},
                                     {"explanation", diag.explanation},
                                     {"attempts", diag.attempts}};
                if (diag.scope_warning) ev["scope_warning"] = *diag.scope_warning;
                detail::emit(ctx, ev);
            } catch (const Error& e) {
                record.repair_error = std::string("diagnosis failed: ") + e.what();
                record.verdict_after = verdict.status;
                detail::emit(ctx, {{"type", "iteration_error"},
                                   {"iteration", k},
                                   {"message", record.repair_error}});
                outcome.per_iteration.push_back(std::move(record));
                continue;
            }
        } else {
            record.chooser = Chooser::Random;
            // 0-based iteration index feeds the deterministic draw.
            stage = select_stage_random(cfg.condition.seed, rule_index,
                                        static_cast<std::uint64_t>(k - 1));
            explanation = generic_repair_explanation();
        }

        record.stage = stage_index(*stage);
        detail::emit(ctx, {{"type", "stage_selected"},
                           {"iteration", k},
                           {"stage", record.stage},
                           {"chooser", to_string(*record.chooser)}});

        try {
            inst = apply_repair(*stage, inst, explanation, backends, ctx);
        } catch (const Error& e) {
            record.repair_error = e.what();
            record.verdict_after = verdict.status;
            detail::emit(ctx, {{"type", "iteration_error"},
                               {"iteration", k},
                               {"message", record.repair_error}});
            outcome.per_iteration.push_back(std::move(record));
            continue;
        }

        verdict = check(k);
        record.verdict_after = verdict.status;
        record.bounded = verdict.bounded;
        outcome.per_iteration.push_back(std::move(record));
        if (verdict.status == EquivStatus::Equivalent) {
            outcome.success = true;
            outcome.iterations_used = k;
            outcome.final_instance = std::move(inst);
            return outcome;
        }
    }

    outcome.iterations_used = cfg.max_iterations;
    outcome.final_instance = std::move(inst);
    return outcome;
}

}  // namespace rtv
