#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "rtv/backend.hpp"
#include "rtv/formula.hpp"

namespace rtv {

enum class StageId : int { T1 = 1, T2 = 2, T3 = 3 };

inline int stage_index(StageId s) { return static_cast<int>(s); }

inline StageId stage_from_index(int i) {
    if (i < 1 || i > 3) throw ConfigError("stage index out of range: " + std::to_string(i));
    return static_cast<StageId>(i);
}

struct WellformednessPolicy {
    int max_attempts = 5;
};

struct StageProvenance {
    std::string backend;
    int attempts = 0;
    std::string started_at;
    std::string finished_at;
};

// The four roundtrip artifacts plus provenance. Immutable by convention:
// repairs build a new instance.
struct RoundtripInstance {
    std::string rule_id;
    std::string x;
    Formula y_orig;
    std::string x_prime;
    Formula y_rt;
    std::map<std::string, StageProvenance> provenance;  // keyed by artifact name
};

// Structured event hook; the reporting module supplies the sink.
using EventSink = std::function<void(const nlohmann::json&)>;

struct StageContext {
    const Schema* schema = nullptr;
    const std::map<Role, PromptTemplate>* templates = nullptr;
    WellformednessPolicy policy;
    std::string rule_id;
    std::uint64_t iteration = 0;
    EventSink sink;  // optional
};

inline std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch())
                  .count() %
              1000;
    char buf[32];
    std::tm tm_utc;
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm_utc);
    char out[40];
    std::snprintf(out, sizeof(out), "%s.%03lldZ", buf, static_cast<long long>(ms));
    return out;
}

namespace detail {

inline void emit(const StageContext& ctx, nlohmann::json event) {
    if (!ctx.sink) return;
    ctx.sink(std::move(event));
}

inline std::string strip_code_fences(const std::string& text) {
    if (text.find("```") == std::string::npos) return text;
    std::string out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::string trimmed = line;
        size_t b = trimmed.find_first_not_of(" \t");
        if (b != std::string::npos && trimmed.compare(b, 3, "```") == 0) continue;
        out += line;
        out += "\n";
    }
    return out;
}

}  // namespace detail

// First balanced top-level s-expression in a backend reply (code fences
// stripped); a bare atom like "true" passes through.
inline std::string extract_formula_text(const std::string& reply) {
    std::string text = detail::strip_code_fences(reply);
    size_t start = text.find('(');
    if (start == std::string::npos) {
        size_t b = text.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) {
            throw ParseError("reply contains no s-expression", SourcePos{1, 1});
        }
        size_t e = text.find_last_not_of(" \t\r\n");
        return text.substr(b, e - b + 1);
    }
    int depth = 0;
    for (size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (c == ';') {
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        if (c == '(') ++depth;
        if (c == ')') {
            --depth;
            if (depth == 0) return text.substr(start, i - start + 1);
        }
    }
    throw ParseError("unbalanced s-expression in reply", SourcePos{1, 1});
}

namespace detail {

struct FormalStageResult {
    Formula formula;
    int attempts = 0;
    std::string raw_reply;
};

// Calls the backend until the reply parses and type-checks, re-prompting
// with the error text, up to policy.max_attempts.
inline FormalStageResult run_formal_stage(Role role, TranslatorBackend& backend,
                                          std::map<std::string, std::string> artifacts,
                                          const StageContext& ctx, int stage_tag) {
    const PromptTemplate& tmpl = ctx.templates->at(role);
    std::string last_error;
    for (int attempt = 1; attempt <= ctx.policy.max_attempts; ++attempt) {
        artifacts["error_message"] =
            last_error.empty()
                ? ""
                : "ERROR FEEDBACK:\nYour previous reply was rejected: " + last_error +
                      "\nReply with a corrected S-expression.";
        std::string prompt =
            stamp_marker(render_prompt(tmpl, artifacts), ctx.rule_id, ctx.iteration);
        std::string reply;
        try {
            reply = backend.complete(prompt);
        } catch (const Error& e) {
            throw StageError(stage_tag, std::string("backend-error: ") + e.what());
        }
        try {
            Formula f = Formula::parse(extract_formula_text(reply), *ctx.schema);
            return FormalStageResult{std::move(f), attempt, reply};
        } catch (const ParseError& e) {
            last_error = e.what();
        }
    }
    WellformednessError exhausted(ctx.policy.max_attempts, last_error);
    throw StageError(stage_tag, exhausted.what());
}

struct TextStageResult {
    std::string text;
    int attempts = 0;
};

inline TextStageResult run_text_stage(Role role, TranslatorBackend& backend,
                                      const std::map<std::string, std::string>& artifacts,
                                      const StageContext& ctx, int stage_tag) {
    const PromptTemplate& tmpl = ctx.templates->at(role);
    std::string prompt =
        stamp_marker(render_prompt(tmpl, artifacts), ctx.rule_id, ctx.iteration);
    std::string reply;
    try {
        reply = backend.complete(prompt);
    } catch (const Error& e) {
        throw StageError(stage_tag, std::string("backend-error: ") + e.what());
    }
    std::string text = strip_code_fences(reply);
    size_t b = text.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        throw StageError(stage_tag, "backend-error: stage produced empty text");
    }
    size_t e = text.find_last_not_of(" \t\r\n");
    return TextStageResult{text.substr(b, e - b + 1), 1};
}

inline StageProvenance make_provenance(const std::string& backend, int attempts,
                                       const std::string& started) {
    return StageProvenance{backend, attempts, started, now_iso8601()};
}

inline void emit_artifact(const StageContext& ctx, Role role, const std::string& content,
                          int attempts, const std::string& backend) {
    emit(ctx, {{"type", "stage_artifact"},
               {"role", rtv::to_string(role)},
               {"iteration", ctx.iteration},
               {"attempts", attempts},
               {"backend", backend},
               {"content", content}});
}

}  // namespace detail

// Stage 1: NL -> Formula.
inline Formula run_stage1(const std::string& x, TranslatorBackend& backend,
                          StageContext& ctx, RoundtripInstance* out = nullptr) {
    std::string started = now_iso8601();
    auto result = detail::run_formal_stage(
        Role::T1, backend, {{"schema", ctx.schema->source_text()}, {"original_nl", x}}, ctx,
        1);
    detail::emit_artifact(ctx, Role::T1, result.formula.render(), result.attempts,
                          backend.name());
    if (out) {
        out->provenance["y_orig"] =
            detail::make_provenance(backend.name(), result.attempts, started);
    }
    return result.formula;
}

// Stage 2: Formula -> NL.
inline std::string run_stage2(const Formula& y_orig, TranslatorBackend& backend,
                              StageContext& ctx, RoundtripInstance* out = nullptr) {
    std::string started = now_iso8601();
    auto result = detail::run_text_stage(
        Role::T2, backend,
        {{"schema", ctx.schema->source_text()}, {"phase1_smt", y_orig.render()}}, ctx, 2);
    detail::emit_artifact(ctx, Role::T2, result.text, result.attempts, backend.name());
    if (out) {
        out->provenance["x_prime"] =
            detail::make_provenance(backend.name(), result.attempts, started);
    }
    return result.text;
}

// Stage 3: NL -> Formula.
inline Formula run_stage3(const std::string& x_prime, TranslatorBackend& backend,
                          StageContext& ctx, RoundtripInstance* out = nullptr) {
    std::string started = now_iso8601();
    auto result = detail::run_formal_stage(
        Role::T3, backend,
        {{"schema", ctx.schema->source_text()}, {"reconstructed_nl", x_prime}}, ctx, 3);
    detail::emit_artifact(ctx, Role::T3, result.formula.render(), result.attempts,
                          backend.name());
    if (out) {
        out->provenance["y_rt"] =
            detail::make_provenance(backend.name(), result.attempts, started);
    }
    return result.formula;
}

// Generic single-stage entry point (1: text->Formula, 2: Formula->text,
// 3: text->Formula). Stage inputs/outputs that do not apply are empty.
struct StageArtifact {
    Formula formula;
    std::string text;
};

inline StageArtifact run_stage(StageId stage, const StageArtifact& input,
                               TranslatorBackend& backend, StageContext& ctx) {
    switch (stage) {
        case StageId::T1: return {run_stage1(input.text, backend, ctx), ""};
        case StageId::T2: return {Formula(), run_stage2(input.formula, backend, ctx)};
        case StageId::T3: return {run_stage3(input.text, backend, ctx), ""};
    }
    throw ConfigError("bad stage");
}

// Executes stages 1 -> 2 -> 3, each as an independent call (no shared
// conversational state), and assembles the instance with provenance.
inline RoundtripInstance run_roundtrip(const std::string& rule_id, const std::string& x,
                                       const BackendSet& backends, StageContext ctx) {
    ctx.rule_id = rule_id;
    ctx.iteration = 0;
    RoundtripInstance inst;
    inst.rule_id = rule_id;
    inst.x = x;
    inst.y_orig = run_stage1(x, backends.at(Role::T1), ctx, &inst);
    inst.x_prime = run_stage2(inst.y_orig, backends.at(Role::T2), ctx, &inst);
    inst.y_rt = run_stage3(inst.x_prime, backends.at(Role::T3), ctx, &inst);
    return inst;
}

}  // namespace rtv
