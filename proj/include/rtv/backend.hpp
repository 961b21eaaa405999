#pragma once

#include <atomic>
#include <cctype>
#include <chrono>
#include <compare>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "rtv/errors.hpp"

namespace rtv {

// Pipeline roles a prompt (and hence a backend call) can play.
enum class Role { T1, T2, T3, D, R1, R2, R3 };

inline const std::vector<Role>& all_roles() {
    static const std::vector<Role> kRoles = {Role::T1, Role::T2, Role::T3, Role::D,
                                             Role::R1, Role::R2, Role::R3};
    return kRoles;
}

inline std::string to_string(Role r) {
    switch (r) {
        case Role::T1: return "T1";
        case Role::T2: return "T2";
        case Role::T3: return "T3";
        case Role::D: return "D";
        case Role::R1: return "R1";
        case Role::R2: return "R2";
        case Role::R3: return "R3";
    }
    return "?";
}

inline std::optional<Role> role_from_string(std::string_view s) {
    for (Role r : all_roles()) {
        if (to_string(r) == s) return r;
    }
    return std::nullopt;
}

// Stateless completion backend: the reply may depend only on the prompt.
// call_count() increments exactly once per complete().
class TranslatorBackend {
  public:
    virtual ~TranslatorBackend() = default;
    virtual std::string name() const = 0;

    std::string complete(const std::string& prompt) {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return do_complete(prompt);
    }

    std::uint64_t call_count() const { return calls_.load(std::memory_order_relaxed); }

  private:
    virtual std::string do_complete(const std::string& prompt) = 0;
    std::atomic<std::uint64_t> calls_{0};
};

using BackendPtr = std::shared_ptr<TranslatorBackend>;

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

inline std::vector<std::string> find_placeholders(const std::string& body) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (size_t i = 0; i < body.size(); ++i) {
        if (body[i] != '{') continue;
        size_t j = i + 1;
        while (j < body.size() && (std::isalnum(static_cast<unsigned char>(body[j])) ||
                                   body[j] == '_')) {
            ++j;
        }
        if (j > i + 1 && j < body.size() && body[j] == '}') {
            std::string name = body.substr(i + 1, j - i - 1);
            if (seen.insert(name).second) out.push_back(name);
            i = j;
        }
    }
    return out;
}

inline const std::vector<std::string>& required_placeholders(Role role) {
    static const std::map<Role, std::vector<std::string>> kRequired = {
        {Role::T1, {"schema", "original_nl", "error_message"}},
        {Role::T2, {"schema", "phase1_smt"}},
        {Role::T3, {"schema", "reconstructed_nl", "error_message"}},
        {Role::D, {"schema", "original_nl", "phase1_smt", "reconstructed_nl", "phase3_smt"}},
        {Role::R1, {"schema", "original_nl", "phase1_smt", "diagnostic_feedback",
                    "error_message"}},
        {Role::R2, {"schema", "phase1_smt", "reconstructed_nl", "diagnostic_feedback"}},
        {Role::R3, {"schema", "reconstructed_nl", "phase3_smt", "diagnostic_feedback",
                    "error_message"}},
    };
    return kRequired.at(role);
}

// One prompt template per role. The first line carries a machine-readable
// role marker so scripted backends can key their replies; the live backend
// strips it before dispatch.
struct PromptTemplate {
    Role role = Role::T1;
    std::string body;

    PromptTemplate() = default;
    PromptTemplate(Role role_, std::string body_) : role(role_), body(std::move(body_)) {
        std::vector<std::string> have = find_placeholders(body);
        std::set<std::string> have_set(have.begin(), have.end());
        for (const std::string& need : required_placeholders(role)) {
            if (!have_set.count(need)) {
                throw ConfigError("template for role " + rtv::to_string(role) +
                                  " is missing placeholder {" + need + "}");
            }
        }
    }
};

// Verbatim single-pass substitution; substituted content is not rescanned.
inline std::string render_prompt(const PromptTemplate& tmpl,
                                 const std::map<std::string, std::string>& artifacts) {
    const std::string& body = tmpl.body;
    std::string out;
    out.reserve(body.size());
    for (size_t i = 0; i < body.size(); ++i) {
        if (body[i] == '{') {
            size_t j = i + 1;
            while (j < body.size() && (std::isalnum(static_cast<unsigned char>(body[j])) ||
                                       body[j] == '_')) {
                ++j;
            }
            if (j > i + 1 && j < body.size() && body[j] == '}') {
                std::string name = body.substr(i + 1, j - i - 1);
                auto it = artifacts.find(name);
                if (it == artifacts.end()) {
                    throw ConfigError("missing-placeholder: {" + name + "}");
                }
                out += it->second;
                i = j;
                continue;
            }
        }
        out.push_back(body[i]);
    }
    return out;
}

// --- role markers -----------------------------------------------------------

struct PromptMarker {
    Role role = Role::T1;
    std::string rule_id;
    std::uint64_t iteration = 0;
};

// Rewrites the first-line "#ROLE:X" marker to carry rule id and iteration.
inline std::string stamp_marker(const std::string& prompt, const std::string& rule_id,
                                std::uint64_t iteration) {
    if (prompt.rfind("#ROLE:", 0) != 0) {
        throw ConfigError("prompt has no #ROLE: marker line");
    }
    size_t eol = prompt.find('\n');
    std::string first = prompt.substr(0, eol == std::string::npos ? prompt.size() : eol);
    std::string rest = eol == std::string::npos ? "" : prompt.substr(eol);
    return first + " rule=" + rule_id + " iter=" + std::to_string(iteration) + rest;
}

inline std::optional<PromptMarker> parse_marker(const std::string& prompt) {
    if (prompt.rfind("#ROLE:", 0) != 0) return std::nullopt;
    size_t eol = prompt.find('\n');
    std::string line = prompt.substr(0, eol == std::string::npos ? prompt.size() : eol);
    std::istringstream in(line);
    std::string head;
    in >> head;
    auto role = role_from_string(head.substr(6));
    if (!role) return std::nullopt;
    PromptMarker marker;
    marker.role = *role;
    std::string token;
    while (in >> token) {
        if (token.rfind("rule=", 0) == 0) {
            marker.rule_id = token.substr(5);
        } else if (token.rfind("iter=", 0) == 0) {
            try {
                marker.iteration = std::stoull(token.substr(5));
            } catch (const std::exception&) {
                return std::nullopt;
            }
        }
    }
    return marker;
}

inline std::string strip_marker(const std::string& prompt) {
    if (prompt.rfind("#ROLE:", 0) != 0) return prompt;
    size_t eol = prompt.find('\n');
    return eol == std::string::npos ? "" : prompt.substr(eol + 1);
}

// Extracts the block following "HEADER:" up to the next ALL-CAPS header
// line or end of text.
inline std::string extract_block(const std::string& prompt, const std::string& header) {
    auto is_header_line = [](const std::string& line) {
        if (line.empty() || line.back() != ':') return false;
        for (char c : line) {
            if (!std::isupper(static_cast<unsigned char>(c)) &&
                !std::isdigit(static_cast<unsigned char>(c)) && c != ' ' && c != '_' &&
                c != ':') {
                return false;
            }
        }
        return true;
    };
    std::istringstream in(prompt);
    std::string line;
    std::string block;
    bool collecting = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!collecting) {
            if (line == header) collecting = true;
            continue;
        }
        if (is_header_line(line)) break;
        block += line;
        block += "\n";
    }
    if (!collecting) {
        throw BackendError("prompt block not found: " + header);
    }
    size_t b = block.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = block.find_last_not_of(" \t\r\n");
    return block.substr(b, e - b + 1);
}

// ---------------------------------------------------------------------------
// Built-in templates
// ---------------------------------------------------------------------------

inline const std::map<Role, PromptTemplate>& default_templates() {
    static const std::map<Role, PromptTemplate> kTemplates = [] {
        std::map<Role, PromptTemplate> t;
        t.emplace(Role::T1, PromptTemplate(Role::T1, R"(#ROLE:T1
You translate natural-language traffic rules into SMT-LIB formulas.
Use only the sorts and functions declared in the schema below, and reply
with a single S-expression and nothing else.

SCHEMA:
{schema}

ORIGINAL NL:
{original_nl}
{error_message})"));
        t.emplace(Role::T2, PromptTemplate(Role::T2, R"(#ROLE:T2
You translate an SMT-LIB formula back into natural language. Reply with a
single sentence that states exactly what the formula says, nothing more.

SCHEMA:
{schema}

PHASE 1 SMT:
{phase1_smt})"));
        t.emplace(Role::T3, PromptTemplate(Role::T3, R"(#ROLE:T3
You translate a natural-language traffic rule into an SMT-LIB formula.
Use only the sorts and functions declared in the schema below, and reply
with a single S-expression and nothing else.

SCHEMA:
{schema}

RECONSTRUCTED NL:
{reconstructed_nl}
{error_message})"));
        t.emplace(Role::D, PromptTemplate(Role::D, R"(#ROLE:D
You are analyzing a three-arrow translation pipeline for natural-language
traffic rules:
  ARROW 1: Original NL -> Phase 1 SMT
  ARROW 2: Phase 1 SMT -> Reconstructed NL
  ARROW 3: Reconstructed NL -> Phase 3 SMT

The equivalence check found that the Phase 1 and Phase 3 encodings differ.
Check the arrows one by one, in order, and identify the FIRST arrow where
an error occurred.

SCHEMA:
{schema}

ARTIFACTS:
ORIGINAL NL:
{original_nl}
PHASE 1 SMT:
{phase1_smt}
RECONSTRUCTED NL:
{reconstructed_nl}
PHASE 3 SMT:
{phase3_smt}

Respond with:
FIRST_FAILED_ARROW: [1, 2, or 3]
REASONING: [only reference the artifacts adjacent to the diagnosed arrow])"));
        t.emplace(Role::R1, PromptTemplate(Role::R1, R"(#ROLE:R1
Repair the Phase 1 SMT encoding of the rule below. Change only what is
necessary to address the problems named in the diagnostic feedback, and
reply with a single corrected S-expression and nothing else.

SCHEMA:
{schema}

ORIGINAL NL:
{original_nl}
PHASE 1 SMT:
{phase1_smt}
DIAGNOSTIC FEEDBACK:
{diagnostic_feedback}
{error_message})"));
        t.emplace(Role::R2, PromptTemplate(Role::R2, R"(#ROLE:R2
Repair the reconstructed sentence below so it states exactly what the
Phase 1 SMT formula says. Change only what is necessary to address the
problems named in the diagnostic feedback, and reply with a single
sentence and nothing else.

SCHEMA:
{schema}

PHASE 1 SMT:
{phase1_smt}
RECONSTRUCTED NL:
{reconstructed_nl}
DIAGNOSTIC FEEDBACK:
{diagnostic_feedback})"));
        t.emplace(Role::R3, PromptTemplate(Role::R3, R"(#ROLE:R3
Repair the Phase 3 SMT encoding of the reconstructed sentence below.
Change only what is necessary to address the problems named in the
diagnostic feedback, and reply with a single corrected S-expression and
nothing else.

SCHEMA:
{schema}

RECONSTRUCTED NL:
{reconstructed_nl}
PHASE 3 SMT:
{phase3_smt}
DIAGNOSTIC FEEDBACK:
{diagnostic_feedback}
{error_message})"));
        return t;
    }();
    return kTemplates;
}

// Loads one template file per role (t1.txt .. r3.txt) from a directory,
// falling back to the built-ins for missing files.
inline std::map<Role, PromptTemplate> load_templates(const std::string& dir) {
    std::map<Role, PromptTemplate> out = default_templates();
    static const std::map<Role, std::string> kFiles = {
        {Role::T1, "t1.txt"}, {Role::T2, "t2.txt"}, {Role::T3, "t3.txt"},
        {Role::D, "d.txt"},   {Role::R1, "r1.txt"}, {Role::R2, "r2.txt"},
        {Role::R3, "r3.txt"},
    };
    for (const auto& [role, file] : kFiles) {
        std::ifstream in(dir + "/" + file);
        if (!in) continue;
        std::stringstream buf;
        buf << in.rdbuf();
        out.insert_or_assign(role, PromptTemplate(role, buf.str()));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

// Test/oracle backend over a plain function.
class FunctionBackend : public TranslatorBackend {
  public:
    FunctionBackend(std::string name, std::function<std::string(const std::string&)> fn)
        : name_(std::move(name)), fn_(std::move(fn)) {}

    std::string name() const override { return name_; }

  private:
    std::string do_complete(const std::string& prompt) override { return fn_(prompt); }

    std::string name_;
    std::function<std::string(const std::string&)> fn_;
};

// Deterministic replay table keyed by (role, rule_id, iteration), all three
// read from the prompt marker.
class ScriptedBackend : public TranslatorBackend {
  public:
    struct Key {
        std::string role;
        std::string rule_id;
        std::uint64_t iteration;
        auto operator<=>(const Key&) const = default;
    };

    explicit ScriptedBackend(std::string name = "scripted") : name_(std::move(name)) {}

    static ScriptedBackend from_jsonl(const std::string& path,
                                      std::string name = "scripted") {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open replay table: " + path);
        ScriptedBackend backend(std::move(name));
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError("bad replay record at " + path + ":" +
                                  std::to_string(lineno) + ": " + e.what());
            }
            backend.add_reply(j.at("role").get<std::string>(),
                              j.at("rule_id").get<std::string>(),
                              j.at("iteration").get<std::uint64_t>(),
                              j.at("reply").get<std::string>());
        }
        return backend;
    }

    void add_reply(const std::string& role, const std::string& rule_id,
                   std::uint64_t iteration, const std::string& reply) {
        table_[Key{role, rule_id, iteration}] = reply;
    }

    std::string name() const override { return name_; }

  private:
    std::string do_complete(const std::string& prompt) override {
        auto marker = parse_marker(prompt);
        if (!marker) {
            throw BackendError("scripted backend needs a #ROLE: marker with rule and iter");
        }
        Key key{rtv::to_string(marker->role), marker->rule_id, marker->iteration};
        auto it = table_.find(key);
        if (it == table_.end()) {
            throw BackendError("missing-entry: no scripted reply for (role=" + key.role +
                               ", rule_id=" + key.rule_id +
                               ", iteration=" + std::to_string(key.iteration) + ")");
        }
        return it->second;
    }

    std::string name_;
    std::map<Key, std::string> table_;
};

// Serializes calls so consecutive request starts are at least the
// configured interval apart.
class RateLimiter {
  public:
    explicit RateLimiter(double seconds = 0.0)
        : interval_(std::chrono::milliseconds(static_cast<long long>(seconds * 1000.0))) {}

    void acquire() {
        if (interval_.count() <= 0) return;
        std::unique_lock<std::mutex> lock(mutex_);
        auto now = std::chrono::steady_clock::now();
        if (now < next_) {
            std::this_thread::sleep_until(next_);
            now = next_;
        }
        next_ = now + interval_;
    }

  private:
    std::mutex mutex_;
    std::chrono::milliseconds interval_;
    std::chrono::steady_clock::time_point next_ = std::chrono::steady_clock::time_point::min();
};

// Backends by pipeline role. Distinct roles may share one backend object.
struct BackendSet {
    BackendPtr t1, t2, t3, judge, r1, r2, r3;

    TranslatorBackend& at(Role role) const {
        const BackendPtr* p = nullptr;
        switch (role) {
            case Role::T1: p = &t1; break;
            case Role::T2: p = &t2; break;
            case Role::T3: p = &t3; break;
            case Role::D: p = &judge; break;
            case Role::R1: p = &r1; break;
            case Role::R2: p = &r2; break;
            case Role::R3: p = &r3; break;
        }
        if (!p || !*p) {
            throw ConfigError("no backend configured for role " + rtv::to_string(role));
        }
        return **p;
    }

    static BackendSet uniform(const BackendPtr& backend) {
        return BackendSet{backend, backend, backend, backend, backend, backend, backend};
    }

    // Sum of per-object call counters (shared objects counted once).
    std::uint64_t total_calls() const {
        std::set<const TranslatorBackend*> seen;
        std::uint64_t total = 0;
        for (const BackendPtr& b : {t1, t2, t3, judge, r1, r2, r3}) {
            if (b && seen.insert(b.get()).second) total += b->call_count();
        }
        return total;
    }
};

}  // namespace rtv
