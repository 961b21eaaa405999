#pragma once

#include <map>
#include <memory>
#include <regex>
#include <string>
#include <vector>

#include "rtv/backend.hpp"
#include "rtv/pipeline.hpp"
#include "rtv/splitmix64.hpp"

namespace rtv {

// Reduced traffic schema carrying the vocabulary the sentence templates
// need plus the predicates used by the end-to-end fixtures.
inline const char* sample_schema_text() {
    return R"(; Core sorts
(declare-datatypes ((VehicleKind 0)) (((car) (truck) (bus))))
(declare-datatypes ((RoadwayKind 0)) (((highway) (alley) (bridge))))
(declare-sort Vehicle 0)
(declare-sort Roadway 0)

; Vehicle and roadway attributes
(declare-fun vehicle_kind (Vehicle) VehicleKind)
(declare-fun roadway_kind (Roadway) RoadwayKind)
(declare-fun on_roadway (Vehicle Roadway Int) Bool)
(declare-fun speed (Vehicle Int) Real)

; State predicates
; INSTANT: true at the specific time t only
(declare-fun stopped (Vehicle Int) Bool)
(declare-fun has_permit (Vehicle Int) Bool)
; DURATIVE: true while the maneuver is ongoing
(declare-fun approaching (Vehicle Int) Bool)
(declare-fun yields_to (Vehicle Vehicle Int) Bool)

; Special situations
(declare-fun fire_hose_on_roadway (Roadway Int) Bool)
(declare-fun fire_dept_consent (Vehicle Int) Bool)
)";
}

enum class FaultMode { ConsequentSwap, NegationDrop, ExceptionDrop, CustomReplacement };

inline std::string to_string(FaultMode m) {
    switch (m) {
        case FaultMode::ConsequentSwap: return "consequent-swap";
        case FaultMode::NegationDrop: return "negation-drop";
        case FaultMode::ExceptionDrop: return "exception-drop";
        case FaultMode::CustomReplacement: return "custom-replacement";
    }
    return "?";
}

inline FaultMode fault_mode_from_string(const std::string& s) {
    if (s == "consequent-swap") return FaultMode::ConsequentSwap;
    if (s == "negation-drop") return FaultMode::NegationDrop;
    if (s == "exception-drop") return FaultMode::ExceptionDrop;
    if (s == "custom-replacement") return FaultMode::CustomReplacement;
    throw ConfigError("unknown fault mode '" + s + "'");
}

struct FaultSpec {
    std::string rule_id;
    StageId stage = StageId::T3;
    FaultMode mode = FaultMode::ConsequentSwap;
    std::string replacement;  // CustomReplacement only
    bool stubborn = true;
};

struct SyntheticRule {
    std::string id;
    std::string text;  // canonical sentence
    Formula truth;
    int template_id = 1;  // 1 prohibition, 2 conditional, 3 exception, 4 speed, 5 yield
    std::string vk, rk, vk2;
    int speed_bound = 0;
};

struct SyntheticCorpus {
    std::vector<SyntheticRule> rules;
};

namespace detail {

enum class Mutation { None, ConsequentSwap, NegationDrop, ExceptionDrop };

inline std::string build_sentence(int tid, const std::string& vk, const std::string& rk,
                                  const std::string& vk2, int n, Mutation m) {
    switch (tid) {
        case 1:
            if (m == Mutation::ConsequentSwap) return "A " + vk + " must be stopped.";
            if (m == Mutation::NegationDrop)
                return "A " + vk + " must be on a " + rk + " roadway.";
            return "A " + vk + " must not be on a " + rk + " roadway.";
        case 2:
            if (m == Mutation::ConsequentSwap)
                return "If a " + vk + " is on a " + rk +
                       " roadway then it must not be stopped.";
            return "If a " + vk + " is on a " + rk + " roadway then it must be stopped.";
        case 3:
            if (m == Mutation::ConsequentSwap) return "A " + vk + " must be stopped.";
            if (m == Mutation::NegationDrop)
                return "A " + vk + " must be on a " + rk + " roadway unless it has a permit.";
            if (m == Mutation::ExceptionDrop)
                return "A " + vk + " must not be on a " + rk + " roadway.";
            return "A " + vk + " must not be on a " + rk + " roadway unless it has a permit.";
        case 4:
            if (m == Mutation::ConsequentSwap)
                return "A " + vk + " on a " + rk + " roadway must exceed speed " +
                       std::to_string(n) + ".";
            return "A " + vk + " on a " + rk + " roadway must not exceed speed " +
                   std::to_string(n) + ".";
        case 5:
            if (m == Mutation::ConsequentSwap)
                return "A " + vk + " approaching a junction must not yield to a " + vk2 + ".";
            return "A " + vk + " approaching a junction must yield to a " + vk2 + ".";
    }
    throw ConfigError("bad template id " + std::to_string(tid));
}

inline std::string build_formula_text(int tid, const std::string& vk, const std::string& rk,
                                      const std::string& vk2, int n, Mutation m) {
    const std::string kind_v = "(= (vehicle_kind v) " + vk + ")";
    const std::string kind_r = "(= (roadway_kind r) " + rk + ")";
    const std::string on = "(on_roadway v r t)";
    const std::string vrt = "(forall ((v Vehicle) (r Roadway) (t Int)) ";
    switch (tid) {
        case 1: {
            std::string consequent = m == Mutation::ConsequentSwap ? "(stopped v t)"
                                     : m == Mutation::NegationDrop ? on
                                                                   : "(not " + on + ")";
            return vrt + "(=> (and " + kind_v + " " + kind_r + ") " + consequent + "))";
        }
        case 2: {
            std::string consequent =
                m == Mutation::ConsequentSwap ? "(not (stopped v t))" : "(stopped v t)";
            return vrt + "(=> (and " + kind_v + " " + kind_r + " " + on + ") " + consequent +
                   "))";
        }
        case 3: {
            std::string antecedent = "(and " + kind_v + " " + kind_r +
                                     (m == Mutation::ExceptionDrop
                                          ? ")"
                                          : " (not (has_permit v t)))");
            std::string consequent = m == Mutation::ConsequentSwap ? "(stopped v t)"
                                     : m == Mutation::NegationDrop ? on
                                                                   : "(not " + on + ")";
            return vrt + "(=> " + antecedent + " " + consequent + "))";
        }
        case 4: {
            std::string bound = std::to_string(n) + ".0";
            std::string consequent = m == Mutation::ConsequentSwap
                                         ? "(> (speed v t) " + bound + ")"
                                         : "(<= (speed v t) " + bound + ")";
            return vrt + "(=> (and " + kind_v + " " + kind_r + " " + on + ") " + consequent +
                   "))";
        }
        case 5: {
            std::string consequent = m == Mutation::ConsequentSwap
                                         ? "(not (yields_to v w t))"
                                         : "(yields_to v w t)";
            return "(forall ((v Vehicle) (w Vehicle) (t Int)) (=> (and " + kind_v +
                   " (= (vehicle_kind w) " + vk2 + ") (approaching v t)) " + consequent +
                   "))";
        }
    }
    throw ConfigError("bad template id " + std::to_string(tid));
}

// Exact inverse of the sentence grammar (mutated variants included).
inline std::string formula_text_for_sentence(const std::string& sentence) {
    static const std::regex p3(
        R"(^A (\w+) must (not )?be on a (\w+) roadway unless it has a permit\.$)");
    static const std::regex p1(R"(^A (\w+) must (not )?be on a (\w+) roadway\.$)");
    static const std::regex p2(
        R"(^If a (\w+) is on a (\w+) roadway then it must (not )?be stopped\.$)");
    static const std::regex p4(
        R"(^A (\w+) on a (\w+) roadway must (not )?exceed speed (\d+)\.$)");
    static const std::regex p5(
        R"(^A (\w+) approaching a junction must (not )?yield to a (\w+)\.$)");
    static const std::regex p6(R"(^A (\w+) must (not )?be stopped\.$)");

    const std::string vrt = "(forall ((v Vehicle) (r Roadway) (t Int)) ";
    std::smatch m;
    if (std::regex_match(sentence, m, p3)) {
        bool neg = m[2].matched;
        return vrt + "(=> (and (= (vehicle_kind v) " + m[1].str() +
               ") (= (roadway_kind r) " + m[3].str() + ") (not (has_permit v t))) " +
               (neg ? "(not (on_roadway v r t))" : "(on_roadway v r t)") + "))";
    }
    if (std::regex_match(sentence, m, p1)) {
        bool neg = m[2].matched;
        return vrt + "(=> (and (= (vehicle_kind v) " + m[1].str() +
               ") (= (roadway_kind r) " + m[3].str() + ")) " +
               (neg ? "(not (on_roadway v r t))" : "(on_roadway v r t)") + "))";
    }
    if (std::regex_match(sentence, m, p2)) {
        bool neg = m[3].matched;
        return vrt + "(=> (and (= (vehicle_kind v) " + m[1].str() +
               ") (= (roadway_kind r) " + m[2].str() + ") (on_roadway v r t)) " +
               (neg ? "(not (stopped v t))" : "(stopped v t)") + "))";
    }
    if (std::regex_match(sentence, m, p4)) {
        bool neg = m[3].matched;
        std::string bound = m[4].str() + ".0";
        return vrt + "(=> (and (= (vehicle_kind v) " + m[1].str() +
               ") (= (roadway_kind r) " + m[2].str() + ") (on_roadway v r t)) " +
               (neg ? "(<= (speed v t) " + bound + ")" : "(> (speed v t) " + bound + ")") +
               "))";
    }
    if (std::regex_match(sentence, m, p5)) {
        bool neg = m[2].matched;
        return "(forall ((v Vehicle) (w Vehicle) (t Int)) (=> (and (= (vehicle_kind v) " +
               m[1].str() + ") (= (vehicle_kind w) " + m[3].str() +
               ") (approaching v t)) " +
               (neg ? "(not (yields_to v w t))" : "(yields_to v w t)") + "))";
    }
    if (std::regex_match(sentence, m, p6)) {
        bool neg = m[2].matched;
        return "(forall ((v Vehicle) (t Int)) (=> (= (vehicle_kind v) " + m[1].str() +
               ") " + (neg ? "(not (stopped v t))" : "(stopped v t)") + "))";
    }
    throw BackendError("sentence does not match any template: " + sentence);
}

inline Mutation mutation_of(FaultMode mode) {
    switch (mode) {
        case FaultMode::ConsequentSwap: return Mutation::ConsequentSwap;
        case FaultMode::NegationDrop: return Mutation::NegationDrop;
        case FaultMode::ExceptionDrop: return Mutation::ExceptionDrop;
        default: return Mutation::None;
    }
}

inline bool mode_applicable(FaultMode mode, int template_id) {
    switch (mode) {
        case FaultMode::ConsequentSwap:
        case FaultMode::CustomReplacement: return true;
        case FaultMode::NegationDrop: return template_id == 1 || template_id == 3;
        case FaultMode::ExceptionDrop: return template_id == 3;
    }
    return false;
}

struct SyntheticRegistry {
    std::map<std::string, SyntheticRule> rules;
    std::map<std::string, FaultSpec> faults;

    const SyntheticRule& rule(const std::string& id) const {
        auto it = rules.find(id);
        if (it == rules.end()) {
            throw BackendError("synthetic registry has no rule '" + id + "'");
        }
        return it->second;
    }

    // The fault applies when the call plays the faulted stage and either
    // re-emerges (stubborn) or the pipeline is still on its initial pass.
    const FaultSpec* active_fault(const std::string& rule_id, StageId stage,
                                  std::uint64_t iteration) const {
        auto it = faults.find(rule_id);
        if (it == faults.end()) return nullptr;
        const FaultSpec& f = it->second;
        if (f.stage != stage) return nullptr;
        if (!f.stubborn && iteration != 0) return nullptr;
        return &f;
    }

    std::string mutated_artifact(const FaultSpec& f, const SyntheticRule& r) const {
        if (f.mode == FaultMode::CustomReplacement) return f.replacement;
        Mutation m = mutation_of(f.mode);
        if (f.stage == StageId::T2) {
            return build_sentence(r.template_id, r.vk, r.rk, r.vk2, r.speed_bound, m);
        }
        return build_formula_text(r.template_id, r.vk, r.rk, r.vk2, r.speed_bound, m);
    }
};

}  // namespace detail

struct SyntheticBundle {
    SyntheticCorpus corpus;
    BackendSet backends;
    std::shared_ptr<const detail::SyntheticRegistry> registry;
};

// Builds n template rules with parameters drawn from a splitmix64 stream,
// plus exact-inverse oracle backends, fault-injecting wrappers, an oracle
// judge keyed on the fault registry, and oracle repair operators.
inline SyntheticBundle generate_synthetic_corpus(std::uint64_t seed, int n,
                                                 const Schema& schema,
                                                 const std::vector<FaultSpec>& faults = {}) {
    if (n <= 0) {
        throw ConfigError("synthetic corpus size must be positive, got " + std::to_string(n));
    }
    for (const char* sig : {"vehicle_kind", "roadway_kind", "on_roadway", "speed", "stopped",
                            "has_permit", "approaching", "yields_to"}) {
        if (!schema.find_signature(sig)) {
            throw ConfigError(std::string("schema lacks template vocabulary: ") + sig);
        }
    }
    const Sort* vks = schema.find_sort("VehicleKind");
    const Sort* rks = schema.find_sort("RoadwayKind");
    if (!vks || vks->kind != SortKind::Enumerated || !rks ||
        rks->kind != SortKind::Enumerated) {
        throw ConfigError("schema needs enumerated VehicleKind and RoadwayKind sorts");
    }

    auto registry = std::make_shared<detail::SyntheticRegistry>();
    SyntheticCorpus corpus;
    SplitMix64 stream(seed);
    for (int i = 0; i < n; ++i) {
        SyntheticRule rule;
        char id[16];
        std::snprintf(id, sizeof(id), "r%03d", i + 1);
        rule.id = id;
        rule.template_id = static_cast<int>(stream.next_below(5)) + 1;
        rule.vk = vks->constructors[stream.next_below(vks->constructors.size())];
        rule.rk = rks->constructors[stream.next_below(rks->constructors.size())];
        rule.vk2 = vks->constructors[stream.next_below(vks->constructors.size())];
        rule.speed_bound = 10 + 5 * static_cast<int>(stream.next_below(14));
        rule.text = detail::build_sentence(rule.template_id, rule.vk, rule.rk, rule.vk2,
                                           rule.speed_bound, detail::Mutation::None);
        rule.truth = Formula::parse(
            detail::build_formula_text(rule.template_id, rule.vk, rule.rk, rule.vk2,
                                       rule.speed_bound, detail::Mutation::None),
            schema);
        registry->rules[rule.id] = rule;
        corpus.rules.push_back(std::move(rule));
    }

    for (const FaultSpec& f : faults) {
        auto it = registry->rules.find(f.rule_id);
        if (it == registry->rules.end()) {
            throw ConfigError("fault references unknown rule_id '" + f.rule_id + "'");
        }
        if (f.mode == FaultMode::CustomReplacement) {
            if (f.stage != StageId::T2) {
                Formula::parse(f.replacement, schema);  // must parse under the schema
            }
        } else if (!detail::mode_applicable(f.mode, it->second.template_id)) {
            throw ConfigError("fault mode " + to_string(f.mode) +
                              " is not applicable to template " +
                              std::to_string(it->second.template_id) + " (rule " +
                              f.rule_id + ")");
        }
        registry->faults[f.rule_id] = f;
    }

    auto marker_of = [](const std::string& prompt) {
        auto marker = parse_marker(prompt);
        if (!marker) throw BackendError("oracle backend needs a stamped #ROLE: marker");
        return *marker;
    };

    auto reg = std::shared_ptr<const detail::SyntheticRegistry>(registry);

    // T1/T3 parse the sentence found in the prompt; T2 returns the rule's
    // canonical sentence (so an upstream mutation cannot silently
    // round-trip); faults mutate the output of their own stage.
    auto t1 = std::make_shared<FunctionBackend>("oracle-t1", [reg, marker_of](
                                                                const std::string& prompt) {
        auto m = marker_of(prompt);
        if (const FaultSpec* f = reg->active_fault(m.rule_id, StageId::T1, m.iteration)) {
            return reg->mutated_artifact(*f, reg->rule(m.rule_id));
        }
        return detail::formula_text_for_sentence(extract_block(prompt, "ORIGINAL NL:"));
    });
    auto t2 = std::make_shared<FunctionBackend>("oracle-t2", [reg, marker_of](
                                                                const std::string& prompt) {
        auto m = marker_of(prompt);
        if (const FaultSpec* f = reg->active_fault(m.rule_id, StageId::T2, m.iteration)) {
            return reg->mutated_artifact(*f, reg->rule(m.rule_id));
        }
        return reg->rule(m.rule_id).text;
    });
    auto t3 = std::make_shared<FunctionBackend>("oracle-t3", [reg, marker_of](
                                                                const std::string& prompt) {
        auto m = marker_of(prompt);
        if (const FaultSpec* f = reg->active_fault(m.rule_id, StageId::T3, m.iteration)) {
            return reg->mutated_artifact(*f, reg->rule(m.rule_id));
        }
        return detail::formula_text_for_sentence(extract_block(prompt, "RECONSTRUCTED NL:"));
    });
    auto judge = std::make_shared<FunctionBackend>(
        "oracle-judge", [reg, marker_of](const std::string& prompt) {
            auto m = marker_of(prompt);
            auto it = reg->faults.find(m.rule_id);
            int stage = it == reg->faults.end() ? 1 : stage_index(it->second.stage);
            return "FIRST_FAILED_ARROW: " + std::to_string(stage) +
                   "\nREASONING: the artifact produced at this stage does not preserve the "
                   "meaning of its input; regenerate it faithfully.";
        });
    auto r1 = std::make_shared<FunctionBackend>("oracle-r1", [](const std::string& prompt) {
        return detail::formula_text_for_sentence(extract_block(prompt, "ORIGINAL NL:"));
    });
    auto r2 = std::make_shared<FunctionBackend>("oracle-r2", [reg, marker_of](
                                                                const std::string& prompt) {
        return reg->rule(marker_of(prompt).rule_id).text;
    });
    auto r3 = std::make_shared<FunctionBackend>("oracle-r3", [](const std::string& prompt) {
        return detail::formula_text_for_sentence(extract_block(prompt, "RECONSTRUCTED NL:"));
    });

    SyntheticBundle bundle;
    bundle.corpus = std::move(corpus);
    bundle.backends = BackendSet{t1, t2, t3, judge, r1, r2, r3};
    bundle.registry = reg;
    return bundle;
}

}  // namespace rtv
