#pragma once

// Shared fixtures: the fire-hose rule's end-to-end repair trace (used as
// scripted replay data) and builders for the recorded-count summary
// fixtures behind the reporting tests.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rtv/backend.hpp"
#include "rtv/reporting.hpp"
#include "rtv/synthetic.hpp"

namespace fixtures {

inline const char* fire_hose_rule_id() { return "r127"; }

inline const char* fire_hose_nl() {
    return "An operator may not drive over an unprotected fire hose on a street without "
           "the consent of the fire department official in command.";
}

inline const char* fire_hose_y_orig() {
    return "(forall ((v Vehicle) (r Roadway) (t Int))\n"
           "  (=> (and (fire_hose_on_roadway r t)\n"
           "           (not (fire_dept_consent v t)))\n"
           "      (not (on_roadway v r t))))";
}

inline const char* fire_hose_x_prime() {
    return "An operator may not drive over a fire hose laid on a roadway unless the "
           "operator has obtained consent from the fire department.";
}

inline const char* fire_hose_y_rt() {
    return "(forall ((v Vehicle) (r Roadway) (t Int))\n"
           "  (=> (and (on_roadway v r t)\n"
           "           (fire_hose_on_roadway r t)\n"
           "           (not (fire_dept_consent v t)))\n"
           "      (stopped v t)))";
}

inline const char* fire_hose_diagnosis_reply() {
    return "FIRST_FAILED_ARROW: 3\n"
           "REASONING: The reconstructed sentence forbids driving over the hose, so the "
           "consequent should state that the vehicle is not on the roadway, i.e. "
           "(not (on_roadway v r t)). The third encoding instead requires (stopped v t); "
           "a stopped vehicle can still be on the roadway. Replace the consequent with "
           "(not (on_roadway v r t)).";
}

inline const char* fire_hose_repaired_y_rt() {
    return "(forall ((v Vehicle) (r Roadway) (t Int))\n"
           "  (=> (and (on_roadway v r t)\n"
           "           (fire_hose_on_roadway r t)\n"
           "           (not (fire_dept_consent v t)))\n"
           "      (not (on_roadway v r t))))";
}

// Replay table covering the whole trace: initial pass at iteration 0,
// diagnosis and stage-3 repair at iteration 1.
inline std::shared_ptr<rtv::ScriptedBackend> fire_hose_backend() {
    auto backend = std::make_shared<rtv::ScriptedBackend>("fire-hose-replay");
    backend->add_reply("T1", fire_hose_rule_id(), 0, fire_hose_y_orig());
    backend->add_reply("T2", fire_hose_rule_id(), 0, fire_hose_x_prime());
    backend->add_reply("T3", fire_hose_rule_id(), 0, fire_hose_y_rt());
    backend->add_reply("D", fire_hose_rule_id(), 1, fire_hose_diagnosis_reply());
    backend->add_reply("R3", fire_hose_rule_id(), 1, fire_hose_repaired_y_rt());
    return backend;
}

inline void write_fire_hose_replay_jsonl(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    auto put = [&](const char* role, int iter, const std::string& reply) {
        out << nlohmann::json{{"role", role},
                              {"rule_id", fire_hose_rule_id()},
                              {"iteration", iter},
                              {"reply", reply}}
                   .dump()
            << "\n";
    };
    put("T1", 0, fire_hose_y_orig());
    put("T2", 0, fire_hose_x_prime());
    put("T3", 0, fire_hose_y_rt());
    put("D", 1, fire_hose_diagnosis_reply());
    put("R3", 1, fire_hose_repaired_y_rt());
}

// ---------------------------------------------------------------------------
// Recorded-count fixtures for the reporting statistics
// ---------------------------------------------------------------------------

// One experiment condition reconstructed from recorded counts.
struct ConditionCounts {
    std::string condition;                 // "none" | "random" | "full"
    int corpus_size = 150;
    int initial_unsat = 0;
    std::vector<int> successes_by_iteration;  // per iteration 1..K
    long long total_calls = 0;
    // stage selections per iteration: [iteration][stage-1]
    std::vector<std::array<int, 3>> stage_selections;
    // NLI categories for the final UNSAT row then the final SAT row,
    // order Eq, Re, St, Wk, Un, Co. Empty = no NLI fixture.
    std::array<int, 6> nli_unsat{};
    std::array<int, 6> nli_sat{};
    bool with_nli = false;
    // Which initially-SAT rules get repaired, as indices into the SAT pool
    // (filled sequentially when empty).
    std::vector<int> repaired_pool_indices;
};

// Builds per-rule RunRecords whose aggregate statistics reproduce the
// recorded counts. Rule ids are shared across conditions (rule_000...),
// with the initially-UNSAT block first.
inline std::vector<rtv::RunRecord> build_records(const ConditionCounts& c) {
    std::vector<rtv::RunRecord> records;
    int k = static_cast<int>(c.successes_by_iteration.size());
    int total_successes = 0;
    for (int s : c.successes_by_iteration) total_successes += s;
    int pool = c.corpus_size - c.initial_unsat;

    // Assign repaired rules: first `successes_by_iteration[0]` of the pool
    // succeed at iteration 1, and so on; the rest fail after K iterations.
    std::vector<int> success_iteration(static_cast<size_t>(pool), 0);
    {
        std::vector<int> order = c.repaired_pool_indices;
        if (order.empty()) {
            for (int i = 0; i < total_successes; ++i) order.push_back(i);
        }
        int cursor = 0;
        for (int iter = 1; iter <= k; ++iter) {
            for (int j = 0; j < c.successes_by_iteration[static_cast<size_t>(iter - 1)];
                 ++j) {
                success_iteration[static_cast<size_t>(order[static_cast<size_t>(cursor++)])] =
                    iter;
            }
        }
    }

    // Distribute stage selections per iteration over the rules that are
    // still unrepaired when that iteration runs.
    std::vector<std::array<int, 3>> remaining = c.stage_selections;

    // Distribute calls evenly with the remainder on the first records.
    long long base_calls = c.corpus_size ? c.total_calls / c.corpus_size : 0;
    long long extra = c.corpus_size ? c.total_calls % c.corpus_size : 0;

    // NLI category queues for final-UNSAT and final-SAT rules.
    std::array<int, 6> unsat_left = c.nli_unsat;
    std::array<int, 6> sat_left = c.nli_sat;
    auto next_category = [](std::array<int, 6>& left) {
        static const rtv::NLICategory order[6] = {
            rtv::NLICategory::Equivalent,   rtv::NLICategory::Related,
            rtv::NLICategory::Strengthened, rtv::NLICategory::Weakened,
            rtv::NLICategory::Unrelated,    rtv::NLICategory::Contradiction,
        };
        for (int i = 0; i < 6; ++i) {
            if (left[static_cast<size_t>(i)] > 0) {
                --left[static_cast<size_t>(i)];
                return order[i];
            }
        }
        return rtv::NLICategory::Equivalent;
    };

    for (int i = 0; i < c.corpus_size; ++i) {
        rtv::RunRecord r;
        char id[32];
        std::snprintf(id, sizeof(id), "rule_%03d", i);
        r.rule_id = id;
        r.condition = c.condition;
        bool initially_unsat = i < c.initial_unsat;
        r.initial_status = initially_unsat ? "equivalent" : "not_equivalent";
        if (initially_unsat) {
            r.loop_status = "success";
            r.iterations_used = 0;
            r.final_status = "equivalent";
        } else {
            int pool_index = i - c.initial_unsat;
            int success_at = success_iteration[static_cast<size_t>(pool_index)];
            int iterations = success_at > 0 ? success_at : k;
            for (int iter = 1; iter <= iterations; ++iter) {
                rtv::IterationEntry e;
                e.iteration = iter;
                e.chooser = c.condition == "full" ? "diagnosis" : "random";
                // Pull the next available stage for this iteration.
                e.stage = 1;
                if (static_cast<size_t>(iter - 1) < remaining.size()) {
                    auto& row = remaining[static_cast<size_t>(iter - 1)];
                    for (int s = 0; s < 3; ++s) {
                        if (row[static_cast<size_t>(s)] > 0) {
                            --row[static_cast<size_t>(s)];
                            e.stage = s + 1;
                            break;
                        }
                    }
                }
                e.verdict_after =
                    (success_at > 0 && iter == success_at) ? "equivalent" : "not_equivalent";
                r.iterations.push_back(e);
            }
            if (success_at > 0) {
                r.loop_status = "success";
                r.iterations_used = success_at;
                r.final_status = "equivalent";
            } else {
                r.loop_status = "failure";
                r.iterations_used = k;
                r.final_status = "not_equivalent";
            }
        }
        r.call_totals["T1"] = base_calls + (i < extra ? 1 : 0);
        if (c.with_nli) {
            rtv::NliAssessment a;
            a.category = r.final_status == "equivalent" ? next_category(unsat_left)
                                                        : next_category(sat_left);
            r.nli = a;
        }
        records.push_back(std::move(r));
    }
    return records;
}

// Recorded counts for the four model/condition summaries exercised by the
// reporting tests, plus the two no-repair baselines.
inline ConditionCounts claude_full() {
    ConditionCounts c;
    c.condition = "full";
    c.initial_unsat = 67;
    c.successes_by_iteration = {34, 18, 9};
    c.total_calls = 440;
    c.stage_selections = {{{25, 24, 34}}, {{9, 7, 33}}, {{6, 3, 22}}};
    c.nli_unsat = {73, 13, 24, 6, 4, 8};
    c.nli_sat = {13, 1, 4, 1, 1, 2};
    c.with_nli = true;
    return c;
}

inline ConditionCounts claude_random() {
    ConditionCounts c;
    c.condition = "random";
    c.initial_unsat = 67;
    c.successes_by_iteration = {19, 11, 3};
    c.total_calls = 405;
    c.stage_selections = {{{28, 29, 26}}, {{22, 22, 20}}, {{18, 18, 17}}};
    c.nli_unsat = {55, 7, 18, 6, 10, 4};
    c.nli_sat = {21, 5, 8, 6, 5, 5};
    c.with_nli = true;
    return c;
}

inline ConditionCounts gpt_full() {
    ConditionCounts c;
    c.condition = "full";
    c.initial_unsat = 92;
    c.successes_by_iteration = {19, 10, 3};
    c.total_calls = 466;
    c.stage_selections = {{{49, 1, 8}}, {{33, 2, 4}}, {{23, 1, 5}}};
    c.nli_unsat = {66, 12, 14, 15, 9, 8};
    c.nli_sat = {10, 2, 4, 1, 5, 4};
    c.with_nli = true;
    return c;
}

inline ConditionCounts gpt_random() {
    ConditionCounts c;
    c.condition = "random";
    c.initial_unsat = 92;
    c.successes_by_iteration = {19, 5, 2};
    c.total_calls = 254;
    c.stage_selections = {{{19, 18, 21}}, {{13, 12, 14}}, {{10, 9, 15}}};
    c.nli_unsat = {62, 12, 12, 14, 9, 9};
    c.nli_sat = {12, 3, 4, 4, 6, 3};
    c.with_nli = true;
    return c;
}

// Overlap fixtures: the full run repairs pool indices 0..60 (61 rules) and
// the random run repairs 26 shared ones plus 7 exclusive, reproducing the
// recorded 35 full-only vs 7 random-only split over the 83-rule pool.
inline std::vector<int> claude_random_overlap_indices() {
    std::vector<int> indices;
    for (int i = 0; i < 26; ++i) indices.push_back(i);       // shared with full
    for (int i = 61; i < 68; ++i) indices.push_back(i);      // random-only
    return indices;
}

// GPT: full repairs 0..31 (32 rules); random repairs 17 shared + 9
// exclusive = 26, giving 15 full-only vs 9 random-only over 58.
inline std::vector<int> gpt_random_overlap_indices() {
    std::vector<int> indices;
    for (int i = 0; i < 17; ++i) indices.push_back(i);
    for (int i = 32; i < 41; ++i) indices.push_back(i);
    return indices;
}

}  // namespace fixtures
