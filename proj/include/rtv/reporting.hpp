#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rtv/errors.hpp"
#include "rtv/nli.hpp"

namespace rtv {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Rounding matches the presentation in the run report: rates to one
// decimal percent, calls-per-repair to two decimals.
inline double round2(double x) { return std::round(x * 100.0) / 100.0; }
inline double percent1(double fraction) { return std::round(fraction * 1000.0) / 10.0; }

// ---------------------------------------------------------------------------
// Run records (replayable from the per-rule event logs)
// ---------------------------------------------------------------------------

struct IterationEntry {
    int iteration = 0;
    int stage = 0;  // 0 = no stage chosen (failed diagnosis)
    std::string chooser;  // "diagnosis" | "random" | ""
    std::string verdict_after;  // "equivalent" | "not_equivalent" | "unknown" | ""
    long long calls_made = 0;
    std::string repair_error;
};

struct RunRecord {
    std::string rule_id;
    std::string condition;  // "none" | "random" | "full"
    std::string loop_status = "error";  // "success" | "failure" | "error"
    std::string initial_status;  // verdict strings; empty if never checked
    std::string final_status;
    int iterations_used = 0;
    std::vector<IterationEntry> iterations;
    std::map<std::string, long long> call_totals;  // role -> calls
    long long retry_calls = 0;
    std::optional<NliAssessment> nli;
    std::string nli_scorer;
    std::string error_message;

    long long total_calls() const {
        long long total = 0;
        for (const auto& [role, calls] : call_totals) total += calls;
        return total;
    }

    bool repaired() const { return loop_status == "success" && iterations_used >= 1; }
};

// Folds an event stream into a RunRecord; the same fold serves the live
// run and log replay, which keeps the two representations identical.
inline RunRecord fold_events(const std::vector<json>& events) {
    RunRecord record;
    std::map<int, size_t> open_iterations;  // iteration -> index in record.iterations
    auto iteration_entry = [&](int k) -> IterationEntry& {
        auto it = open_iterations.find(k);
        if (it != open_iterations.end()) return record.iterations[it->second];
        record.iterations.push_back(IterationEntry{k, 0, "", "", 0, ""});
        open_iterations[k] = record.iterations.size() - 1;
        return record.iterations.back();
    };
    for (const json& e : events) {
        const std::string type = e.value("type", "");
        if (type == "rule_start") {
            record.rule_id = e.value("rule_id", "");
            record.condition = e.value("condition", "");
        } else if (type == "stage_artifact") {
            const std::string role = e.value("role", "?");
            long long attempts = e.value("attempts", 1);
            record.call_totals[role] += attempts;
            record.retry_calls += attempts - 1;
            int iter = e.value("iteration", 0);
            if (iter > 0) iteration_entry(iter).calls_made += attempts;
        } else if (type == "diagnosis") {
            long long attempts = e.value("attempts", 1);
            record.call_totals["D"] += attempts;
            record.retry_calls += attempts - 1;
            int iter = e.value("iteration", 0);
            if (iter > 0) iteration_entry(iter).calls_made += attempts;
        } else if (type == "stage_selected") {
            IterationEntry& entry = iteration_entry(e.value("iteration", 0));
            entry.stage = e.value("stage", 0);
            entry.chooser = e.value("chooser", "");
        } else if (type == "verdict") {
            int iter = e.value("iteration", 0);
            if (e.value("point", "") == "initial") {
                record.initial_status = e.value("status", "");
                record.final_status = record.initial_status;
            } else {
                IterationEntry& entry = iteration_entry(iter);
                entry.verdict_after = e.value("status", "");
                record.final_status = entry.verdict_after;
            }
        } else if (type == "iteration_error") {
            IterationEntry& entry = iteration_entry(e.value("iteration", 0));
            entry.repair_error = e.value("message", "");
        } else if (type == "rule_error") {
            record.error_message = e.value("message", "");
        } else if (type == "rule_end") {
            record.loop_status = e.value("status", "error");
            record.iterations_used = e.value("iterations_used", 0);
        }
    }
    return record;
}

// ---------------------------------------------------------------------------
// Run directory store
// ---------------------------------------------------------------------------

// Layout: <run>/config.snapshot, <run>/rules/<id>/events.jsonl (+nli.json),
// <run>/summary.json, <run>/tables/*.csv, <run>/report.md.
class RunStore {
  public:
    explicit RunStore(fs::path root, bool create = true) : root_(std::move(root)) {
        if (create) {
            std::error_code ec;
            fs::create_directories(root_ / "rules", ec);
            fs::create_directories(root_ / "tables", ec);
            if (ec) throw StorageError("cannot create run directory: " + ec.message());
        }
    }

    const fs::path& root() const { return root_; }

    void write_config_snapshot(const json& config) {
        write_file(root_ / "config.snapshot", config.dump(2) + "\n");
    }

    std::optional<json> read_config_snapshot() const {
        std::ifstream in(root_ / "config.snapshot");
        if (!in) return std::nullopt;
        json j;
        in >> j;
        return j;
    }

    fs::path rule_dir(const std::string& rule_id) const { return root_ / "rules" / rule_id; }

    // Append-only per-rule event log, flushed on every write.
    class RuleLog {
      public:
        RuleLog(fs::path path, bool truncate) : path_(std::move(path)) {
            out_.open(path_, truncate ? std::ios::trunc : std::ios::app);
            if (!out_) throw StorageError("storage-io: cannot open " + path_.string());
        }

        void append(const json& event) {
            out_ << event.dump() << "\n";
            out_.flush();
            if (!out_) throw StorageError("storage-io: write failed on " + path_.string());
        }

      private:
        fs::path path_;
        std::ofstream out_;
    };

    RuleLog open_rule_log(const std::string& rule_id, bool truncate = true) {
        std::error_code ec;
        fs::create_directories(rule_dir(rule_id), ec);
        if (ec) throw StorageError("storage-io: " + ec.message());
        return RuleLog(rule_dir(rule_id) / "events.jsonl", truncate);
    }

    std::vector<std::string> rule_ids() const {
        std::vector<std::string> out;
        fs::path rules = root_ / "rules";
        if (!fs::exists(rules)) return out;
        for (const auto& entry : fs::directory_iterator(rules)) {
            if (entry.is_directory()) out.push_back(entry.path().filename().string());
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    // Reads a rule's events; a truncated trailing line (killed run) is
    // dropped, corruption elsewhere is a StorageError with the line number.
    std::vector<json> read_events(const std::string& rule_id) const {
        fs::path path = rule_dir(rule_id) / "events.jsonl";
        std::ifstream in(path);
        if (!in) return {};
        std::vector<json> events;
        std::string line;
        int lineno = 0;
        std::vector<std::pair<int, std::string>> bad;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                events.push_back(json::parse(line));
            } catch (const json::exception&) {
                bad.emplace_back(lineno, line);
            }
        }
        for (const auto& [n, text] : bad) {
            if (n != lineno) {
                throw StorageError("corrupt event log for rule " + rule_id + " at line " +
                                   std::to_string(n));
            }
        }
        return events;
    }

    bool rule_complete(const std::string& rule_id) const {
        std::vector<json> events;
        try {
            events = read_events(rule_id);
        } catch (const StorageError&) {
            return false;
        }
        return !events.empty() && events.back().value("type", "") == "rule_end";
    }

    RunRecord replay_rule(const std::string& rule_id) const {
        RunRecord record = fold_events(read_events(rule_id));
        if (record.rule_id.empty()) record.rule_id = rule_id;
        if (auto nli = read_nli(rule_id)) {
            if (nli->contains("category")) {
                NliAssessment a;
                a.scores.e_fwd = nli->value("e_fwd", 0.0);
                a.scores.e_bwd = nli->value("e_bwd", 0.0);
                a.scores.c_fwd = nli->value("c_fwd", 0.0);
                a.scores.c_bwd = nli->value("c_bwd", 0.0);
                a.category = nli_category_from_string((*nli)["category"].get<std::string>());
                record.nli = a;
                record.nli_scorer = nli->value("scorer", "");
            }
        }
        return record;
    }

    std::vector<RunRecord> replay_all() const {
        std::vector<RunRecord> out;
        for (const std::string& id : rule_ids()) out.push_back(replay_rule(id));
        return out;
    }

    void write_nli(const std::string& rule_id, const json& assessment) {
        std::error_code ec;
        fs::create_directories(rule_dir(rule_id), ec);
        write_file(rule_dir(rule_id) / "nli.json", assessment.dump(2) + "\n");
    }

    std::optional<json> read_nli(const std::string& rule_id) const {
        std::ifstream in(rule_dir(rule_id) / "nli.json");
        if (!in) return std::nullopt;
        try {
            json j;
            in >> j;
            return j;
        } catch (const json::exception&) {
            return std::nullopt;
        }
    }

    void write_summary(const json& summary) {
        write_file(root_ / "summary.json", summary.dump(2) + "\n");
    }

    void write_table(const std::string& name, const std::string& csv) {
        write_file(root_ / "tables" / name, csv);
    }

    void write_report(const std::string& markdown) {
        write_file(root_ / "report.md", markdown);
    }

  private:
    void write_file(const fs::path& path, const std::string& content) {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw StorageError("storage-io: cannot open " + path.string());
        out << content;
        out.flush();
        if (!out) throw StorageError("storage-io: write failed on " + path.string());
    }

    fs::path root_;
};

inline void record_event(RunStore::RuleLog& log, const json& event) { log.append(event); }

// ---------------------------------------------------------------------------
// Summaries and table statistics
// ---------------------------------------------------------------------------

struct RunSummary {
    std::string condition;
    int corpus_size = 0;
    int errored = 0;
    int initial_unsat = 0;  // UNSAT of the negated equality = equivalent
    int initial_sat = 0;
    int initial_unknown = 0;
    int repair_successes = 0;
    std::vector<int> successes_by_iteration;  // index 0 -> iteration 1
    int repair_failures = 0;
    long long total_calls = 0;
    long long retry_calls = 0;
    std::optional<double> calls_per_repair;
    int final_unsat = 0;
    int final_sat = 0;
    int final_unknown = 0;
    double final_unsat_rate_percent = 0.0;

    json to_json() const {
        json j = {
            {"condition", condition},
            {"corpus_size", corpus_size},
            {"errored", errored},
            {"initial", {{"unsat", initial_unsat}, {"sat", initial_sat}, {"unknown", initial_unknown}}},
            {"repair_successes", repair_successes},
            {"successes_by_iteration", successes_by_iteration},
            {"repair_failures", repair_failures},
            {"total_calls", total_calls},
            {"retry_calls", retry_calls},
            {"final", {{"unsat", final_unsat}, {"sat", final_sat}, {"unknown", final_unknown}}},
            {"final_unsat_rate_percent", final_unsat_rate_percent},
        };
        if (calls_per_repair) {
            j["calls_per_repair"] = *calls_per_repair;
        } else {
            j["calls_per_repair"] = nullptr;
        }
        return j;
    }
};

inline int max_iteration_seen(const std::vector<RunRecord>& records) {
    int k = 0;
    for (const RunRecord& r : records) {
        k = std::max(k, r.iterations_used);
        for (const IterationEntry& e : r.iterations) k = std::max(k, e.iteration);
    }
    return k;
}

inline RunSummary summarize_run(const std::vector<RunRecord>& records, int k_budget = -1) {
    RunSummary s;
    s.corpus_size = static_cast<int>(records.size());
    for (const RunRecord& r : records) {
        if (!s.condition.empty() && !r.condition.empty() && r.condition != s.condition) {
            throw Error("summarize_run: mixed conditions '" + s.condition + "' and '" +
                        r.condition + "'");
        }
        if (s.condition.empty()) s.condition = r.condition;
    }
    int k = k_budget >= 0 ? k_budget : max_iteration_seen(records);
    s.successes_by_iteration.assign(static_cast<size_t>(k), 0);
    for (const RunRecord& r : records) {
        if (r.loop_status == "error") {
            ++s.errored;
            continue;
        }
        if (r.initial_status == "equivalent") ++s.initial_unsat;
        else if (r.initial_status == "not_equivalent") ++s.initial_sat;
        else ++s.initial_unknown;
        if (r.final_status == "equivalent") ++s.final_unsat;
        else if (r.final_status == "not_equivalent") ++s.final_sat;
        else ++s.final_unknown;
        if (r.repaired()) {
            ++s.repair_successes;
            if (r.iterations_used >= 1 && r.iterations_used <= k) {
                ++s.successes_by_iteration[static_cast<size_t>(r.iterations_used - 1)];
            }
        }
        if (r.loop_status == "failure") ++s.repair_failures;
        s.total_calls += r.total_calls();
        s.retry_calls += r.retry_calls;
    }
    if (s.repair_successes > 0) {
        s.calls_per_repair = round2(static_cast<double>(s.total_calls) /
                                    static_cast<double>(s.repair_successes));
    }
    if (s.corpus_size > 0) {
        s.final_unsat_rate_percent =
            percent1(static_cast<double>(s.final_unsat) / static_cast<double>(s.corpus_size));
    }
    return s;
}

// Cumulative equivalent counts at iterations 0..K (element 0 = initial).
inline std::vector<int> cumulative_by_iteration(const std::vector<RunRecord>& records,
                                                int k_budget = -1) {
    int k = k_budget >= 0 ? k_budget : max_iteration_seen(records);
    std::vector<int> out(static_cast<size_t>(k) + 1, 0);
    for (const RunRecord& r : records) {
        if (r.loop_status == "error") continue;
        if (r.initial_status == "equivalent") {
            for (int i = 0; i <= k; ++i) ++out[static_cast<size_t>(i)];
        } else if (r.repaired() && r.iterations_used <= k) {
            for (int i = r.iterations_used; i <= k; ++i) ++out[static_cast<size_t>(i)];
        }
    }
    return out;
}

struct StageDistribution {
    long long counts[3] = {0, 0, 0};  // T1, T2, T3
    long long total = 0;
    std::map<int, std::array<long long, 3>> per_iteration;

    double fraction(int stage) const {
        return total == 0 ? 0.0
                          : static_cast<double>(counts[stage - 1]) / static_cast<double>(total);
    }
};

// Counts every chooser decision, including iterations that did not end in
// a successful repair.
inline StageDistribution stage_distribution(const std::vector<RunRecord>& records) {
    StageDistribution d;
    for (const RunRecord& r : records) {
        for (const IterationEntry& e : r.iterations) {
            if (e.stage < 1 || e.stage > 3) continue;
            ++d.counts[e.stage - 1];
            ++d.total;
            auto& row = d.per_iteration[e.iteration];
            ++row[static_cast<size_t>(e.stage - 1)];
        }
    }
    return d;
}

inline const std::vector<NLICategory>& nli_category_order() {
    static const std::vector<NLICategory> kOrder = {
        NLICategory::Equivalent, NLICategory::Related,   NLICategory::Strengthened,
        NLICategory::Weakened,   NLICategory::Unrelated, NLICategory::Contradiction,
    };
    return kOrder;
}

struct CrossTab {
    // Row 0: final UNSAT (equivalent); row 1: final SAT (not equivalent).
    long long cells[2][6] = {};
    std::vector<std::string> missing_nli;
    std::vector<std::string> unknown_final;

    long long row_total(int row) const {
        long long total = 0;
        for (int c = 0; c < 6; ++c) total += cells[row][c];
        return total;
    }

    // Fraction of formally-equivalent rules whose NLI reading drifted
    // (Unrelated or Contradiction).
    double unsat_drift_rate_percent() const {
        long long total = row_total(0);
        if (total == 0) return 0.0;
        return percent1(static_cast<double>(cells[0][4] + cells[0][5]) /
                        static_cast<double>(total));
    }
};

inline CrossTab cross_tabulate(const std::vector<RunRecord>& records) {
    CrossTab tab;
    for (const RunRecord& r : records) {
        if (r.loop_status == "error") continue;
        if (!r.nli) {
            tab.missing_nli.push_back(r.rule_id);
            continue;
        }
        int row;
        if (r.final_status == "equivalent") {
            row = 0;
        } else if (r.final_status == "not_equivalent") {
            row = 1;
        } else {
            tab.unknown_final.push_back(r.rule_id);
            continue;
        }
        const auto& order = nli_category_order();
        for (size_t c = 0; c < order.size(); ++c) {
            if (order[c] == r.nli->category) {
                ++tab.cells[row][c];
                break;
            }
        }
    }
    return tab;
}

struct OverlapReport {
    std::vector<std::string> both, full_only, random_only, neither;
};

// Partitions the initially-SAT pool by which condition repaired each rule.
inline OverlapReport repair_overlap(const std::vector<RunRecord>& full_records,
                                    const std::vector<RunRecord>& random_records) {
    std::map<std::string, const RunRecord*> full_by_id, random_by_id;
    for (const RunRecord& r : full_records) full_by_id[r.rule_id] = &r;
    for (const RunRecord& r : random_records) random_by_id[r.rule_id] = &r;
    if (full_by_id.size() != random_by_id.size() ||
        full_records.size() != full_by_id.size() ||
        random_records.size() != random_by_id.size()) {
        throw Error("repair_overlap: rule universes do not match");
    }
    OverlapReport report;
    for (const auto& [id, full] : full_by_id) {
        auto it = random_by_id.find(id);
        if (it == random_by_id.end()) {
            throw Error("repair_overlap: rule universes do not match (missing " + id + ")");
        }
        const RunRecord* random = it->second;
        if (full->initial_status != random->initial_status) {
            throw Error("repair_overlap: initial pools differ for rule " + id);
        }
        if (full->initial_status != "not_equivalent") continue;
        bool f = full->repaired();
        bool r = random->repaired();
        if (f && r) report.both.push_back(id);
        else if (f) report.full_only.push_back(id);
        else if (r) report.random_only.push_back(id);
        else report.neither.push_back(id);
    }
    return report;
}

// ---------------------------------------------------------------------------
// CSV / markdown rendering
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string format_percent(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

}  // namespace detail

inline std::string render_summary_csv(const RunSummary& s) {
    std::string csv = "metric,value\n";
    csv += "condition," + s.condition + "\n";
    csv += "corpus_size," + std::to_string(s.corpus_size) + "\n";
    csv += "initial_unsat," + std::to_string(s.initial_unsat) + "\n";
    csv += "initial_sat," + std::to_string(s.initial_sat) + "\n";
    csv += "initial_unknown," + std::to_string(s.initial_unknown) + "\n";
    csv += "repair_successes," + std::to_string(s.repair_successes) + "\n";
    for (size_t i = 0; i < s.successes_by_iteration.size(); ++i) {
        csv += "successes_after_iteration_" + std::to_string(i + 1) + "," +
               std::to_string(s.successes_by_iteration[i]) + "\n";
    }
    csv += "repair_failures," + std::to_string(s.repair_failures) + "\n";
    csv += "errored," + std::to_string(s.errored) + "\n";
    csv += "total_calls," + std::to_string(s.total_calls) + "\n";
    csv += "retry_calls," + std::to_string(s.retry_calls) + "\n";
    csv += "calls_per_repair," +
           (s.calls_per_repair ? detail::format_double(*s.calls_per_repair) : "") + "\n";
    csv += "final_unsat," + std::to_string(s.final_unsat) + "\n";
    csv += "final_sat," + std::to_string(s.final_sat) + "\n";
    csv += "final_unknown," + std::to_string(s.final_unknown) + "\n";
    csv += "final_unsat_rate_percent," + detail::format_percent(s.final_unsat_rate_percent) +
           "\n";
    return csv;
}

inline std::string render_cross_tab_csv(const CrossTab& tab) {
    std::string csv = "verdict,Eq,Re,St,Wk,Un,Co,total\n";
    const char* rows[2] = {"UNSAT", "SAT"};
    for (int r = 0; r < 2; ++r) {
        csv += rows[r];
        for (int c = 0; c < 6; ++c) csv += "," + std::to_string(tab.cells[r][c]);
        csv += "," + std::to_string(tab.row_total(r)) + "\n";
    }
    return csv;
}

inline std::string render_stage_distribution_csv(const StageDistribution& d) {
    std::string csv = "stage,count,total,fraction_percent\n";
    for (int stage = 1; stage <= 3; ++stage) {
        csv += "T" + std::to_string(stage) + "," + std::to_string(d.counts[stage - 1]) + "," +
               std::to_string(d.total) + "," +
               detail::format_percent(percent1(d.fraction(stage))) + "\n";
    }
    return csv;
}

inline std::string render_stage_by_iteration_csv(const StageDistribution& d) {
    std::string csv = "iteration,T1,T2,T3\n";
    for (const auto& [iteration, row] : d.per_iteration) {
        csv += std::to_string(iteration);
        for (long long c : row) csv += "," + std::to_string(c);
        csv += "\n";
    }
    return csv;
}

inline std::string render_cumulative_csv(const std::vector<int>& cumulative) {
    std::string csv = "iteration,cumulative_unsat\n";
    for (size_t i = 0; i < cumulative.size(); ++i) {
        csv += std::to_string(i) + "," + std::to_string(cumulative[i]) + "\n";
    }
    return csv;
}

inline std::string render_overlap_csv(const OverlapReport& o) {
    auto join = [](const std::vector<std::string>& v) {
        std::string out;
        for (size_t i = 0; i < v.size(); ++i) {
            if (i) out += " ";
            out += v[i];
        }
        return out;
    };
    std::string csv = "set,count,rule_ids\n";
    csv += "both," + std::to_string(o.both.size()) + "," + join(o.both) + "\n";
    csv += "full_only," + std::to_string(o.full_only.size()) + "," + join(o.full_only) + "\n";
    csv += "random_only," + std::to_string(o.random_only.size()) + "," + join(o.random_only) +
           "\n";
    csv += "neither," + std::to_string(o.neither.size()) + "," + join(o.neither) + "\n";
    return csv;
}

inline std::string render_report_markdown(const RunSummary& s,
                                          const std::vector<int>& cumulative,
                                          const StageDistribution& stages,
                                          const CrossTab& tab,
                                          const std::vector<std::string>& excluded_rules) {
    std::string md = "# Run report\n\n";
    md += "Condition: **" + s.condition + "**, corpus size " +
          std::to_string(s.corpus_size) + ".\n\n";
    md += "## Equivalence and repair outcomes\n\n";
    md += "| metric | value |\n|---|---|\n";
    md += "| Initial UNSAT | " + std::to_string(s.initial_unsat) + " |\n";
    md += "| Initial SAT | " + std::to_string(s.initial_sat) + " |\n";
    md += "| Initial unknown | " + std::to_string(s.initial_unknown) + " |\n";
    md += "| Repair successes | " + std::to_string(s.repair_successes) + " |\n";
    for (size_t i = 0; i < s.successes_by_iteration.size(); ++i) {
        md += "| &nbsp;&nbsp;after iteration " + std::to_string(i + 1) + " | " +
              std::to_string(s.successes_by_iteration[i]) + " |\n";
    }
    md += "| Repair failures | " + std::to_string(s.repair_failures) + " |\n";
    md += "| Total backend calls | " + std::to_string(s.total_calls) + " |\n";
    md += "| &nbsp;&nbsp;retry-only calls | " + std::to_string(s.retry_calls) + " |\n";
    md += "| Calls / repair | " +
          (s.calls_per_repair ? detail::format_double(*s.calls_per_repair) : "n/a") + " |\n";
    md += "| Final UNSAT | " + std::to_string(s.final_unsat) + " (" +
          detail::format_percent(s.final_unsat_rate_percent) + "%) |\n";
    md += "| Final unknown | " + std::to_string(s.final_unknown) + " |\n\n";
    md += "Unknown verdicts are tracked separately from UNSAT and SAT; bounded\n";
    md += "enumeration verdicts are flagged in the per-rule event logs.\n\n";
    md += "## Cumulative UNSAT per iteration\n\n";
    md += "| iteration | cumulative UNSAT |\n|---|---|\n";
    for (size_t i = 0; i < cumulative.size(); ++i) {
        md += "| " + std::to_string(i) + " | " + std::to_string(cumulative[i]) + " |\n";
    }
    md += "\n## Stage selection distribution\n\n";
    md += "Every chooser decision is counted, including iterations whose repair\n";
    md += "did not succeed, so totals can exceed the repair pool.\n\n";
    md += "| stage | count | fraction |\n|---|---|---|\n";
    for (int stage = 1; stage <= 3; ++stage) {
        md += "| T" + std::to_string(stage) + " | " + std::to_string(stages.counts[stage - 1]) +
              "/" + std::to_string(stages.total) + " | " +
              detail::format_percent(percent1(stages.fraction(stage))) + "% |\n";
    }
    md += "\n## Formal verdict x NLI category\n\n";
    md += "| verdict | Eq | Re | St | Wk | Un | Co | total |\n|---|---|---|---|---|---|---|---|\n";
    const char* rows[2] = {"UNSAT", "SAT"};
    for (int r = 0; r < 2; ++r) {
        md += std::string("| ") + rows[r];
        for (int c = 0; c < 6; ++c) md += " | " + std::to_string(tab.cells[r][c]);
        md += " | " + std::to_string(tab.row_total(r)) + " |\n";
    }
    md += "\nUNSAT drift rate (Un+Co): " +
          detail::format_percent(tab.unsat_drift_rate_percent()) + "%\n";
    if (!tab.missing_nli.empty()) {
        md += "\nRules without NLI assessment: ";
        for (size_t i = 0; i < tab.missing_nli.size(); ++i) {
            if (i) md += ", ";
            md += tab.missing_nli[i];
        }
        md += "\n";
    }
    if (!excluded_rules.empty()) {
        md += "\nRules excluded for corrupt logs: ";
        for (size_t i = 0; i < excluded_rules.size(); ++i) {
            if (i) md += ", ";
            md += excluded_rules[i];
        }
        md += "\n";
    }
    return md;
}

}  // namespace rtv
