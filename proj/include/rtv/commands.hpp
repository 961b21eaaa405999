#pragma once

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "rtv/runner.hpp"

namespace rtv {

// Exit codes: cmd_verify uses 0 equivalent / 1 not-equivalent / 2 unknown;
// everything else returns 0 on completion (even with repair failures) and
// 3 on configuration, parse, or storage errors.
inline constexpr int kExitEquivalent = 0;
inline constexpr int kExitNotEquivalent = 1;
inline constexpr int kExitUnknown = 2;
inline constexpr int kExitError = 3;

inline int cmd_run(const RunConfig& config, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    try {
        RunResult result = execute_run(config);
        out << "run complete: " << result.processed << " processed, " << result.skipped
            << " skipped (resume)\n";
        out << "condition " << result.summary.condition << ": initial UNSAT "
            << result.summary.initial_unsat << ", repairs " << result.summary.repair_successes
            << ", final UNSAT " << result.summary.final_unsat << "/"
            << result.summary.corpus_size << " ("
            << detail::format_percent(result.summary.final_unsat_rate_percent) << "%)\n";
        out << "summary written to " << config.run_dir << "/summary.json\n";
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

inline int cmd_verify(const std::string& schema_path, const std::string& formula_a_path,
                      const std::string& formula_b_path, const EquivalenceConfig& eq,
                      std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    try {
        Schema schema = Schema::load(read_text_file(schema_path));
        Formula a = Formula::parse(read_text_file(formula_a_path), schema);
        Formula b = Formula::parse(read_text_file(formula_b_path), schema);
        EquivalenceVerdict v = decide_equivalence(a, b, schema, eq);
        switch (v.status) {
            case EquivStatus::Equivalent:
                out << "equivalent (" << to_string(v.backend)
                    << (v.bounded ? ", bounded" : "") << ")\n";
                return kExitEquivalent;
            case EquivStatus::NotEquivalent:
                out << "not-equivalent (" << to_string(v.backend) << ")\n";
                if (v.counterexample) {
                    out << "counterexample:\n" << v.counterexample->describe(schema);
                }
                return kExitNotEquivalent;
            default:
                out << "unknown" << (v.note.empty() ? "" : " (" + v.note + ")") << "\n";
                return kExitUnknown;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

inline int cmd_report(const std::vector<std::string>& run_dirs,
                      std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    try {
        if (run_dirs.empty() || run_dirs.size() > 2) {
            throw ConfigError("report expects one run directory, or two for the overlap");
        }
        std::vector<std::vector<RunRecord>> all_records;
        for (const std::string& dir : run_dirs) {
            RunStore store((fs::path(dir)), /*create=*/false);
            if (!fs::exists(store.root() / "rules")) {
                throw ConfigError("not a run directory: " + dir);
            }
            std::vector<RunRecord> records;
            std::vector<std::string> excluded;
            for (const std::string& id : store.rule_ids()) {
                try {
                    records.push_back(store.replay_rule(id));
                } catch (const StorageError& e) {
                    excluded.push_back(id);
                    err << "warning: " << e.what() << " (excluded)\n";
                }
            }
            int k = max_iteration_seen(records);
            RunSummary summary = summarize_run(records, k);
            std::vector<int> cumulative = cumulative_by_iteration(records, k);
            StageDistribution stages = stage_distribution(records);
            CrossTab tab = cross_tabulate(records);
            RunStore writable((fs::path(dir)));
            writable.write_summary(summary.to_json());
            writable.write_table("table1_summary.csv", render_summary_csv(summary));
            writable.write_table("table2_cross_tab.csv", render_cross_tab_csv(tab));
            writable.write_table("table3_stage_distribution.csv",
                                 render_stage_distribution_csv(stages));
            writable.write_table("fig4_cumulative.csv", render_cumulative_csv(cumulative));
            writable.write_table("fig6_stage_by_iteration.csv",
                                 render_stage_by_iteration_csv(stages));
            writable.write_report(
                render_report_markdown(summary, cumulative, stages, tab, excluded));
            out << dir << ": condition " << summary.condition << ", final UNSAT "
                << summary.final_unsat << "/" << summary.corpus_size << "\n";
            all_records.push_back(std::move(records));
        }
        if (all_records.size() == 2) {
            // Overlap wants (full, random); accept either argument order.
            const std::vector<RunRecord>* full = &all_records[0];
            const std::vector<RunRecord>* random = &all_records[1];
            auto condition_of = [](const std::vector<RunRecord>& records) {
                return records.empty() ? std::string() : records.front().condition;
            };
            if (condition_of(*full) == "random" && condition_of(*random) == "full") {
                std::swap(full, random);
            }
            OverlapReport overlap = repair_overlap(*full, *random);
            RunStore writable((fs::path(run_dirs[0])));
            writable.write_table("fig5_overlap.csv", render_overlap_csv(overlap));
            out << "overlap: both " << overlap.both.size() << ", full-only "
                << overlap.full_only.size() << ", random-only " << overlap.random_only.size()
                << ", neither " << overlap.neither.size() << "\n";
        }
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

// Adds NLI assessments to a run directory (from its logs) or scores a
// JSONL pair file ({id, premise, hypothesis} records). Idempotent.
inline int cmd_nli(const std::string& target, const NliConfig& nli_config,
                   std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    try {
        if (nli_config.mode == NliMode::Off) {
            throw ConfigError("nli scorer is off; pass baseline or external");
        }
        std::unique_ptr<NliScorer> scorer = make_scorer(nli_config);
        if (fs::is_directory(target)) {
            RunStore store((fs::path(target)), /*create=*/false);
            int scored = 0, failed = 0;
            for (const std::string& id : store.rule_ids()) {
                std::vector<json> events = store.read_events(id);
                std::string x, x_prime;
                for (const json& e : events) {
                    if (e.value("type", "") == "rule_start") x = e.value("text", "");
                    if (e.value("type", "") == "rule_end") {
                        x_prime = e.value("final_x_prime", "");
                    }
                }
                if (x.empty() || x_prime.empty()) {
                    err << "warning: rule " << id << " lacks text artifacts; skipped\n";
                    ++failed;
                    continue;
                }
                try {
                    NliAssessment a = assess_pair(x, x_prime, *scorer);
                    store.write_nli(id, json{{"e_fwd", a.scores.e_fwd},
                                             {"e_bwd", a.scores.e_bwd},
                                             {"c_fwd", a.scores.c_fwd},
                                             {"c_bwd", a.scores.c_bwd},
                                             {"e_min", a.scores.e_min()},
                                             {"c_max", a.scores.c_max()},
                                             {"category", to_string(a.category)},
                                             {"scorer", scorer->name()}});
                    ++scored;
                } catch (const Error& e) {
                    store.write_nli(id, json{{"error", e.what()}});
                    err << "warning: scorer failed on rule " << id << ": " << e.what()
                        << "\n";
                    ++failed;
                }
            }
            out << "nli: " << scored << " rules scored, " << failed << " failed\n";
            return 0;
        }
        // Pair file mode.
        std::ifstream in(target);
        if (!in) throw ConfigError("cannot read pair file: " + target);
        std::string out_path = target + ".nli.jsonl";
        std::ofstream result(out_path, std::ios::trunc);
        if (!result) throw StorageError("storage-io: cannot open " + out_path);
        std::string line;
        int scored = 0;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            json j = json::parse(line);
            NliAssessment a = assess_pair(j.at("premise").get<std::string>(),
                                          j.at("hypothesis").get<std::string>(), *scorer);
            result << json{{"id", j.value("id", "")},
                           {"e_fwd", a.scores.e_fwd},
                           {"e_bwd", a.scores.e_bwd},
                           {"c_fwd", a.scores.c_fwd},
                           {"c_bwd", a.scores.c_bwd},
                           {"category", to_string(a.category)}}
                          .dump()
                   << "\n";
            ++scored;
        }
        out << "nli: " << scored << " pairs scored, results in " << out_path << "\n";
        return 0;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

// Synthetic generator front end: writes the corpus (and optionally the
// schema and ground-truth formulas) to files.
inline int cmd_gen_corpus(std::uint64_t seed, int n, const std::string& corpus_out,
                          const std::string& schema_out, const std::string& truth_out,
                          std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    try {
        Schema schema = Schema::load(sample_schema_text());
        SyntheticBundle bundle = generate_synthetic_corpus(seed, n, schema);
        if (!schema_out.empty()) {
            std::ofstream s(schema_out, std::ios::trunc);
            if (!s) throw StorageError("storage-io: cannot open " + schema_out);
            s << sample_schema_text();
        }
        std::ofstream c(corpus_out, std::ios::trunc);
        if (!c) throw StorageError("storage-io: cannot open " + corpus_out);
        for (const SyntheticRule& r : bundle.corpus.rules) {
            c << json{{"id", r.id}, {"text", r.text}}.dump() << "\n";
        }
        if (!truth_out.empty()) {
            std::ofstream t(truth_out, std::ios::trunc);
            if (!t) throw StorageError("storage-io: cannot open " + truth_out);
            for (const SyntheticRule& r : bundle.corpus.rules) {
                t << json{{"id", r.id}, {"truth", r.truth.render()}}.dump() << "\n";
            }
        }
        out << "generated " << n << " rules (seed " << seed << ") into " << corpus_out
            << "\n";
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace rtv
