#pragma once

#include <atomic>
#include <fstream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "rtv/http_backend.hpp"
#include "rtv/repair.hpp"
#include "rtv/reporting.hpp"
#include "rtv/synthetic.hpp"

namespace rtv {

struct CorpusRule {
    std::string id;
    std::string text;
};

// Corpus input: JSONL, one {id, text} record per rule.
inline std::vector<CorpusRule> load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("corpus-unreadable: " + path);
    std::vector<CorpusRule> rules;
    std::string line;
    int lineno = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ConfigError("corpus-unreadable: " + path + ":" + std::to_string(lineno) +
                              ": " + e.what());
        }
        CorpusRule rule;
        try {
            rule.id = j.at("id").get<std::string>();
            rule.text = j.at("text").get<std::string>();
        } catch (const json::exception& e) {
            throw ConfigError("corpus-unreadable: " + path + ":" + std::to_string(lineno) +
                              ": " + e.what());
        }
        if (!seen.insert(rule.id).second) {
            throw ConfigError("corpus-unreadable: duplicate rule id '" + rule.id + "'");
        }
        rules.push_back(std::move(rule));
    }
    return rules;
}

enum class BackendKind { Live, Scripted, Synthetic };

struct BackendChoice {
    BackendKind kind = BackendKind::Synthetic;
    HttpBackendConfig live;
    std::string scripted_path;
};

enum class NliMode { Off, Baseline, External };

struct NliConfig {
    NliMode mode = NliMode::Off;
    std::vector<std::string> command;
    bool pooled = true;
};

struct SyntheticSpec {
    std::uint64_t seed = 1;
    int n = 10;
    std::vector<FaultSpec> faults;
};

struct RunConfig {
    std::string schema_path;
    std::string corpus_path;
    RepairKind condition = RepairKind::Full;
    std::uint64_t seed = 0;
    int max_iterations = 3;
    int workers = 1;
    double rate_limit_seconds = 0.0;
    WellformednessPolicy wellformedness;
    std::string templates_dir;
    BackendChoice backends;
    std::map<Role, BackendChoice> backend_overrides;
    SyntheticSpec synthetic;
    EquivalenceConfig equivalence;
    NliConfig nli;
    std::string run_dir;
    bool resume = false;
    bool timestamps = false;  // off by default so reruns are byte-identical
};

// --- config (de)serialization ------------------------------------------------

inline json backend_choice_to_json(const BackendChoice& b) {
    json j;
    switch (b.kind) {
        case BackendKind::Live:
            j["kind"] = "live";
            j["endpoint_url"] = b.live.endpoint_url;
            j["provider"] = b.live.provider;
            j["model"] = b.live.model;
            j["temperature"] = b.live.temperature;
            j["api_key_env"] = b.live.api_key_env;
            j["max_retries"] = b.live.max_retries;
            j["max_tokens"] = b.live.max_tokens;
            break;
        case BackendKind::Scripted:
            j["kind"] = "scripted";
            j["path"] = b.scripted_path;
            break;
        case BackendKind::Synthetic:
            j["kind"] = "synthetic";
            break;
    }
    return j;
}

inline BackendChoice backend_choice_from_json(const json& j) {
    BackendChoice b;
    std::string kind = j.value("kind", "synthetic");
    if (kind == "live") {
        b.kind = BackendKind::Live;
        b.live.endpoint_url = j.value("endpoint_url", "");
        b.live.provider = j.value("provider", "openai");
        b.live.model = j.value("model", "");
        b.live.temperature = j.value("temperature", 0.3);
        b.live.api_key_env = j.value("api_key_env", "");
        b.live.max_retries = j.value("max_retries", 3);
        b.live.max_tokens = j.value("max_tokens", 4096);
    } else if (kind == "scripted") {
        b.kind = BackendKind::Scripted;
        b.scripted_path = j.value("path", "");
    } else if (kind == "synthetic") {
        b.kind = BackendKind::Synthetic;
    } else {
        throw ConfigError("unknown backend kind '" + kind + "'");
    }
    return b;
}

inline json run_config_to_json(const RunConfig& c) {
    json j;
    j["schema_path"] = c.schema_path;
    j["corpus_path"] = c.corpus_path;
    j["condition"] = to_string(c.condition);
    j["seed"] = c.seed;
    j["max_iterations"] = c.max_iterations;
    j["workers"] = c.workers;
    j["rate_limit_seconds"] = c.rate_limit_seconds;
    j["wellformedness_max_attempts"] = c.wellformedness.max_attempts;
    j["templates_dir"] = c.templates_dir;
    j["backends"] = json::object();
    j["backends"]["default"] = backend_choice_to_json(c.backends);
    for (const auto& [role, choice] : c.backend_overrides) {
        j["backends"][to_string(role)] = backend_choice_to_json(choice);
    }
    json faults = json::array();
    for (const FaultSpec& f : c.synthetic.faults) {
        faults.push_back({{"rule_id", f.rule_id},
                          {"stage", stage_index(f.stage)},
                          {"mode", to_string(f.mode)},
                          {"replacement", f.replacement},
                          {"stubborn", f.stubborn}});
    }
    j["synthetic"] = {{"seed", c.synthetic.seed}, {"n", c.synthetic.n}, {"faults", faults}};
    j["equivalence"] = {
        {"order", c.equivalence.order == EquivalenceOrder::SolverThenEnumeration
                      ? "solver-then-enumeration"
                      : (c.equivalence.order == EquivalenceOrder::EnumerationOnly
                             ? "enumeration-only"
                             : "solver-only")},
        {"solver_command", c.equivalence.solver.command},
        {"solver_args", c.equivalence.solver.args},
        {"solver_timeout_seconds", c.equivalence.solver.timeout_seconds},
        {"max_domain_size", c.equivalence.budget.max_domain_size},
        {"int_window", {c.equivalence.budget.int_lo, c.equivalence.budget.int_hi}},
        {"max_interpretations", c.equivalence.budget.max_interpretations},
        {"smt_logic", "default"},  // no set-logic is emitted
    };
    j["nli"] = {
        {"mode", c.nli.mode == NliMode::Off ? "off"
                                            : (c.nli.mode == NliMode::Baseline ? "baseline"
                                                                               : "external")},
        {"command", c.nli.command},
        {"pooled", c.nli.pooled},
    };
    j["run_dir"] = c.run_dir;
    j["resume"] = c.resume;
    j["timestamps"] = c.timestamps;
    return j;
}

inline RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    c.schema_path = j.value("schema_path", "");
    c.corpus_path = j.value("corpus_path", "");
    c.condition = repair_kind_from_string(j.value("condition", "full"));
    c.seed = j.value("seed", std::uint64_t{0});
    c.max_iterations = j.value("max_iterations", 3);
    c.workers = j.value("workers", 1);
    c.rate_limit_seconds = j.value("rate_limit_seconds", 0.0);
    c.wellformedness.max_attempts = j.value("wellformedness_max_attempts", 5);
    c.templates_dir = j.value("templates_dir", "");
    if (j.contains("backends")) {
        const json& backends = j["backends"];
        if (backends.contains("default")) {
            c.backends = backend_choice_from_json(backends["default"]);
        }
        for (const auto& [key, value] : backends.items()) {
            if (key == "default") continue;
            auto role = role_from_string(key);
            if (!role) throw ConfigError("unknown backend role '" + key + "'");
            c.backend_overrides[*role] = backend_choice_from_json(value);
        }
    }
    if (j.contains("synthetic")) {
        const json& syn = j["synthetic"];
        c.synthetic.seed = syn.value("seed", std::uint64_t{1});
        c.synthetic.n = syn.value("n", 10);
        for (const json& f : syn.value("faults", json::array())) {
            FaultSpec spec;
            spec.rule_id = f.at("rule_id").get<std::string>();
            spec.stage = stage_from_index(f.at("stage").get<int>());
            spec.mode = fault_mode_from_string(f.at("mode").get<std::string>());
            spec.replacement = f.value("replacement", "");
            spec.stubborn = f.value("stubborn", true);
            c.synthetic.faults.push_back(std::move(spec));
        }
    }
    if (j.contains("equivalence")) {
        const json& eq = j["equivalence"];
        std::string order = eq.value("order", "solver-then-enumeration");
        if (order == "solver-then-enumeration") {
            c.equivalence.order = EquivalenceOrder::SolverThenEnumeration;
        } else if (order == "enumeration-only") {
            c.equivalence.order = EquivalenceOrder::EnumerationOnly;
        } else if (order == "solver-only") {
            c.equivalence.order = EquivalenceOrder::SolverOnly;
        } else {
            throw ConfigError("unknown equivalence order '" + order + "'");
        }
        c.equivalence.solver.command = eq.value("solver_command", "");
        c.equivalence.solver.args =
            eq.value("solver_args", std::vector<std::string>{"-in"});
        c.equivalence.solver.timeout_seconds = eq.value("solver_timeout_seconds", 10.0);
        c.equivalence.budget.max_domain_size = eq.value("max_domain_size", 2);
        if (eq.contains("int_window")) {
            c.equivalence.budget.int_lo = eq["int_window"].at(0).get<long long>();
            c.equivalence.budget.int_hi = eq["int_window"].at(1).get<long long>();
        }
        c.equivalence.budget.max_interpretations =
            eq.value("max_interpretations", 10'000'000LL);
    }
    if (j.contains("nli")) {
        const json& nli = j["nli"];
        std::string mode = nli.value("mode", "off");
        if (mode == "off") c.nli.mode = NliMode::Off;
        else if (mode == "baseline") c.nli.mode = NliMode::Baseline;
        else if (mode == "external") c.nli.mode = NliMode::External;
        else throw ConfigError("unknown nli mode '" + mode + "'");
        c.nli.command = nli.value("command", std::vector<std::string>{});
        c.nli.pooled = nli.value("pooled", true);
    }
    c.run_dir = j.value("run_dir", "");
    c.resume = j.value("resume", false);
    c.timestamps = j.value("timestamps", false);
    return c;
}

// --- execution ----------------------------------------------------------------

struct PreparedRun {
    Schema schema;
    std::vector<CorpusRule> corpus;
    BackendSet backends;
    std::map<Role, PromptTemplate> templates;
    std::shared_ptr<RateLimiter> limiter;
};

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Resolves schema, corpus, and backends from the configuration. Synthetic
// backends bring their own corpus (and, absent a schema path, the built-in
// schema).
inline PreparedRun prepare_run(const RunConfig& config) {
    PreparedRun prep;
    bool synthetic = config.backends.kind == BackendKind::Synthetic;
    for (const auto& [role, choice] : config.backend_overrides) {
        if ((choice.kind == BackendKind::Synthetic) != synthetic) {
            throw ConfigError(
                "synthetic backends cannot be mixed with other kinds (role " +
                to_string(role) + ")");
        }
    }

    if (!config.schema_path.empty()) {
        prep.schema = Schema::load(read_text_file(config.schema_path));
    } else if (synthetic) {
        prep.schema = Schema::load(sample_schema_text());
    } else {
        throw ConfigError("config-invalid: schema_path is required");
    }

    prep.templates = config.templates_dir.empty() ? default_templates()
                                                  : load_templates(config.templates_dir);
    prep.limiter = std::make_shared<RateLimiter>(config.rate_limit_seconds);

    if (synthetic) {
        SyntheticBundle bundle = generate_synthetic_corpus(
            config.synthetic.seed, config.synthetic.n, prep.schema, config.synthetic.faults);
        prep.backends = bundle.backends;
        for (const SyntheticRule& r : bundle.corpus.rules) {
            prep.corpus.push_back(CorpusRule{r.id, r.text});
        }
        return prep;
    }

    if (config.corpus_path.empty()) {
        throw ConfigError("config-invalid: corpus_path is required");
    }
    prep.corpus = load_corpus(config.corpus_path);

    std::map<std::string, BackendPtr> cache;
    auto build = [&](const BackendChoice& choice) -> BackendPtr {
        switch (choice.kind) {
            case BackendKind::Scripted: {
                std::string key = "scripted:" + choice.scripted_path;
                auto it = cache.find(key);
                if (it != cache.end()) return it->second;
                auto backend = std::make_shared<ScriptedBackend>(
                    ScriptedBackend::from_jsonl(choice.scripted_path));
                cache[key] = backend;
                return backend;
            }
            case BackendKind::Live: {
                std::string key = "live:" + choice.live.endpoint_url + ":" +
                                  choice.live.provider + ":" + choice.live.model;
                auto it = cache.find(key);
                if (it != cache.end()) return it->second;
                HttpBackendConfig live = choice.live;
                live.rate_limit_seconds = config.rate_limit_seconds;
                auto backend = std::make_shared<HttpBackend>(live, prep.limiter);
                cache[key] = backend;
                return backend;
            }
            default:
                throw ConfigError("unexpected backend kind");
        }
    };
    BackendPtr default_backend = build(config.backends);
    prep.backends = BackendSet::uniform(default_backend);
    for (const auto& [role, choice] : config.backend_overrides) {
        BackendPtr b = build(choice);
        switch (role) {
            case Role::T1: prep.backends.t1 = b; break;
            case Role::T2: prep.backends.t2 = b; break;
            case Role::T3: prep.backends.t3 = b; break;
            case Role::D: prep.backends.judge = b; break;
            case Role::R1: prep.backends.r1 = b; break;
            case Role::R2: prep.backends.r2 = b; break;
            case Role::R3: prep.backends.r3 = b; break;
        }
    }
    return prep;
}

inline std::unique_ptr<NliScorer> make_scorer(const NliConfig& config) {
    switch (config.mode) {
        case NliMode::Off: return nullptr;
        case NliMode::Baseline: return std::make_unique<BaselineScorer>();
        case NliMode::External:
            return std::make_unique<ExternalScorer>(config.command, config.pooled);
    }
    return nullptr;
}

struct RunResult {
    RunSummary summary;
    int processed = 0;
    int skipped = 0;
};

// Full experiment over the corpus: per-rule roundtrip, repair loop,
// optional post-hoc NLI, event logs, then summary artifacts from replay.
inline RunResult execute_run(const RunConfig& config) {
    if (config.run_dir.empty()) throw ConfigError("config-invalid: run_dir is required");
    PreparedRun prep = prepare_run(config);
    RunStore store((fs::path(config.run_dir)));
    if (!config.resume) {
        for (const std::string& id : store.rule_ids()) {
            std::error_code ec;
            fs::remove_all(store.rule_dir(id), ec);
        }
    }
    store.write_config_snapshot(run_config_to_json(config));

    std::unique_ptr<NliScorer> scorer = make_scorer(config.nli);
    std::mutex scorer_mutex;

    RepairConfig repair_cfg;
    repair_cfg.max_iterations = config.max_iterations;
    repair_cfg.condition = RepairCondition{config.condition, config.seed};

    std::atomic<size_t> next{0};
    std::atomic<int> processed{0};
    std::atomic<int> skipped{0};

    auto process_rule = [&](size_t index) {
        const CorpusRule& rule = prep.corpus[index];
        if (config.resume && store.rule_complete(rule.id)) {
            skipped.fetch_add(1);
            return;
        }
        RunStore::RuleLog log = store.open_rule_log(rule.id, /*truncate=*/true);
        auto emit = [&](json event) {
            if (config.timestamps) event["ts"] = now_iso8601();
            record_event(log, event);
        };
        StageContext ctx;
        ctx.schema = &prep.schema;
        ctx.templates = &prep.templates;
        ctx.policy = config.wellformedness;
        ctx.rule_id = rule.id;
        ctx.sink = emit;
        emit({{"type", "rule_start"},
              {"rule_id", rule.id},
              {"condition", to_string(config.condition)},
              {"text", rule.text}});
        try {
            RoundtripInstance inst =
                run_roundtrip(rule.id, rule.text, prep.backends, ctx);
            LoopOutcome outcome = repair_loop(std::move(inst), repair_cfg, prep.backends,
                                              config.equivalence, ctx,
                                              static_cast<std::uint64_t>(index));
            if (scorer) {
                try {
                    NliAssessment a;
                    {
                        std::lock_guard<std::mutex> lock(scorer_mutex);
                        a = assess_pair(outcome.final_instance.x,
                                        outcome.final_instance.x_prime, *scorer);
                    }
                    store.write_nli(rule.id, json{{"e_fwd", a.scores.e_fwd},
                                                  {"e_bwd", a.scores.e_bwd},
                                                  {"c_fwd", a.scores.c_fwd},
                                                  {"c_bwd", a.scores.c_bwd},
                                                  {"e_min", a.scores.e_min()},
                                                  {"c_max", a.scores.c_max()},
                                                  {"category", to_string(a.category)},
                                                  {"scorer", scorer->name()}});
                } catch (const Error& e) {
                    store.write_nli(rule.id, json{{"error", e.what()}});
                }
            }
            std::string final_status =
                outcome.per_iteration.empty()
                    ? to_string(outcome.initial_status)
                    : to_string(outcome.per_iteration.back().verdict_after);
            emit({{"type", "rule_end"},
                  {"status", outcome.success ? "success" : "failure"},
                  {"iterations_used", outcome.iterations_used},
                  {"initial_status", to_string(outcome.initial_status)},
                  {"final_status", final_status},
                  {"final_x_prime", outcome.final_instance.x_prime}});
        } catch (const Error& e) {
            emit({{"type", "rule_error"}, {"message", e.what()}});
            emit({{"type", "rule_end"},
                  {"status", "error"},
                  {"iterations_used", 0},
                  {"initial_status", "unknown"},
                  {"final_status", "unknown"}});
        }
        processed.fetch_add(1);
    };

    int workers = std::max(1, config.workers);
    if (workers == 1) {
        for (size_t i = 0; i < prep.corpus.size(); ++i) process_rule(i);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    size_t i = next.fetch_add(1);
                    if (i >= prep.corpus.size()) return;
                    process_rule(i);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    }

    std::vector<RunRecord> records = store.replay_all();
    RunSummary summary = summarize_run(records, config.max_iterations);
    store.write_summary(summary.to_json());
    std::vector<int> cumulative = cumulative_by_iteration(records, config.max_iterations);
    StageDistribution stages = stage_distribution(records);
    CrossTab tab = cross_tabulate(records);
    store.write_table("table1_summary.csv", render_summary_csv(summary));
    store.write_table("table2_cross_tab.csv", render_cross_tab_csv(tab));
    store.write_table("table3_stage_distribution.csv", render_stage_distribution_csv(stages));
    store.write_table("fig4_cumulative.csv", render_cumulative_csv(cumulative));
    store.write_table("fig6_stage_by_iteration.csv", render_stage_by_iteration_csv(stages));
    store.write_report(render_report_markdown(summary, cumulative, stages, tab, {}));

    return RunResult{summary, processed.load(), skipped.load()};
}

}  // namespace rtv
