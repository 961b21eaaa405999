// rtv -- roundtrip verification and repair for rule formalization.
//
// Subcommands: run, verify, report, nli, gen-corpus. `run` takes a JSON
// config file; every config field can be overridden by the flag of the
// same name.

#include <CLI11.hpp>

#include "rtv/commands.hpp"

namespace {

rtv::json load_config_file(const std::string& path) {
    if (path.empty()) return rtv::json::object();
    std::ifstream in(path);
    if (!in) throw rtv::ConfigError("cannot read config file: " + path);
    try {
        rtv::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw rtv::ConfigError("bad config file " + path + ": " + e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"roundtrip verification and repair for rule formalization"};
    app.require_subcommand(1);

    // --- run ---
    auto* run = app.add_subcommand("run", "run the full pipeline over a corpus");
    std::string config_path, schema_path, corpus_path, condition, run_dir, templates_dir;
    std::string backend_kind, scripted_path, eq_order, nli_mode;
    std::uint64_t seed = 0, syn_seed = 0;
    int max_iterations = -1, workers = -1, syn_n = -1;
    double rate_limit = -1.0;
    bool resume = false;
    run->add_option("--config", config_path, "JSON config file");
    run->add_option("--schema_path", schema_path, "domain schema file");
    run->add_option("--corpus_path", corpus_path, "corpus JSONL ({id,text} per line)");
    run->add_option("--condition", condition, "none | random | full");
    run->add_option("--seed", seed, "seed for the random condition");
    run->add_option("--max_iterations", max_iterations, "repair budget K");
    run->add_option("--workers", workers, "parallel rule workers");
    run->add_option("--rate_limit_seconds", rate_limit, "inter-call delay for live backends");
    run->add_option("--run_dir", run_dir, "output run directory");
    run->add_option("--templates_dir", templates_dir, "prompt template directory");
    run->add_option("--backend", backend_kind, "default backend: live | scripted | synthetic");
    run->add_option("--scripted_path", scripted_path, "replay table for scripted backend");
    run->add_option("--equivalence_order", eq_order,
                    "solver-then-enumeration | enumeration-only | solver-only");
    run->add_option("--nli", nli_mode, "off | baseline | external");
    run->add_option("--synthetic_seed", syn_seed, "synthetic corpus seed");
    run->add_option("--synthetic_n", syn_n, "synthetic corpus size");
    run->add_flag("--resume", resume, "skip rules already completed in run_dir");

    // --- verify ---
    auto* verify = app.add_subcommand("verify", "check equivalence of two formula files");
    std::string v_schema, v_a, v_b, v_order = "solver-then-enumeration", v_solver;
    long long v_max_interp = -1;
    int v_domain = -1;
    verify->add_option("schema", v_schema, "schema file")->required();
    verify->add_option("formula_a", v_a, "first formula file")->required();
    verify->add_option("formula_b", v_b, "second formula file")->required();
    verify->add_option("--equivalence_order", v_order, "backend order");
    verify->add_option("--solver_command", v_solver, "external solver binary (default z3)");
    verify->add_option("--max_interpretations", v_max_interp, "enumeration cap");
    verify->add_option("--max_domain_size", v_domain, "bounded domain size");

    // --- report ---
    auto* report = app.add_subcommand("report", "regenerate tables from run logs");
    std::vector<std::string> report_dirs;
    report->add_option("run_dir", report_dirs, "run directory (two for the overlap report)")
        ->required()
        ->expected(1, 2);

    // --- nli ---
    auto* nli = app.add_subcommand("nli", "score original vs reconstructed text");
    std::string nli_target, nli_scorer = "baseline";
    std::vector<std::string> nli_command;
    bool nli_per_call = false;
    nli->add_option("target", nli_target, "run directory or pair JSONL file")->required();
    nli->add_option("--scorer", nli_scorer, "baseline | external");
    nli->add_option("--command", nli_command, "external scorer command line");
    nli->add_flag("--per_call", nli_per_call, "spawn the scorer per pair instead of pooling");

    // --- gen-corpus ---
    auto* gen = app.add_subcommand("gen-corpus", "emit a synthetic rule corpus");
    std::uint64_t gen_seed = 1;
    int gen_n = 10;
    std::string gen_corpus = "corpus.jsonl", gen_schema, gen_truth;
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--n", gen_n, "number of rules");
    gen->add_option("--corpus-out", gen_corpus, "corpus JSONL output path");
    gen->add_option("--schema-out", gen_schema, "also write the built-in schema here");
    gen->add_option("--truth-out", gen_truth, "also write ground-truth formulas here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            rtv::json file_config = load_config_file(config_path);
            rtv::RunConfig config = rtv::run_config_from_json(file_config);
            if (run->count("--schema_path")) config.schema_path = schema_path;
            if (run->count("--corpus_path")) config.corpus_path = corpus_path;
            if (run->count("--condition")) {
                config.condition = rtv::repair_kind_from_string(condition);
            }
            if (run->count("--seed")) config.seed = seed;
            if (run->count("--max_iterations")) config.max_iterations = max_iterations;
            if (run->count("--workers")) config.workers = workers;
            if (run->count("--rate_limit_seconds")) config.rate_limit_seconds = rate_limit;
            if (run->count("--run_dir")) config.run_dir = run_dir;
            if (run->count("--templates_dir")) config.templates_dir = templates_dir;
            if (run->count("--backend")) {
                if (backend_kind == "live") config.backends.kind = rtv::BackendKind::Live;
                else if (backend_kind == "scripted") config.backends.kind = rtv::BackendKind::Scripted;
                else if (backend_kind == "synthetic") config.backends.kind = rtv::BackendKind::Synthetic;
                else throw rtv::ConfigError("unknown backend kind '" + backend_kind + "'");
            }
            if (run->count("--scripted_path")) config.backends.scripted_path = scripted_path;
            if (run->count("--equivalence_order")) {
                if (eq_order == "solver-then-enumeration") {
                    config.equivalence.order = rtv::EquivalenceOrder::SolverThenEnumeration;
                } else if (eq_order == "enumeration-only") {
                    config.equivalence.order = rtv::EquivalenceOrder::EnumerationOnly;
                } else if (eq_order == "solver-only") {
                    config.equivalence.order = rtv::EquivalenceOrder::SolverOnly;
                } else {
                    throw rtv::ConfigError("unknown equivalence order '" + eq_order + "'");
                }
            }
            if (run->count("--nli")) {
                if (nli_mode == "off") config.nli.mode = rtv::NliMode::Off;
                else if (nli_mode == "baseline") config.nli.mode = rtv::NliMode::Baseline;
                else if (nli_mode == "external") config.nli.mode = rtv::NliMode::External;
                else throw rtv::ConfigError("unknown nli mode '" + nli_mode + "'");
            }
            if (run->count("--synthetic_seed")) config.synthetic.seed = syn_seed;
            if (run->count("--synthetic_n")) config.synthetic.n = syn_n;
            if (resume) config.resume = true;
            return rtv::cmd_run(config);
        }
        if (verify->parsed()) {
            rtv::EquivalenceConfig eq;
            eq.solver.command = verify->count("--solver_command") ? v_solver : "z3";
            if (v_order == "enumeration-only") {
                eq.order = rtv::EquivalenceOrder::EnumerationOnly;
            } else if (v_order == "solver-only") {
                eq.order = rtv::EquivalenceOrder::SolverOnly;
            } else {
                eq.order = rtv::EquivalenceOrder::SolverThenEnumeration;
            }
            if (v_max_interp > 0) eq.budget.max_interpretations = v_max_interp;
            if (v_domain > 0) eq.budget.max_domain_size = v_domain;
            return rtv::cmd_verify(v_schema, v_a, v_b, eq);
        }
        if (report->parsed()) {
            return rtv::cmd_report(report_dirs);
        }
        if (nli->parsed()) {
            rtv::NliConfig config;
            if (nli_scorer == "baseline") {
                config.mode = rtv::NliMode::Baseline;
            } else if (nli_scorer == "external") {
                config.mode = rtv::NliMode::External;
                config.command = nli_command;
            } else if (nli_scorer == "off") {
                config.mode = rtv::NliMode::Off;
            } else {
                throw rtv::ConfigError("unknown scorer '" + nli_scorer + "'");
            }
            config.pooled = !nli_per_call;
            return rtv::cmd_nli(nli_target, config);
        }
        if (gen->parsed()) {
            return rtv::cmd_gen_corpus(gen_seed, gen_n, gen_corpus, gen_schema, gen_truth);
        }
    } catch (const rtv::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return rtv::kExitError;
    }
    return 0;
}
