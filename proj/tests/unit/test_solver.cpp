#include <catch2/catch_amalgamated.hpp>

#include <sys/stat.h>

#include <filesystem>
#include <fstream>

#include "rtv/solver.hpp"
#include "rtv/synthetic.hpp"
#include "support/fixtures.hpp"

using namespace rtv;
namespace fs = std::filesystem;

namespace {

// Writes an executable shell script acting as a canned solver.
std::string fake_solver(const std::string& name, const std::string& body) {
    fs::path dir = fs::temp_directory_path() / "rtv_fake_solvers";
    fs::create_directories(dir);
    fs::path path = dir / name;
    {
        std::ofstream out(path, std::ios::trunc);
        out << "#!/bin/sh\n" << body;
    }
    chmod(path.c_str(), 0755);
    return path.string();
}

SolverConfig config_for(const std::string& command, double timeout = 5.0) {
    SolverConfig cfg;
    cfg.command = command;
    cfg.args = {};
    cfg.timeout_seconds = timeout;
    return cfg;
}

}  // namespace

TEST_CASE("unsat reply maps to equivalent") {
    auto cfg = config_for(fake_solver("unsat.sh", "cat >/dev/null\necho unsat\n"));
    EquivalenceVerdict v = check_with_solver("(check-sat)\n", cfg);
    CHECK(v.status == EquivStatus::Equivalent);
    CHECK(v.backend == EquivBackend::ExternalSolver);
}

TEST_CASE("sat reply maps to not-equivalent and requests a model") {
    // The fake records everything it was sent so the test can assert the
    // (get-model) request went out.
    fs::path log = fs::temp_directory_path() / "rtv_fake_solvers" / "sat_input.log";
    auto cfg = config_for(fake_solver(
        "sat.sh",
        "echo sat\ncat > " + log.string() + "\necho '((define-fun p () Bool true))'\n"));
    Schema schema = Schema::load("(declare-fun p () Bool)");
    EquivalenceVerdict v = check_with_solver("(assert (not (= p (not p))))\n(check-sat)\n",
                                             cfg, &schema);
    CHECK(v.status == EquivStatus::NotEquivalent);
    REQUIRE(v.counterexample.has_value());
    CHECK(v.counterexample->tables.at("p").values[0] == DomValue{1, 0});
    std::ifstream in(log);
    std::string sent((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(sent.find("(get-model)") != std::string::npos);
}

TEST_CASE("unparseable model text leaves the counterexample absent") {
    auto cfg = config_for(
        fake_solver("sat_garbage.sh", "cat >/dev/null\necho sat\necho 'model pretty print'\n"));
    Schema schema = Schema::load("(declare-fun p () Bool)");
    EquivalenceVerdict v = check_with_solver("(check-sat)\n", cfg, &schema);
    CHECK(v.status == EquivStatus::NotEquivalent);
    CHECK_FALSE(v.counterexample.has_value());
}

TEST_CASE("unknown reply maps to unknown") {
    auto cfg = config_for(fake_solver("unknown.sh", "cat >/dev/null\necho unknown\n"));
    CHECK(check_with_solver("(check-sat)\n", cfg).status == EquivStatus::Unknown);
}

TEST_CASE("garbage replies are protocol errors") {
    auto cfg = config_for(fake_solver("garbage.sh", "cat >/dev/null\necho flurble\n"));
    CHECK_THROWS_AS(check_with_solver("(check-sat)\n", cfg), ProtocolError);
}

TEST_CASE("a sleeping solver times out into unknown") {
    auto cfg =
        config_for(fake_solver("sleepy.sh", "cat >/dev/null\nsleep 5\necho unsat\n"), 0.3);
    EquivalenceVerdict v = check_with_solver("(check-sat)\n", cfg);
    CHECK(v.status == EquivStatus::Unknown);
    CHECK(v.note.find("timeout") != std::string::npos);
}

TEST_CASE("a missing solver binary raises solver-not-found") {
    auto cfg = config_for("/nonexistent/rtv-no-such-solver");
    CHECK_THROWS_AS(check_with_solver("(check-sat)\n", cfg), ProcessError);
}

TEST_CASE("decide_equivalence falls back to enumeration when the solver fails") {
    Schema schema = Schema::load("(declare-fun p () Bool)");
    Formula p = Formula::parse("p", schema);
    Formula not_p = Formula::parse("(not p)", schema);

    EquivalenceConfig cfg;
    cfg.order = EquivalenceOrder::SolverThenEnumeration;
    cfg.solver = config_for("/nonexistent/rtv-no-such-solver");
    EquivalenceVerdict v = decide_equivalence(p, not_p, schema, cfg);
    CHECK(v.status == EquivStatus::NotEquivalent);
    CHECK(v.backend == EquivBackend::Enumeration);

    // Same when the solver answers garbage.
    cfg.solver = config_for(fake_solver("garbage2.sh", "cat >/dev/null\necho what\n"));
    v = decide_equivalence(p, not_p, schema, cfg);
    CHECK(v.backend == EquivBackend::Enumeration);
}

TEST_CASE("decide_equivalence prefers a conclusive solver answer") {
    Schema schema = Schema::load("(declare-fun p () Bool)");
    Formula p = Formula::parse("p", schema);
    EquivalenceConfig cfg;
    cfg.order = EquivalenceOrder::SolverThenEnumeration;
    cfg.solver = config_for(fake_solver("unsat2.sh", "cat >/dev/null\necho unsat\n"));
    EquivalenceVerdict v = decide_equivalence(p, p, schema, cfg);
    CHECK(v.status == EquivStatus::Equivalent);
    CHECK(v.backend == EquivBackend::ExternalSolver);
}

TEST_CASE("solver-only with all-unknown backends yields unknown, not an exception") {
    Schema schema = Schema::load("(declare-fun p () Bool)");
    Formula p = Formula::parse("p", schema);
    EquivalenceConfig cfg;
    cfg.order = EquivalenceOrder::SolverOnly;
    cfg.solver = config_for(fake_solver("unknown2.sh", "cat >/dev/null\necho unknown\n"));
    EquivalenceVerdict v = decide_equivalence(p, Formula::parse("(not p)", schema), schema,
                                              cfg);
    CHECK(v.status == EquivStatus::Unknown);
    CHECK(v.backend == EquivBackend::None);
    CHECK_FALSE(v.note.empty());
}

TEST_CASE("a solver-reported counterexample that does not separate the pair is dropped") {
    // Claims p=true separates p from p, which it cannot.
    auto cfg_solver = fake_solver(
        "sat_bogus.sh", "cat >/dev/null\necho sat\necho '((define-fun p () Bool true))'\n");
    Schema schema = Schema::load("(declare-fun p () Bool)");
    Formula p = Formula::parse("p", schema);
    EquivalenceConfig cfg;
    cfg.order = EquivalenceOrder::SolverOnly;
    cfg.solver = config_for(cfg_solver);
    EquivalenceVerdict v = decide_equivalence(p, p, schema, cfg);
    CHECK(v.status == EquivStatus::NotEquivalent);  // trusts the solver status
    CHECK_FALSE(v.counterexample.has_value());      // but not the bogus witness
}
