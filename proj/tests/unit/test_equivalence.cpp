#include <catch2/catch_amalgamated.hpp>

#include "rtv/equivalence.hpp"
#include "rtv/synthetic.hpp"
#include "support/fixtures.hpp"
#include "support/formula_gen.hpp"

using namespace rtv;

namespace {

Schema traffic_schema() { return Schema::load(sample_schema_text()); }

}  // namespace

TEST_CASE("query script asserts the negated equality after the declarations") {
    Schema schema = Schema::load("(declare-fun p () Bool)");
    Formula t = Formula::parse("true", schema);
    std::string script = build_equivalence_query(t, t, schema);
    CHECK(script.find("(declare-fun p () Bool)") != std::string::npos);
    CHECK(script.find("(assert (not (= true true)))") != std::string::npos);
    CHECK(script.rfind("(check-sat)\n") == script.size() - 12);
    // Deterministic bytes for fixed inputs.
    CHECK(script == build_equivalence_query(t, t, schema));
}

TEST_CASE("query construction rejects symbols missing from the target schema") {
    Schema with_p = Schema::load("(declare-fun p () Bool)");
    Schema empty = Schema::load("");
    Formula f = Formula::parse("p", with_p);
    CHECK_THROWS_AS(build_equivalence_query(f, f, empty), SchemaError);
}

TEST_CASE("enumeration proves identical formulas equivalent without a sweep") {
    Schema schema = traffic_schema();
    Formula f = Formula::parse(fixtures::fire_hose_y_orig(), schema);
    EquivalenceVerdict v = check_by_enumeration(f, f, schema);
    CHECK(v.status == EquivStatus::Equivalent);
    CHECK(v.backend == EquivBackend::Enumeration);
    CHECK_FALSE(v.bounded);
}

TEST_CASE("fire-hose pair is refuted with the unique counterexample") {
    Schema schema = traffic_schema();
    Formula y_orig = Formula::parse(fixtures::fire_hose_y_orig(), schema);
    Formula y_rt = Formula::parse(fixtures::fire_hose_y_rt(), schema);
    EnumerationBudget budget;
    budget.max_domain_size = 1;
    budget.int_lo = 0;
    budget.int_hi = 0;
    EquivalenceVerdict v = check_by_enumeration(y_orig, y_rt, schema, budget);
    REQUIRE(v.status == EquivStatus::NotEquivalent);
    REQUIRE(v.counterexample.has_value());
    const Interpretation& cx = *v.counterexample;
    // Frozen from exhaustive evaluation of all 2^4 predicate tables at
    // these domain sizes: the distinguishing interpretation is unique.
    CHECK(cx.tables.at("fire_hose_on_roadway").values[0] == DomValue{1, 0});
    CHECK(cx.tables.at("fire_dept_consent").values[0] == DomValue{0, 0});
    CHECK(cx.tables.at("on_roadway").values[0] == DomValue{1, 0});
    CHECK(cx.tables.at("stopped").values[0] == DomValue{1, 0});
    CHECK(evaluate_under(y_orig, schema, cx) == false);
    CHECK(evaluate_under(y_rt, schema, cx) == true);
}

TEST_CASE("fire-hose post-repair pair is equivalent within default bounds") {
    Schema schema = traffic_schema();
    Formula y_orig = Formula::parse(fixtures::fire_hose_y_orig(), schema);
    Formula repaired = Formula::parse(fixtures::fire_hose_repaired_y_rt(), schema);
    EquivalenceVerdict v = check_by_enumeration(y_orig, repaired, schema);
    CHECK(v.status == EquivStatus::Equivalent);
    CHECK(v.bounded);
}

TEST_CASE("nullary p versus its negation is refuted") {
    Schema schema = Schema::load("(declare-fun p () Bool)");
    Formula p = Formula::parse("p", schema);
    Formula not_p = Formula::parse("(not p)", schema);
    EquivalenceVerdict v = check_by_enumeration(p, not_p, schema);
    REQUIRE(v.status == EquivStatus::NotEquivalent);
    REQUIRE(v.counterexample.has_value());
    CHECK(v.counterexample->tables.at("p").values[0] == DomValue{1, 0});
    CHECK(evaluate_under(p, schema, *v.counterexample) !=
          evaluate_under(not_p, schema, *v.counterexample));
}

TEST_CASE("interpretation cap turns the verdict unknown with a diagnostic") {
    Schema schema = traffic_schema();
    Formula a = Formula::parse("(forall ((v Vehicle) (r Roadway) (t Int)) "
                               "(=> (on_roadway v r t) (stopped v t)))",
                               schema);
    Formula b = Formula::parse("(forall ((v Vehicle) (t Int)) (stopped v t))", schema);
    EnumerationBudget budget;
    budget.max_interpretations = 4;
    EquivalenceVerdict v = check_by_enumeration(a, b, schema, budget);
    CHECK(v.status == EquivStatus::Unknown);
    CHECK(v.note.find("budget-exceeded") != std::string::npos);
}

TEST_CASE("real quantification cannot be enumerated") {
    Schema schema = Schema::load("(declare-fun level (Real) Bool)");
    Formula a = Formula::parse("(forall ((x Real)) (level x))", schema);
    Formula b = Formula::parse("(forall ((x Real)) (not (level x)))", schema);
    EquivalenceVerdict v = check_by_enumeration(a, b, schema);
    CHECK(v.status == EquivStatus::Unknown);
    // Identity still short-circuits structurally.
    CHECK(check_by_enumeration(a, a, schema).status == EquivStatus::Equivalent);
}

TEST_CASE("literal arguments outside the window are refused, not mis-answered") {
    Schema schema = Schema::load("(declare-fun q (Int) Bool)");
    Formula a = Formula::parse("(q 7)", schema);
    Formula b = Formula::parse("(not (q 7))", schema);
    EquivalenceVerdict v = check_by_enumeration(a, b, schema);
    CHECK(v.status == EquivStatus::Unknown);
}

TEST_CASE("reflexivity, symmetry, and counterexample soundness over random pairs") {
    Schema schema = Schema::load(formula_gen::small_schema_text());
    formula_gen::Generator gen(2024);
    int refuted = 0;
    for (int i = 0; i < 40; ++i) {
        auto pair = gen.pair();
        Formula a = Formula::parse(pair.a, schema);
        Formula b = Formula::parse(pair.b, schema);
        INFO(pair.a << "  vs  " << pair.b);

        CHECK(check_by_enumeration(a, a, schema).status == EquivStatus::Equivalent);

        EquivalenceVerdict ab = check_by_enumeration(a, b, schema);
        EquivalenceVerdict ba = check_by_enumeration(b, a, schema);
        CHECK(ab.status == ba.status);
        REQUIRE(ab.status != EquivStatus::Unknown);

        if (pair.rewrite) {
            CHECK(ab.status == EquivStatus::Equivalent);
        }
        if (ab.status == EquivStatus::NotEquivalent) {
            ++refuted;
            REQUIRE(ab.counterexample.has_value());
            CHECK(evaluate_under(a, schema, *ab.counterexample) !=
                  evaluate_under(b, schema, *ab.counterexample));
        }
    }
    CHECK(refuted > 5);  // the mutation arm really distinguishes pairs
}

TEST_CASE("speed-bound formulas with different comparators are distinguished") {
    Schema schema = traffic_schema();
    Formula le = Formula::parse(
        "(forall ((v Vehicle) (r Roadway) (t Int)) (=> (on_roadway v r t) "
        "(<= (speed v t) 30.0)))",
        schema);
    Formula gt = Formula::parse(
        "(forall ((v Vehicle) (r Roadway) (t Int)) (=> (on_roadway v r t) "
        "(> (speed v t) 30.0)))",
        schema);
    EquivalenceVerdict v = check_by_enumeration(le, gt, schema);
    REQUIRE(v.status == EquivStatus::NotEquivalent);
    CHECK(evaluate_under(le, schema, *v.counterexample) !=
          evaluate_under(gt, schema, *v.counterexample));
}
