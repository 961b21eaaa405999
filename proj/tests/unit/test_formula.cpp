#include <catch2/catch_amalgamated.hpp>

#include "rtv/formula.hpp"
#include "rtv/synthetic.hpp"
#include "support/fixtures.hpp"

using namespace rtv;

namespace {

Schema traffic_schema() { return Schema::load(sample_schema_text()); }

// Independent recursive sort-check used as the oracle for parser typing:
// recomputes every node's sort from the schema and scope alone.
std::string check_sorts(const FormulaNode& n, const Schema& schema,
                        std::vector<Binding>& scope) {
    switch (n.op) {
        case Op::LitBool: return "Bool";
        case Op::LitInt: return "Int";
        case Op::LitReal: return "Real";
        case Op::LitEnum: {
            const Sort* s = schema.find_constructor_sort(n.name);
            REQUIRE(s != nullptr);
            return s->name;
        }
        case Op::Var: {
            for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
                if (it->name == n.name) return it->sort;
            }
            FAIL("unbound variable " + n.name);
            return "";
        }
        case Op::Forall:
        case Op::Exists: {
            size_t before = scope.size();
            for (const Binding& b : n.bindings) scope.push_back(b);
            REQUIRE(check_sorts(*n.children[0], schema, scope) == "Bool");
            scope.resize(before);
            return "Bool";
        }
        case Op::And:
        case Op::Or:
        case Op::Not:
        case Op::Implies:
        case Op::Ite: {
            for (const NodePtr& c : n.children) {
                REQUIRE(check_sorts(*c, schema, scope) == "Bool");
            }
            return "Bool";
        }
        case Op::Eq: {
            std::string a = check_sorts(*n.children[0], schema, scope);
            std::string b = check_sorts(*n.children[1], schema, scope);
            REQUIRE(a == b);
            return "Bool";
        }
        case Op::Lt:
        case Op::Le:
        case Op::Gt:
        case Op::Ge: {
            std::string a = check_sorts(*n.children[0], schema, scope);
            std::string b = check_sorts(*n.children[1], schema, scope);
            REQUIRE(a == b);
            REQUIRE((a == "Int" || a == "Real"));
            return "Bool";
        }
        case Op::Add:
        case Op::Sub: {
            std::string first = check_sorts(*n.children[0], schema, scope);
            for (const NodePtr& c : n.children) {
                REQUIRE(check_sorts(*c, schema, scope) == first);
            }
            return first;
        }
        case Op::Apply: {
            const Signature* sig = schema.find_signature(n.name);
            REQUIRE(sig != nullptr);
            REQUIRE(sig->arg_sorts.size() == n.children.size());
            for (size_t i = 0; i < n.children.size(); ++i) {
                REQUIRE(check_sorts(*n.children[i], schema, scope) == sig->arg_sorts[i]);
            }
            return sig->result_sort;
        }
    }
    return "";
}

void require_well_sorted(const Formula& f, const Schema& schema) {
    std::vector<Binding> scope;
    REQUIRE(check_sorts(f.root(), schema, scope) == "Bool");
}

}  // namespace

TEST_CASE("fire-hose initial formalization parses to the expected shape") {
    Schema schema = traffic_schema();
    Formula f = Formula::parse(fixtures::fire_hose_y_orig(), schema);
    const FormulaNode& root = f.root();
    CHECK(root.op == Op::Forall);
    REQUIRE(root.bindings.size() == 3);
    CHECK(root.bindings[0].name == "v");
    CHECK(root.bindings[0].sort == "Vehicle");
    CHECK(root.bindings[1].sort == "Roadway");
    CHECK(root.bindings[2].sort == "Int");
    CHECK(root.children[0]->op == Op::Implies);
    CHECK(f.free_symbols() == std::set<std::string>{"fire_hose_on_roadway",
                                                    "fire_dept_consent", "on_roadway"});
    require_well_sorted(f, schema);
}

TEST_CASE("bare true is a Bool literal formula") {
    Schema schema = traffic_schema();
    Formula f = Formula::parse("true", schema);
    CHECK(f.root().op == Op::LitBool);
    CHECK(f.root().bool_value);
    CHECK(f.render() == "true");
}

TEST_CASE("argument sort mismatches are positioned and name the argument") {
    Schema schema = traffic_schema();
    try {
        Formula::parse("(forall ((v Vehicle)) (on_roadway v v 0))", schema);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        std::string msg = e.what();
        CHECK(msg.find("argument 2") != std::string::npos);
        CHECK(msg.find("Roadway") != std::string::npos);
        CHECK(msg.find("Vehicle") != std::string::npos);
    }
}

TEST_CASE("every malformed input yields a positioned error") {
    Schema schema = traffic_schema();
    const char* bad[] = {
        "",                                        // nothing
        "(forall ((v Vehicle)) (stopped v))",      // arity
        "(and true)",                              // too few operands
        "(stopped x 0)",                           // unbound variable
        "(unknown_fn 1)",                          // unknown symbol
        "(forall ((v Missing)) true)",             // unknown sort
        "(= 1 true)",                              // eq operand sorts differ
        "(not 5)",                                 // not over Int
        "(let ((x true)) x)",                      // rejected construct
        "(<= (speed v 0) 5)",                      // unbound + Real/Int mix
        "(forall ((v Vehicle) (v Roadway)) true)", // duplicate binding
        "(ite true 1 2)",                          // ite over Int
        "(+ 1 true)",                              // arith over Bool
        "(forall ((v Vehicle)) (vehicle_kind v))", // non-Bool body
        "(forall ((v Vehicle)) true",              // unbalanced
        "speed",                                   // non-Bool bare application
    };
    for (const char* text : bad) {
        INFO(text);
        CHECK_THROWS_AS(Formula::parse(text, schema), ParseError);
    }
}

TEST_CASE("accepted grammar subset round-trips through render") {
    Schema extended = Schema::load(std::string(sample_schema_text()) +
                                   "(declare-fun first_vehicle () Vehicle)\n");
    const char* cases[] = {
        "true",
        "false",
        "(and true false true)",
        "(or (not true) false)",
        "(=> true false true)",
        "(= (vehicle_kind first_vehicle) car)",
        "(forall ((v Vehicle) (t Int)) (=> (has_permit v t) (stopped v t)))",
        "(exists ((v Vehicle)) (= (vehicle_kind v) car))",
        "(forall ((t Int)) (<= (+ t 1) (+ t 1 1)))",
        "(forall ((t Int)) (>= (- t 1) (- t)))",
        "(forall ((v Vehicle) (t Int)) (< (speed v t) 12.5))",
        "(forall ((v Vehicle) (t Int)) (= (speed v t) 0.5))",
        "(ite true false true)",
        "(forall ((x Vehicle)) (exists ((r Roadway)) (on_roadway x r 0)))",
    };
    for (const char* text : cases) {
        INFO(text);
        Formula f = Formula::parse(text, extended);
        require_well_sorted(f, extended);
        Formula again = Formula::parse(f.render(), extended);
        CHECK(f.structurally_equal(again));
        CHECK(again.render() == f.render());
    }
}

TEST_CASE("rendering is canonical single-spaced text") {
    Schema schema = traffic_schema();
    Formula f = Formula::parse("(and   (or true   false)\n (not false))", schema);
    CHECK(f.render() == "(and (or true false) (not false))");
}

TEST_CASE("shadowed bound variables resolve innermost-first") {
    Schema schema = traffic_schema();
    Formula f = Formula::parse(
        "(forall ((t Int)) (exists ((t Vehicle)) (stopped t 0)))", schema);
    require_well_sorted(f, schema);
    // The inner t has sort Vehicle, so stopped type-checks; with the outer
    // Int binding it would not.
    Formula outer_only = Formula::parse("(forall ((t Int)) (<= t 1))", schema);
    require_well_sorted(outer_only, schema);
}

TEST_CASE("nullary signatures apply as bare atoms") {
    Schema schema = Schema::load("(declare-fun p () Bool)");
    Formula f = Formula::parse("(not p)", schema);
    CHECK(f.root().children[0]->op == Op::Apply);
    CHECK(f.free_symbols() == std::set<std::string>{"p"});
    CHECK(f.render() == "(not p)");
}

TEST_CASE("decimal literals normalize trailing zeros") {
    Schema schema = traffic_schema();
    Formula a = Formula::parse("(forall ((v Vehicle) (t Int)) (<= (speed v t) 30.0))",
                               schema);
    Formula b = Formula::parse("(forall ((v Vehicle) (t Int)) (<= (speed v t) 30.00))",
                               schema);
    CHECK(a.structurally_equal(b));
    CHECK(a.render().find("30.0") != std::string::npos);
    Formula c = Formula::parse("(forall ((v Vehicle) (t Int)) (= (speed v t) 1.50))",
                               schema);
    CHECK(c.render().find("1.5)") != std::string::npos);
}

TEST_CASE("parsed formulas never reference symbols outside the schema") {
    Schema schema = traffic_schema();
    Formula f = Formula::parse(fixtures::fire_hose_y_rt(), schema);
    for (const std::string& sym : f.free_symbols()) {
        CHECK(schema.find_signature(sym) != nullptr);
    }
}
