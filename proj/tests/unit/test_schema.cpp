#include <catch2/catch_amalgamated.hpp>

#include "rtv/schema.hpp"

using namespace rtv;

namespace {

// The published schema excerpt: seven uninterpreted sorts plus attribute
// and relational predicates, with the enumerations they reference declared
// up front.
const char* kExcerpt = R"(
(declare-datatypes ((VehicleKind 0)) (((passenger_car) (truck) (motorcycle))))
(declare-datatypes ((RoadwayKind 0)) (((urban) (rural) (controlled_access))))
(declare-datatypes ((NPKind 0)) (((none) (solid) (double_solid))))
; Core Sorts
(declare-sort Vehicle 0)
(declare-sort Lane 0)
(declare-sort Roadway 0)
(declare-sort Zone 0)
(declare-sort Access 0)
(declare-sort Crossing 0)
(declare-sort Intersection 0)

; Vehicle attributes
(declare-fun kind (Vehicle) VehicleKind)
(declare-fun speed (Vehicle Int) Real)
(declare-fun on_roadway (Vehicle Roadway Int) Bool)

; Roadway properties
(declare-fun roadway_kind (Roadway) RoadwayKind)
(declare-fun roadway_sufficient_width (Roadway) Bool)
(declare-fun no_passing_kind (Roadway Int) NPKind)

; Relational predicates (temporal)
; DURATIVE: true while maneuver ongoing
(declare-fun passing (Vehicle Vehicle Int) Bool)
(declare-fun following (Vehicle Vehicle Int) Bool)
; INSTANT: true at specific time t only
(declare-fun audible_signal (Vehicle Int) Bool)
)";

}  // namespace

TEST_CASE("traffic schema excerpt loads with the expected shape") {
    Schema schema = Schema::load(kExcerpt);
    CHECK(schema.uninterpreted_sort_count() == 7);
    CHECK(schema.sort_count() == 10);  // plus the three enumerations
    const Signature* sig = schema.find_signature("on_roadway");
    REQUIRE(sig != nullptr);
    CHECK(sig->arg_sorts == std::vector<std::string>{"Vehicle", "Roadway", "Int"});
    CHECK(sig->result_sort == "Bool");
    CHECK(schema.find_sort("Int")->kind == SortKind::Int);
    CHECK(schema.find_constructor_sort("truck")->name == "VehicleKind");
}

TEST_CASE("empty input loads an empty schema") {
    Schema schema = Schema::load("");
    CHECK(schema.sort_count() == 0);
    CHECK(schema.signature_count() == 0);
    CHECK(schema.render_declarations().empty());
}

TEST_CASE("unknown sort reference names the missing sort") {
    try {
        Schema::load("(declare-fun f (Missing) Bool)");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("Missing") != std::string::npos);
        CHECK(std::string(e.what()).find("unknown-sort-reference") != std::string::npos);
    }
}

TEST_CASE("duplicate names are rejected across kinds") {
    CHECK_THROWS_AS(Schema::load("(declare-sort A 0)\n(declare-sort A 0)"), SchemaError);
    CHECK_THROWS_AS(Schema::load("(declare-sort A 0)\n(declare-fun A () Bool)"),
                    SchemaError);
    CHECK_THROWS_AS(
        Schema::load("(declare-datatypes ((E 0)) (((a) (a))))"), SchemaError);
    CHECK_THROWS_AS(Schema::load("(declare-sort Int 0)"), SchemaError);
}

TEST_CASE("malformed declarations carry positions") {
    try {
        Schema::load("(declare-sort Vehicle 0)\n(declare-fun broken");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.pos.line == 2);
    }
    CHECK_THROWS_AS(Schema::load("(declare-sort Vehicle 2)"), SchemaError);
    CHECK_THROWS_AS(Schema::load("(declare-datatypes ((E 0)) ((())))"), SchemaError);
    CHECK_THROWS_AS(Schema::load("(set-logic ALL)"), SchemaError);
}

TEST_CASE("temporal annotations attach to the following declare-funs") {
    Schema schema = Schema::load(kExcerpt);
    const auto& ann = schema.annotations();
    REQUIRE(ann.count("passing"));
    REQUIRE(ann.count("following"));
    REQUIRE(ann.count("audible_signal"));
    CHECK(ann.at("passing").rfind("DURATIVE:", 0) == 0);
    CHECK(ann.at("following").rfind("DURATIVE:", 0) == 0);
    CHECK(ann.at("audible_signal").rfind("INSTANT:", 0) == 0);
    // Section headers clear the pending annotation.
    CHECK(ann.count("kind") == 0);
    CHECK(ann.count("roadway_kind") == 0);
}

TEST_CASE("re-rendering declarations and re-parsing yields an equal schema") {
    Schema schema = Schema::load(kExcerpt);
    std::string rendered = schema.render_declarations();
    Schema reparsed = Schema::load(rendered);
    CHECK(schema == reparsed);
    // And the rendering is a fixed point.
    CHECK(reparsed.render_declarations() == rendered);
}

TEST_CASE("declaration order is preserved for rendering") {
    Schema schema = Schema::load("(declare-sort B 0)\n(declare-sort A 0)");
    std::string rendered = schema.render_declarations();
    CHECK(rendered.find("(declare-sort B 0)") < rendered.find("(declare-sort A 0)"));
}
