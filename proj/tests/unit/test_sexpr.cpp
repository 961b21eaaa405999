#include <catch2/catch_amalgamated.hpp>

#include "rtv/sexpr.hpp"

using namespace rtv;

TEST_CASE("atoms and lists parse with positions") {
    auto all = read_sexprs("(foo bar (baz 1))\n qux");
    REQUIRE(all.size() == 2);
    CHECK(all[0].is_list());
    CHECK(all[0].items[0].is_atom("foo"));
    CHECK(all[0].items[2].items[1].is_atom("1"));
    CHECK(all[1].is_atom("qux"));
    CHECK(all[1].pos.line == 2);
    CHECK(all[1].pos.column == 2);
}

TEST_CASE("comments are stripped and reported") {
    std::vector<SExprComment> comments;
    auto all = read_sexprs("; header\n(a) ; trailing\n(b)", &comments);
    REQUIRE(all.size() == 2);
    REQUIRE(comments.size() == 2);
    CHECK(comments[0].text == "header");
    CHECK(comments[0].pos.line == 1);
    CHECK(comments[1].text == "trailing");
}

TEST_CASE("unbalanced input yields positioned errors") {
    CHECK_THROWS_AS(read_sexprs("(a (b)"), ParseError);
    CHECK_THROWS_AS(read_sexprs(")"), ParseError);
    try {
        read_sexprs("(a\n(b");
    } catch (const ParseError& e) {
        CHECK(e.pos.line == 2);
    }
}

TEST_CASE("read_one_sexpr rejects trailing content") {
    CHECK(read_one_sexpr("(a b)").is_list());
    CHECK_THROWS_AS(read_one_sexpr("(a) (b)"), ParseError);
    CHECK_THROWS_AS(read_one_sexpr("  ; only a comment"), ParseError);
}

TEST_CASE("render round-trips the tree") {
    auto e = read_one_sexpr("( a  ( b c )\n d )");
    CHECK(render_sexpr(e) == "(a (b c) d)");
}
