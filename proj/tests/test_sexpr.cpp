#include <catch2/catch_amalgamated.hpp>

#include "liblearn/sexpr.hpp"

using namespace liblearn;

TEST_CASE("print/parse round trips") {
  for (const std::string s : {
           "a",
           "(g a)",
           "(+ (g 1) (h 2))",
           "(list (+ 2 1) (+ 4 1))",
           "?x",
           "(+ ?x 1)",
           "(apply (lambda (?x0) (g ?x0)) (h a))",
           "(apply (lambda (?x0 ?x1) (+ (g ?x0) (h ?x1))) 1 2)",
           "(apply (lambda () (g a)))",
       }) {
    CAPTURE(s);
    CHECK(print(parse_term(s)) == s);
  }
}

TEST_CASE("whitespace and comments") {
  NodePtr t = parse_term("  (+ (g 1)  ; trailing comment\n   (h 2))\n");
  CHECK(print(t) == "(+ (g 1) (h 2))");
  std::vector<NodePtr> many = parse_terms("; corpus\n(g a)\n(g b) ; two\n");
  REQUIRE(many.size() == 2);
  CHECK(print(many[1]) == "(g b)");
}

TEST_CASE("library bindings expand to shared applications") {
  NodePtr t = parse_term("(lib f (lambda (?x) (g ?x)) (list (f a) (f b)))");
  REQUIRE(t->kind == NodeKind::Sym);
  REQUIRE(t->children.size() == 2);
  const NodePtr& u1 = t->children[0];
  const NodePtr& u2 = t->children[1];
  REQUIRE(u1->kind == NodeKind::App);
  REQUIRE(u2->kind == NodeKind::App);
  CHECK(u1->children[0].get() == u2->children[0].get());
  CHECK(equal(evaluate(t), parse_term("(list (g a) (g b))")));

  SECTION("nullary binding used as a bare atom") {
    NodePtr z = parse_term("(lib c (lambda () (g a)) (list c c))");
    CHECK(equal(evaluate(z), parse_term("(list (g a) (g a))")));
    CHECK(term_size(z) == 2);
    CHECK(compressed_size(z) == 4);
  }

  SECTION("bindings may use earlier bindings") {
    NodePtr z = parse_term(
        "(lib f0 (lambda (?x) (+ ?x ?x))"
        " (lib f1 (lambda (?y) (f0 (g ?y)))"
        "  (f1 a)))");
    CHECK(equal(evaluate(z), parse_term("(+ (g a) (g a))")));
    CHECK(compressed_size(z) == 2 + 3 + 3);
  }
}

TEST_CASE("print_lib emits nested bindings") {
  std::vector<LibDef> defs;
  defs.push_back({"f0", 2, parse_term("(+ (g $0) (h $1))")});
  defs.push_back({"f1", 1, parse_term("(f (+ $0 $0))")});
  NodePtr root = parse_term("(list (f0 1 2) (f1 (g a)))");
  std::string out = print_lib(defs, root);
  CHECK(out ==
        "(lib f0 (lambda (?x0 ?x1) (+ (g ?x0) (h ?x1))) "
        "(lib f1 (lambda (?x0) (f (+ ?x0 ?x0))) "
        "(list (f0 1 2) (f1 (g a)))))");
  NodePtr back = parse_term(out);
  CHECK(equal(evaluate(back),
              parse_term("(list (+ (g 1) (h 2)) (f (+ (g a) (g a))))")));
}

TEST_CASE("rules files") {
  std::vector<RewriteRule> rules = parse_rules(
      "; arithmetic\n"
      "(<=> (+ ?a ?b) (+ ?b ?a))\n"
      "(=> (* ?a 1) ?a)\n");
  REQUIRE(rules.size() == 3);
  CHECK(print(rules[0].lhs) == "(+ ?a ?b)");
  CHECK(print(rules[1].lhs) == "(+ ?b ?a)");
  CHECK(print(rules[2].lhs) == "(* ?a 1)");
  CHECK(print(rules[2].rhs) == "?a");
}

TEST_CASE("parse errors carry positions") {
  CHECK_THROWS_AS(parse_term("(g a"), ParseError);
  CHECK_THROWS_AS(parse_term("()"), ParseError);
  CHECK_THROWS_AS(parse_term(")"), ParseError);
  CHECK_THROWS_AS(parse_term("(g a))"), ParseError);
  CHECK_THROWS_AS(parse_term("(?x a)"), ParseError);
  CHECK_THROWS_AS(parse_term("(@foo a)"), ParseError);
  CHECK_THROWS_AS(parse_term("@foo"), ParseError);
  CHECK_THROWS_AS(parse_term("(lambda (?x) ?x)"), ParseError);
  CHECK_THROWS_AS(parse_term("(apply (lambda (?x) ?x) a b)"), ParseError);
  CHECK_THROWS_AS(parse_term("(lib f (lambda (?x) ?x) (f a b))"), ParseError);
  CHECK_THROWS_AS(parse_term("(apply (lambda (?x) (apply (lambda (?y) ?x) a)) b)"), ParseError);
  CHECK_THROWS_AS(parse_rules("(=> (+ ?a ?b) ?c)"), ParseError);
  CHECK_THROWS_AS(parse_rules("(+ ?a ?b)"), ParseError);

  try {
    parse_term("(g\n  a");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
}
