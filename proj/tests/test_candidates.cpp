#include <catch2/catch_amalgamated.hpp>

#include "liblearn/candidates.hpp"
#include "liblearn/sexpr.hpp"

using namespace liblearn;

static NodePtr T(const std::string& s) { return parse_term(s); }

static bool contains_pattern(const std::vector<NodePtr>& ps, const std::string& s) {
  NodePtr p = T(s);
  for (const auto& q : ps)
    if (equal(canonicalize(q), p)) return true;
  return false;
}

TEST_CASE("dominance") {
  SECTION("singleton") {
    auto d = dominant({T("(side ?a)")});
    REQUIRE(d.size() == 1);
  }
  SECTION("same variables, same size: one survivor") {
    auto d = dominant({T("(+ ?a 1)"), T("(+ 1 ?a)")});
    REQUIRE(d.size() == 1);
    CHECK(equal(d[0], T("(+ 1 ?a)")));
  }
  SECTION("cycle unrollings are dominated") {
    auto d = dominant({T("(side ?a)"), T("(scale (side ?a) 1)")});
    REQUIRE(d.size() == 1);
    CHECK(equal(d[0], T("(side ?a)")));
  }
  SECTION("fewer variables win at equal size even when sorted later") {
    auto d = dominant({T("(f ?a ?b ?c)"), T("(f ?a ?a ?b)"), T("(f ?a ?a ?a)")});
    REQUIRE(d.size() == 1);
    CHECK(equal(d[0], T("(f ?a ?a ?a)")));
  }
  SECTION("incomparable variable sets both stay") {
    auto d = dominant({T("(f (g ?a) ?a)"), T("(f ?b ?b)")});
    CHECK(d.size() == 2);
  }
}

// Example graph: {0 -> {f(1), g(2)}, 1 -> {g(3)}, 2 -> {f(3)}, 3 -> {a}}
static void build_example_graph(EGraph& g, EClassId out[4]) {
  EClassId c3 = g.add(ENode{"a", {}});
  EClassId c1 = g.add(ENode{"g", {c3}});
  EClassId c2 = g.add(ENode{"f", {c3}});
  EClassId c0 = g.add(ENode{"f", {c1}});
  g.merge(c0, g.add(ENode{"g", {c2}}));
  g.rebuild();
  out[0] = g.find(c0);
  out[1] = g.find(c1);
  out[2] = g.find(c2);
  out[3] = g.find(c3);
}

TEST_CASE("co-occurrence relation") {
  EGraph g;
  EClassId c[4];
  build_example_graph(g, c);
  CoOccurrence co(g);

  SECTION("classes that never share a term do not co-occur") {
    CHECK_FALSE(co(c[1], c[2]));
  }
  SECTION("the root is a proper ancestor of every reachable class") {
    CHECK(co(c[0], c[1]));
    CHECK(co(c[0], c[2]));
    CHECK(co(c[0], c[3]));
  }
  SECTION("descendants through one node co-occur") {
    CHECK(co(c[1], c[3]));
    CHECK(co(c[2], c[3]));
  }
  SECTION("siblings co-occur") {
    EGraph h;
    EClassId x = h.add_term(T("x"));
    EClassId y = h.add_term(T("y"));
    h.add(ENode{"pair", {x, y}});
    h.rebuild();
    CoOccurrence co2(h);
    CHECK(co2(x, y));
    CHECK(co2(y, x));
  }
  SECTION("descendants of distinct siblings co-occur") {
    EGraph h;
    EClassId tup = h.add_term(T("(list (u (v 1)) (w (v 2)))"));
    h.rebuild();
    CoOccurrence co2(h);
    EClassId one = h.find(h.add_term(T("1")));
    EClassId two = h.find(h.add_term(T("2")));
    CHECK(co2(one, two));
    (void)tup;
  }
}

TEST_CASE("anti-unification over e-classes") {
  SECTION("identical acyclic classes yield their ground term") {
    EGraph g;
    EClassId c = g.add_term(T("(+ (g 1) (h 2))"));
    g.rebuild();
    auto ps = au_classes(g, c, c);
    REQUIRE(ps.size() == 1);
    CHECK(equal(ps[0], T("(+ (g 1) (h 2))")));
  }

  SECTION("mismatched constructors yield the pair variable") {
    EGraph g;
    EClassId a = g.add_term(T("a"));
    EClassId b = g.add_term(T("b"));
    g.rebuild();
    auto ps = au_classes(g, a, b);
    REQUIRE(ps.size() == 1);
    CHECK(ps[0]->kind == NodeKind::Var);
    auto origin = au_var_origin(ps[0]->op);
    REQUIRE(origin.has_value());
    CHECK(origin->first == g.find(a));
    CHECK(origin->second == g.find(b));
  }

  SECTION("matching constructors descend without a pair variable") {
    EGraph g;
    EClassId ga = g.add_term(T("(g a)"));
    EClassId gb = g.add_term(T("(g b)"));
    g.rebuild();
    auto ps = au_classes(g, ga, gb);
    REQUIRE(ps.size() == 1);
    CHECK(equal(canonicalize(ps[0]), T("(g ?x0)")));
  }

  SECTION("repeated class pairs share a variable") {
    EGraph g;
    EClassId l = g.add_term(T("(+ (g a) (g a))"));
    EClassId r = g.add_term(T("(+ (g b) (g b))"));
    g.rebuild();
    auto ps = au_classes(g, l, r);
    REQUIRE(ps.size() == 1);
    CHECK(equal(canonicalize(ps[0]), T("(+ (g ?x0) (g ?x0))")));
  }

  SECTION("cyclic pair alternatives are dominated away") {
    EGraph g;
    EClassId c1 = g.add_term(T("(side 6)"));
    EClassId c4 = g.add_term(T("(side 50)"));
    g.eqsat(parse_rules("(=> (side ?x) (scale (side ?x) 1))"));
    auto ps = au_classes(g, c1, c4);
    std::vector<NodePtr> structural;
    for (const auto& p : ps)
      if (p->kind != NodeKind::Var) structural.push_back(p);
    REQUIRE(structural.size() == 1);
    CHECK(equal(canonicalize(structural[0]), T("(side ?x0)")));
    for (const auto& p : ps) CHECK_FALSE(contains_op(p, "scale"));
  }

  SECTION("unrolled once across cyclic classes: shared structure found") {
    EGraph g;
    EClassId c0 = g.add_term(T("(repRot (side 6) 6 (/ 2pi 6))"));
    EClassId c2 = g.add_term(T("(scale (repRot (side 8) 8 (/ 2pi 8)) 2)"));
    g.eqsat(parse_rules("(=> (repRot ?a ?b ?c) (scale (repRot ?a ?b ?c) 1))"));
    auto ps = au_classes(g, c0, c2);
    CHECK(contains_pattern(ps, "(scale (repRot (side ?x0) ?x0 (/ 2pi ?x0)) ?x1)"));
  }

  SECTION("memoized and unmemoized runs agree") {
    EGraph g;
    g.add_term(T("(list (repRot (side 6) 6 (/ 2pi 6)) (scale (repRot (side 8) 8 (/ 2pi 8)) 2))"));
    g.eqsat(parse_rules("(=> (repRot ?a ?b ?c) (scale (repRot ?a ?b ?c) 1))"));
    AntiUnifier with(g, 4, true);
    AntiUnifier without(g, 4, false);
    auto ids = g.class_ids();
    for (EClassId a : ids) {
      for (EClassId b : ids) {
        auto pa = with.au(a, b);
        auto pb = without.au(a, b);
        REQUIRE(pa.size() == pb.size());
        for (size_t i = 0; i < pa.size(); ++i) CHECK(equal(pa[i], pb[i]));
      }
    }
  }
}

TEST_CASE("candidate generation") {
  SECTION("equations expose shared structure that syntax hides") {
    EGraph g;
    EClassId root = g.add_term(T("(list (+ 2 1) (+ 1 3))"));
    EGraph g2 = g;

    g.eqsat(parse_rules("(<=> (+ ?a ?b) (+ ?b ?a))"));
    CandidateSet with = generate_candidates(g, {}, root);
    bool found = false;
    for (const auto& c : with.candidates)
      found = found || equal(c.pattern, T("(+ 1 ?x0)")) || equal(c.pattern, T("(+ ?x0 1)"));
    CHECK(found);

    CandidateSet without = generate_candidates(g2, {}, root);
    CHECK(without.candidates.empty());
  }

  SECTION("variable origins record the projection classes") {
    EGraph g;
    EClassId root = g.add_term(T("(list (+ 2 1) (+ 1 3))"));
    g.eqsat(parse_rules("(<=> (+ ?a ?b) (+ ?b ?a))"));
    CandidateSet cs = generate_candidates(g, {}, root);
    REQUIRE(cs.candidates.size() >= 1);
    const Candidate* c = nullptr;
    for (const auto& cand : cs.candidates)
      if (distinct_vars(cand.pattern).size() == 1) c = &cand;
    REQUIRE(c != nullptr);
    REQUIRE(c->var_origins.size() == 1);
    auto [l, r] = c->var_origins.begin()->second;
    EClassId two = g.find(g.add_term(T("2")));
    EClassId three = g.find(g.add_term(T("3")));
    CHECK(std::set<EClassId>{l, r} == std::set<EClassId>{two, three});
  }

  SECTION("repeated subterms become ground candidates, whole programs do not") {
    EGraph g;
    EClassId root = g.add_term(T("(+ (g 1) (g 1))"));
    g.rebuild();
    CandidateSet cs = generate_candidates(g, {}, root);
    REQUIRE(cs.candidates.size() == 1);
    CHECK(equal(cs.candidates[0].pattern, T("(g 1)")));
    CHECK(cs.candidates[0].n_matched_classes == 1);
    CHECK(cs.candidates[0].n_matched_positions == 2);
  }

  SECTION("corpus of related programs yields the helper and the full join") {
    EGraph g;
    EClassId root = g.add_term(
        T("(list (+ (f (+ (g a) (g a))) (+ (g 1) (h 2)))"
          "      (+ (f (+ (g b) (g b))) (+ (g 3) (h 4)))"
          "      (+ (g 5) (h 6)))"));
    g.rebuild();
    CandidateSet cs = generate_candidates(g, {}, root);

    auto find_pat = [&](const std::string& s) -> const Candidate* {
      NodePtr p = T(s);
      for (const auto& c : cs.candidates)
        if (equal(c.pattern, p)) return &c;
      return nullptr;
    };
    const Candidate* helper = find_pat("(+ (g ?x0) (h ?x1))");
    REQUIRE(helper != nullptr);
    CHECK(helper->n_matched_classes == 3);
    CHECK(helper->n_matched_positions == 3);
    CHECK(helper->arity == 2);

    const Candidate* full = find_pat("(+ (f (+ (g ?x0) (g ?x0))) (+ (g ?x1) (h ?x2)))");
    REQUIRE(full != nullptr);
    CHECK(full->n_matched_classes == 2);
    CHECK(full->arity == 3);

    for (const auto& c : cs.candidates) {
      CHECK_FALSE(is_trivial(c.pattern));
      CHECK_FALSE(contains_tuple(c.pattern));
      CHECK(c.n_matched_positions >= 2);
      CHECK(c.arity <= 4);
    }
  }

  SECTION("arity cap prunes wide patterns") {
    EGraph g;
    EClassId root = g.add_term(
        T("(list (k a1 b1 c1 d1 e1 f1) (k a2 b2 c2 d2 e2 f2))"));
    g.rebuild();
    CandidateConfig cfg;
    cfg.max_arity = 4;
    CandidateSet cs = generate_candidates(g, cfg, root);
    for (const auto& c : cs.candidates) CHECK(c.arity <= 4);
  }

  SECTION("rules mirror candidates and only add to the graph") {
    EGraph g;
    EClassId root = g.add_term(T("(list (+ (g 1) (h 2)) (+ (g 3) (h 4)) (+ (g 5) (h 6)))"));
    g.rebuild();
    CandidateSet cs = generate_candidates(g, {}, root);
    std::vector<RewriteRule> rules = candidates_to_rules(cs);
    REQUIRE(rules.size() == cs.candidates.size());
    for (size_t i = 0; i < rules.size(); ++i) CHECK(equal(rules[i].lhs, cs.candidates[i].pattern));

    EClassId sum = g.find(g.add_term(T("(+ (g 1) (h 2))")));
    auto before = g.denote_bounded(sum, 20, 6);
    g.eqsat(rules);
    auto after = g.denote_bounded(sum, 20, 6);
    REQUIRE(before.size() == after.size());
    for (size_t i = 0; i < before.size(); ++i) CHECK(equal(before[i], after[i]));
  }
}
