#include <catch2/catch_amalgamated.hpp>

#include "liblearn/selection.hpp"

using namespace liblearn;

static NodePtr T(const std::string& s) { return parse_term(s); }

TEST_CASE("cost set reduce") {
  SECTION("superset at equal cost is dropped") {
    CostSet cs{{{{10}, 5}, {{10, 20}, 5}}};
    CostSet r = reduce(cs);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0] == CostEntry{{10}, 5});
  }
  SECTION("cheaper superset survives") {
    CostSet cs{{{{}, 9}, {{10}, 3}}};
    CHECK(reduce(cs).entries.size() == 2);
  }
  SECTION("singleton unchanged") {
    CostSet cs{{{{10}, 4}}};
    CHECK(reduce(cs) == cs);
  }
  SECTION("identical libraries keep the minimum") {
    CostSet cs{{{{10}, 7}, {{10}, 5}}};
    CostSet r = reduce(cs);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].cost == 5);
  }
  SECTION("empty library dominates at equal cost") {
    CostSet cs{{{{}, 3}, {{10}, 3}}};
    CostSet r = reduce(cs);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].libs.empty());
  }
}

TEST_CASE("cost set prune") {
  auto size_of = [](LibFnId f) -> int64_t { return f == 10 ? 9 : 7; };  // f0=10, f1=20
  CostSet c2{{{{10}, 3}, {{20}, 4}, {{}, 9}}};

  SECTION("wide bounds are the identity") {
    CHECK(prune(c2, 100, 100, size_of) == sort_entries(c2));
  }
  SECTION("library cap zero keeps only the empty library") {
    CostSet r = prune(c2, 0, 100, size_of);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0] == CostEntry{{}, 9});
  }
  SECTION("beam of one keeps the best library-adjusted rank") {
    // 0+9 < 7+4 < 9+3
    CostSet r = prune(c2, 100, 1, size_of);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0] == CostEntry{{}, 9});
  }
}

namespace {

struct PolyFixture {
  EGraph g;  // equation-saturated input graph
  EClassId root = -1;
  NodePtr input;
  RewriteRule r0, r1;
  EGraph gp;  // with both abstraction rules applied
  LibFnId f0 = -1, f1 = -1;
};

PolyFixture make_poly() {
  PolyFixture fx;
  fx.input =
      T("(pair (repRot (side 6) 6 (/ 2pi 6)) (scale (repRot (side 8) 8 (/ 2pi 8)) 2))");
  fx.root = fx.g.add_term(fx.input);
  fx.g.eqsat(parse_rules("(=> ?x (scale ?x 1))"));
  fx.r0 = kappa(T("(scale (repRot (side ?x) ?x (/ 2pi ?x)) ?y)"));
  fx.r1 = kappa(T("(repRot (side ?x) ?x (/ 2pi ?x))"));
  fx.gp = apply_lib_rules(fx.g, {fx.r0, fx.r1});
  EClassSubst empty;
  fx.f0 = fx.gp.find(fx.gp.add_pattern(fx.r0.rhs->children[0], empty));
  fx.f1 = fx.gp.find(fx.gp.add_pattern(fx.r1.rhs->children[0], empty));
  return fx;
}

bool has_entry(const CostSet& cs, const CostEntry& e) {
  for (const auto& x : cs.entries)
    if (x == e) return true;
  return false;
}

}  // namespace

TEST_CASE("cost sets over the two-polygon graph") {
  PolyFixture fx = make_poly();
  CostSets cs = cost_sets(fx.gp);
  REQUIRE(cs.report.converged);

  SECTION("leaf classes cost one with no library") {
    EClassId six = fx.gp.find(fx.gp.add_term(T("6")));
    REQUIRE(cs.by_class.at(six).entries.size() == 1);
    CHECK(cs.by_class.at(six).entries[0] == CostEntry{{}, 1});
  }
  SECTION("the scaled-polygon class has exactly the three known realizations") {
    EClassId oct =
        fx.gp.find(fx.gp.add_term(T("(scale (repRot (side 8) 8 (/ 2pi 8)) 2)")));
    const CostSet& set = cs.by_class.at(oct);
    REQUIRE(set.entries.size() == 3);
    CHECK(set.entries[0] == CostEntry{{fx.f0}, 3});
    CHECK(set.entries[1] == CostEntry{{fx.f1}, 4});
    CHECK(set.entries[2] == CostEntry{{}, 9});
  }
  SECTION("the plain-polygon class can use either function") {
    EClassId hex = fx.gp.find(fx.gp.add_term(T("(repRot (side 6) 6 (/ 2pi 6))")));
    const CostSet& set = cs.by_class.at(hex);
    CHECK(has_entry(set, {{fx.f1}, 2}));
    CHECK(has_entry(set, {{fx.f0}, 3}));
    CHECK(has_entry(set, {{}, 7}));
  }
  SECTION("the corpus root pair") {
    const CostSet& set = cs.by_class.at(fx.gp.find(fx.root));
    CHECK(has_entry(set, {{}, 17}));
    CHECK(has_entry(set, {{fx.f1}, 7}));
  }
  SECTION("recomputation is a fixpoint") {
    CostSets again = cost_sets(fx.gp);
    CHECK(again.by_class == cs.by_class);
  }
}

TEST_CASE("library selection over the two-polygon graph") {
  PolyFixture fx = make_poly();
  std::map<LibFnId, std::string> names{{fx.f0, "f0"}, {fx.f1, "f1"}};

  SECTION("the inner-polygon function wins") {
    SelectionResult res = select_library(fx.gp, fx.root, {}, &names);
    REQUIRE(res.chosen == LibSet{fx.f1});
    CHECK(res.use_cost == 7);
    CHECK(res.library_size == 7);
    CHECK(res.total == 14);
    REQUIRE(res.library.size() == 1);
    CHECK(res.library[0].name == "f1");
    CHECK(res.library[0].arity == 1);
    CHECK(print(res.library[0].def) == "(repRot (side ?x0) ?x0 (/ 2pi ?x0))");
    CHECK(print(res.refactored) == "(pair (f1 6) (scale (f1 8) 2))");
    CHECK(term_size(res.refactored) == res.use_cost);
    CHECK(term_size(res.library[0].def) == res.library_size);
  }
  SECTION("restricting the library to one function changes nothing") {
    SelectionConfig cfg;
    cfg.max_lib_fns = 1;
    SelectionResult res = select_library(fx.gp, fx.root, cfg, &names);
    CHECK(res.chosen == LibSet{fx.f1});
    CHECK(res.total == 14);
  }
  SECTION("reduce does not change the outcome") {
    SelectionConfig cfg;
    cfg.enable_reduce = false;
    SelectionResult res = select_library(fx.gp, fx.root, cfg, &names);
    CHECK(res.chosen == LibSet{fx.f1});
    CHECK(res.total == 14);
  }
  SECTION("narrow beams degrade monotonically") {
    std::vector<int64_t> totals;
    for (int64_t k : {1, 2, 3, 100}) {
      SelectionConfig cfg;
      cfg.beam_width = k;
      totals.push_back(select_library(fx.gp, fx.root, cfg, &names).total);
    }
    CHECK(totals[0] == 17);
    CHECK(totals[3] == 14);
    for (size_t i = 1; i < totals.size(); ++i) CHECK(totals[i] <= totals[i - 1]);
  }
  SECTION("no abstraction rules: empty library at plain size") {
    SelectionResult res = select_library(fx.g, fx.root);
    CHECK(res.chosen.empty());
    CHECK(res.library.empty());
    CHECK(res.total == 17);
    CHECK(equal(res.refactored, fx.input));
  }
  SECTION("restricted extraction refuses a bare application") {
    EGraph g2;
    EClassId x = g2.add(ENode{"x", {}});
    EClassId app = g2.add(ENode{std::string(kAppOp), {x}});
    g2.rebuild();
    auto costs = lib_costs(g2, {});
    CHECK_THROWS_AS(extract_with_lib(g2, app, {}, {}, costs), ExtractError);
  }
}

TEST_CASE("finalize assembles the output program") {
  PolyFixture fx = make_poly();

  SECTION("single selected function") {
    std::vector<std::string> names{"f1"};
    CompressedOutput out = finalize(fx.g, {fx.r1}, fx.root, &names);
    REQUIRE(out.libs.size() == 1);
    CHECK(out.libs[0].name == "f1");
    CHECK(out.libs[0].arity == 1);
    CHECK(output_size(out) == 14);
    CHECK(print_lib(out.libs, out.root) ==
          "(lib f1 (lambda (?x0) (repRot (side ?x0) ?x0 (/ 2pi ?x0))) "
          "(pair (f1 6) (scale (f1 8) 2)))");
    CHECK(equal(evaluate(expand_output(out)), fx.input));
  }
  SECTION("two functions: one is defined via the other, definitions precede uses") {
    std::vector<std::string> names{"f0", "f1"};
    CompressedOutput out = finalize(fx.g, {fx.r0, fx.r1}, fx.root, &names);
    REQUIRE(out.libs.size() == 2);
    CHECK(out.libs[0].name == "f1");
    CHECK(out.libs[1].name == "f0");
    CHECK(print(out.libs[1].body) == "(scale (f1 ?x0) ?x1)");
    CHECK(print(out.root) == "(pair (f1 6) (f0 8 2))");
    CHECK(output_size(out) == 17);
    CHECK(equal(evaluate(expand_output(out)), fx.input));
  }
  SECTION("no rules: plain extraction") {
    CompressedOutput out = finalize(fx.g, {}, fx.root);
    CHECK(out.libs.empty());
    CHECK(equal(out.root, fx.input));
    CHECK(output_size(out) == 17);
  }
  SECTION("matches the selection report") {
    std::map<LibFnId, std::string> by_body{{fx.f0, "f0"}, {fx.f1, "f1"}};
    SelectionResult res = select_library(fx.gp, fx.root, {}, &by_body);
    std::vector<std::string> names{"f1"};
    CompressedOutput out = finalize(fx.g, {fx.r1}, fx.root, &names);
    CHECK(output_size(out) == res.total);
    CHECK(equal(out.root, res.refactored));
    CHECK(equal(out.libs[0].body, res.library[0].def));
  }
}
