#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "costset.hpp"
#include "sexpr.hpp"

namespace liblearn {

// Saturates a copy of the graph with abstraction rules.  Each rewritten class
// gains an application node whose first child is the λ-body's class; rules
// keep firing inside those bodies, so functions can be defined via others.
inline EGraph apply_lib_rules(const EGraph& g, const std::vector<RewriteRule>& rules,
                              const EqsatLimits& limits = {}) {
  EGraph out = g;
  out.eqsat(rules, limits);
  return out;
}

struct SelectionConfig {
  int64_t max_lib_fns = 3;      // N: library entries and the final library
  int64_t beam_width = 100;     // K: cost-set entries kept per class
  size_t exhaustive_limit = 14; // pool size up to which all subsets are tried
  bool enable_reduce = true;
  int max_passes = 0;
};

struct LibraryFn {
  std::string name;
  LibFnId body_class = -1;
  int arity = 0;
  NodePtr def;  // binder references appear as parameters
  int64_t def_cost = 0;
};

struct SelectionResult {
  LibSet chosen;
  std::vector<LibraryFn> library;  // ascending body class
  NodePtr refactored;              // corpus with named function uses
  int64_t use_cost = 0;
  int64_t library_size = 0;
  int64_t total = 0;
  size_t root_cost_set_size = 0;
  size_t pool_size = 0;
  bool cost_sets_converged = true;
  bool exhaustive = true;
};

// Size of one node when exactly the functions in `allowed` may be used:
// binder references are leaves, an application pays 1 plus its arguments with
// the body left to the definition, a tuple is free, anything else pays 1.
inline int64_t node_lib_cost(const EGraph& g, const ENode& n, const LibSet& allowed,
                             const std::map<EClassId, int64_t>& best) {
  if (is_param_op(n.op)) return 1;
  int64_t c;
  size_t first = 0;
  if (n.op == kAppOp) {
    if (!lib_contains(allowed, g.find(n.children[0]))) return kInfCost;
    c = 1;
    first = 1;
  } else {
    c = (n.op == kTupleOp) ? 0 : 1;
  }
  for (size_t i = first; i < n.children.size(); ++i) {
    int64_t v = best.at(g.find(n.children[i]));
    if (v >= kInfCost) return kInfCost;
    c += v;
  }
  return std::min<int64_t>(c, kInfCost);
}

inline std::map<EClassId, int64_t> lib_costs(const EGraph& g, const LibSet& allowed) {
  std::map<EClassId, int64_t> best;
  for (EClassId c : g.class_ids()) best[c] = kInfCost;
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto& [c, b] : best) {
      for (const ENode& n : g.nodes(c)) {
        int64_t v = node_lib_cost(g, n, allowed, best);
        if (v < b) {
          b = v;
          changed = true;
        }
      }
    }
  }
  return best;
}

inline NodePtr extract_with_lib(const EGraph& g, EClassId id, const LibSet& allowed,
                                const std::map<LibFnId, std::string>& names,
                                const std::map<EClassId, int64_t>& best,
                                std::set<EClassId>* on_path = nullptr) {
  std::set<EClassId> local;
  if (!on_path) on_path = &local;
  id = g.find(id);
  int64_t want = best.at(id);
  if (want >= kInfCost) throw ExtractError("no finite-cost term for class " + std::to_string(id));
  if (!on_path->insert(id).second)
    throw ExtractError("cyclic extraction at class " + std::to_string(id));
  const ENode* pick = nullptr;
  for (const ENode& n : g.nodes(id)) {
    if (node_lib_cost(g, n, allowed, best) != want) continue;
    if (!pick || n.children.size() < pick->children.size() ||
        (n.children.size() == pick->children.size() && n < *pick))
      pick = &n;
  }
  if (!pick) throw ExtractError("inconsistent costs at class " + std::to_string(id));
  NodePtr out;
  if (is_param_op(pick->op)) {
    out = make_param(param_slot(pick->op));
  } else {
    std::string op = pick->op;
    size_t first = 0;
    if (pick->op == kAppOp) {
      op = names.at(g.find(pick->children[0]));
      first = 1;
    }
    std::vector<NodePtr> kids;
    for (size_t i = first; i < pick->children.size(); ++i)
      kids.push_back(extract_with_lib(g, pick->children[i], allowed, names, best, on_path));
    out = make_sym(std::move(op), std::move(kids));
  }
  on_path->erase(g.find(id));
  return out;
}

inline int max_param_index(const NodePtr& t) {
  int m = t->kind == NodeKind::Param ? t->index : -1;
  for (const auto& c : t->children) m = std::max(m, max_param_index(c));
  return m;
}

// Chooses the library minimizing total size: the root's cheapest realization
// under a final library M plus, for every f in M, the cheapest definition of
// f's body using M without f itself (a function must not define itself away).
// Cost sets steer the search; the chosen M is then re-scored exactly and the
// empty library kept as fallback.
inline SelectionResult select_library(const EGraph& g, EClassId root,
                                      const SelectionConfig& cfg = {},
                                      const std::map<LibFnId, std::string>* names_in = nullptr) {
  SelectionResult res;
  EClassId r = g.find(root);
  CostConfig cc;
  cc.max_lib_fns = cfg.max_lib_fns;
  cc.beam_width = cfg.beam_width;
  cc.max_passes = cfg.max_passes;
  cc.enable_reduce = cfg.enable_reduce;
  CostSets cs = cost_sets(g, cc);
  res.cost_sets_converged = cs.report.converged;
  const CostSet& rs = cs.by_class.at(r);
  res.root_cost_set_size = rs.entries.size();
  if (rs.entries.empty()) throw ExtractError("root class has no finite-cost term");

  // Pool: functions reachable from the root entries through the definition
  // needs of functions already in the pool.
  std::set<LibFnId> pool_set;
  std::vector<LibFnId> frontier;
  auto absorb = [&](const LibSet& libs) {
    for (LibFnId f : libs)
      if (pool_set.insert(f).second) frontier.push_back(f);
  };
  for (const auto& e : rs.entries) absorb(e.libs);
  while (!frontier.empty()) {
    LibFnId f = frontier.back();
    frontier.pop_back();
    auto it = cs.by_class.find(f);
    if (it != cs.by_class.end())
      for (const auto& e : it->second.entries) absorb(e.libs);
  }
  std::vector<LibFnId> pool(pool_set.begin(), pool_set.end());
  res.pool_size = pool.size();

  auto min_under = [&](const CostSet& set, const LibSet& m) -> int64_t {
    for (const auto& e : set.entries)  // sorted by cost
      if (lib_subset(e.libs, m)) return e.cost;
    return kInfCost;
  };
  auto total_of = [&](const LibSet& m) -> int64_t {
    int64_t t = min_under(rs, m);
    if (t >= kInfCost) return kInfCost;
    for (LibFnId f : m) {
      int64_t d = min_under(cs.by_class.at(f), lib_erase(m, f));
      if (d >= kInfCost) return kInfCost;
      t += d;
    }
    return t;
  };

  LibSet best_m;
  int64_t best_total = total_of({});
  auto consider = [&](const LibSet& m) {
    int64_t t = total_of(m);
    if (t < best_total ||
        (t == best_total &&
         (m.size() < best_m.size() || (m.size() == best_m.size() && m < best_m)))) {
      best_total = t;
      best_m = m;
    }
  };
  // Each surviving root entry proposes its own library outright.  The local
  // search below can then refine a proposal but never depends on reaching it
  // through intermediate libraries the beam may have dropped.
  for (const auto& e : rs.entries) consider(e.libs);

  if (pool.size() <= cfg.exhaustive_limit) {
    uint32_t lim = static_cast<uint32_t>(1) << pool.size();
    for (uint32_t mask = 1; mask < lim; ++mask) {
      if (std::popcount(mask) > cfg.max_lib_fns) continue;
      LibSet m;
      for (size_t i = 0; i < pool.size(); ++i)
        if (mask & (1u << i)) m.push_back(pool[i]);
      consider(m);
    }
  } else {
    res.exhaustive = false;
    for (;;) {
      LibSet cur = best_m;
      int64_t cur_total = best_total;
      for (LibFnId f : pool)
        if (!lib_contains(cur, f) && static_cast<int64_t>(cur.size()) < cfg.max_lib_fns)
          consider(lib_insert(cur, f));
      for (LibFnId f : cur) consider(lib_erase(cur, f));
      for (LibFnId out_f : cur)
        for (LibFnId in_f : pool)
          if (!lib_contains(cur, in_f)) consider(lib_insert(lib_erase(cur, out_f), in_f));
      if (best_total == cur_total && best_m == cur) break;
    }
  }

  // Exact re-scoring of the chosen library; fall back to the empty library if
  // the beam estimate was beaten by plain extraction.
  std::map<EClassId, int64_t> root_costs = lib_costs(g, best_m);
  int64_t use = root_costs.at(r);
  std::vector<std::pair<LibFnId, std::map<EClassId, int64_t>>> def_costs;
  int64_t lib_total = 0;
  for (LibFnId f : best_m) {
    def_costs.emplace_back(f, lib_costs(g, lib_erase(best_m, f)));
    lib_total += def_costs.back().second.at(f);
  }
  if (!best_m.empty()) {
    std::map<EClassId, int64_t> plain = lib_costs(g, {});
    if (plain.at(r) <= use + lib_total) {
      best_m.clear();
      def_costs.clear();
      lib_total = 0;
      root_costs = std::move(plain);
      use = root_costs.at(r);
    }
  }
  if (use >= kInfCost) throw ExtractError("root class has no finite-cost term");

  std::map<LibFnId, std::string> names;
  for (size_t i = 0; i < best_m.size(); ++i) {
    std::string nm;
    if (names_in) {
      auto it = names_in->find(best_m[i]);
      if (it != names_in->end()) nm = it->second;
    }
    if (nm.empty()) nm = "f" + std::to_string(i);
    names[best_m[i]] = std::move(nm);
  }

  res.chosen = best_m;
  res.use_cost = use;
  res.library_size = lib_total;
  res.total = use + lib_total;
  res.refactored = extract_with_lib(g, r, best_m, names, root_costs);
  for (auto& [f, costs] : def_costs) {
    LibraryFn fn;
    fn.name = names.at(f);
    fn.body_class = f;
    fn.def_cost = costs.at(f);
    fn.def = extract_with_lib(g, f, lib_erase(best_m, f), names, costs);
    fn.arity = max_param_index(fn.def) + 1;
    res.library.push_back(std::move(fn));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Final output assembly

struct CompressedOutput {
  std::vector<LibDef> libs;  // definitions in emission order
  NodePtr root;
};

// Total size of the output: the corpus term plus each definition body once;
// the binding forms themselves are free.
inline int64_t output_size(const CompressedOutput& o) {
  int64_t s = term_size(o.root);
  for (const auto& d : o.libs) s += term_size(d.body);
  return s;
}

inline void collect_ops(const NodePtr& t, std::set<std::string>& out) {
  if (t->kind == NodeKind::Sym) out.insert(t->op);
  for (const auto& c : t->children) collect_ops(c, out);
}

// Re-saturates a copy of the graph with only the selected rules, extracts the
// cheapest corpus and definitions, and lays definitions out before their
// uses.  Functions with α-equal bodies collapse into one.
inline CompressedOutput finalize(const EGraph& original, const std::vector<RewriteRule>& selected,
                                 EClassId root,
                                 const std::vector<std::string>* rule_names = nullptr,
                                 const EqsatLimits& limits = {}) {
  EGraph h = original;
  h.eqsat(selected, limits);
  EClassId r = h.find(root);

  std::vector<LibFnId> fns;
  std::map<LibFnId, std::string> names;
  for (size_t i = 0; i < selected.size(); ++i) {
    EClassSubst empty;
    EClassId body = h.find(h.add_pattern(selected[i].rhs->children[0], empty));
    if (names.count(body)) continue;
    std::string nm;
    if (rule_names && i < rule_names->size()) nm = (*rule_names)[i];
    if (nm.empty()) nm = "f" + std::to_string(fns.size());
    names[body] = std::move(nm);
    fns.push_back(body);
  }
  LibSet allowed(fns.begin(), fns.end());
  std::sort(allowed.begin(), allowed.end());

  std::map<EClassId, int64_t> rc = lib_costs(h, allowed);
  NodePtr out_root = extract_with_lib(h, r, allowed, names, rc);

  std::map<LibFnId, LibDef> defs;
  for (LibFnId f : allowed) {
    LibSet rest = lib_erase(allowed, f);
    std::map<EClassId, int64_t> costs = lib_costs(h, rest);
    NodePtr body = extract_with_lib(h, f, rest, names, costs);
    defs[f] = LibDef{names.at(f), max_param_index(body) + 1, body};
  }

  // Keep only functions reachable from the corpus.
  std::set<std::string> used;
  collect_ops(out_root, used);
  bool grew = true;
  while (grew) {
    grew = false;
    for (LibFnId f : fns)
      if (used.count(names.at(f))) {
        std::set<std::string> more;
        collect_ops(defs.at(f).body, more);
        for (const auto& op : more) grew |= used.insert(op).second;
      }
  }

  // Creation order, adjusted so every definition precedes its uses.
  std::vector<LibFnId> pending;
  for (LibFnId f : fns)
    if (used.count(names.at(f))) pending.push_back(f);
  CompressedOutput out;
  out.root = out_root;
  std::set<std::string> emitted;
  while (!pending.empty()) {
    size_t at = pending.size();
    for (size_t i = 0; i < pending.size(); ++i) {
      std::set<std::string> ops;
      collect_ops(defs.at(pending[i]).body, ops);
      bool ready = true;
      for (LibFnId f : pending)
        if (f != pending[i] && ops.count(names.at(f)) && !emitted.count(names.at(f)))
          ready = false;
      if (ready) {
        at = i;
        break;
      }
    }
    if (at == pending.size()) at = 0;  // defensive: mutual reference
    emitted.insert(names.at(pending[at]));
    out.libs.push_back(defs.at(pending[at]));
    pending.erase(pending.begin() + at);
  }
  return out;
}

inline NodePtr subst_defs(const NodePtr& t,
                          const std::map<std::string, std::pair<int, NodePtr>>& defs) {
  std::vector<NodePtr> kids;
  kids.reserve(t->children.size());
  for (const auto& c : t->children) kids.push_back(subst_defs(c, defs));
  if (t->kind == NodeKind::Sym) {
    auto it = defs.find(t->op);
    if (it != defs.end() && static_cast<int>(kids.size()) == it->second.first)
      return make_app(it->second.second, std::move(kids));
    return make_sym(t->op, std::move(kids));
  }
  if (t->kind == NodeKind::App) return make_app(kids[0], {kids.begin() + 1, kids.end()});
  return t;
}

// Replaces named function uses by redexes of their definitions so the output
// can be evaluated back to a plain term.
inline NodePtr expand_output(const CompressedOutput& o) {
  std::map<std::string, std::pair<int, NodePtr>> defs;
  for (const auto& d : o.libs) defs[d.name] = {d.arity, subst_defs(d.body, defs)};
  return subst_defs(o.root, defs);
}

}  // namespace liblearn
