#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "selection.hpp"

namespace liblearn {

// Reference implementations refuse oversized inputs instead of silently
// truncating, so their answers can be trusted as exact.
struct OracleBudget {
  size_t max_candidates = 12;
  size_t max_denoted = 200;
  size_t max_subset = 12;
  double max_seconds = 10.0;
  size_t max_states = 200000;  // term-rewriting search states
  int64_t max_term_nodes = 20;
};

class OracleRefusal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleLibrary {
  std::vector<size_t> chosen;  // indices into the candidate rule list
  int64_t total = 0;
};

// Exact optimum over every candidate subset: applies all candidate rules,
// then scores each subset S as the root's cheapest term using S plus, per
// function, its cheapest definition using S without itself.
inline OracleLibrary optimal_library_bruteforce(const EGraph& g, EClassId root,
                                                const std::vector<RewriteRule>& candidates,
                                                const OracleBudget& budget = {}) {
  if (candidates.size() > budget.max_candidates)
    throw OracleRefusal("candidate count " + std::to_string(candidates.size()) +
                        " exceeds oracle budget");
  auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  EGraph gp = g;
  gp.eqsat(candidates);
  root = gp.find(root);

  std::vector<LibFnId> fns;
  std::map<LibFnId, size_t> first_rule;
  for (size_t i = 0; i < candidates.size(); ++i) {
    EClassSubst empty;
    LibFnId body = gp.find(gp.add_pattern(candidates[i].rhs->children[0], empty));
    if (first_rule.emplace(body, i).second) fns.push_back(body);
  }
  std::sort(fns.begin(), fns.end());

  std::map<LibSet, std::map<EClassId, int64_t>> costs_by_lib;
  auto costs_of = [&](const LibSet& m) -> const std::map<EClassId, int64_t>& {
    auto it = costs_by_lib.find(m);
    if (it == costs_by_lib.end()) it = costs_by_lib.emplace(m, lib_costs(gp, m)).first;
    return it->second;
  };

  LibSet best_m;
  int64_t best_total = kInfCost;
  uint32_t lim = static_cast<uint32_t>(1) << fns.size();
  for (uint32_t mask = 0; mask < lim; ++mask) {
    if (static_cast<size_t>(std::popcount(mask)) > budget.max_subset) continue;
    if (elapsed() > budget.max_seconds) throw OracleRefusal("oracle time budget exceeded");
    LibSet m;
    for (size_t i = 0; i < fns.size(); ++i)
      if (mask & (1u << i)) m.push_back(fns[i]);
    int64_t total = costs_of(m).at(root);
    if (total >= kInfCost) continue;
    for (LibFnId f : m) {
      int64_t d = costs_of(lib_erase(m, f)).at(f);
      if (d >= kInfCost) {
        total = kInfCost;
        break;
      }
      total += d;
    }
    if (total < best_total ||
        (total == best_total &&
         (m.size() < best_m.size() || (m.size() == best_m.size() && m < best_m)))) {
      best_total = total;
      best_m = m;
    }
  }
  if (best_total >= kInfCost) throw ExtractError("root class has no finite-cost term");

  OracleLibrary out;
  out.total = best_total;
  for (LibFnId f : best_m) out.chosen.push_back(first_rule.at(f));
  std::sort(out.chosen.begin(), out.chosen.end());
  return out;
}

// Exact minimal compressed term reachable from t by abstraction rewrites of
// the given patterns, found by exhausting single-step rewrite sequences.
// Bodies of already-introduced abstractions are frozen, so every step retires
// at least one constructor and the search space is finite.
inline NodePtr optimal_compression_terms(const NodePtr& t, const std::vector<NodePtr>& patterns,
                                         const OracleBudget& budget = {}) {
  if (term_size(t) > budget.max_term_nodes)
    throw OracleRefusal("term of size " + std::to_string(term_size(t)) +
                        " exceeds oracle budget");
  auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  std::vector<RewriteRule> rules;
  for (const NodePtr& p : patterns) rules.push_back(kappa(p));

  NodePtr best = t;
  int64_t best_size = compressed_size(t);
  NodeSet seen;
  seen.insert(t);
  std::deque<NodePtr> queue{t};
  while (!queue.empty()) {
    NodePtr s = queue.front();
    queue.pop_front();
    std::vector<NodePtr> next;
    for (const RewriteRule& r : rules) rewrite_all(s, r, next);
    for (NodePtr& n : next) {
      if (!seen.insert(n).second) continue;
      if (seen.size() > budget.max_states) throw OracleRefusal("oracle state budget exceeded");
      if (elapsed() > budget.max_seconds) throw OracleRefusal("oracle time budget exceeded");
      int64_t sz = compressed_size(n);
      if (sz < best_size || (sz == best_size && NodeLess{}(n, best))) {
        best_size = sz;
        best = n;
      }
      queue.push_back(std::move(n));
    }
  }
  return best;
}

enum class Verdict { True, False, Unknown };

// Equality modulo the equational theory, decided by joint saturation.
inline Verdict denotation_equal_modulo(const NodePtr& t1, const NodePtr& t2,
                                       const std::vector<RewriteRule>& rules,
                                       const EqsatLimits& limits = {}) {
  EGraph g;
  EClassId a = g.add_term(t1);
  EClassId b = g.add_term(t2);
  EqsatReport rep = g.eqsat(rules, limits);
  if (g.find(a) == g.find(b)) return Verdict::True;
  return rep.saturated ? Verdict::False : Verdict::Unknown;
}

}  // namespace liblearn
