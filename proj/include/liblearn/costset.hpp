#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "egraph.hpp"

namespace liblearn {

// A learned function is identified by the e-class of its λ-body, so
// α-equivalent bodies learned from different origins collapse into one.
using LibFnId = EClassId;

// Sorted, duplicate-free.
using LibSet = std::vector<LibFnId>;

inline bool lib_contains(const LibSet& l, LibFnId f) {
  return std::binary_search(l.begin(), l.end(), f);
}

inline bool lib_subset(const LibSet& a, const LibSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline LibSet lib_union(const LibSet& a, const LibSet& b) {
  LibSet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline LibSet lib_insert(LibSet l, LibFnId f) {
  auto it = std::lower_bound(l.begin(), l.end(), f);
  if (it == l.end() || *it != f) l.insert(it, f);
  return l;
}

inline LibSet lib_erase(LibSet l, LibFnId f) {
  auto it = std::lower_bound(l.begin(), l.end(), f);
  if (it != l.end() && *it == f) l.erase(it);
  return l;
}

// One way of realizing a class: with every function in `libs` defined, a term
// of this class can be written in `cost` nodes, bodies not included.
struct CostEntry {
  LibSet libs;
  int64_t cost = 0;
  bool operator==(const CostEntry&) const = default;
};

// Canonical order: cheap entries first, small libraries break ties.
struct CostEntryLess {
  bool operator()(const CostEntry& a, const CostEntry& b) const {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.libs.size() != b.libs.size()) return a.libs.size() < b.libs.size();
    return a.libs < b.libs;
  }
};

struct CostSet {
  std::vector<CostEntry> entries;  // reduced, sorted by CostEntryLess
  bool operator==(const CostSet&) const = default;
};

struct CostConfig {
  int64_t max_lib_fns = 3;   // no entry names more functions than this
  int64_t beam_width = 100;  // entries kept per class
  int max_passes = 0;        // 0: derived from the class count
  bool enable_reduce = true;
};

inline CostSet sort_entries(CostSet cs) {
  std::sort(cs.entries.begin(), cs.entries.end(), CostEntryLess{});
  cs.entries.erase(std::unique(cs.entries.begin(), cs.entries.end()), cs.entries.end());
  return cs;
}

// Keeps the cheapest entry per library, then drops entries whose library
// strictly contains another's at no better cost.  Dropping such an entry never
// hurts: any final library admitting it also admits its dominator.
inline CostSet reduce(CostSet cs) {
  if (cs.entries.empty()) return cs;
  std::map<LibSet, int64_t> best;
  for (auto& e : cs.entries) {
    auto [it, fresh] = best.emplace(std::move(e.libs), e.cost);
    if (!fresh && e.cost < it->second) it->second = e.cost;
  }
  CostSet out;
  for (const auto& [libs, cost] : best) {
    bool dominated = false;
    if (libs.size() <= 12) {
      uint32_t full = (1u << libs.size()) - 1;
      for (uint32_t m = 0; m < full && !dominated; ++m) {
        LibSet sub;
        for (size_t i = 0; i < libs.size(); ++i)
          if (m & (1u << i)) sub.push_back(libs[i]);
        auto it = best.find(sub);
        dominated = it != best.end() && it->second <= cost;
      }
    } else {
      for (const auto& [l2, c2] : best)
        if (c2 <= cost && l2.size() < libs.size() && lib_subset(l2, libs)) {
          dominated = true;
          break;
        }
    }
    if (!dominated) out.entries.push_back({libs, cost});
  }
  return sort_entries(std::move(out));
}

// Beam step: entries with more than `max_fns` functions are dropped; the rest
// are ranked by use cost plus the current size estimate of their library and
// only the best `keep` survive.  The best library-free entry is always among
// the survivors: it is the fallback realization every library choice can use.
inline CostSet prune(CostSet cs, int64_t max_fns, int64_t keep,
                     const std::function<int64_t(LibFnId)>& lib_size) {
  std::erase_if(cs.entries,
                [&](const CostEntry& e) { return static_cast<int64_t>(e.libs.size()) > max_fns; });
  if (static_cast<int64_t>(cs.entries.size()) > keep) {
    std::vector<std::pair<int64_t, CostEntry>> ranked;
    ranked.reserve(cs.entries.size());
    for (auto& e : cs.entries) {
      int64_t rank = e.cost;
      for (LibFnId f : e.libs) rank += lib_size(f);
      ranked.emplace_back(rank, std::move(e));
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return CostEntryLess{}(a.second, b.second);
    });
    auto lib_free = [](const std::pair<int64_t, CostEntry>& p) { return p.second.libs.empty(); };
    auto cut = ranked.begin() + keep;
    if (std::none_of(ranked.begin(), cut, lib_free)) {
      auto it = std::find_if(cut, ranked.end(), lib_free);
      if (it != ranked.end()) std::iter_swap(cut - 1, it);
    }
    ranked.resize(keep);
    cs.entries.clear();
    for (auto& [r, e] : ranked) cs.entries.push_back(std::move(e));
  }
  return sort_entries(std::move(cs));
}

struct CostSetReport {
  int passes = 0;
  bool converged = false;
};

struct CostSets {
  std::map<EClassId, CostSet> by_class;
  CostSetReport report;
};

// Propagates cost sets bottom-up to a fixpoint.  Constructor nodes cross
// their children's sets; an application of the function with body class f
// costs 1 plus its arguments, adds f and the body's own library needs to the
// entry, and leaves the body cost to the definition.  Cycles are handled by
// Jacobi iteration from empty sets.
inline CostSets cost_sets(const EGraph& g, const CostConfig& cfg = {}) {
  std::vector<EClassId> ids = g.class_ids();
  CostSets out;
  std::map<EClassId, CostSet>& prev = out.by_class;
  for (EClassId id : ids) prev[id];

  const int64_t unpriced = kInfCost / 2;  // ranks last, never dropped for that alone

  // Realistic standalone definition sizes for ranking: cheapest self-free
  // entry of the body class plus, recursively, the sizes of the functions
  // that entry itself needs.  Without the closure, large abstractions whose
  // definitions lean on further definitions look almost free and crowd
  // genuinely useful entries out of the beam.
  std::vector<EClassId> body_ids;
  {
    std::set<EClassId> seen;
    for (EClassId id : ids)
      for (const ENode& n : g.nodes(id))
        if (n.op == kAppOp && seen.insert(g.find(n.children[0])).second)
          body_ids.push_back(g.find(n.children[0]));
  }
  std::map<EClassId, int64_t> def_est;
  auto refresh_est = [&] {
    for (EClassId f : body_ids) def_est[f] = unpriced;
    for (bool changed = true; changed;) {
      changed = false;
      for (EClassId f : body_ids) {
        int64_t best = def_est[f];
        for (const auto& e : prev[f].entries) {
          if (lib_contains(e.libs, f)) continue;
          int64_t c = e.cost;
          for (LibFnId dep : e.libs) {
            auto it = def_est.find(dep);
            c += it == def_est.end() ? unpriced : it->second;
            if (c >= unpriced) break;
          }
          best = std::min(best, std::min(c, unpriced));
        }
        if (best < def_est[f]) {
          def_est[f] = best;
          changed = true;
        }
      }
    }
  };
  auto est = [&](LibFnId f) -> int64_t {
    auto it = def_est.find(f);
    return it == def_est.end() ? unpriced : it->second;
  };

  auto squeeze = [&](CostSet cs) -> CostSet {
    cs = cfg.enable_reduce ? reduce(std::move(cs)) : sort_entries(std::move(cs));
    return prune(std::move(cs), cfg.max_lib_fns, cfg.beam_width, est);
  };

  auto fold = [&](CostSet acc, const CostSet& child) -> CostSet {
    CostSet next;
    for (const auto& a : acc.entries) {
      for (const auto& b : child.entries) {
        LibSet l = lib_union(a.libs, b.libs);
        if (static_cast<int64_t>(l.size()) > cfg.max_lib_fns) continue;
        next.entries.push_back({std::move(l), a.cost + b.cost});
      }
    }
    return squeeze(std::move(next));
  };

  auto node_set = [&](const ENode& n) -> CostSet {
    if (is_param_op(n.op)) return CostSet{{{{}, 1}}};
    CostSet acc;
    size_t first_arg = 0;
    if (n.op == kAppOp) {
      EClassId body = g.find(n.children[0]);
      for (const auto& e : prev[body].entries) {
        LibSet l = lib_insert(e.libs, body);
        if (static_cast<int64_t>(l.size()) > cfg.max_lib_fns) continue;
        acc.entries.push_back({std::move(l), 1});
      }
      acc = squeeze(std::move(acc));
      first_arg = 1;
    } else {
      acc.entries.push_back({{}, n.op == kTupleOp ? 0 : 1});
    }
    for (size_t i = first_arg; i < n.children.size(); ++i) {
      if (acc.entries.empty()) break;
      acc = fold(std::move(acc), prev[g.find(n.children[i])]);
    }
    return acc;
  };

  int cap = cfg.max_passes > 0 ? cfg.max_passes : static_cast<int>(4 * ids.size() + 16);
  for (int pass = 1; pass <= cap; ++pass) {
    refresh_est();
    std::map<EClassId, CostSet> next;
    bool changed = false;
    for (EClassId id : ids) {
      CostSet u;
      for (const ENode& n : g.nodes(id)) {
        CostSet ns = node_set(n);
        u.entries.insert(u.entries.end(), ns.entries.begin(), ns.entries.end());
      }
      u = squeeze(std::move(u));
      if (u != prev[id]) changed = true;
      next[id] = std::move(u);
    }
    prev.swap(next);
    out.report.passes = pass;
    if (!changed) {
      out.report.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace liblearn
