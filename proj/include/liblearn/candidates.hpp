#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "egraph.hpp"
#include "sexpr.hpp"

namespace liblearn {

// Variables introduced while anti-unifying two e-classes are tagged with the
// class pair they abstract: "au:<left>:<right>".  The tag encodes the two
// projection substitutions directly.
inline std::string au_var_name(EClassId a, EClassId b) {
  return "au:" + std::to_string(a) + ":" + std::to_string(b);
}

inline std::optional<std::pair<EClassId, EClassId>> au_var_origin(const std::string& name) {
  if (name.rfind("au:", 0) != 0) return std::nullopt;
  size_t mid = name.find(':', 3);
  if (mid == std::string::npos) return std::nullopt;
  return std::make_pair(static_cast<EClassId>(std::stol(name.substr(3, mid - 3))),
                        static_cast<EClassId>(std::stol(name.substr(mid + 1))));
}

// p1 dominates p2 when it is no larger and needs no additional variables:
// within one class pair, every use of p2 is then at least as good a use of p1.
inline bool dominates(const NodePtr& p1, const NodePtr& p2) {
  auto v1 = distinct_vars(p1);
  auto v2 = distinct_vars(p2);
  std::set<std::string> s2(v2.begin(), v2.end());
  for (const auto& v : v1)
    if (!s2.count(v)) return false;
  return term_size(p1) <= term_size(p2);
}

// Keeps the dominant patterns; one representative survives among mutually
// dominating ones.  Intended for patterns originating from one class pair.
inline std::vector<NodePtr> dominant(std::vector<NodePtr> ps) {
  std::sort(ps.begin(), ps.end(), [](const NodePtr& a, const NodePtr& b) {
    int64_t sa = term_size(a), sb = term_size(b);
    if (sa != sb) return sa < sb;
    return compare(a, b) < 0;
  });
  ps.erase(std::unique(ps.begin(), ps.end(),
                       [](const NodePtr& a, const NodePtr& b) { return equal(a, b); }),
           ps.end());
  std::vector<NodePtr> kept;
  for (size_t i = 0; i < ps.size(); ++i) {
    bool drop = false;
    for (size_t j = 0; j < ps.size() && !drop; ++j) {
      if (j == i || !dominates(ps[j], ps[i])) continue;
      // Mutual domination: the earlier (smaller-sorted) one is the survivor.
      if (dominates(ps[i], ps[j]) && i < j) continue;
      drop = true;
    }
    if (!drop) kept.push_back(ps[i]);
  }
  return kept;
}

using AuContext = std::set<std::pair<EClassId, EClassId>>;

// E-class anti-unification with cycle cutting, dominance filtering and arity
// pruning.  Results are memoized per class pair; a result that was truncated
// by a context pair other than its own is context-dependent and therefore not
// memoized (tracked via cut sets), so memoization never changes the result.
class AntiUnifier {
 public:
  AntiUnifier(const EGraph& g, int max_arity, bool memoize = true)
      : g_(g), max_arity_(max_arity), memoize_(memoize) {}

  std::vector<NodePtr> au(EClassId a, EClassId b) {
    AuContext ctx;
    AuContext cuts;
    return au_rec(g_.find(a), g_.find(b), ctx, cuts);
  }

 private:
  static bool structural_op(const std::string& op) {
    return op != kTupleOp && op != kAppOp && !is_param_op(op);
  }

  std::vector<NodePtr> au_rec(EClassId a, EClassId b, AuContext& ctx, AuContext& cuts) {
    const std::pair<EClassId, EClassId> key{a, b};
    if (ctx.count(key)) {
      cuts.insert(key);
      return {};
    }
    if (memoize_) {
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    ctx.insert(key);
    AuContext local_cuts;

    NodeSet dedup;
    std::vector<NodePtr> out;
    bool mismatch = false;
    for (const ENode& na : g_.nodes(a)) {
      for (const ENode& nb : g_.nodes(b)) {
        if (na.op != nb.op || na.children.size() != nb.children.size() ||
            !structural_op(na.op)) {
          mismatch = true;
          continue;
        }
        std::vector<std::vector<NodePtr>> child_sets;
        bool empty = false;
        for (size_t i = 0; i < na.children.size() && !empty; ++i) {
          child_sets.push_back(
              au_rec(g_.find(na.children[i]), g_.find(nb.children[i]), ctx, local_cuts));
          if (child_sets.back().empty()) empty = true;
        }
        if (na.children.empty()) {
          NodePtr p = make_sym(na.op);
          if (dedup.insert(p).second) out.push_back(p);
          continue;
        }
        if (empty) continue;
        std::vector<size_t> idx(child_sets.size(), 0);
        for (;;) {
          std::vector<NodePtr> children;
          children.reserve(child_sets.size());
          for (size_t i = 0; i < child_sets.size(); ++i) children.push_back(child_sets[i][idx[i]]);
          NodePtr p = make_sym(na.op, std::move(children));
          if (static_cast<int>(distinct_vars(p).size()) <= max_arity_ && dedup.insert(p).second)
            out.push_back(p);
          size_t i = 0;
          for (; i < idx.size(); ++i) {
            if (++idx[i] < child_sets[i].size()) break;
            idx[i] = 0;
          }
          if (i == idx.size()) break;
        }
      }
    }
    if (mismatch) {
      NodePtr v = make_var(au_var_name(a, b));
      if (dedup.insert(v).second) out.push_back(v);
    }
    out = dominant(std::move(out));

    ctx.erase(key);
    // A computation in which any cut fired depends on the recursion path:
    // even a cut on this very pair picks a cycle break point that a later
    // path through the cycle would place elsewhere.  Only cut-free results
    // are path-independent and safe to memoize.  The own-pair filter below
    // keeps ancestors of a fully internal cycle memoizable.
    if (memoize_ && local_cuts.empty()) memo_[key] = out;
    for (const auto& c : local_cuts)
      if (c != key) cuts.insert(c);
    return out;
  }

  const EGraph& g_;
  int max_arity_;
  bool memoize_;
  std::map<std::pair<EClassId, EClassId>, std::vector<NodePtr>> memo_;
};

inline std::vector<NodePtr> au_classes(const EGraph& g, EClassId a, EClassId b,
                                       int max_arity = 1000) {
  AntiUnifier au(g, max_arity);
  return au.au(a, b);
}

// Two classes co-occur when one is a proper ancestor of the other or they
// have (not necessarily proper) descendants-of-siblings on both sides; only
// such pairs can appear together inside one term.
class CoOccurrence {
 public:
  explicit CoOccurrence(const EGraph& g) {
    ids_ = g.class_ids();
    for (size_t i = 0; i < ids_.size(); ++i) dense_[ids_[i]] = i;
    size_t n = ids_.size();
    desc_.assign(n, Row((n + 63) / 64, 0));
    co_.assign(n, Row((n + 63) / 64, 0));
    for (size_t i = 0; i < n; ++i) set_bit(desc_[i], i);
    // Downward reachability to fixpoint.
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t i = 0; i < n; ++i)
        for (const ENode& node : g.nodes(ids_[i]))
          for (EClassId ch : node.children)
            changed |= or_into(desc_[i], desc_[dense_.at(g.find(ch))]);
    }
    // Sibling pairs spread co-occurrence over their descendants.
    std::set<std::pair<size_t, size_t>> sibs;
    for (size_t i = 0; i < n; ++i)
      for (const ENode& node : g.nodes(ids_[i]))
        for (size_t x = 0; x < node.children.size(); ++x)
          for (size_t y = x + 1; y < node.children.size(); ++y) {
            size_t dx = dense_.at(g.find(node.children[x]));
            size_t dy = dense_.at(g.find(node.children[y]));
            sibs.insert({std::min(dx, dy), std::max(dx, dy)});
          }
    for (auto [s1, s2] : sibs) {
      spread(s1, s2);
      if (s1 != s2) spread(s2, s1);
    }
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) {
        if (i != j && (get_bit(desc_[i], j) || get_bit(desc_[j], i))) {
          set_bit(co_[i], j);
          set_bit(co_[j], i);
        }
      }
    }
  }

  bool operator()(EClassId a, EClassId b) const {
    auto ia = dense_.find(a);
    auto ib = dense_.find(b);
    if (ia == dense_.end() || ib == dense_.end()) return false;
    return get_bit(co_[ia->second], ib->second);
  }

 private:
  using Row = std::vector<uint64_t>;

  static void set_bit(Row& r, size_t j) { r[j >> 6] |= uint64_t{1} << (j & 63); }
  static bool get_bit(const Row& r, size_t j) { return (r[j >> 6] >> (j & 63)) & 1; }
  static bool or_into(Row& dst, const Row& src) {
    bool changed = false;
    for (size_t w = 0; w < dst.size(); ++w) {
      uint64_t v = dst[w] | src[w];
      changed |= v != dst[w];
      dst[w] = v;
    }
    return changed;
  }

  void spread(size_t s1, size_t s2) {
    const Row& from = desc_[s1];
    for (size_t w = 0; w < from.size(); ++w) {
      uint64_t bits = from[w];
      while (bits) {
        size_t j = (w << 6) + static_cast<size_t>(__builtin_ctzll(bits));
        bits &= bits - 1;
        or_into(co_[j], desc_[s2]);
      }
    }
  }

  std::vector<EClassId> ids_;
  std::map<EClassId, size_t> dense_;
  std::vector<Row> desc_;
  std::vector<Row> co_;
};

inline CoOccurrence co_occurring(const EGraph& g) { return CoOccurrence(g); }

struct CandidateConfig {
  int max_arity = 4;
  int64_t min_matches = 2;  // occurrence positions across matched classes
};

struct Candidate {
  NodePtr pattern;  // canonical variables x0, x1, ...
  int arity = 0;
  int64_t size = 0;
  int64_t n_matched_classes = 0;
  int64_t n_matched_positions = 0;
  std::vector<std::pair<EClassId, EClassId>> origin_pairs;
  // For the first origin pair: the class pair each canonical variable
  // abstracts (the two projection substitutions).
  std::map<std::string, std::pair<EClassId, EClassId>> var_origins;
};

struct CandidateSet {
  std::vector<Candidate> candidates;
  int64_t pairs_considered = 0;
  int64_t raw_patterns = 0;
};

// Anti-unifies every co-occurring class pair (self pairs when the class
// occupies at least two positions), drops trivial patterns and patterns with
// too few matched positions, deduplicates up to renaming, and attaches match
// statistics.  `root` (if given) counts as one extra position.
inline CandidateSet generate_candidates(const EGraph& g, const CandidateConfig& cfg,
                                        EClassId root = -1) {
  CandidateSet out;
  std::vector<EClassId> ids = g.class_ids();
  std::map<EClassId, int64_t> positions = g.occurrence_positions();
  if (root >= 0) positions[g.find(root)] += 1;

  // Cheap compatibility fingerprint: pairs sharing no head constructor
  // anti-unify to a bare variable, which is trivial.
  std::map<EClassId, uint64_t> op_mask;
  for (EClassId c : ids) {
    uint64_t m = 0;
    for (const ENode& n : g.nodes(c))
      m |= uint64_t{1} << (std::hash<std::string>{}(n.op) & 63);
    op_mask[c] = m;
  }

  CoOccurrence co(g);
  AntiUnifier au(g, cfg.max_arity);

  NodeMap<size_t> by_pattern;
  for (size_t i = 0; i < ids.size(); ++i) {
    for (size_t j = i; j < ids.size(); ++j) {
      EClassId a = ids[i], b = ids[j];
      bool admit = (a == b) ? positions[a] >= 2 : co(a, b);
      if (!admit) continue;
      ++out.pairs_considered;
      if ((op_mask[a] & op_mask[b]) == 0) continue;
      for (const NodePtr& tagged : au.au(a, b)) {
        ++out.raw_patterns;
        if (is_trivial(tagged) || contains_tuple(tagged)) continue;
        std::map<std::string, std::string> renaming;
        NodePtr canon = canonicalize(tagged, &renaming);
        auto it = by_pattern.find(canon);
        if (it != by_pattern.end()) {
          out.candidates[it->second].origin_pairs.push_back({a, b});
          continue;
        }
        Candidate c;
        c.pattern = canon;
        c.arity = static_cast<int>(distinct_vars(canon).size());
        c.size = term_size(canon);
        c.origin_pairs.push_back({a, b});
        for (const auto& [orig, fresh] : renaming)
          if (auto o = au_var_origin(orig)) c.var_origins[fresh] = *o;
        by_pattern.emplace(canon, out.candidates.size());
        out.candidates.push_back(std::move(c));
      }
    }
  }

  // Match statistics, with a head-symbol index to limit ematch calls.
  std::map<std::string, std::vector<EClassId>> by_head;
  for (EClassId c : ids)
    for (const ENode& n : g.nodes(c)) by_head[n.op].push_back(c);
  for (auto& [_, v] : by_head) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  for (Candidate& c : out.candidates) {
    const std::vector<EClassId>& scope =
        c.pattern->kind == NodeKind::Sym ? by_head[c.pattern->op] : ids;
    for (EClassId cls : scope) {
      if (!g.ematch(c.pattern, cls).empty()) {
        c.n_matched_classes += 1;
        auto p = positions.find(cls);
        c.n_matched_positions += p == positions.end() ? 0 : p->second;
      }
    }
  }
  std::erase_if(out.candidates,
                [&](const Candidate& c) { return c.n_matched_positions < cfg.min_matches; });

  std::sort(out.candidates.begin(), out.candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.size != b.size) return a.size < b.size;
    return compare(a.pattern, b.pattern) < 0;
  });
  return out;
}

inline std::vector<RewriteRule> candidates_to_rules(const CandidateSet& cs) {
  std::vector<RewriteRule> rules;
  rules.reserve(cs.candidates.size());
  for (const Candidate& c : cs.candidates) rules.push_back(kappa(c.pattern, print(c.pattern)));
  return rules;
}

}  // namespace liblearn
