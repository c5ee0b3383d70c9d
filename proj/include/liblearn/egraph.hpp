#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "term.hpp"

namespace liblearn {

using EClassId = int32_t;

// Graph node heads: constructors keep their name, applications use "@"
// (children = [body, args...]), binder references use "$<slot>".  These heads
// are rejected by the parser for user symbols.
inline constexpr std::string_view kAppOp = "@";

inline std::string param_op(int slot) { return "$" + std::to_string(slot); }
inline bool is_param_op(const std::string& op) { return op.size() > 1 && op[0] == '$'; }
inline int param_slot(const std::string& op) { return std::stoi(op.substr(1)); }

struct ENode {
  std::string op;
  std::vector<EClassId> children;

  bool operator==(const ENode& o) const = default;
  bool operator<(const ENode& o) const {
    if (op != o.op) return op < o.op;
    return children < o.children;
  }
};

struct ENodeHash {
  size_t operator()(const ENode& n) const {
    size_t h = std::hash<std::string>{}(n.op);
    for (EClassId c : n.children) h = detail::hash_mix(h, static_cast<size_t>(c) + 0x9e37);
    return h;
  }
};

struct EqsatLimits {
  int max_iterations = 10;
  size_t max_nodes = 100000;
  double max_seconds = 30.0;
};

struct EqsatReport {
  int iterations = 0;
  size_t nodes = 0;
  bool saturated = false;
  std::string stop_reason = "saturated";
  double seconds = 0.0;
};

using EClassSubst = std::map<std::string, EClassId>;

struct ExtractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int64_t kInfCost = std::numeric_limits<int64_t>::max() / 4;

class EGraph {
 public:
  // ---- construction ----

  EClassId add(ENode n) {
    canonicalize_node(n);
    auto it = hashcons_.find(n);
    if (it != hashcons_.end()) return find(it->second);
    EClassId id = static_cast<EClassId>(uf_.size());
    uf_.push_back(id);
    rank_.push_back(0);
    classes_.emplace_back();
    classes_[id].nodes.push_back(n);
    for (EClassId c : n.children) classes_[c].parents.push_back({n, id});
    hashcons_.emplace(std::move(n), id);
    ++version_;
    return id;
  }

  EClassId add_term(const NodePtr& t) {
    EClassSubst empty;
    return add_pattern(t, empty);
  }

  // Adds an instance of a pattern: variables resolve through theta, binder
  // references become "$i" leaves, applications become "@" nodes.
  EClassId add_pattern(const NodePtr& p, const EClassSubst& theta) {
    switch (p->kind) {
      case NodeKind::Var:
        return find(theta.at(p->op));
      case NodeKind::Param:
        return add(ENode{param_op(p->index), {}});
      case NodeKind::Sym: {
        ENode n{p->op, {}};
        n.children.reserve(p->children.size());
        for (const auto& c : p->children) n.children.push_back(add_pattern(c, theta));
        return add(std::move(n));
      }
      case NodeKind::App: {
        ENode n{std::string(kAppOp), {}};
        n.children.reserve(p->children.size());
        for (const auto& c : p->children) n.children.push_back(add_pattern(c, theta));
        return add(std::move(n));
      }
    }
    throw std::logic_error("unreachable");
  }

  EClassId find(EClassId id) const {
    while (uf_[id] != id) {
      uf_[id] = uf_[uf_[id]];
      id = uf_[id];
    }
    return id;
  }

  bool merge(EClassId a, EClassId b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b] || (rank_[a] == rank_[b] && b < a)) std::swap(a, b);
    // a survives
    if (rank_[a] == rank_[b]) ++rank_[a];
    uf_[b] = a;
    auto& ca = classes_[a];
    auto& cb = classes_[b];
    std::move(cb.nodes.begin(), cb.nodes.end(), std::back_inserter(ca.nodes));
    std::move(cb.parents.begin(), cb.parents.end(), std::back_inserter(ca.parents));
    cb.nodes.clear();
    cb.parents.clear();
    worklist_.push_back(a);
    ++version_;
    return true;
  }

  // Restores the congruence invariant and canonical, deduplicated node and
  // parent lists.
  void rebuild() {
    while (!worklist_.empty()) {
      std::vector<EClassId> wl = std::move(worklist_);
      worklist_.clear();
      std::set<EClassId> todo;
      for (EClassId id : wl) todo.insert(find(id));
      for (EClassId id : todo) repair(id);
    }
    normalize();
  }

  bool clean() const { return worklist_.empty() && normalized_; }

  // ---- queries ----

  size_t num_nodes() const { return hashcons_.size(); }

  size_t num_classes() const {
    size_t n = 0;
    for (EClassId i = 0; i < static_cast<EClassId>(uf_.size()); ++i)
      if (find(i) == i) ++n;
    return n;
  }

  std::vector<EClassId> class_ids() const {
    std::vector<EClassId> ids;
    for (EClassId i = 0; i < static_cast<EClassId>(uf_.size()); ++i)
      if (find(i) == i) ids.push_back(i);
    return ids;
  }

  const std::vector<ENode>& nodes(EClassId a) const { return classes_[find(a)].nodes; }

  const std::vector<std::pair<ENode, EClassId>>& parents(EClassId a) const {
    return classes_[find(a)].parents;
  }

  uint64_t version() const { return version_; }

  // Distinct (parent node, slot) positions per class.  The root of a corpus
  // occupies one extra position; callers add that themselves.
  std::map<EClassId, int64_t> occurrence_positions() const {
    std::map<EClassId, int64_t> pos;
    for (EClassId c : class_ids())
      for (const ENode& n : classes_[c].nodes)
        for (EClassId ch : n.children) pos[find(ch)] += 1;
    return pos;
  }

  // ---- e-matching ----

  std::vector<EClassSubst> ematch(const NodePtr& pattern, EClassId a) const {
    std::vector<EClassSubst> out;
    EClassSubst s;
    match_class(pattern, find(a), s, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::vector<std::pair<EClassId, EClassSubst>> ematch_all(const NodePtr& pattern) const {
    std::vector<std::pair<EClassId, EClassSubst>> out;
    for (EClassId c : class_ids())
      for (auto& s : ematch(pattern, c)) out.push_back({c, s});
    return out;
  }

  // ---- equality saturation ----

  EqsatReport eqsat(const std::vector<RewriteRule>& rules, const EqsatLimits& limits = {}) {
    auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    rebuild();
    EqsatReport rep;
    for (int iter = 0; iter < limits.max_iterations; ++iter) {
      if (elapsed() > limits.max_seconds) {
        rep.stop_reason = "time limit";
        break;
      }
      if (num_nodes() > limits.max_nodes) {
        rep.stop_reason = "node limit";
        break;
      }
      // Read phase on the frozen graph, then write phase in deterministic order.
      std::vector<std::tuple<size_t, EClassId, EClassSubst>> matches;
      for (size_t r = 0; r < rules.size(); ++r)
        for (EClassId c : class_ids())
          for (auto& s : ematch(rules[r].lhs, c)) matches.emplace_back(r, c, s);
      std::sort(matches.begin(), matches.end());

      uint64_t before = version_;
      bool hit_limit = false;
      for (const auto& [r, c, s] : matches) {
        if (num_nodes() > limits.max_nodes) {
          rep.stop_reason = "node limit";
          hit_limit = true;
          break;
        }
        EClassId rhs = add_pattern(rules[r].rhs, s);
        merge(c, rhs);
      }
      rebuild();
      ++rep.iterations;
      if (hit_limit) break;
      if (version_ == before) {
        rep.saturated = true;
        rep.stop_reason = "saturated";
        break;
      }
      if (rep.iterations == limits.max_iterations) rep.stop_reason = "iteration limit";
    }
    rep.nodes = num_nodes();
    rep.seconds = elapsed();
    return rep;
  }

  // ---- denotation ----

  // Bottom-up enumeration of constructor terms, max_depth rounds, keeping at
  // most max_count smallest terms per class.  Applications and binder
  // references are not part of the constructor denotation.
  std::vector<NodePtr> denote_bounded(EClassId a, size_t max_count, int max_depth) const {
    std::map<EClassId, std::vector<NodePtr>> sets;
    for (int d = 0; d < max_depth; ++d) {
      std::map<EClassId, std::vector<NodePtr>> next;
      bool changed = false;
      for (EClassId c : class_ids()) {
        std::vector<NodePtr> terms;
        for (const ENode& n : classes_[c].nodes) {
          if (n.op == kAppOp || is_param_op(n.op)) continue;
          std::vector<std::vector<NodePtr>> choices;
          bool ok = true;
          for (EClassId ch : n.children) {
            auto it = sets.find(find(ch));
            if (it == sets.end() || it->second.empty()) {
              ok = false;
              break;
            }
            choices.push_back(it->second);
          }
          if (!ok) continue;
          std::vector<size_t> idx(choices.size(), 0);
          for (;;) {
            std::vector<NodePtr> args;
            for (size_t i = 0; i < choices.size(); ++i) args.push_back(choices[i][idx[i]]);
            terms.push_back(make_sym(n.op, std::move(args)));
            size_t i = 0;
            for (; i < idx.size(); ++i) {
              if (++idx[i] < choices[i].size()) break;
              idx[i] = 0;
            }
            if (i == idx.size()) break;
            if (terms.size() > 4 * max_count) break;
          }
        }
        std::sort(terms.begin(), terms.end(), [](const NodePtr& x, const NodePtr& y) {
          int64_t sx = term_size(x), sy = term_size(y);
          if (sx != sy) return sx < sy;
          return compare(x, y) < 0;
        });
        terms.erase(std::unique(terms.begin(), terms.end(),
                                [](const NodePtr& x, const NodePtr& y) { return equal(x, y); }),
                    terms.end());
        if (terms.size() > max_count) terms.resize(max_count);
        auto prev = sets.find(c);
        if (prev == sets.end() || prev->second.size() != terms.size()) changed = true;
        else
          for (size_t i = 0; i < terms.size(); ++i)
            if (!equal(prev->second[i], terms[i])) {
              changed = true;
              break;
            }
        next[c] = std::move(terms);
      }
      sets = std::move(next);
      if (!changed) break;
    }
    auto it = sets.find(find(a));
    return it == sets.end() ? std::vector<NodePtr>{} : it->second;
  }

  // ---- extraction ----

  using NodeCostFn = std::function<int64_t(const ENode&, const std::vector<int64_t>&)>;

  // Plain AST size: tuple free, applications and binder refs excluded.
  static int64_t ast_size_cost(const ENode& n, const std::vector<int64_t>& children) {
    if (n.op == kAppOp || is_param_op(n.op)) return kInfCost;
    int64_t c = (n.op == kTupleOp) ? 0 : 1;
    for (int64_t x : children) c += x;
    return std::min<int64_t>(c, kInfCost);
  }

  NodePtr extract_greedy(EClassId root, const NodeCostFn& cost = ast_size_cost) const {
    std::map<EClassId, int64_t> best = bellman(cost);
    root = find(root);
    auto it = best.find(root);
    if (it == best.end() || it->second >= kInfCost)
      throw ExtractError("no finite-cost term for class " + std::to_string(root));
    std::set<EClassId> on_path;
    return build_best(root, cost, best, on_path);
  }

  std::map<EClassId, int64_t> bellman(const NodeCostFn& cost) const {
    std::map<EClassId, int64_t> best;
    for (EClassId c : class_ids()) best[c] = kInfCost;
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto& [c, b] : best) {
        for (const ENode& n : classes_[c].nodes) {
          std::vector<int64_t> ch;
          ch.reserve(n.children.size());
          bool ok = true;
          for (EClassId x : n.children) {
            int64_t v = best[find(x)];
            if (v >= kInfCost) {
              ok = false;
              break;
            }
            ch.push_back(v);
          }
          if (!ok) continue;
          int64_t v = cost(n, ch);
          if (v < b) {
            b = v;
            changed = true;
          }
        }
      }
    }
    return best;
  }

 private:
  struct EClass {
    std::vector<ENode> nodes;
    std::vector<std::pair<ENode, EClassId>> parents;
  };

  void canonicalize_node(ENode& n) const {
    for (EClassId& c : n.children) c = find(c);
  }

  void repair(EClassId id) {
    id = find(id);
    auto parents = std::move(classes_[id].parents);
    classes_[id].parents.clear();
    for (auto& [pnode, pclass] : parents) hashcons_.erase(pnode);
    std::vector<std::pair<ENode, EClassId>> fresh;
    std::unordered_map<ENode, EClassId, ENodeHash> seen;
    for (auto& [pnode, pclass] : parents) {
      ENode canon = pnode;
      canonicalize_node(canon);
      auto it = seen.find(canon);
      if (it != seen.end()) {
        merge(it->second, pclass);
        it->second = find(it->second);
      } else {
        auto hc = hashcons_.find(canon);
        if (hc != hashcons_.end() && find(hc->second) != find(pclass)) merge(hc->second, pclass);
        seen.emplace(canon, find(pclass));
      }
    }
    for (auto& [n, c] : seen) {
      hashcons_[n] = find(c);
      fresh.push_back({n, find(c)});
    }
    std::sort(fresh.begin(), fresh.end());
    // Merges above may have deposited the dead class's parents onto
    // find(id); append rather than overwrite so those entries survive for
    // the next worklist round.
    auto& dst = classes_[find(id)].parents;
    dst.insert(dst.end(), std::make_move_iterator(fresh.begin()),
               std::make_move_iterator(fresh.end()));
    normalized_ = false;
  }

  // Recanonicalizes and deduplicates every live class's node and parent
  // lists; after this, structurally identical nodes appear in exactly one
  // class and each list is sorted.
  void normalize() {
    for (EClassId c : class_ids()) {
      auto& cl = classes_[c];
      for (ENode& n : cl.nodes) canonicalize_node(n);
      std::sort(cl.nodes.begin(), cl.nodes.end());
      cl.nodes.erase(std::unique(cl.nodes.begin(), cl.nodes.end()), cl.nodes.end());
      for (auto& [n, p] : cl.parents) {
        canonicalize_node(n);
        p = find(p);
      }
      std::sort(cl.parents.begin(), cl.parents.end());
      cl.parents.erase(std::unique(cl.parents.begin(), cl.parents.end()), cl.parents.end());
    }
    normalized_ = true;
  }

  void match_class(const NodePtr& p, EClassId c, EClassSubst& s,
                   std::vector<EClassSubst>& out) const {
    c = find(c);
    switch (p->kind) {
      case NodeKind::Var: {
        auto it = s.find(p->op);
        if (it != s.end()) {
          if (find(it->second) == c) out.push_back(s);
          return;
        }
        s[p->op] = c;
        out.push_back(s);
        s.erase(p->op);
        return;
      }
      case NodeKind::Param: {
        for (const ENode& n : classes_[c].nodes)
          if (n.op == param_op(p->index)) {
            out.push_back(s);
            return;
          }
        return;
      }
      case NodeKind::Sym:
      case NodeKind::App: {
        std::string op = p->kind == NodeKind::Sym ? p->op : std::string(kAppOp);
        for (const ENode& n : classes_[c].nodes) {
          if (n.op != op || n.children.size() != p->children.size()) continue;
          match_children(p, n, 0, s, out);
        }
        return;
      }
    }
  }

  void match_children(const NodePtr& p, const ENode& n, size_t i, EClassSubst& s,
                      std::vector<EClassSubst>& out) const {
    if (i == p->children.size()) {
      out.push_back(s);
      return;
    }
    std::vector<EClassSubst> partial;
    match_class(p->children[i], n.children[i], s, partial);
    for (auto& ext : partial) {
      EClassSubst saved = s;
      s = ext;
      match_children(p, n, i + 1, s, out);
      s = saved;
    }
  }

  NodePtr build_best(EClassId c, const NodeCostFn& cost, const std::map<EClassId, int64_t>& best,
                     std::set<EClassId>& on_path) const {
    c = find(c);
    if (!on_path.insert(c).second) throw ExtractError("extraction revisited a class on its own path");
    const ENode* pick = nullptr;
    int64_t pick_cost = kInfCost;
    for (const ENode& n : classes_[c].nodes) {
      std::vector<int64_t> ch;
      bool ok = true;
      for (EClassId x : n.children) {
        int64_t v = best.at(find(x));
        if (v >= kInfCost) {
          ok = false;
          break;
        }
        ch.push_back(v);
      }
      if (!ok) continue;
      int64_t v = cost(n, ch);
      if (v >= kInfCost) continue;
      if (!pick || v < pick_cost ||
          (v == pick_cost && (n.children.size() < pick->children.size() ||
                              (n.children.size() == pick->children.size() && n < *pick)))) {
        pick = &n;
        pick_cost = v;
      }
    }
    if (!pick) throw ExtractError("no finite-cost node in class " + std::to_string(c));
    std::vector<NodePtr> children;
    children.reserve(pick->children.size());
    for (EClassId x : pick->children) children.push_back(build_best(x, cost, best, on_path));
    on_path.erase(c);
    if (pick->op == kAppOp) {
      std::vector<NodePtr> args(children.begin() + 1, children.end());
      return make_app(children[0], std::move(args));
    }
    if (is_param_op(pick->op)) return make_param(param_slot(pick->op));
    return make_sym(pick->op, std::move(children));
  }

  mutable std::vector<EClassId> uf_;
  std::vector<int> rank_;
  std::vector<EClass> classes_;
  std::unordered_map<ENode, EClassId, ENodeHash> hashcons_;
  std::vector<EClassId> worklist_;
  bool normalized_ = true;
  uint64_t version_ = 0;
};

}  // namespace liblearn
