#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace liblearn {

// First-order terms, patterns and compressed terms share one node type.
//   Sym   constructor application; the tuple constructor is the reserved op "list"
//   Var   pattern variable
//   Param reference to a binder slot of the innermost enclosing abstraction
//   App   fully applied abstraction; children = [body, arg0, ..., argk-1]
// Abstraction bodies are closed: every Param inside a body refers to that
// body's own binder list, never to an outer abstraction.
enum class NodeKind { Sym, Var, Param, App };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

inline constexpr std::string_view kTupleOp = "list";

namespace detail {

inline size_t hash_mix(size_t h, size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
}

}  // namespace detail

struct Node {
  NodeKind kind;
  std::string op;                 // Sym: constructor name; Var: variable name
  int index = -1;                 // Param: binder slot
  std::vector<NodePtr> children;  // Sym: arguments; App: [body, args...]
  size_t hash = 0;
};

inline NodePtr make_node(NodeKind kind, std::string op, int index,
                         std::vector<NodePtr> children) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->op = std::move(op);
  n->index = index;
  n->children = std::move(children);
  size_t h = detail::hash_mix(static_cast<size_t>(kind) + 1, std::hash<std::string>{}(n->op));
  h = detail::hash_mix(h, static_cast<size_t>(n->index + 2));
  for (const auto& c : n->children) h = detail::hash_mix(h, c->hash);
  n->hash = h;
  return n;
}

inline NodePtr make_sym(std::string op, std::vector<NodePtr> children = {}) {
  return make_node(NodeKind::Sym, std::move(op), -1, std::move(children));
}

inline NodePtr make_tuple(std::vector<NodePtr> items) {
  return make_sym(std::string(kTupleOp), std::move(items));
}

inline NodePtr make_var(std::string name) {
  return make_node(NodeKind::Var, std::move(name), -1, {});
}

inline NodePtr make_param(int index) {
  return make_node(NodeKind::Param, "", index, {});
}

inline NodePtr make_app(NodePtr body, std::vector<NodePtr> args) {
  std::vector<NodePtr> children;
  children.reserve(args.size() + 1);
  children.push_back(std::move(body));
  for (auto& a : args) children.push_back(std::move(a));
  return make_node(NodeKind::App, "", -1, std::move(children));
}

inline bool equal(const NodePtr& a, const NodePtr& b) {
  if (a.get() == b.get()) return true;
  if (a->hash != b->hash) return false;
  if (a->kind != b->kind || a->index != b->index || a->op != b->op ||
      a->children.size() != b->children.size())
    return false;
  for (size_t i = 0; i < a->children.size(); ++i)
    if (!equal(a->children[i], b->children[i])) return false;
  return true;
}

// Deterministic total order, used for canonical sorting and tie-breaks.
inline int compare(const NodePtr& a, const NodePtr& b) {
  if (a.get() == b.get()) return 0;
  if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
  if (int c = a->op.compare(b->op)) return c < 0 ? -1 : 1;
  if (a->index != b->index) return a->index < b->index ? -1 : 1;
  if (a->children.size() != b->children.size())
    return a->children.size() < b->children.size() ? -1 : 1;
  for (size_t i = 0; i < a->children.size(); ++i)
    if (int c = compare(a->children[i], b->children[i])) return c;
  return 0;
}

struct NodeLess {
  bool operator()(const NodePtr& a, const NodePtr& b) const { return compare(a, b) < 0; }
};

struct NodeHash {
  size_t operator()(const NodePtr& n) const { return n->hash; }
};

struct NodeEq {
  bool operator()(const NodePtr& a, const NodePtr& b) const { return equal(a, b); }
};

using NodeSet = std::unordered_set<NodePtr, NodeHash, NodeEq>;
template <typename T>
using NodeMap = std::unordered_map<NodePtr, T, NodeHash, NodeEq>;

// Size of one occurrence: constructors and variables count 1, the tuple
// constructor counts 0, an application counts 1 plus its arguments.  The
// body of an application is not part of the occurrence; it is charged once
// globally by compressed_size.
inline int64_t term_size(const NodePtr& t) {
  switch (t->kind) {
    case NodeKind::Sym: {
      int64_t s = (t->op == kTupleOp) ? 0 : 1;
      for (const auto& c : t->children) s += term_size(c);
      return s;
    }
    case NodeKind::Var:
    case NodeKind::Param:
      return 1;
    case NodeKind::App: {
      int64_t s = 1;
      for (size_t i = 1; i < t->children.size(); ++i) s += term_size(t->children[i]);
      return s;
    }
  }
  return 0;
}

namespace detail {

inline void collect_bodies(const NodePtr& t, NodeSet& seen, std::vector<NodePtr>& out) {
  if (t->kind == NodeKind::App) {
    const NodePtr& body = t->children[0];
    if (seen.insert(body).second) {
      out.push_back(body);
      collect_bodies(body, seen, out);
    }
    for (size_t i = 1; i < t->children.size(); ++i) collect_bodies(t->children[i], seen, out);
  } else {
    for (const auto& c : t->children) collect_bodies(c, seen, out);
  }
}

}  // namespace detail

// Distinct abstraction bodies reachable from t, in first-encounter order.
inline std::vector<NodePtr> distinct_bodies(const NodePtr& t) {
  NodeSet seen;
  std::vector<NodePtr> out;
  detail::collect_bodies(t, seen, out);
  return out;
}

// Total size of a compressed term: the top-level occurrence plus every
// structurally distinct abstraction body, each counted once.
inline int64_t compressed_size(const NodePtr& t) {
  int64_t s = term_size(t);
  for (const auto& b : distinct_bodies(t)) s += term_size(b);
  return s;
}

namespace detail {

inline void collect_vars(const NodePtr& p, std::vector<std::string>& order,
                         std::map<std::string, int>& counts) {
  if (p->kind == NodeKind::Var) {
    auto [it, inserted] = counts.emplace(p->op, 0);
    if (inserted) order.push_back(p->op);
    ++it->second;
    return;
  }
  for (const auto& c : p->children) collect_vars(c, order, counts);
}

}  // namespace detail

// Distinct variables in first-occurrence order.
inline std::vector<std::string> distinct_vars(const NodePtr& p) {
  std::vector<std::string> order;
  std::map<std::string, int> counts;
  detail::collect_vars(p, order, counts);
  return order;
}

inline bool is_linear(const NodePtr& p) {
  std::vector<std::string> order;
  std::map<std::string, int> counts;
  detail::collect_vars(p, order, counts);
  for (const auto& [_, n] : counts)
    if (n > 1) return false;
  return true;
}

inline int64_t skeleton_size(const NodePtr& p) {
  return term_size(p) - static_cast<int64_t>(distinct_vars(p).size());
}

// Trivial patterns never pay for themselves: a bare variable, a lone
// constant, or a linear constructor applied to distinct variables.
inline bool is_trivial(const NodePtr& p) {
  return is_linear(p) && skeleton_size(p) <= 1;
}

inline bool contains_op(const NodePtr& t, std::string_view op) {
  if (t->kind == NodeKind::Sym && t->op == op) return true;
  for (const auto& c : t->children)
    if (contains_op(c, op)) return true;
  return false;
}

inline bool contains_tuple(const NodePtr& t) { return contains_op(t, kTupleOp); }

inline bool contains_app(const NodePtr& t) {
  if (t->kind == NodeKind::App) return true;
  for (const auto& c : t->children)
    if (contains_app(c)) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Matching and substitution

using Subst = std::map<std::string, NodePtr>;

inline bool match_into(const NodePtr& subject, const NodePtr& pattern, Subst& out) {
  switch (pattern->kind) {
    case NodeKind::Var: {
      auto [it, inserted] = out.emplace(pattern->op, subject);
      return inserted || equal(it->second, subject);
    }
    case NodeKind::Param:
      return subject->kind == NodeKind::Param && subject->index == pattern->index;
    case NodeKind::Sym:
      if (subject->kind != NodeKind::Sym || subject->op != pattern->op ||
          subject->children.size() != pattern->children.size())
        return false;
      break;
    case NodeKind::App:
      if (subject->kind != NodeKind::App ||
          subject->children.size() != pattern->children.size())
        return false;
      break;
  }
  for (size_t i = 0; i < pattern->children.size(); ++i)
    if (!match_into(subject->children[i], pattern->children[i], out)) return false;
  return true;
}

inline std::optional<Subst> match(const NodePtr& subject, const NodePtr& pattern) {
  Subst s;
  if (match_into(subject, pattern, s)) return s;
  return std::nullopt;
}

// Replaces variables; unbound variables are kept.  Bodies are closed, so
// substitution descends into application arguments but not bodies.
inline NodePtr apply_subst(const NodePtr& p, const Subst& s) {
  switch (p->kind) {
    case NodeKind::Var: {
      auto it = s.find(p->op);
      return it == s.end() ? p : it->second;
    }
    case NodeKind::Param:
      return p;
    case NodeKind::Sym: {
      std::vector<NodePtr> children;
      children.reserve(p->children.size());
      bool changed = false;
      for (const auto& c : p->children) {
        children.push_back(apply_subst(c, s));
        changed = changed || children.back().get() != c.get();
      }
      return changed ? make_sym(p->op, std::move(children)) : p;
    }
    case NodeKind::App: {
      std::vector<NodePtr> args;
      bool changed = false;
      for (size_t i = 1; i < p->children.size(); ++i) {
        args.push_back(apply_subst(p->children[i], s));
        changed = changed || args.back().get() != p->children[i].get();
      }
      return changed ? make_app(p->children[0], std::move(args)) : p;
    }
  }
  return p;
}

// Replaces binder references of the innermost abstraction.  Nested bodies are
// closed, so the walk skips them and only descends into nested arguments.
inline NodePtr subst_params(const NodePtr& t, const std::vector<NodePtr>& args) {
  switch (t->kind) {
    case NodeKind::Param:
      return args.at(static_cast<size_t>(t->index));
    case NodeKind::Var:
      return t;
    case NodeKind::Sym: {
      std::vector<NodePtr> children;
      children.reserve(t->children.size());
      bool changed = false;
      for (const auto& c : t->children) {
        children.push_back(subst_params(c, args));
        changed = changed || children.back().get() != c.get();
      }
      return changed ? make_sym(t->op, std::move(children)) : t;
    }
    case NodeKind::App: {
      std::vector<NodePtr> inner;
      bool changed = false;
      for (size_t i = 1; i < t->children.size(); ++i) {
        inner.push_back(subst_params(t->children[i], args));
        changed = changed || inner.back().get() != t->children[i].get();
      }
      return changed ? make_app(t->children[0], std::move(inner)) : t;
    }
  }
  return t;
}

namespace detail {

inline NodePtr evaluate_memo(const NodePtr& t, std::unordered_map<const Node*, NodePtr>& memo) {
  auto it = memo.find(t.get());
  if (it != memo.end()) return it->second;
  NodePtr result;
  switch (t->kind) {
    case NodeKind::Var:
    case NodeKind::Param:
      result = t;
      break;
    case NodeKind::Sym: {
      std::vector<NodePtr> children;
      children.reserve(t->children.size());
      bool changed = false;
      for (const auto& c : t->children) {
        children.push_back(evaluate_memo(c, memo));
        changed = changed || children.back().get() != c.get();
      }
      result = changed ? make_sym(t->op, std::move(children)) : t;
      break;
    }
    case NodeKind::App: {
      NodePtr body = evaluate_memo(t->children[0], memo);
      std::vector<NodePtr> args;
      for (size_t i = 1; i < t->children.size(); ++i)
        args.push_back(evaluate_memo(t->children[i], memo));
      result = subst_params(body, args);
      break;
    }
  }
  memo.emplace(t.get(), result);
  return result;
}

}  // namespace detail

// Expands every application, innermost first.  Terminates structurally and
// yields a term free of App nodes (and of Params, if t was closed).
inline NodePtr evaluate(const NodePtr& t) {
  std::unordered_map<const Node*, NodePtr> memo;
  return detail::evaluate_memo(t, memo);
}

// ---------------------------------------------------------------------------
// Canonicalization and anti-unification

inline std::string canonical_var_name(int i) { return "x" + std::to_string(i); }

namespace detail {

inline NodePtr rename_vars(const NodePtr& p, std::map<std::string, std::string>& renaming) {
  switch (p->kind) {
    case NodeKind::Var: {
      auto [it, inserted] = renaming.emplace(p->op, "");
      if (inserted) it->second = canonical_var_name(static_cast<int>(renaming.size()) - 1);
      return make_var(it->second);
    }
    case NodeKind::Param:
      return p;
    default: {
      std::vector<NodePtr> children;
      children.reserve(p->children.size());
      bool changed = false;
      for (const auto& c : p->children) {
        children.push_back(rename_vars(c, renaming));
        changed = changed || children.back().get() != c.get();
      }
      if (!changed) return p;
      if (p->kind == NodeKind::Sym) return make_sym(p->op, std::move(children));
      std::vector<NodePtr> args(children.begin() + 1, children.end());
      return make_app(children[0], std::move(args));
    }
  }
}

}  // namespace detail

// Renames variables to x0, x1, ... in first-occurrence order.  Patterns equal
// up to renaming become structurally identical.
inline NodePtr canonicalize(const NodePtr& p, std::map<std::string, std::string>* renaming_out = nullptr) {
  std::map<std::string, std::string> renaming;
  // Map insertion order is not occurrence order, so collect first.
  for (size_t i = 0; const auto& v : distinct_vars(p)) renaming[v] = canonical_var_name(static_cast<int>(i++));
  std::map<std::string, std::string> scratch = renaming;
  NodePtr result = detail::rename_vars(p, scratch);
  if (renaming_out) *renaming_out = renaming;
  return result;
}

namespace detail {

struct JoinState {
  std::map<std::pair<const Node*, const Node*>, NodePtr> table;
  std::vector<std::pair<std::pair<NodePtr, NodePtr>, NodePtr>> entries;
  int counter = 0;

  NodePtr var_for(const NodePtr& a, const NodePtr& b) {
    for (auto& [key, v] : entries)
      if (equal(key.first, a) && equal(key.second, b)) return v;
    NodePtr v = make_var("j" + std::to_string(counter++));
    entries.push_back({{a, b}, v});
    return v;
  }

  NodePtr run(const NodePtr& a, const NodePtr& b) {
    if (equal(a, b)) return a;
    if (a->kind == NodeKind::Sym && b->kind == NodeKind::Sym && a->op == b->op &&
        a->op != kTupleOp && a->children.size() == b->children.size()) {
      std::vector<NodePtr> children;
      children.reserve(a->children.size());
      for (size_t i = 0; i < a->children.size(); ++i)
        children.push_back(run(a->children[i], b->children[i]));
      return make_sym(a->op, std::move(children));
    }
    return var_for(a, b);
  }
};

}  // namespace detail

// Least general generalization of two patterns (variables treated as
// constants).  Equal subterm pairs are preserved; mismatching pairs map to a
// shared fresh variable per distinct pair, so repeated disagreements reuse
// the same variable.  The result is canonicalized.
inline NodePtr join(const NodePtr& a, const NodePtr& b) {
  detail::JoinState st;
  return canonicalize(st.run(a, b));
}

namespace detail {

inline void collect_subterms(const NodePtr& t, NodeSet& seen, std::vector<NodePtr>& out) {
  if (!seen.insert(t).second) return;
  out.push_back(t);
  for (const auto& c : t->children) collect_subterms(c, seen, out);
}

}  // namespace detail

inline std::vector<NodePtr> distinct_subterms(const NodePtr& t) {
  NodeSet seen;
  std::vector<NodePtr> out;
  detail::collect_subterms(t, seen, out);
  return out;
}

// Joins of every pair of distinct subterms of t (including a subterm with
// itself), canonicalized, with trivial and tuple-containing patterns removed.
inline std::vector<NodePtr> pairwise_joins(const NodePtr& t) {
  std::vector<NodePtr> subs = distinct_subterms(t);
  NodeSet seen;
  std::vector<NodePtr> out;
  for (const auto& a : subs) {
    for (const auto& b : subs) {
      NodePtr p = join(a, b);
      if (is_trivial(p) || contains_tuple(p)) continue;
      if (seen.insert(p).second) out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end(), NodeLess{});
  return out;
}

// ---------------------------------------------------------------------------
// Rewrite rules and abstraction introduction

struct RewriteRule {
  std::string name;
  NodePtr lhs;
  NodePtr rhs;
};

// Turns a pattern into the rule  p  =>  (λ x0..xk-1 -> p[xi := #i]) x0..xk-1.
// Applying it abstracts one occurrence; the inverse direction is evaluate.
inline RewriteRule kappa(const NodePtr& pattern, std::string name = "") {
  NodePtr canon = canonicalize(pattern);
  std::vector<std::string> vars = distinct_vars(canon);
  Subst to_params;
  std::vector<NodePtr> var_args;
  for (size_t i = 0; i < vars.size(); ++i) {
    to_params[vars[i]] = make_param(static_cast<int>(i));
    var_args.push_back(make_var(vars[i]));
  }
  NodePtr body = apply_subst(canon, to_params);
  return RewriteRule{name, canon, make_app(body, std::move(var_args))};
}

// Cost of one abstracted use: the application node plus one argument per
// distinct variable of the pattern.
inline int64_t use_cost(const NodePtr& p, const Subst& s) {
  int64_t c = 1;
  for (const auto& v : distinct_vars(p)) c += term_size(s.at(v));
  return c;
}

// Size of the concrete occurrence the use replaces.  Non-linear patterns
// save the duplicated argument once per occurrence.
inline int64_t save_cost(const NodePtr& p, const Subst& s) {
  return term_size(apply_subst(p, s));
}

// Net size change of abstracting each occurrence in `uses` plus paying for
// the pattern body once.  Negative means the library function is worth it.
inline int64_t pattern_cost(const NodePtr& p, const std::vector<Subst>& uses) {
  int64_t c = term_size(p);
  for (const auto& s : uses) c += use_cost(p, s) - save_cost(p, s);
  return c;
}

// Every term reachable from t by rewriting exactly one matching position.
// Positions inside abstraction bodies are not rewritten (bodies are shared
// definitions, not occurrences).
inline void rewrite_all(const NodePtr& t, const RewriteRule& rule, std::vector<NodePtr>& out) {
  if (auto s = match(t, rule.lhs)) out.push_back(apply_subst(rule.rhs, *s));
  size_t first = t->kind == NodeKind::App ? 1 : 0;
  for (size_t i = first; i < t->children.size(); ++i) {
    std::vector<NodePtr> rewritten;
    rewrite_all(t->children[i], rule, rewritten);
    for (const auto& r : rewritten) {
      std::vector<NodePtr> children = t->children;
      children[i] = r;
      if (t->kind == NodeKind::Sym) {
        out.push_back(make_sym(t->op, std::move(children)));
      } else {
        std::vector<NodePtr> args(children.begin() + 1, children.end());
        out.push_back(make_app(children[0], std::move(args)));
      }
    }
  }
}

inline std::vector<NodePtr> rewrite_all(const NodePtr& t, const RewriteRule& rule) {
  std::vector<NodePtr> out;
  rewrite_all(t, rule, out);
  return out;
}

}  // namespace liblearn
