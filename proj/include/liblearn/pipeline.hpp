#pragma once

#include <chrono>
#include <cctype>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "candidates.hpp"
#include "selection.hpp"
#include "sexpr.hpp"

namespace liblearn {

struct PipelineConfig {
  int rounds = 20;
  int64_t beam_width = 100;  // <= 0: unlimited
  int64_t max_lib_fns = 3;   // <= 0: unlimited
  int max_arity = 4;
  int64_t min_matches = 2;
  bool use_eqs = true;
  bool eqsat_only = false;
  EqsatLimits eqsat;
};

struct RoundStats {
  int round = 1;
  int64_t candidates = 0;
  int64_t adopted = 0;
  int64_t output_size = 0;  // accumulated definitions plus the corpus, end of round
  std::string eqs_stop = "saturated";
  std::string abstraction_stop = "saturated";
  double eqsat_ms = 0;
  double candidates_ms = 0;
  double selection_ms = 0;
  double finalize_ms = 0;
};

struct RunStats {
  int64_t input_size = 0;
  int64_t output_size = 0;
  double compression_ratio = 1.0;
  int64_t num_abstractions = 0;
  bool saturated = true;
  std::string stop_reason = "saturated";
  double eqsat_ms = 0;
  double candidates_ms = 0;
  double selection_ms = 0;
  double finalize_ms = 0;
  double total_ms = 0;
  std::vector<RoundStats> rounds;
};

struct PipelineResult {
  CompressedOutput output;
  RunStats stats;
};

// Observer for per-round artifacts; selection/output are null when the round
// produced no candidates or adopted nothing.
using RoundHook = std::function<void(int round, const CandidateSet&, const SelectionResult*,
                                     const CompressedOutput*)>;

// One corpus entry: a single program, or the members of a group that may be
// refactored interchangeably.
using CorpusEntry = std::vector<NodePtr>;

namespace detail {

inline void require_ground(const NodePtr& t, size_t entry) {
  if (t->kind == NodeKind::Var || t->kind == NodeKind::Param)
    throw ParseError("corpus entry " + std::to_string(entry + 1) + " is not a ground program", 0,
                     0);
  for (const auto& c : t->children) require_ground(c, entry);
}

}  // namespace detail

// Corpus file: one s-expression per entry; `(group p1 p2 ...)` marks programs
// any one of which may stand for the entry.  Binding forms are expanded, so a
// previously compressed corpus reads back as plain programs.
inline std::vector<CorpusEntry> parse_corpus(const std::string& src) {
  std::vector<NodePtr> forms = parse_terms(src);
  if (forms.empty()) throw ParseError("empty corpus", 1, 1);
  std::vector<CorpusEntry> entries;
  for (const NodePtr& f : forms) {
    CorpusEntry e;
    if (f->kind == NodeKind::Sym && f->op == "group") {
      for (const auto& m : f->children) {
        if (m->kind == NodeKind::Sym && m->op == "group")
          throw ParseError("nested group", 0, 0);
        e.push_back(evaluate(m));
      }
    } else {
      e.push_back(evaluate(f));
    }
    for (const auto& m : e) detail::require_ground(m, entries.size());
    entries.push_back(std::move(e));
  }
  return entries;
}

namespace detail {

// Learned functions are emitted as f0, f1, ...; existing names of that shape
// in the input push the counter past them.
inline int64_t fn_name_number(const std::string& op) {
  if (op.size() < 2 || op.size() > 10 || op[0] != 'f') return -1;
  for (size_t i = 1; i < op.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(op[i]))) return -1;
  return std::stoll(op.substr(1));
}

inline int64_t scan_name_base(const std::vector<CorpusEntry>& corpus,
                              const std::vector<RewriteRule>& eqs) {
  std::set<std::string> ops;
  for (const auto& e : corpus)
    for (const auto& m : e) collect_ops(m, ops);
  for (const auto& r : eqs) {
    collect_ops(r.lhs, ops);
    collect_ops(r.rhs, ops);
  }
  int64_t base = 0;
  for (const auto& op : ops) base = std::max(base, fn_name_number(op) + 1);
  return base;
}

inline NodePtr rename_syms(const NodePtr& t, const std::map<std::string, std::string>& ren) {
  std::vector<NodePtr> kids;
  kids.reserve(t->children.size());
  bool changed = false;
  for (const auto& c : t->children) {
    kids.push_back(rename_syms(c, ren));
    changed = changed || kids.back().get() != c.get();
  }
  if (t->kind == NodeKind::Sym) {
    auto it = ren.find(t->op);
    if (it != ren.end()) return make_sym(it->second, std::move(kids));
  }
  if (!changed) return t;
  if (t->kind == NodeKind::App) return make_app(kids[0], {kids.begin() + 1, kids.end()});
  return make_sym(t->op, std::move(kids));
}

inline double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

// Whole-corpus driver: rounds of saturate / propose / select / emit.  Each
// round's adopted functions become opaque primitives for the next round;
// rounds stop early once a round fails to shrink the output.
inline PipelineResult run_pipeline(const std::vector<CorpusEntry>& corpus,
                                   const std::vector<RewriteRule>& eqs,
                                   const PipelineConfig& cfg = {}, const RoundHook& hook = {}) {
  auto t_start = std::chrono::steady_clock::now();
  PipelineResult out;
  RunStats& st = out.stats;

  std::vector<NodePtr> min_members;
  for (const auto& e : corpus) {
    NodePtr best = e.at(0);
    for (const auto& m : e)
      if (term_size(m) < term_size(best) || (term_size(m) == term_size(best) && NodeLess{}(m, best)))
        best = m;
    min_members.push_back(best);
    st.input_size += term_size(best);
  }

  std::vector<RewriteRule> eqs_used = cfg.use_eqs ? eqs : std::vector<RewriteRule>{};
  SelectionConfig sc;
  sc.max_lib_fns = cfg.max_lib_fns <= 0 ? 64 : cfg.max_lib_fns;
  sc.beam_width = cfg.beam_width <= 0 ? kInfCost : cfg.beam_width;
  CandidateConfig cc;
  cc.max_arity = cfg.max_arity;
  cc.min_matches = cfg.min_matches;

  std::vector<LibDef> defs;
  std::vector<CorpusEntry> current = corpus;
  NodePtr final_root = make_tuple(std::vector<NodePtr>(min_members));
  int64_t name_base = detail::scan_name_base(corpus, eqs);
  int64_t prev_total = st.input_size;

  auto note_eqsat = [&](const EqsatReport& rep, std::string& slot) {
    slot = rep.stop_reason;
    if (!rep.saturated && st.saturated) {
      st.saturated = false;
      st.stop_reason = rep.stop_reason;
    }
  };

  int rounds = std::max(1, cfg.eqsat_only ? 1 : cfg.rounds);
  for (int round = 1; round <= rounds; ++round) {
    RoundStats rs;
    rs.round = round;

    auto t0 = std::chrono::steady_clock::now();
    EGraph g;
    std::vector<EClassId> entry_classes;
    for (const auto& e : current) {
      EClassId c = g.add_term(e[0]);
      for (size_t i = 1; i < e.size(); ++i) g.merge(c, g.add_term(e[i]));
      entry_classes.push_back(c);
    }
    g.rebuild();
    for (auto& c : entry_classes) c = g.find(c);
    EClassId root = g.add(ENode{std::string(kTupleOp), entry_classes});
    g.rebuild();
    root = g.find(root);
    EqsatReport er = g.eqsat(eqs_used, cfg.eqsat);
    note_eqsat(er, rs.eqs_stop);
    root = g.find(root);
    rs.eqsat_ms += detail::ms_since(t0);

    if (cfg.eqsat_only) {
      NodePtr plain = g.extract_greedy(root);
      final_root = plain;
      prev_total = term_size(plain);
      rs.output_size = prev_total;
      st.rounds.push_back(rs);
      break;
    }

    t0 = std::chrono::steady_clock::now();
    CandidateSet cands = generate_candidates(g, cc, root);
    rs.candidates = static_cast<int64_t>(cands.candidates.size());
    std::vector<RewriteRule> rules = candidates_to_rules(cands);
    rs.candidates_ms = detail::ms_since(t0);

    bool adopted = false;
    if (!rules.empty()) {
      t0 = std::chrono::steady_clock::now();
      EGraph gp = g;
      EqsatReport kr = gp.eqsat(rules, cfg.eqsat);
      note_eqsat(kr, rs.abstraction_stop);
      SelectionResult res = select_library(gp, gp.find(root), sc);
      rs.selection_ms = detail::ms_since(t0);

      if (!res.chosen.empty()) {
        t0 = std::chrono::steady_clock::now();
        std::map<LibFnId, size_t> first_rule;
        for (size_t i = 0; i < rules.size(); ++i) {
          EClassSubst empty;
          first_rule.emplace(gp.find(gp.add_pattern(rules[i].rhs->children[0], empty)), i);
        }
        std::vector<RewriteRule> selected;
        std::vector<std::string> prov_names;
        for (LibFnId f : res.chosen) {
          selected.push_back(rules.at(first_rule.at(f)));
          prov_names.push_back("$new" + std::to_string(prov_names.size()));
        }
        CompressedOutput emitted = finalize(g, selected, root, &prov_names, cfg.eqsat);
        int64_t defs_size = 0;
        for (const auto& d : defs) defs_size += term_size(d.body);
        int64_t round_total = defs_size + output_size(emitted);
        rs.finalize_ms = detail::ms_since(t0);

        if (round_total < prev_total) {
          std::map<std::string, std::string> ren;
          for (const auto& d : emitted.libs)
            ren[d.name] = "f" + std::to_string(name_base + static_cast<int64_t>(
                                                               defs.size() + ren.size()));
          for (auto& d : emitted.libs) {
            d.name = ren.at(d.name);
            d.body = detail::rename_syms(d.body, ren);
            defs.push_back(d);
          }
          emitted.root = detail::rename_syms(emitted.root, ren);
          final_root = emitted.root;
          if (final_root->kind == NodeKind::Sym && final_root->op == kTupleOp) {
            current.clear();
            for (const auto& p : final_root->children) current.push_back({p});
          } else {
            current = {{final_root}};
          }
          prev_total = round_total;
          rs.adopted = static_cast<int64_t>(ren.size());
          adopted = true;
          rs.output_size = round_total;
          if (hook) hook(round, cands, &res, &emitted);
        } else if (hook) {
          hook(round, cands, &res, nullptr);
        }
      } else if (hook) {
        hook(round, cands, &res, nullptr);
      }
    } else if (hook) {
      hook(round, cands, nullptr, nullptr);
    }

    if (!adopted) {
      // The theory alone may still shrink the corpus (e.g. idempotence).
      NodePtr plain = g.extract_greedy(root);
      int64_t defs_size = 0;
      for (const auto& d : defs) defs_size += term_size(d.body);
      int64_t plain_total = defs_size + term_size(plain);
      if (plain_total < prev_total) {
        final_root = plain;
        if (plain->kind == NodeKind::Sym && plain->op == kTupleOp) {
          current.clear();
          for (const auto& p : plain->children) current.push_back({p});
        } else {
          current = {{plain}};
        }
        prev_total = plain_total;
      }
      rs.output_size = prev_total;
      st.rounds.push_back(rs);
      break;
    }
    st.rounds.push_back(rs);
  }

  st.output_size = prev_total;
  st.compression_ratio =
      st.output_size > 0 ? static_cast<double>(st.input_size) / static_cast<double>(st.output_size)
                         : 1.0;
  st.num_abstractions = static_cast<int64_t>(defs.size());
  for (const auto& r : st.rounds) {
    st.eqsat_ms += r.eqsat_ms;
    st.candidates_ms += r.candidates_ms;
    st.selection_ms += r.selection_ms;
    st.finalize_ms += r.finalize_ms;
  }
  st.total_ms = detail::ms_since(t_start);
  out.output = CompressedOutput{std::move(defs), final_root};
  return out;
}

}  // namespace liblearn
