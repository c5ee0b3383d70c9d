#pragma once

#include <cctype>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "term.hpp"

namespace liblearn {

// Concrete syntax
//   term       (op arg ...) | atom
//   variable   ?name
//   binder ref $k                         (internal; corpus files use binders)
//   tuple      (list t1 t2 ...)
//   apply      (apply (lambda (?a ?b) body) t1 t2)
//   library    (lib f (lambda (?a) body) rest)   uses inside rest: (f t) or f
//   rules file (=> lhs rhs) | (<=> lhs rhs), one form per rule
// Line comments start with ';'.  Heads may not start with '?', '$' or '@'.

struct ParseError : std::runtime_error {
  int line;
  int col;
  ParseError(const std::string& msg, int line_, int col_)
      : std::runtime_error(msg + " at " + std::to_string(line_) + ":" + std::to_string(col_)),
        line(line_),
        col(col_) {}
};

namespace detail {

struct Token {
  enum Type { LParen, RParen, Atom, End } type;
  std::string text;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= src_.size()) {
      t.type = Token::End;
      return t;
    }
    char c = src_[pos_];
    if (c == '(') {
      advance();
      t.type = Token::LParen;
      return t;
    }
    if (c == ')') {
      advance();
      t.type = Token::RParen;
      return t;
    }
    t.type = Token::Atom;
    while (pos_ < src_.size() && !std::isspace(static_cast<unsigned char>(src_[pos_])) &&
           src_[pos_] != '(' && src_[pos_] != ')' && src_[pos_] != ';') {
      t.text.push_back(src_[pos_]);
      advance();
    }
    if (t.text.empty()) throw ParseError("unexpected character", t.line, t.col);
    return t;
  }

  Token peek() {
    size_t pos = pos_;
    int line = line_, col = col_;
    Token t = next();
    pos_ = pos;
    line_ = line;
    col_ = col;
    return t;
  }

 private:
  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ';') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct LibBinding {
  int arity;
  NodePtr body;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {}

  bool at_end() { return lex_.peek().type == Token::End; }

  NodePtr parse_expr() {
    Token t = lex_.next();
    return parse_expr(t);
  }

 private:
  NodePtr parse_expr(const Token& t) {
    switch (t.type) {
      case Token::Atom:
        return parse_atom(t);
      case Token::LParen:
        return parse_list(t);
      case Token::RParen:
        throw ParseError("unexpected ')'", t.line, t.col);
      case Token::End:
        throw ParseError("unexpected end of input", t.line, t.col);
    }
    throw ParseError("unreachable", t.line, t.col);
  }

  NodePtr parse_atom(const Token& t) {
    const std::string& s = t.text;
    if (s[0] == '?') {
      if (s.size() == 1) throw ParseError("empty variable name", t.line, t.col);
      std::string name = s.substr(1);
      if (!binder_scopes_.empty()) {
        const auto& innermost = binder_scopes_.back();
        for (size_t i = 0; i < innermost.size(); ++i)
          if (innermost[i] == name) return make_param(static_cast<int>(i));
      }
      // Bodies are closed; referencing an outer binder from a nested body
      // would make the inner abstraction open.
      for (auto it = binder_scopes_.rbegin(); it != binder_scopes_.rend(); ++it)
        for (const auto& b : *it)
          if (b == name)
            throw ParseError("?" + name + " refers to an outer binder", t.line, t.col);
      return make_var(name);
    }
    if (s[0] == '$') {
      int idx = 0;
      try {
        idx = std::stoi(s.substr(1));
      } catch (...) {
        throw ParseError("malformed binder reference '" + s + "'", t.line, t.col);
      }
      return make_param(idx);
    }
    if (s[0] == '@') throw ParseError("reserved symbol '" + s + "'", t.line, t.col);
    auto it = libs_.find(s);
    if (it != libs_.end()) {
      if (it->second.arity != 0)
        throw ParseError("'" + s + "' expects " + std::to_string(it->second.arity) + " arguments",
                         t.line, t.col);
      return make_app(it->second.body, {});
    }
    return make_sym(s);
  }

  NodePtr parse_list(const Token& open) {
    Token head = lex_.next();
    if (head.type == Token::RParen) throw ParseError("empty list", open.line, open.col);
    if (head.type != Token::Atom) throw ParseError("expected symbol head", head.line, head.col);
    const std::string& op = head.text;
    if (op == "lambda") throw ParseError("lambda outside apply/lib", head.line, head.col);
    if (op == "apply") return parse_apply(head);
    if (op == "lib") return parse_lib(head);
    if (op[0] == '?' || op[0] == '$' || op[0] == '@')
      throw ParseError("reserved head '" + op + "'", head.line, head.col);
    std::vector<NodePtr> args = parse_args();
    auto it = libs_.find(op);
    if (it != libs_.end()) {
      if (static_cast<int>(args.size()) != it->second.arity)
        throw ParseError("'" + op + "' expects " + std::to_string(it->second.arity) + " arguments",
                         head.line, head.col);
      return make_app(it->second.body, std::move(args));
    }
    return make_sym(op, std::move(args));
  }

  // (apply (lambda (?a ?b) body) t1 t2)
  NodePtr parse_apply(const Token& at) {
    auto [arity, body] = parse_lambda();
    std::vector<NodePtr> args = parse_args();
    if (static_cast<int>(args.size()) != arity)
      throw ParseError("apply expects " + std::to_string(arity) + " arguments", at.line, at.col);
    return make_app(body, std::move(args));
  }

  // (lib f (lambda (?a) body) rest)
  NodePtr parse_lib(const Token& at) {
    Token name = lex_.next();
    if (name.type != Token::Atom || name.text[0] == '?' || name.text[0] == '$' ||
        name.text[0] == '@')
      throw ParseError("expected binding name", name.line, name.col);
    auto [arity, body] = parse_lambda();
    bool shadowed = libs_.count(name.text) > 0;
    LibBinding saved = shadowed ? libs_[name.text] : LibBinding{};
    libs_[name.text] = LibBinding{arity, body};
    NodePtr rest = parse_expr();
    if (shadowed)
      libs_[name.text] = saved;
    else
      libs_.erase(name.text);
    Token close = lex_.next();
    if (close.type != Token::RParen) throw ParseError("expected ')'", close.line, close.col);
    return rest;
  }

  std::pair<int, NodePtr> parse_lambda() {
    Token open = lex_.next();
    if (open.type != Token::LParen) throw ParseError("expected '('", open.line, open.col);
    Token head = lex_.next();
    if (head.type != Token::Atom || head.text != "lambda")
      throw ParseError("expected lambda", head.line, head.col);
    Token bindersOpen = lex_.next();
    if (bindersOpen.type != Token::LParen)
      throw ParseError("expected binder list", bindersOpen.line, bindersOpen.col);
    std::vector<std::string> binders;
    for (;;) {
      Token b = lex_.next();
      if (b.type == Token::RParen) break;
      if (b.type != Token::Atom || b.text[0] != '?' || b.text.size() < 2)
        throw ParseError("binders must be ?names", b.line, b.col);
      binders.push_back(b.text.substr(1));
    }
    binder_scopes_.push_back(binders);
    NodePtr body = parse_expr();
    binder_scopes_.pop_back();
    Token close = lex_.next();
    if (close.type != Token::RParen) throw ParseError("expected ')'", close.line, close.col);
    return {static_cast<int>(binders.size()), body};
  }

  std::vector<NodePtr> parse_args() {
    std::vector<NodePtr> args;
    for (;;) {
      Token t = lex_.next();
      if (t.type == Token::RParen) return args;
      args.push_back(parse_expr(t));
    }
  }

  Lexer lex_;
  std::map<std::string, LibBinding> libs_;
  std::vector<std::vector<std::string>> binder_scopes_;
};

}  // namespace detail

inline NodePtr parse_term(const std::string& src) {
  detail::Parser p(src);
  NodePtr t = p.parse_expr();
  if (!p.at_end()) throw ParseError("trailing input", 0, 0);
  return t;
}

inline std::vector<NodePtr> parse_terms(const std::string& src) {
  detail::Parser p(src);
  std::vector<NodePtr> out;
  while (!p.at_end()) out.push_back(p.parse_expr());
  return out;
}

// (=> lhs rhs) rewrites left to right; (<=> lhs rhs) yields both directions.
inline std::vector<RewriteRule> parse_rules(const std::string& src) {
  std::vector<NodePtr> forms = parse_terms(src);
  std::vector<RewriteRule> rules;
  for (const auto& f : forms) {
    bool bidi = f->kind == NodeKind::Sym && f->op == "<=>";
    bool uni = f->kind == NodeKind::Sym && f->op == "=>";
    if ((!bidi && !uni) || f->children.size() != 2)
      throw ParseError("rules must be (=> lhs rhs) or (<=> lhs rhs)", 0, 0);
    const NodePtr& lhs = f->children[0];
    const NodePtr& rhs = f->children[1];
    for (const auto& v : distinct_vars(rhs)) {
      auto lv = distinct_vars(lhs);
      if (std::find(lv.begin(), lv.end(), v) == lv.end())
        throw ParseError("rule rhs variable ?" + v + " not bound on lhs", 0, 0);
    }
    std::string base = std::to_string(rules.size());
    rules.push_back({"rule-" + base, lhs, rhs});
    if (bidi) rules.push_back({"rule-" + base + "-rev", rhs, lhs});
  }
  return rules;
}

namespace detail {

inline void print_rec(const NodePtr& t, std::ostream& os) {
  switch (t->kind) {
    case NodeKind::Var:
      os << '?' << t->op;
      return;
    case NodeKind::Param:
      os << "?x" << t->index;
      return;
    case NodeKind::Sym:
      if (t->children.empty()) {
        os << t->op;
        return;
      }
      os << '(' << t->op;
      for (const auto& c : t->children) {
        os << ' ';
        print_rec(c, os);
      }
      os << ')';
      return;
    case NodeKind::App: {
      size_t arity = t->children.size() - 1;
      os << "(apply (lambda (";
      for (size_t i = 0; i < arity; ++i) os << (i ? " " : "") << "?x" << i;
      os << ") ";
      print_rec(t->children[0], os);
      os << ')';
      for (size_t i = 1; i < t->children.size(); ++i) {
        os << ' ';
        print_rec(t->children[i], os);
      }
      os << ')';
      return;
    }
  }
}

}  // namespace detail

inline std::string print(const NodePtr& t) {
  std::ostringstream os;
  detail::print_rec(t, os);
  return os.str();
}

struct LibDef {
  std::string name;
  int arity = 0;
  NodePtr body;  // uses of earlier definitions appear as plain symbols
};

// (lib f0 (lambda (...) body0) (lib f1 ... root))
inline std::string print_lib(const std::vector<LibDef>& defs, const NodePtr& root) {
  std::ostringstream os;
  for (const auto& d : defs) {
    os << "(lib " << d.name << " (lambda (";
    for (int i = 0; i < d.arity; ++i) os << (i ? " " : "") << "?x" << i;
    os << ") ";
    detail::print_rec(d.body, os);
    os << ") ";
  }
  detail::print_rec(root, os);
  for (size_t i = 0; i < defs.size(); ++i) os << ')';
  return os.str();
}

}  // namespace liblearn
