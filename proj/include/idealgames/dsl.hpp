#pragma once

// Tokenizer and recursive-descent parser for the set DSL:
//
//   set  := finite{n,...} | ap(a,d) | tail(k) | range(lo,hi)
//         | isch(gen[,all|,even|,idx{j,...}]) | pts(gen)
//         | union(set,set) | inter(set,set) | compl(set)
//         | odds | evens | all | empty
//
// The grammar is LL(1): the leading keyword decides the production.
// The tokenizer is shared with the sequence and transform literals.

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "idealgames/error.hpp"
#include "idealgames/generators.hpp"
#include "idealgames/nat.hpp"
#include "idealgames/setalg.hpp"

namespace idealgames {

struct Token {
  enum class Kind { Ident, Number, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  int line = 1;
  int column = 1;
};

class DslLexer {
 public:
  explicit DslLexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return cur_; }

  Token next() {
    Token t = cur_;
    advance();
    return t;
  }

  bool at_punct(char c) const { return cur_.kind == Token::Kind::Punct && cur_.text[0] == c; }
  bool at_ident(std::string_view s) const { return cur_.kind == Token::Kind::Ident && cur_.text == s; }

  Token expect_punct(char c) {
    if (!at_punct(c)) fail(std::string("expected '") + c + "'");
    return next();
  }
  Token expect_ident() {
    if (cur_.kind != Token::Kind::Ident) fail("expected a name");
    return next();
  }
  Token expect_number() {
    if (cur_.kind != Token::Kind::Number) fail("expected a number");
    return next();
  }
  void expect_end() {
    if (cur_.kind != Token::Kind::End) fail("unexpected trailing input");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    const std::string got = cur_.kind == Token::Kind::End ? "end of input" : "'" + cur_.text + "'";
    throw ParseError(msg + ", got " + got, cur_.line, cur_.column);
  }
  [[noreturn]] static void fail_at(const Token& t, const std::string& msg) { throw ParseError(msg, t.line, t.column); }

 private:
  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) bump();
    cur_ = Token{};
    cur_.line = line_;
    cur_.column = col_;
    if (pos_ >= src_.size()) return;
    const char c = src_[pos_];
    auto is_digit = [&](std::size_t i) { return i < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i])); };
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      cur_.kind = Token::Kind::Ident;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_' || src_[pos_] == '-'))
        cur_.text.push_back(bump());
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || ((c == '-' || c == '+' || c == '.') && (is_digit(pos_ + 1)))) {
      cur_.kind = Token::Kind::Number;
      if (c == '-' || c == '+') cur_.text.push_back(bump());
      while (is_digit(pos_)) cur_.text.push_back(bump());
      if (pos_ < src_.size() && src_[pos_] == '.') {
        cur_.text.push_back(bump());
        while (is_digit(pos_)) cur_.text.push_back(bump());
      } else if (pos_ < src_.size() && src_[pos_] == '/' && is_digit(pos_ + 1)) {
        cur_.text.push_back(bump());
        while (is_digit(pos_)) cur_.text.push_back(bump());
      }
      return;
    }
    cur_.kind = Token::Kind::Punct;
    cur_.text.push_back(bump());
  }

  char bump() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token cur_;
};

namespace detail {

inline Nat parse_nat_token(const Token& t) {
  try {
    return parse_nat(t.text);
  } catch (const Error& e) {
    DslLexer::fail_at(t, "expected a natural number");
  }
}

inline std::vector<Nat> parse_nat_list(DslLexer& lx, char close) {
  std::vector<Nat> out;
  if (lx.at_punct(close)) return out;
  out.push_back(parse_nat_token(lx.expect_number()));
  while (lx.at_punct(',')) {
    lx.next();
    out.push_back(parse_nat_token(lx.expect_number()));
  }
  return out;
}

inline GeneratorPtr parse_generator(DslLexer& lx) {
  const Token t = lx.expect_ident();
  try {
    return find_generator(t.text);
  } catch (const Error&) {
    DslLexer::fail_at(t, "unknown generator '" + t.text + "'");
  }
}

}  // namespace detail

inline SetExpr parse_set_expr(DslLexer& lx) {
  const Token head = lx.expect_ident();
  const std::string& kw = head.text;
  auto positive = [&](Nat v, const Token& at) {
    if (v < 1) DslLexer::fail_at(at, "expected a positive integer");
    return v;
  };
  if (kw == "odds") return SetExpr::odds();
  if (kw == "evens") return SetExpr::evens();
  if (kw == "all") return SetExpr::all();
  if (kw == "empty") return SetExpr::empty();
  if (kw == "finite") {
    lx.expect_punct('{');
    auto elems = detail::parse_nat_list(lx, '}');
    const Token close = lx.expect_punct('}');
    for (Nat e : elems)
      if (e == 0) DslLexer::fail_at(close, "finite sets contain positive integers only");
    return SetExpr::finite(std::move(elems));
  }
  if (kw == "ap") {
    lx.expect_punct('(');
    const Token ta = lx.expect_number();
    const Nat a = positive(detail::parse_nat_token(ta), ta);
    lx.expect_punct(',');
    const Token td = lx.expect_number();
    const Nat d = positive(detail::parse_nat_token(td), td);
    lx.expect_punct(')');
    return SetExpr::arith(a, d);
  }
  if (kw == "tail") {
    lx.expect_punct('(');
    const Token tk = lx.expect_number();
    const Nat k = positive(detail::parse_nat_token(tk), tk);
    lx.expect_punct(')');
    return SetExpr::tail(k);
  }
  if (kw == "range") {
    lx.expect_punct('(');
    const Nat lo = detail::parse_nat_token(lx.expect_number());
    lx.expect_punct(',');
    const Nat hi = detail::parse_nat_token(lx.expect_number());
    lx.expect_punct(')');
    return SetExpr::range(lo, hi);
  }
  if (kw == "isch") {
    lx.expect_punct('(');
    auto gen = detail::parse_generator(lx);
    Selector sel = Selector::all();
    if (lx.at_punct(',')) {
      lx.next();
      const Token st = lx.expect_ident();
      if (st.text == "all") {
        sel = Selector::all();
      } else if (st.text == "even") {
        sel = Selector::even();
      } else if (st.text == "idx") {
        lx.expect_punct('{');
        const auto raw = detail::parse_nat_list(lx, '}');
        const Token close = lx.expect_punct('}');
        std::vector<Index> idx;
        for (Nat v : raw) {
          if (v == 0 || !fits_index(v)) DslLexer::fail_at(close, "interval indices must be in [1, 2^64)");
          idx.push_back(static_cast<Index>(v));
        }
        sel = Selector::explicit_list(std::move(idx));
      } else {
        DslLexer::fail_at(st, "unknown selector '" + st.text + "' (all, even, idx{...})");
      }
    }
    lx.expect_punct(')');
    return SetExpr::schedule(std::move(gen), std::move(sel));
  }
  if (kw == "pts") {
    lx.expect_punct('(');
    auto gen = detail::parse_generator(lx);
    lx.expect_punct(')');
    return SetExpr::points(std::move(gen));
  }
  if (kw == "union" || kw == "inter") {
    lx.expect_punct('(');
    SetExpr a = parse_set_expr(lx);
    lx.expect_punct(',');
    SetExpr b = parse_set_expr(lx);
    lx.expect_punct(')');
    return kw == "union" ? SetExpr::unite(std::move(a), std::move(b)) : SetExpr::intersect(std::move(a), std::move(b));
  }
  if (kw == "compl") {
    lx.expect_punct('(');
    SetExpr a = parse_set_expr(lx);
    lx.expect_punct(')');
    return SetExpr::complement(std::move(a));
  }
  DslLexer::fail_at(head, "unknown set constructor '" + kw + "'");
}

inline SetExpr parse_set(std::string_view text) {
  DslLexer lx(text);
  SetExpr s = parse_set_expr(lx);
  lx.expect_end();
  return s;
}

}  // namespace idealgames
