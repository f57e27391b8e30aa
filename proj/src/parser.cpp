#include "anonql/parser.hpp"

#include <charconv>
#include <set>

#include "anonql/error.hpp"
#include "anonql/lexer.hpp"

namespace anonql {

namespace {

const std::set<std::string, std::less<>>& reserved_words() {
  static const std::set<std::string, std::less<>> words = {
      "select", "distinct", "from",  "where",   "group", "by",      "having", "order",
      "limit",  "offset",   "and",   "or",      "not",   "in",      "like",   "ilike",
      "escape", "between",  "is",    "null",    "as",    "asc",     "desc",   "true",
      "false",  "cast",     "extract", "leading", "trailing", "both", "for",  "join",
      "inner",  "outer",    "cross", "natural", "on",    "union",   "all"};
  return words;
}

bool is_reserved(std::string_view word) { return reserved_words().count(word) > 0; }

class Parser {
 public:
  explicit Parser(std::string_view sql) : tokens_(lex(sql)) {}

  QueryAst parse() {
    QueryAst q = parse_select();
    if (!at_end()) fail("unexpected trailing input");
    return q;
  }

 private:
  std::vector<Token> tokens_;
  size_t pos_ = 0;

  const Token& peek(size_t ahead = 0) const {
    size_t i = pos_ + ahead;
    return i < tokens_.size() ? tokens_[i] : tokens_.back();
  }
  const Token& advance() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
  bool at_end() const { return peek().kind == TokenKind::End; }

  [[noreturn]] void fail(const std::string& message, ErrorCode code = ErrorCode::SyntaxError) const {
    const Token& t = peek();
    throw Error(code, message, t.line, t.col);
  }

  bool accept_ident(std::string_view word) {
    if (peek().ident(word)) {
      advance();
      return true;
    }
    return false;
  }
  bool accept_symbol(std::string_view sym) {
    if (peek().symbol(sym)) {
      advance();
      return true;
    }
    return false;
  }
  void expect_ident(std::string_view word) {
    if (!accept_ident(word)) fail("expected '" + std::string(word) + "'");
  }
  void expect_symbol(std::string_view sym) {
    if (!accept_symbol(sym)) fail("expected '" + std::string(sym) + "'");
  }

  QueryAst parse_select() {
    expect_ident("select");
    QueryAst q;
    if (accept_ident("distinct")) q.distinct = true;
    q.items.push_back(parse_select_item());
    while (accept_symbol(",")) q.items.push_back(parse_select_item());
    expect_ident("from");
    parse_from(q);
    if (accept_ident("where")) parse_condition_list(q.where);
    if (peek().ident("group")) {
      advance();
      expect_ident("by");
      q.group_by.push_back(parse_group_key());
      while (accept_symbol(",")) q.group_by.push_back(parse_group_key());
    }
    if (accept_ident("having")) parse_condition_list(q.having);
    if (peek().ident("order")) {
      advance();
      expect_ident("by");
      q.order_by.push_back(parse_order_key());
      while (accept_symbol(",")) q.order_by.push_back(parse_order_key());
    }
    if (accept_ident("limit")) q.limit = parse_nonnegative_int("limit");
    if (accept_ident("offset")) q.offset = parse_nonnegative_int("offset");
    return q;
  }

  void parse_from(QueryAst& q) {
    if (accept_symbol("(")) {
      q.subquery = std::make_unique<QueryAst>(parse_select());
      expect_symbol(")");
      accept_ident("as");
      if (peek().kind == TokenKind::Ident && !is_reserved(peek().text)) {
        q.from_alias = advance().text;
      }
    } else {
      if (peek().kind != TokenKind::Ident || is_reserved(peek().text)) fail("expected table name");
      q.from_table = advance().text;
      if (accept_ident("as")) {
        if (peek().kind != TokenKind::Ident || is_reserved(peek().text))
          fail("expected table alias");
        q.from_alias = advance().text;
      } else if (peek().kind == TokenKind::Ident && !is_reserved(peek().text) &&
                 !(peek(1).ident("join"))) {
        q.from_alias = advance().text;
      }
    }
    check_no_join();
  }

  void check_no_join() {
    const Token& t = peek();
    if (t.symbol(","))
      fail("multiple tables in FROM are not supported", ErrorCode::JoinNotAllowed);
    if (t.kind == TokenKind::Ident &&
        (t.text == "join" || t.text == "inner" || t.text == "outer" || t.text == "cross" ||
         t.text == "natural" || t.text == "union" ||
         ((t.text == "left" || t.text == "right" || t.text == "full") &&
          (peek(1).ident("join") || peek(1).ident("outer")))))
      fail("JOIN is not supported", ErrorCode::JoinNotAllowed);
  }

  SelectItem parse_select_item() {
    SelectItem item;
    if (peek().symbol("*")) {
      advance();
      item.star = true;
      return item;
    }
    item.expr = parse_expr();
    if (accept_ident("as")) {
      if (peek().kind != TokenKind::Ident || is_reserved(peek().text)) fail("expected alias");
      item.alias = advance().text;
    } else if (peek().kind == TokenKind::Ident && !is_reserved(peek().text)) {
      item.alias = advance().text;
    }
    return item;
  }

  GroupKey parse_group_key() {
    GroupKey key;
    if (peek().kind == TokenKind::Number && peek().text.find_first_of(".eE") == std::string::npos) {
      key.position = static_cast<int>(parse_nonnegative_int("group by position"));
      if (key.position < 1) fail("group by position must be >= 1");
      return key;
    }
    key.expr = parse_expr();
    return key;
  }

  OrderKey parse_order_key() {
    OrderKey key;
    if (peek().kind == TokenKind::Number && peek().text.find_first_of(".eE") == std::string::npos) {
      key.position = static_cast<int>(parse_nonnegative_int("order by position"));
      if (key.position < 1) fail("order by position must be >= 1");
    } else {
      key.expr = parse_expr();
    }
    if (accept_ident("desc"))
      key.ascending = false;
    else
      accept_ident("asc");
    return key;
  }

  int64_t parse_nonnegative_int(const std::string& what) {
    if (peek().kind != TokenKind::Number) fail("expected integer for " + what);
    const std::string& text = advance().text;
    int64_t v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
      fail("expected integer for " + what);
    return v;
  }

  void parse_condition_list(std::vector<ConditionAst>& out) {
    out.push_back(parse_condition());
    while (true) {
      if (peek().ident("or")) fail("OR is not supported", ErrorCode::OrNotAllowed);
      if (accept_ident("and")) {
        out.push_back(parse_condition());
        continue;
      }
      break;
    }
  }

  ConditionAst parse_condition() {
    ConditionAst cond;
    const Token& start = peek();
    cond.line = start.line;
    cond.col = start.col;
    cond.lhs = parse_expr();
    bool negated = accept_ident("not");
    const Token& t = peek();
    if (t.kind == TokenKind::Symbol && !negated) {
      if (accept_symbol("=")) cond.op = CompOp::Eq;
      else if (accept_symbol("<>")) cond.op = CompOp::Ne;
      else if (accept_symbol("<=")) cond.op = CompOp::Le;
      else if (accept_symbol(">=")) cond.op = CompOp::Ge;
      else if (accept_symbol("<")) cond.op = CompOp::Lt;
      else if (accept_symbol(">")) cond.op = CompOp::Gt;
      else fail("expected comparison operator");
      cond.rhs.push_back(parse_expr());
      return cond;
    }
    if (accept_ident("between")) {
      cond.op = negated ? CompOp::NotBetween : CompOp::Between;
      cond.rhs.push_back(parse_expr());
      expect_ident("and");
      cond.rhs.push_back(parse_expr());
      return cond;
    }
    if (accept_ident("in")) {
      cond.op = negated ? CompOp::NotIn : CompOp::In;
      expect_symbol("(");
      cond.rhs.push_back(parse_expr());
      while (accept_symbol(",")) cond.rhs.push_back(parse_expr());
      expect_symbol(")");
      return cond;
    }
    if (peek().ident("like") || peek().ident("ilike")) {
      bool ci = advance().text == "ilike";
      cond.op = negated ? (ci ? CompOp::NotILike : CompOp::NotLike)
                        : (ci ? CompOp::ILike : CompOp::Like);
      cond.rhs.push_back(parse_expr());
      if (accept_ident("escape")) {
        if (peek().kind != TokenKind::String || peek().text.size() != 1)
          fail("ESCAPE requires a single-character string");
        cond.escape = advance().text[0];
      }
      return cond;
    }
    if (!negated && accept_ident("is")) {
      bool not_null = accept_ident("not");
      expect_ident("null");
      cond.op = not_null ? CompOp::IsNotNull : CompOp::IsNull;
      return cond;
    }
    fail("expected condition operator");
  }

  ExprPtr parse_expr() { return parse_additive(); }

  ExprPtr make_binary(BinOp op, ExprPtr a, ExprPtr b) {
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::Binary;
    e->op = op;
    e->line = a->line;
    e->col = a->col;
    e->args.push_back(std::move(a));
    e->args.push_back(std::move(b));
    return e;
  }

  ExprPtr parse_additive() {
    ExprPtr lhs = parse_multiplicative();
    while (true) {
      if (accept_symbol("+"))
        lhs = make_binary(BinOp::Add, std::move(lhs), parse_multiplicative());
      else if (accept_symbol("-"))
        lhs = make_binary(BinOp::Sub, std::move(lhs), parse_multiplicative());
      else
        break;
    }
    return lhs;
  }

  ExprPtr parse_multiplicative() {
    ExprPtr lhs = parse_power();
    while (true) {
      if (accept_symbol("*"))
        lhs = make_binary(BinOp::Mul, std::move(lhs), parse_power());
      else if (accept_symbol("/"))
        lhs = make_binary(BinOp::Div, std::move(lhs), parse_power());
      else if (accept_symbol("%"))
        lhs = make_binary(BinOp::Mod, std::move(lhs), parse_power());
      else
        break;
    }
    return lhs;
  }

  ExprPtr parse_power() {
    ExprPtr lhs = parse_unary();
    if (accept_symbol("^")) return make_binary(BinOp::Pow, std::move(lhs), parse_power());
    return lhs;
  }

  ExprPtr parse_unary() {
    if (peek().symbol("-")) {
      const Token& t = advance();
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Unary;
      e->line = t.line;
      e->col = t.col;
      e->args.push_back(parse_unary());
      return e;
    }
    return parse_postfix();
  }

  ValueType parse_type_name() {
    if (peek().kind != TokenKind::Ident) fail("expected type name");
    const Token& t = advance();
    auto type = type_from_name(t.text);
    if (!type)
      throw Error(ErrorCode::UnsupportedCast, "unsupported cast target '" + t.text + "'", t.line,
                  t.col);
    return *type;
  }

  ExprPtr parse_postfix() {
    ExprPtr e = parse_primary();
    while (accept_symbol("::")) {
      auto cast = std::make_unique<Expr>();
      cast->kind = ExprKind::Cast;
      cast->line = e->line;
      cast->col = e->col;
      cast->cast_type = parse_type_name();
      cast->args.push_back(std::move(e));
      e = std::move(cast);
    }
    return e;
  }

  ExprPtr parse_function_named(const Token& name_tok, const std::string& name) {
    auto e = std::make_unique<Expr>();
    e->line = name_tok.line;
    e->col = name_tok.col;
    e->fn = name;
    if (is_aggregate_name(name)) {
      e->kind = ExprKind::Aggregate;
      if (accept_symbol("*")) {
        if (name != "count" && name != "count_noise")
          fail("'*' argument is only valid for count");
        auto star = std::make_unique<Expr>();
        star->kind = ExprKind::Star;
        e->args.push_back(std::move(star));
      } else {
        if (accept_ident("distinct")) e->distinct = true;
        e->args.push_back(parse_expr());
      }
      expect_symbol(")");
      return e;
    }
    e->kind = ExprKind::Function;
    if (!accept_symbol(")")) {
      e->args.push_back(parse_expr());
      while (accept_symbol(",")) e->args.push_back(parse_expr());
      expect_symbol(")");
    }
    return e;
  }

  ExprPtr parse_trim(const Token& name_tok) {
    // All trim spellings canonicalize to btrim/ltrim/rtrim at parse time.
    std::string fn = "btrim";
    ExprPtr chars;
    ExprPtr subject;
    if (accept_ident("leading")) fn = "ltrim";
    else if (accept_ident("trailing")) fn = "rtrim";
    else accept_ident("both");
    if (accept_ident("from")) {
      subject = parse_expr();
    } else {
      ExprPtr first = parse_expr();
      if (accept_ident("from")) {
        chars = std::move(first);
        subject = parse_expr();
      } else if (accept_symbol(",")) {
        subject = std::move(first);
        chars = parse_expr();
      } else {
        subject = std::move(first);
      }
    }
    expect_symbol(")");
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::Function;
    e->fn = fn;
    e->line = name_tok.line;
    e->col = name_tok.col;
    e->args.push_back(std::move(subject));
    if (chars) e->args.push_back(std::move(chars));
    return e;
  }

  ExprPtr parse_substring(const Token& name_tok) {
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::Function;
    e->fn = "substring";
    e->line = name_tok.line;
    e->col = name_tok.col;
    e->args.push_back(parse_expr());
    if (accept_symbol(",")) {
      e->args.push_back(parse_expr());
      if (accept_symbol(",")) e->args.push_back(parse_expr());
    } else {
      ExprPtr from;
      ExprPtr count;
      if (accept_ident("from")) from = parse_expr();
      if (accept_ident("for")) count = parse_expr();
      if (!from && !count) fail("substring requires FROM or FOR");
      if (!from) from = make_literal(Value(int64_t{1}), name_tok.line, name_tok.col);
      e->args.push_back(std::move(from));
      if (count) e->args.push_back(std::move(count));
    }
    expect_symbol(")");
    return e;
  }

  ExprPtr parse_extract(const Token& name_tok) {
    if (peek().kind != TokenKind::Ident) fail("expected datetime field");
    std::string field = advance().text;
    static const std::set<std::string, std::less<>> fields = {
        "year", "quarter", "month", "day", "hour", "minute", "second"};
    if (!fields.count(field))
      throw Error(ErrorCode::UnknownFunction, "unknown extract field '" + field + "'",
                  name_tok.line, name_tok.col);
    expect_ident("from");
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::Function;
    e->fn = field;
    e->line = name_tok.line;
    e->col = name_tok.col;
    e->args.push_back(parse_expr());
    expect_symbol(")");
    return e;
  }

  ExprPtr parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::Number: {
        advance();
        bool real = t.text.find_first_of(".eE") != std::string::npos;
        if (!real) {
          int64_t v = 0;
          auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
          if (res.ec == std::errc()) return make_literal(Value(v), t.line, t.col);
        }
        double d = 0;
        std::from_chars(t.text.data(), t.text.data() + t.text.size(), d);
        return make_literal(Value(d), t.line, t.col);
      }
      case TokenKind::String:
        advance();
        return make_literal(Value(t.text), t.line, t.col);
      case TokenKind::Symbol:
        if (t.text == "(") {
          advance();
          ExprPtr e = parse_expr();
          expect_symbol(")");
          return e;
        }
        fail("unexpected '" + t.text + "'");
      case TokenKind::Ident: {
        if (t.text == "true" || t.text == "false") {
          advance();
          return make_literal(Value(t.text == "true"), t.line, t.col);
        }
        if (t.text == "null") {
          advance();
          return make_literal(Value(), t.line, t.col);
        }
        if (t.text == "cast") {
          advance();
          expect_symbol("(");
          auto e = std::make_unique<Expr>();
          e->kind = ExprKind::Cast;
          e->line = t.line;
          e->col = t.col;
          e->args.push_back(parse_expr());
          if (!accept_symbol(",")) expect_ident("as");
          e->cast_type = parse_type_name();
          expect_symbol(")");
          return e;
        }
        if (peek(1).symbol("(")) {
          Token name_tok = advance();
          advance();  // '('
          std::string name = name_tok.text;
          if (name == "lcase") name = "lower";
          if (name == "ucase") name = "upper";
          if (name == "trim") return parse_trim(name_tok);
          if (name == "substring") return parse_substring(name_tok);
          if (name == "extract") return parse_extract(name_tok);
          if (!is_aggregate_name(name) && !is_known_function(name))
            throw Error(ErrorCode::UnknownFunction, "unknown function '" + name + "'",
                        name_tok.line, name_tok.col);
          return parse_function_named(name_tok, name);
        }
        if (is_reserved(t.text)) fail("unexpected keyword '" + t.text + "'");
        advance();
        std::string first = t.text;
        if (accept_symbol(".")) {
          if (peek().kind != TokenKind::Ident || is_reserved(peek().text))
            fail("expected column name after '.'");
          auto e = make_column(advance().text, t.line, t.col);
          e->table = first;
          return e;
        }
        return make_column(std::move(first), t.line, t.col);
      }
      case TokenKind::End: fail("unexpected end of input");
    }
    fail("unexpected token");
  }
};

}  // namespace

QueryAst parse_query(std::string_view sql) { return Parser(sql).parse(); }

}  // namespace anonql
