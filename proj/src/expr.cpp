#include "tmkit/expr.hpp"

#include <cctype>
#include <vector>

namespace tmkit::ex {

bool Value::truthy() const {
  if (kind != Kind::boolean) throw EvalError("expected a boolean value");
  return num != 0;
}

namespace {

struct Token {
  enum class Type { integer, ident, op, end };
  Type type = Type::end;
  std::string text;
  long long num = 0;
  size_t offset = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) pos_++;
    tok_ = Token{};
    tok_.offset = pos_;
    if (pos_ >= text_.size()) return;
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) pos_++;
      tok_.type = Token::Type::integer;
      tok_.text = std::string(text_.substr(start, pos_ - start));
      tok_.num = std::stoll(tok_.text);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        pos_++;
      tok_.type = Token::Type::ident;
      tok_.text = std::string(text_.substr(start, pos_ - start));
      return;
    }
    // multi-char operators first
    static const char* two[] = {"<=", ">=", "/=", "!=", "==", "&&", "||"};
    for (const char* t : two) {
      if (text_.substr(pos_).starts_with(t)) {
        tok_.type = Token::Type::op;
        tok_.text = t;
        pos_ += 2;
        return;
      }
    }
    static const std::string one = "+-*()<>=&|!";
    if (one.find(c) != std::string::npos) {
      tok_.type = Token::Type::op;
      tok_.text = std::string(1, c);
      pos_++;
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "' in expression", pos_);
  }

  std::string_view text_;
  size_t pos_ = 0;
  Token tok_;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lex_(text) {}

  ExprPtr parse_all() {
    ExprPtr e = parse_or();
    if (lex_.peek().type != Token::Type::end)
      throw ParseError("trailing input after expression: '" + lex_.peek().text + "'",
                       lex_.peek().offset);
    return e;
  }

 private:
  static ExprPtr mk_binary(BinOp op, ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->node = Expr::Node::binary;
    e->bop = op;
    e->lhs = std::move(l);
    e->rhs = std::move(r);
    return e;
  }

  bool at_op(std::string_view s) const {
    return lex_.peek().type == Token::Type::op && lex_.peek().text == s;
  }
  bool at_ident(std::string_view s) const {
    return lex_.peek().type == Token::Type::ident && lex_.peek().text == s;
  }

  ExprPtr parse_or() {
    ExprPtr e = parse_and();
    while (at_ident("or") || at_op("||") || at_op("|")) {
      lex_.take();
      e = mk_binary(BinOp::disj, e, parse_and());
    }
    return e;
  }

  ExprPtr parse_and() {
    ExprPtr e = parse_not();
    while (at_ident("and") || at_op("&&") || at_op("&")) {
      lex_.take();
      e = mk_binary(BinOp::conj, e, parse_not());
    }
    return e;
  }

  ExprPtr parse_not() {
    if (at_ident("not") || at_op("!")) {
      lex_.take();
      auto e = std::make_shared<Expr>();
      e->node = Expr::Node::unary;
      e->uop = UnOp::lnot;
      e->lhs = parse_not();
      return e;
    }
    return parse_rel();
  }

  ExprPtr parse_rel() {
    ExprPtr e = parse_add();
    if (lex_.peek().type == Token::Type::op) {
      const std::string& t = lex_.peek().text;
      BinOp op;
      if (t == "=" || t == "==") op = BinOp::eq;
      else if (t == "/=" || t == "!=") op = BinOp::ne;
      else if (t == "<") op = BinOp::lt;
      else if (t == "<=") op = BinOp::le;
      else if (t == ">") op = BinOp::gt;
      else if (t == ">=") op = BinOp::ge;
      else return e;
      lex_.take();
      return mk_binary(op, e, parse_add());
    }
    if (at_ident("in")) {
      lex_.take();
      Token set = lex_.take();
      if (set.type != Token::Type::ident)
        throw ParseError("expected NAT or a set name after 'in'", set.offset);
      auto m = std::make_shared<Expr>();
      m->node = set.text == "NAT" ? Expr::Node::in_nat : Expr::Node::in_set;
      m->id = set.text;
      m->lhs = e;
      return m;
    }
    return e;
  }

  ExprPtr parse_add() {
    ExprPtr e = parse_mul();
    while (at_op("+") || at_op("-")) {
      BinOp op = lex_.take().text == "+" ? BinOp::add : BinOp::sub;
      e = mk_binary(op, e, parse_mul());
    }
    return e;
  }

  ExprPtr parse_mul() {
    ExprPtr e = parse_unary();
    while (at_op("*") || at_ident("div")) {
      BinOp op = lex_.take().text == "*" ? BinOp::mul : BinOp::idiv;
      e = mk_binary(op, e, parse_unary());
    }
    return e;
  }

  ExprPtr parse_unary() {
    if (at_op("-")) {
      lex_.take();
      auto e = std::make_shared<Expr>();
      e->node = Expr::Node::unary;
      e->uop = UnOp::neg;
      e->lhs = parse_unary();
      return e;
    }
    return parse_primary();
  }

  ExprPtr parse_primary() {
    Token t = lex_.take();
    if (t.type == Token::Type::integer) {
      auto e = std::make_shared<Expr>();
      e->node = Expr::Node::literal;
      e->lit = Value::integer_v(t.num);
      return e;
    }
    if (t.type == Token::Type::ident) {
      if (t.text == "true" || t.text == "false") {
        auto e = std::make_shared<Expr>();
        e->node = Expr::Node::literal;
        e->lit = Value::boolean_v(t.text == "true");
        return e;
      }
      auto e = std::make_shared<Expr>();
      e->node = Expr::Node::name;
      e->id = t.text;
      return e;
    }
    if (t.type == Token::Type::op && t.text == "(") {
      ExprPtr e = parse_or();
      if (!at_op(")")) throw ParseError("expected ')'", lex_.peek().offset);
      lex_.take();
      return e;
    }
    throw ParseError("expected a value, name, or '('", t.offset);
  }

  Lexer lex_;
};

long long require_int(const Value& v, const char* what) {
  if (v.kind != Value::Kind::integer)
    throw EvalError(std::string("expected an integer operand for ") + what);
  return v.num;
}

}  // namespace

ExprPtr parse(std::string_view text) { return Parser(text).parse_all(); }

Value eval(const Expr& e, const Scope& scope) {
  switch (e.node) {
    case Expr::Node::literal:
      return e.lit;
    case Expr::Node::name: {
      auto v = scope.lookup(e.id);
      if (!v) throw EvalError("unknown name '" + e.id + "'");
      return *v;
    }
    case Expr::Node::unary: {
      Value v = eval(*e.lhs, scope);
      if (e.uop == UnOp::neg) return Value::integer_v(-require_int(v, "negation"));
      return Value::boolean_v(!v.truthy());
    }
    case Expr::Node::in_nat: {
      Value v = eval(*e.lhs, scope);
      return Value::boolean_v(v.kind == Value::Kind::integer && v.num >= 0);
    }
    case Expr::Node::in_set: {
      auto sid = scope.set_id(e.id);
      if (!sid) throw EvalError("unknown set '" + e.id + "'");
      Value v = eval(*e.lhs, scope);
      return Value::boolean_v(v.kind == Value::Kind::element && v.set == *sid);
    }
    case Expr::Node::binary:
      break;
  }
  // short-circuit connectives evaluate the right side lazily
  if (e.bop == BinOp::conj) {
    if (!eval(*e.lhs, scope).truthy()) return Value::boolean_v(false);
    return Value::boolean_v(eval(*e.rhs, scope).truthy());
  }
  if (e.bop == BinOp::disj) {
    if (eval(*e.lhs, scope).truthy()) return Value::boolean_v(true);
    return Value::boolean_v(eval(*e.rhs, scope).truthy());
  }
  Value a = eval(*e.lhs, scope);
  Value b = eval(*e.rhs, scope);
  switch (e.bop) {
    case BinOp::add: return Value::integer_v(require_int(a, "+") + require_int(b, "+"));
    case BinOp::sub: return Value::integer_v(require_int(a, "-") - require_int(b, "-"));
    case BinOp::mul: return Value::integer_v(require_int(a, "*") * require_int(b, "*"));
    case BinOp::idiv: {
      long long num = require_int(a, "div");
      long long den = require_int(b, "div");
      if (den == 0) throw EvalError("division by zero");
      return Value::integer_v(num / den);  // truncates toward zero
    }
    case BinOp::eq:
    case BinOp::ne: {
      if (a.kind != b.kind || (a.kind == Value::Kind::element && a.set != b.set))
        throw EvalError("comparison of values of different types");
      bool eq = a == b;
      return Value::boolean_v(e.bop == BinOp::eq ? eq : !eq);
    }
    case BinOp::lt: return Value::boolean_v(require_int(a, "<") < require_int(b, "<"));
    case BinOp::le: return Value::boolean_v(require_int(a, "<=") <= require_int(b, "<="));
    case BinOp::gt: return Value::boolean_v(require_int(a, ">") > require_int(b, ">"));
    case BinOp::ge: return Value::boolean_v(require_int(a, ">=") >= require_int(b, ">="));
    default: throw EvalError("bad operator");
  }
}

void collect_names(const Expr& e, std::vector<std::string>& out) {
  switch (e.node) {
    case Expr::Node::name:
      for (const auto& n : out)
        if (n == e.id) return;
      out.push_back(e.id);
      return;
    case Expr::Node::literal:
      return;
    default:
      if (e.lhs) collect_names(*e.lhs, out);
      if (e.rhs) collect_names(*e.rhs, out);
  }
}

std::string normalize_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace tmkit::ex
