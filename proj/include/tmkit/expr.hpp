#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tmkit::ex {

// Runtime value: an integer, a boolean, or an element of an enumerated set.
struct Value {
  enum class Kind : uint8_t { integer, boolean, element };
  Kind kind = Kind::integer;
  long long num = 0;  // integer value, 0/1 for booleans, element index for enums
  int set = -1;       // enumerated set id when kind == element

  static Value integer_v(long long v) { return Value{Kind::integer, v, -1}; }
  static Value boolean_v(bool b) { return Value{Kind::boolean, b ? 1 : 0, -1}; }
  static Value element_v(int set_id, long long index) {
    return Value{Kind::element, index, set_id};
  }
  bool truthy() const;  // value of a boolean; throws EvalError otherwise
  bool operator==(const Value&) const = default;
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  size_t offset;  // byte offset into the expression text
  ParseError(const std::string& msg, size_t off)
      : std::runtime_error(msg), offset(off) {}
};

enum class BinOp : uint8_t { add, sub, mul, idiv, eq, ne, lt, le, gt, ge, conj, disj };
enum class UnOp : uint8_t { neg, lnot };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Expression tree over integer arithmetic (+ - * div), comparisons,
// boolean connectives, `in NAT`, and membership in a named enumerated set.
struct Expr {
  enum class Node : uint8_t { literal, name, unary, binary, in_nat, in_set };
  Node node = Node::literal;
  Value lit;
  std::string id;  // name nodes; set name for in_set
  UnOp uop{};
  BinOp bop{};
  ExprPtr lhs, rhs;
};

// Name resolution hook for evaluation: variables, constants, enum elements.
class Scope {
 public:
  virtual ~Scope() = default;
  virtual std::optional<Value> lookup(std::string_view name) const = 0;
  virtual std::optional<int> set_id(std::string_view /*name*/) const { return std::nullopt; }
};

// Accepted operator spellings: = == /= != < <= > >= + - * div and && & or || | not !
// `in NAT` tests non-negative integers; `in <Set>` tests enumerated membership.
ExprPtr parse(std::string_view text);  // throws ParseError

// Conjunction and disjunction short-circuit left to right.
Value eval(const Expr& e, const Scope& scope);  // throws EvalError

// Names occurring in an expression, in first-occurrence order.
void collect_names(const Expr& e, std::vector<std::string>& out);

// Trim and collapse internal whitespace; the canonical stored form of
// guard/monitor/label texts.
std::string normalize_text(std::string_view text);

}  // namespace tmkit::ex
