#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "tmkit/expr.hpp"

using namespace tmkit;

namespace {

struct MapScope : ex::Scope {
  std::map<std::string, long long, std::less<>> vars;
  std::optional<ex::Value> lookup(std::string_view name) const override {
    auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return ex::Value::integer_v(it->second);
  }
};

long long eval_int(const std::string& text, MapScope scope = {}) {
  ex::Value v = ex::eval(*ex::parse(text), scope);
  REQUIRE(v.kind == ex::Value::Kind::integer);
  return v.num;
}

bool eval_bool(const std::string& text, MapScope scope = {}) {
  return ex::eval(*ex::parse(text), scope).truthy();
}

}  // namespace

TEST_CASE("arithmetic and precedence") {
  CHECK(eval_int("1 + 2 * 3") == 7);
  CHECK(eval_int("(1 + 2) * 3") == 9);
  CHECK(eval_int("10 div 3") == 3);
  CHECK(eval_int("-7 div 2") == -3);  // truncation toward zero
  CHECK(eval_int("7 div -2") == -3);
  CHECK(eval_int("- 4 + 10") == 6);
}

TEST_CASE("division by zero raises") {
  CHECK_THROWS_AS(eval_int("1 div 0"), ex::EvalError);
}

TEST_CASE("comparisons and connectives") {
  CHECK(eval_bool("1 < 2"));
  CHECK(eval_bool("2 <= 2"));
  CHECK(eval_bool("3 /= 4"));
  CHECK(eval_bool("3 != 4"));
  CHECK(eval_bool("3 = 3"));
  CHECK(eval_bool("not (1 = 2)"));
  CHECK(eval_bool("1 = 1 and 2 = 2"));
  CHECK(eval_bool("1 = 2 or 2 = 2"));
  CHECK_FALSE(eval_bool("1 = 2 and 1 div 0 = 0"));  // short-circuit
  CHECK(eval_bool("1 = 1 or 1 div 0 = 0"));
}

TEST_CASE("nat membership") {
  CHECK(eval_bool("0 in NAT"));
  CHECK(eval_bool("5 in NAT"));
  CHECK_FALSE(eval_bool("-1 in NAT"));
  MapScope s;
  s.vars["n"] = 3;
  CHECK(eval_bool("n in NAT", s));
}

TEST_CASE("name resolution") {
  MapScope s;
  s.vars["a"] = 2;
  s.vars["d"] = 5;
  CHECK(eval_int("a + 1", s) == 3);
  CHECK(eval_bool("a + 1 <= d", s));
  CHECK_THROWS_AS(eval_int("missing + 1", s), ex::EvalError);
}

TEST_CASE("parse errors carry an offset") {
  CHECK_THROWS_AS(ex::parse("1 +"), ex::ParseError);
  CHECK_THROWS_AS(ex::parse("(1 + 2"), ex::ParseError);
  CHECK_THROWS_AS(ex::parse("1 2"), ex::ParseError);
  CHECK_THROWS_AS(ex::parse("$"), ex::ParseError);
}

TEST_CASE("collect_names finds each name once, in order") {
  std::vector<std::string> names;
  ex::collect_names(*ex::parse("a + b <= d and a = 0"), names);
  CHECK(names == std::vector<std::string>{"a", "b", "d"});
}

TEST_CASE("normalize_text trims and collapses") {
  CHECK(ex::normalize_text("  a  +   b ") == "a + b");
  CHECK(ex::normalize_text("\ta+b\n") == "a+b");
  CHECK(ex::normalize_text(ex::normalize_text(" x  <=  d ")) == "x <= d");
}
