#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "tmkit/tm_core.hpp"

namespace tmkit {

struct SourceText {
  std::string text;
  std::string origin = "<memory>";
};

struct TmParseError : std::runtime_error {
  int line;    // 1-based
  int column;  // 1-based
  std::vector<std::string> expected;
  TmParseError(const std::string& msg, int l, int c, std::vector<std::string> exp = {})
      : std::runtime_error(msg), line(l), column(c), expected(std::move(exp)) {}
};

// Parse the textual model language. Items: `thimac NAME { ... }` blocks,
// `flow` dotted chains, `trigger A --> B [: payload-expr]`,
// `var NAME [= INT]`, `guard STAGE : expr ? TARGET : TARGET` ("_" = none),
// `event ID = { STAGE, ... }`; `#` starts a comment. Paths create thimacs
// and stages on demand; the result is not yet validated.
Model parse(const SourceText& src);

struct SerializeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Canonical form: thimacs in name order with their internal flows as
// maximal chains, cross-thimac flows after the blocks, then triggers,
// guards, and event declarations. Deterministic; parse . serialize is the
// identity up to internal ids.
SourceText serialize(const Model& m);  // throws SerializeError on invalid models

struct DotOptions {
  std::string graph_name = "tm";
  bool edge_labels = true;
};

// Directed-graph description: one cluster per thimac (nested by
// containment), solid edges for flows, dashed edges for triggers and guard
// branches, node labels "thimac-path.stage-kind".
SourceText export_dot(const Model& m, const DotOptions& opts = {});

}  // namespace tmkit
