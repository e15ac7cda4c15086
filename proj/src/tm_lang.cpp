#include "tmkit/tm_lang.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace tmkit {

namespace {

bool reserved_word(const std::string& w) {
  static const std::set<std::string> kReserved = {
      "thimac", "flow",   "trigger", "var",    "guard",  "event",
      "create", "process", "release", "arrive", "accept", "receive",
      "transfer", "input", "output"};
  return kReserved.count(w) != 0;
}

struct Tok {
  enum class Kind { ident, integer, punct, eof };
  Kind kind = Kind::eof;
  std::string text;
  long long num = 0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Tok& cur() const { return cur_; }

  Tok take() {
    Tok t = cur_;
    advance();
    return t;
  }

  // Raw read from the start of the current token up to (and consuming) the
  // stop character; used for guard predicates.
  std::string raw_until(char stop) {
    size_t start = cur_start_;
    size_t p = start;
    while (p < text_.size() && text_[p] != stop) p++;
    if (p >= text_.size())
      throw TmParseError(std::string("expected '") + stop + "'", cur_.line, cur_.col,
                         {std::string(1, stop)});
    std::string out(text_.substr(start, p - start));
    reposition(p + 1);
    return out;
  }

  // Raw read to end of line (or a comment); used for trigger labels.
  std::string raw_line() {
    size_t start = cur_start_;
    size_t p = start;
    while (p < text_.size() && text_[p] != '\n' && text_[p] != '#') p++;
    std::string out(text_.substr(start, p - start));
    reposition(p);
    return out;
  }

 private:
  void reposition(size_t new_pos) {
    for (size_t q = pos_at_cur_; q < new_pos; q++) bump(text_[q]);
    pos_ = new_pos;
    advance();
  }

  void bump(char c) {
    if (c == '\n') {
      line_++;
      col_ = 1;
    } else {
      col_++;
    }
  }

  void advance() {
    // cur_start_ tracks the byte offset of the current token so raw reads
    // can re-scan from it
    for (;;) {
      while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        bump(text_[pos_]);
        pos_++;
      }
      if (pos_ < text_.size() && text_[pos_] == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') {
          bump(text_[pos_]);
          pos_++;
        }
        continue;
      }
      break;
    }
    cur_ = Tok{};
    cur_.line = line_;
    cur_.col = col_;
    cur_start_ = pos_;
    pos_at_cur_ = pos_;
    if (pos_ >= text_.size()) return;
    char c = text_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t s = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        bump(text_[pos_]);
        pos_++;
      }
      cur_.kind = Tok::Kind::ident;
      cur_.text = std::string(text_.substr(s, pos_ - s));
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t s = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        bump(text_[pos_]);
        pos_++;
      }
      cur_.kind = Tok::Kind::integer;
      cur_.text = std::string(text_.substr(s, pos_ - s));
      cur_.num = std::stoll(cur_.text);
      return;
    }
    if (text_.substr(pos_).starts_with("-->")) {
      cur_.kind = Tok::Kind::punct;
      cur_.text = "-->";
      for (int i = 0; i < 3; i++) bump(text_[pos_++]);
      return;
    }
    static const std::string kPunct = "{}=,?:._-";
    if (kPunct.find(c) != std::string::npos) {
      cur_.kind = Tok::Kind::punct;
      cur_.text = std::string(1, c);
      bump(c);
      pos_++;
      return;
    }
    throw TmParseError(std::string("unexpected character '") + c + "'", line_, col_);
  }

  std::string_view text_;
  size_t pos_ = 0;
  size_t cur_start_ = 0;
  size_t pos_at_cur_ = 0;
  int line_ = 1, col_ = 1;
  Tok cur_;
};

struct RawPath {
  std::vector<std::string> names;
  StageKind kind = StageKind::create;
  int line = 1, col = 1;
};

class TmParser {
 public:
  explicit TmParser(const SourceText& src) : lex_(src.text) {}

  Model parse_model() {
    while (lex_.cur().kind != Tok::Kind::eof) parse_item();
    return std::move(m_);
  }

 private:
  [[noreturn]] void err(const std::string& msg, std::vector<std::string> expected = {}) {
    throw TmParseError(msg, lex_.cur().line, lex_.cur().col, std::move(expected));
  }

  Tok expect_ident() {
    if (lex_.cur().kind != Tok::Kind::ident) err("expected a name", {"identifier"});
    return lex_.take();
  }

  Tok expect_punct(const std::string& p) {
    if (lex_.cur().kind != Tok::Kind::punct || lex_.cur().text != p)
      err("expected '" + p + "'", {p});
    return lex_.take();
  }

  bool at_punct(const std::string& p) const {
    return lex_.cur().kind == Tok::Kind::punct && lex_.cur().text == p;
  }

  void parse_item() {
    if (lex_.cur().kind != Tok::Kind::ident)
      err("expected an item", {"thimac", "flow", "trigger", "var", "guard", "event"});
    const std::string kw = lex_.cur().text;
    if (kw == "thimac") parse_thimac();
    else if (kw == "flow") parse_flow();
    else if (kw == "trigger") parse_trigger();
    else if (kw == "var") parse_var();
    else if (kw == "guard") parse_guard();
    else if (kw == "event") parse_event();
    else err("unknown item '" + kw + "'", {"thimac", "flow", "trigger", "var", "guard", "event"});
  }

  ThimacId new_thimac(const std::string& name, std::optional<ThimacId> parent) {
    Thimac t;
    t.id = static_cast<ThimacId>(m_.thimacs.size());
    t.name = name;
    t.parent = parent;
    m_.thimacs.push_back(t);
    if (parent) m_.thimacs[*parent].children.push_back(t.id);
    return t.id;
  }

  std::optional<ThimacId> find_child(std::optional<ThimacId> parent, const std::string& name) {
    if (parent) {
      for (ThimacId c : m_.thimacs[*parent].children)
        if (m_.thimacs[c].name == name) return c;
    } else {
      for (const auto& t : m_.thimacs)
        if (!t.parent && t.name == name) return t.id;
    }
    return std::nullopt;
  }

  void parse_thimac() {
    lex_.take();  // thimac
    Tok name = expect_ident();
    if (reserved_word(name.text)) err("'" + name.text + "' is a reserved word");
    std::optional<ThimacId> parent =
        scope_.empty() ? std::nullopt : std::optional<ThimacId>(scope_.back());
    ThimacId id;
    if (auto existing = find_child(parent, name.text)) id = *existing;  // reopen
    else id = new_thimac(name.text, parent);
    expect_punct("{");
    scope_.push_back(id);
    while (!at_punct("}")) {
      if (lex_.cur().kind == Tok::Kind::eof) err("unterminated thimac block", {"}"});
      parse_item();
    }
    lex_.take();
    scope_.pop_back();
  }

  RawPath parse_raw_path() {
    RawPath rp;
    rp.line = lex_.cur().line;
    rp.col = lex_.cur().col;
    for (;;) {
      Tok seg = expect_ident();
      if (seg.text == "transfer") {
        expect_punct(".");
        Tok dir = expect_ident();
        if (dir.text != "input" && dir.text != "output")
          err("expected input or output after transfer", {"input", "output"});
        rp.kind = dir.text == "input" ? StageKind::transfer_in : StageKind::transfer_out;
        return rp;
      }
      if (auto k = stage_kind_from(seg.text)) {
        rp.kind = *k;
        return rp;
      }
      if (reserved_word(seg.text)) err("'" + seg.text + "' cannot name a thimac");
      rp.names.push_back(seg.text);
      expect_punct(".");
    }
  }

  ThimacId resolve_thimac_chain(const RawPath& rp, bool create) {
    std::optional<ThimacId> cur;
    size_t idx = 0;
    if (rp.names.empty()) {
      if (scope_.empty())
        throw TmParseError("path names no thimac", rp.line, rp.col);
      return scope_.back();
    }
    // the first segment resolves lexically: the enclosing thimacs (self or
    // child), then the root scope
    const std::string& first = rp.names[0];
    for (int si = static_cast<int>(scope_.size()) - 1; si >= 0 && !cur; si--) {
      ThimacId t = scope_[si];
      if (m_.thimacs[t].name == first) cur = t;
      else if (auto c = find_child(t, first)) cur = c;
    }
    if (!cur) cur = find_child(std::nullopt, first);
    if (!cur) {
      if (!create)
        throw TmParseError("UNKNOWN_SEGMENT '" + first + "'", rp.line, rp.col);
      cur = new_thimac(first, scope_.empty() ? std::nullopt
                                             : std::optional<ThimacId>(scope_.back()));
    }
    for (idx = 1; idx < rp.names.size(); idx++) {
      auto c = find_child(cur, rp.names[idx]);
      if (!c) {
        if (!create)
          throw TmParseError("UNKNOWN_SEGMENT '" + rp.names[idx] + "'", rp.line, rp.col);
        c = new_thimac(rp.names[idx], cur);
      }
      cur = c;
    }
    return *cur;
  }

  StageId resolve_stage(const RawPath& rp, bool create) {
    ThimacId t = resolve_thimac_chain(rp, create);
    if (auto s = m_.stage_of(t, rp.kind)) return *s;
    if (!create)
      throw TmParseError("UNKNOWN_SEGMENT no " + std::string(to_string(rp.kind)) +
                             " stage in thimac " + m_.thimacs[t].name,
                         rp.line, rp.col);
    Stage st;
    st.id = static_cast<StageId>(m_.stages.size());
    st.kind = rp.kind;
    st.owner = t;
    m_.stages.push_back(st);
    m_.thimacs[t].stages.push_back(st.id);
    return st.id;
  }

  void parse_flow() {
    lex_.take();  // flow
    std::vector<StageId> chain;
    chain.push_back(resolve_stage(parse_raw_path(), true));
    while (at_punct(".")) {
      lex_.take();
      chain.push_back(resolve_stage(parse_raw_path(), true));
    }
    for (size_t i = 0; i + 1 < chain.size(); i++) {
      FlowArc arc{chain[i], chain[i + 1]};
      bool dup = false;
      for (const auto& f : m_.flows) dup |= f.from == arc.from && f.to == arc.to;
      if (!dup) m_.flows.push_back(arc);
    }
  }

  void parse_trigger() {
    lex_.take();  // trigger
    StageId from = resolve_stage(parse_raw_path(), true);
    expect_punct("-->");
    StageId to = resolve_stage(parse_raw_path(), true);
    std::string label;
    if (at_punct(":")) {
      lex_.take();
      label = ex::normalize_text(lex_.raw_line());
      try {
        ex::parse(label);
      } catch (const ex::ParseError& e) {
        err(std::string("bad trigger label: ") + e.what());
      }
    }
    for (const auto& t : m_.triggers)
      if (t.from == from && t.to == to && t.label == label) return;
    m_.triggers.push_back({from, to, label});
  }

  void parse_var() {
    lex_.take();  // var
    Tok name = expect_ident();
    if (reserved_word(name.text)) err("'" + name.text + "' is a reserved word");
    Variable v;
    v.name = name.text;
    if (at_punct("=")) {
      lex_.take();
      bool neg = false;
      if (at_punct("-")) {
        lex_.take();
        neg = true;
      }
      if (lex_.cur().kind != Tok::Kind::integer) err("expected an integer", {"integer"});
      v.init = lex_.take().num * (neg ? -1 : 1);
      v.has_default = true;
    }
    m_.variables.push_back(v);
  }

  std::optional<StageId> parse_guard_target() {
    if (lex_.cur().kind == Tok::Kind::ident && lex_.cur().text == "_") {
      lex_.take();
      return std::nullopt;
    }
    return resolve_stage(parse_raw_path(), true);
  }

  void parse_guard() {
    Tok kw = lex_.take();  // guard
    StageId stage = resolve_stage(parse_raw_path(), true);
    expect_punct(":");
    std::string text = ex::normalize_text(lex_.raw_until('?'));
    GuardSpec spec;
    spec.predicate_text = text;
    try {
      spec.predicate = ex::parse(text);
    } catch (const ex::ParseError& e) {
      throw TmParseError(std::string("bad guard predicate: ") + e.what(), kw.line, kw.col);
    }
    spec.on_true = parse_guard_target();
    expect_punct(":");
    spec.on_false = parse_guard_target();
    if (m_.stages[stage].guard)
      throw TmParseError("duplicate guard on " + m_.stage_path(stage), kw.line, kw.col);
    m_.stages[stage].guard = std::move(spec);
  }

  void parse_event() {
    lex_.take();  // event
    Tok id = expect_ident();
    for (const auto& e : m_.declared_events)
      if (e.id == id.text) err("duplicate event '" + id.text + "'");
    expect_punct("=");
    expect_punct("{");
    EventDecl decl;
    decl.id = id.text;
    decl.stages.push_back(resolve_stage(parse_raw_path(), false));
    while (at_punct(",")) {
      lex_.take();
      decl.stages.push_back(resolve_stage(parse_raw_path(), false));
    }
    expect_punct("}");
    m_.declared_events.push_back(std::move(decl));
  }

  Model m_;
  std::vector<ThimacId> scope_;
  Lexer lex_;
};

}  // namespace

Model parse(const SourceText& src) { return TmParser(src).parse_model(); }

namespace {

void require_valid(const Model& m, const char* who) {
  ValidationReport r = validate_static(m);
  if (!r.ok())
    throw SerializeError(std::string("INVALID_MODEL: ") + who + ": " +
                         std::string(to_string(r.findings[0].rule)) + " " +
                         r.findings[0].message);
}

// Maximal chains over one thimac's internal flow arcs; the legal adjacency
// relation is acyclic within a thimac, so greedy walks terminate.
std::vector<std::vector<StageId>> intra_chains(const Model& m, ThimacId t) {
  struct Arc {
    StageId from, to;
    bool used = false;
  };
  std::vector<Arc> arcs;
  for (const auto& f : m.flows)
    if (m.stages[f.from].owner == t && m.stages[f.to].owner == t)
      arcs.push_back({f.from, f.to});
  auto path_less = [&](StageId a, StageId b) { return m.stage_path(a) < m.stage_path(b); };
  std::sort(arcs.begin(), arcs.end(), [&](const Arc& a, const Arc& b) {
    if (a.from != b.from) return path_less(a.from, b.from);
    return path_less(a.to, b.to);
  });
  auto unused_in = [&](StageId s) {
    for (const auto& a : arcs)
      if (!a.used && a.to == s) return true;
    return false;
  };
  std::vector<std::vector<StageId>> chains;
  for (;;) {
    int start = -1;
    for (size_t i = 0; i < arcs.size(); i++) {
      if (arcs[i].used) continue;
      if (!unused_in(arcs[i].from)) {
        start = static_cast<int>(i);
        break;
      }
    }
    if (start < 0) {
      for (size_t i = 0; i < arcs.size() && start < 0; i++)
        if (!arcs[i].used) start = static_cast<int>(i);
      if (start < 0) break;
    }
    std::vector<StageId> chain{arcs[start].from, arcs[start].to};
    arcs[start].used = true;
    for (;;) {
      int next = -1;
      for (size_t i = 0; i < arcs.size(); i++)
        if (!arcs[i].used && arcs[i].from == chain.back() &&
            (next < 0 || path_less(arcs[i].to, arcs[next].to)))
          next = static_cast<int>(i);
      if (next < 0) break;
      chain.push_back(arcs[next].to);
      arcs[next].used = true;
    }
    chains.push_back(std::move(chain));
  }
  return chains;
}

void emit_thimac(const Model& m, ThimacId t, int depth, std::ostringstream& out) {
  std::string pad(2 * depth, ' ');
  std::string inner(2 * (depth + 1), ' ');
  out << pad << "thimac " << m.thimacs[t].name << " {\n";

  std::vector<ThimacId> kids = m.thimacs[t].children;
  std::sort(kids.begin(), kids.end(),
            [&](ThimacId a, ThimacId b) { return m.thimacs[a].name < m.thimacs[b].name; });
  for (ThimacId k : kids) emit_thimac(m, k, depth + 1, out);

  // stages in no flow arc at all still need declaring
  std::vector<std::string> decls;
  for (StageId s : m.thimacs[t].stages) {
    bool in_flow = false;
    for (const auto& f : m.flows) in_flow |= f.from == s || f.to == s;
    if (!in_flow) decls.push_back(m.stage_path(s));
  }
  std::sort(decls.begin(), decls.end());
  for (const auto& d : decls) out << inner << "flow " << d << "\n";

  for (const auto& chain : intra_chains(m, t)) {
    out << inner << "flow";
    for (size_t i = 0; i < chain.size(); i++)
      out << (i ? " . " : " ") << m.stage_path(chain[i]);
    out << "\n";
  }
  out << pad << "}\n";
}

}  // namespace

SourceText serialize(const Model& m) {
  require_valid(m, "serialize");
  std::ostringstream out;
  for (const auto& v : m.variables) {
    out << "var " << v.name;
    if (v.has_default) out << " = " << v.init;
    out << "\n";
  }

  std::vector<ThimacId> roots;
  for (const auto& t : m.thimacs)
    if (!t.parent) roots.push_back(t.id);
  std::sort(roots.begin(), roots.end(),
            [&](ThimacId a, ThimacId b) { return m.thimacs[a].name < m.thimacs[b].name; });
  for (ThimacId r : roots) emit_thimac(m, r, 0, out);

  std::vector<std::pair<std::string, std::string>> cross;
  for (const auto& f : m.flows)
    if (m.stages[f.from].owner != m.stages[f.to].owner)
      cross.push_back({m.stage_path(f.from), m.stage_path(f.to)});
  std::sort(cross.begin(), cross.end());
  for (const auto& [a, b] : cross) out << "flow " << a << " . " << b << "\n";

  // trigger order is semantic (it fixes firing order), so it is preserved
  for (const auto& t : m.triggers) {
    out << "trigger " << m.stage_path(t.from) << " --> " << m.stage_path(t.to);
    if (!t.label.empty()) out << " : " << t.label;
    out << "\n";
  }

  std::vector<StageId> guarded;
  for (const auto& s : m.stages)
    if (s.guard) guarded.push_back(s.id);
  std::sort(guarded.begin(), guarded.end(),
            [&](StageId a, StageId b) { return m.stage_path(a) < m.stage_path(b); });
  for (StageId s : guarded) {
    const GuardSpec& g = *m.stages[s].guard;
    out << "guard " << m.stage_path(s) << " : " << g.predicate_text << " ? "
        << (g.on_true ? m.stage_path(*g.on_true) : "_") << " : "
        << (g.on_false ? m.stage_path(*g.on_false) : "_") << "\n";
  }

  for (const auto& e : m.declared_events) {
    std::vector<std::string> paths;
    for (StageId s : e.stages) paths.push_back(m.stage_path(s));
    std::sort(paths.begin(), paths.end());
    out << "event " << e.id << " = { ";
    for (size_t i = 0; i < paths.size(); i++) out << (i ? ", " : "") << paths[i];
    out << " }\n";
  }
  return {out.str(), "<serialized>"};
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

void emit_cluster(const Model& m, ThimacId t, int depth, int& counter,
                  std::ostringstream& out) {
  std::string pad(2 * (depth + 1), ' ');
  out << pad << "subgraph cluster_" << counter++ << " {\n";
  out << pad << "  label=\"" << dot_escape(m.thimacs[t].name) << "\";\n";
  std::vector<ThimacId> kids = m.thimacs[t].children;
  std::sort(kids.begin(), kids.end(),
            [&](ThimacId a, ThimacId b) { return m.thimacs[a].name < m.thimacs[b].name; });
  for (ThimacId k : kids) emit_cluster(m, k, depth + 1, counter, out);
  std::vector<std::string> nodes;
  for (StageId s : m.thimacs[t].stages) nodes.push_back(m.stage_path(s));
  std::sort(nodes.begin(), nodes.end());
  for (const auto& n : nodes)
    out << pad << "  \"" << dot_escape(n) << "\";\n";
  out << pad << "}\n";
}

}  // namespace

SourceText export_dot(const Model& m, const DotOptions& opts) {
  require_valid(m, "export_dot");
  std::ostringstream out;
  out << "digraph " << opts.graph_name << " {\n";
  if (!m.stages.empty()) out << "  node [shape=box];\n";

  std::vector<ThimacId> roots;
  for (const auto& t : m.thimacs)
    if (!t.parent) roots.push_back(t.id);
  std::sort(roots.begin(), roots.end(),
            [&](ThimacId a, ThimacId b) { return m.thimacs[a].name < m.thimacs[b].name; });
  int counter = 0;
  for (ThimacId r : roots) emit_cluster(m, r, 0, counter, out);

  std::vector<std::pair<std::string, std::string>> flows;
  for (const auto& f : m.flows)
    flows.push_back({m.stage_path(f.from), m.stage_path(f.to)});
  std::sort(flows.begin(), flows.end());
  for (const auto& [a, b] : flows)
    out << "  \"" << dot_escape(a) << "\" -> \"" << dot_escape(b) << "\";\n";

  for (const auto& t : m.trigger_view()) {
    out << "  \"" << dot_escape(m.stage_path(t.from)) << "\" -> \""
        << dot_escape(m.stage_path(t.to)) << "\" [style=dashed";
    if (opts.edge_labels && !t.label.empty())
      out << ", label=\"" << dot_escape(t.label) << "\"";
    out << "];\n";
  }
  out << "}\n";
  return {out.str(), "<dot>"};
}

}  // namespace tmkit
