#include "tmkit/tm_core.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace tmkit {

namespace {

constexpr std::array<std::string_view, kStageKindCount> kKindNames = {
    "create",       "process", "release", "transfer.input",
    "transfer.output", "arrive",  "accept",  "receive"};

}  // namespace

std::string_view to_string(StageKind k) { return kKindNames[static_cast<int>(k)]; }

std::optional<StageKind> stage_kind_from(std::string_view word) {
  for (int i = 0; i < kStageKindCount; i++)
    if (kKindNames[i] == word) return static_cast<StageKind>(i);
  return std::nullopt;
}

bool adjacency_legal(StageKind from, StageKind to) {
  using K = StageKind;
  switch (from) {
    case K::create: return to == K::release || to == K::process;
    case K::process: return to == K::release;
    case K::release: return to == K::transfer_out;
    case K::transfer_out: return to == K::transfer_in;
    case K::transfer_in: return to == K::arrive || to == K::receive;
    case K::arrive: return to == K::accept || to == K::release;
    case K::accept: return to == K::release || to == K::process;
    case K::receive: return to == K::process || to == K::release;
  }
  return false;
}

const Variable* Model::find_variable(std::string_view name) const {
  for (const auto& v : variables)
    if (v.name == name) return &v;
  return nullptr;
}

const Thimac* Model::find_root(std::string_view name) const {
  for (const auto& t : thimacs)
    if (!t.parent && t.name == name) return &t;
  return nullptr;
}

bool Model::is_variable_thimac(ThimacId t) const {
  return t >= 0 && t < static_cast<int>(thimacs.size()) &&
         find_variable(thimacs[t].name) != nullptr;
}

std::string Model::thimac_path(ThimacId t) const {
  std::vector<std::string_view> parts;
  for (ThimacId cur = t; cur >= 0;) {
    const Thimac& th = thimacs[cur];
    parts.push_back(th.name);
    cur = th.parent ? *th.parent : -1;
  }
  std::string out;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (!out.empty()) out.push_back('.');
    out += *it;
  }
  return out;
}

std::string Model::stage_path(StageId s) const {
  const Stage& st = stages[s];
  return thimac_path(st.owner) + "." + std::string(to_string(st.kind));
}

std::optional<StageId> Model::stage_of(ThimacId t, StageKind k) const {
  for (StageId s : thimacs[t].stages)
    if (stages[s].kind == k) return s;
  return std::nullopt;
}

std::vector<StageId> Model::flow_out(StageId s) const {
  std::vector<StageId> out;
  for (const auto& f : flows)
    if (f.from == s) out.push_back(f.to);
  return out;
}

std::vector<StageId> Model::flow_in(StageId s) const {
  std::vector<StageId> in;
  for (const auto& f : flows)
    if (f.to == s) in.push_back(f.from);
  return in;
}

std::vector<TriggerArc> Model::trigger_view() const {
  std::vector<TriggerArc> view = triggers;
  for (const auto& st : stages) {
    if (!st.guard) continue;
    if (st.guard->on_true) view.push_back({st.id, *st.guard->on_true, "true"});
    if (st.guard->on_false) view.push_back({st.id, *st.guard->on_false, "false"});
  }
  return view;
}

std::string_view to_string(RuleCode c) {
  switch (c) {
    case RuleCode::illegal_adjacency: return "ILLEGAL_ADJACENCY";
    case RuleCode::cross_machine: return "CROSS_MACHINE";
    case RuleCode::not_a_forest: return "NOT_A_FOREST";
    case RuleCode::guard_not_on_process: return "GUARD_NOT_ON_PROCESS";
    case RuleCode::receive_conflict: return "RECEIVE_CONFLICT";
    case RuleCode::bad_stage_ref: return "BAD_STAGE_REF";
    case RuleCode::duplicate_variable: return "DUPLICATE_VARIABLE";
    case RuleCode::trigger_self_loop: return "TRIGGER_SELF_LOOP";
    case RuleCode::owner_mismatch: return "OWNER_MISMATCH";
  }
  return "UNKNOWN";
}

ValidationReport validate_static(const Model& m) {
  ValidationReport report;
  auto add = [&](RuleCode rule, std::string msg) {
    report.findings.push_back({rule, std::move(msg)});
  };
  const int nstages = static_cast<int>(m.stages.size());
  const int nthimacs = static_cast<int>(m.thimacs.size());
  auto stage_ok = [&](StageId s) { return s >= 0 && s < nstages; };

  // ownership is mutual: every stage is listed by exactly its owner
  for (const auto& st : m.stages) {
    if (st.owner < 0 || st.owner >= nthimacs) {
      add(RuleCode::owner_mismatch, "stage " + std::to_string(st.id) + " has no owner");
      continue;
    }
    const auto& owned = m.thimacs[st.owner].stages;
    if (std::count(owned.begin(), owned.end(), st.id) != 1)
      add(RuleCode::owner_mismatch,
          "stage " + m.stage_path(st.id) + " not listed once by its owner");
  }
  for (const auto& th : m.thimacs)
    for (StageId s : th.stages)
      if (!stage_ok(s) || m.stages[s].owner != th.id)
        add(RuleCode::owner_mismatch, "thimac " + th.name + " lists a foreign stage");

  // containment must be a forest
  for (const auto& th : m.thimacs) {
    int steps = 0;
    std::optional<ThimacId> cur = th.parent;
    while (cur) {
      if (*cur == th.id || ++steps > nthimacs) {
        add(RuleCode::not_a_forest, "containment cycle through thimac " + th.name);
        break;
      }
      cur = m.thimacs[*cur].parent;
    }
  }

  for (size_t i = 0; i < m.flows.size(); i++) {
    const auto& f = m.flows[i];
    if (!stage_ok(f.from) || !stage_ok(f.to)) {
      add(RuleCode::bad_stage_ref, "flow arc " + std::to_string(i) + " endpoint unresolved");
      continue;
    }
    StageKind kf = m.stages[f.from].kind;
    StageKind kt = m.stages[f.to].kind;
    if (!adjacency_legal(kf, kt)) {
      add(RuleCode::illegal_adjacency,
          "flow " + m.stage_path(f.from) + " -> " + m.stage_path(f.to));
      continue;
    }
    bool crosses = m.stages[f.from].owner != m.stages[f.to].owner;
    bool transfer_pair = kf == StageKind::transfer_out && kt == StageKind::transfer_in;
    if (transfer_pair != crosses)
      add(RuleCode::cross_machine,
          "flow " + m.stage_path(f.from) + " -> " + m.stage_path(f.to) +
              (transfer_pair ? " must cross thimacs" : " may not cross thimacs"));
  }

  for (size_t i = 0; i < m.triggers.size(); i++) {
    const auto& t = m.triggers[i];
    if (!stage_ok(t.from) || !stage_ok(t.to)) {
      add(RuleCode::bad_stage_ref, "trigger arc " + std::to_string(i) + " endpoint unresolved");
      continue;
    }
    if (t.from == t.to)
      add(RuleCode::trigger_self_loop, "trigger loops on " + m.stage_path(t.from));
  }

  for (const auto& st : m.stages) {
    if (st.guard && st.kind != StageKind::process)
      add(RuleCode::guard_not_on_process, "guard on " + m.stage_path(st.id));
    if (st.guard) {
      for (auto target : {st.guard->on_true, st.guard->on_false})
        if (target && !stage_ok(*target))
          add(RuleCode::bad_stage_ref, "guard target unresolved on " + m.stage_path(st.id));
    }
  }

  // receive excludes arrive/accept within one thimac
  for (const auto& th : m.thimacs) {
    bool has_receive = false, has_arrive = false, has_accept = false;
    for (StageId s : th.stages) {
      if (!stage_ok(s)) continue;
      StageKind k = m.stages[s].kind;
      has_receive |= k == StageKind::receive;
      has_arrive |= k == StageKind::arrive;
      has_accept |= k == StageKind::accept;
    }
    if (has_receive && (has_arrive || has_accept))
      add(RuleCode::receive_conflict,
          "thimac " + th.name + " mixes receive with arrive/accept");
  }

  for (size_t i = 0; i < m.variables.size(); i++)
    for (size_t j = i + 1; j < m.variables.size(); j++)
      if (m.variables[i].name == m.variables[j].name)
        add(RuleCode::duplicate_variable, "variable " + m.variables[i].name);

  return report;
}

namespace {

std::vector<std::string> split_dotted(std::string_view dotted) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : dotted) {
    if (c == '.') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

}  // namespace

StageId resolve_path(const Model& m, std::string_view dotted) {
  if (dotted.empty())
    throw PathError(PathError::Code::unknown_segment, "empty path");
  std::vector<std::string> segs = split_dotted(dotted);

  // trailing stage kind, possibly the two segments "transfer.input|output"
  StageKind kind;
  size_t consumed;
  if (segs.size() >= 2 && segs[segs.size() - 2] == "transfer") {
    auto k = stage_kind_from("transfer." + segs.back());
    if (!k)
      throw PathError(PathError::Code::unknown_segment,
                      "expected input or output after transfer in '" + std::string(dotted) + "'");
    kind = *k;
    consumed = 2;
  } else {
    auto k = stage_kind_from(segs.back());
    if (!k)
      throw PathError(PathError::Code::unknown_segment,
                      "'" + segs.back() + "' is not a stage kind");
    kind = *k;
    consumed = 1;
  }
  if (segs.size() == consumed)
    throw PathError(PathError::Code::unknown_segment,
                    "path '" + std::string(dotted) + "' names no thimac");

  std::optional<ThimacId> cur;
  for (size_t i = 0; i + consumed < segs.size(); i++) {
    const std::string& name = segs[i];
    int found = -1, hits = 0;
    if (!cur) {
      for (const auto& t : m.thimacs)
        if (!t.parent && t.name == name) { found = t.id; hits++; }
    } else {
      for (ThimacId c : m.thimacs[*cur].children)
        if (m.thimacs[c].name == name) { found = c; hits++; }
    }
    if (hits == 0)
      throw PathError(PathError::Code::unknown_segment,
                      "UNKNOWN_SEGMENT '" + name + "' in '" + std::string(dotted) + "'");
    if (hits > 1)
      throw PathError(PathError::Code::ambiguous,
                      "AMBIGUOUS segment '" + name + "' in '" + std::string(dotted) + "'");
    cur = found;
  }

  int found = -1, hits = 0;
  for (StageId s : m.thimacs[*cur].stages)
    if (m.stages[s].kind == kind) { found = s; hits++; }
  if (hits == 0)
    throw PathError(PathError::Code::unknown_segment,
                    "UNKNOWN_SEGMENT no " + std::string(to_string(kind)) + " stage in '" +
                        std::string(dotted) + "'");
  if (hits > 1)
    throw PathError(PathError::Code::ambiguous,
                    "AMBIGUOUS stage kind in '" + std::string(dotted) + "'");
  return found;
}

}  // namespace tmkit
