#include "tmkit/tm_sim.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace tmkit::sim {

std::string payload_text(const Payload& p) {
  if (std::holds_alternative<long long>(p)) return std::to_string(std::get<long long>(p));
  return std::get<std::string>(p);
}

std::string format_record(const TraceRecord& r) {
  return "t=" + std::to_string(r.time) + " event=" + r.event + " detail=" + r.detail;
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

[[noreturn]] void scenario_fail(const std::string& origin, int line, const std::string& msg) {
  throw SimError(SimError::Code::scenario_parse,
                 origin + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

Scenario parse_scenario(const std::string& text, const Model& m, const std::string& origin) {
  Scenario s;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    lineno++;
    size_t hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    std::vector<std::string> w = split_ws(raw);
    if (w.empty()) continue;
    if (w[0] == "at") {
      if (w.size() != 5 || w[2] != "inject")
        scenario_fail(origin, lineno, "expected `at <tick> inject <port> <payload>`");
      Injection inj;
      inj.tick = std::stoll(w[1]);
      try {
        inj.port = resolve_path(m, w[3]);
      } catch (const PathError& e) {
        scenario_fail(origin, lineno, e.what());
      }
      const std::string& p = w[4];
      bool numeric = !p.empty() && (std::isdigit(static_cast<unsigned char>(p[0])) ||
                                    (p[0] == '-' && p.size() > 1));
      if (numeric) inj.payload = std::stoll(p);
      else inj.payload = p;
      s.injections.push_back(inj);
    } else if (w[0] == "var") {
      if (w.size() != 4 || w[2] != "=")
        scenario_fail(origin, lineno, "expected `var <name> = <int>`");
      s.init_vars[w[1]] = std::stoll(w[3]);
    } else if (w[0] == "option") {
      if (w.size() != 3) scenario_fail(origin, lineno, "expected `option <name> <value>`");
      if (w[1] == "signal_mode") s.signal_mode = w[2] == "on";
      else if (w[1] == "max_ticks") s.max_ticks = std::stoll(w[2]);
      else scenario_fail(origin, lineno, "unknown option " + w[1]);
    } else {
      scenario_fail(origin, lineno, "unknown directive " + w[0]);
    }
  }
  if (s.max_ticks < 1) scenario_fail(origin, lineno, "max_ticks must be at least 1");
  // injection times strictly increasing per port
  std::map<StageId, long long> last;
  for (const auto& inj : s.injections) {
    auto it = last.find(inj.port);
    if (it != last.end() && inj.tick <= it->second)
      scenario_fail(origin, lineno, "injection times must strictly increase per port");
    last[inj.port] = inj.tick;
  }
  return s;
}

std::vector<Monitor> parse_monitors(const std::string& text, const std::string& origin) {
  std::vector<Monitor> out;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    lineno++;
    size_t hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    std::string line = ex::normalize_text(raw);
    if (line.empty()) continue;
    size_t colon = line.find(':');
    if (colon == std::string::npos)
      scenario_fail(origin, lineno, "expected `name : predicate`");
    Monitor mon;
    mon.name = ex::normalize_text(line.substr(0, colon));
    mon.text = ex::normalize_text(line.substr(colon + 1));
    try {
      mon.predicate = ex::parse(mon.text);
    } catch (const ex::ParseError& e) {
      scenario_fail(origin, lineno, std::string("bad predicate: ") + e.what());
    }
    out.push_back(std::move(mon));
  }
  return out;
}

namespace {

struct VarsScope : ex::Scope {
  const std::map<std::string, long long>& vars;
  const Payload* payload = nullptr;  // bound to `x` when present

  VarsScope(const std::map<std::string, long long>& v, const Payload* p) : vars(v), payload(p) {}

  std::optional<ex::Value> lookup(std::string_view name) const override {
    if (name == "x" && payload) {
      if (!std::holds_alternative<long long>(*payload))
        throw ex::EvalError("symbolic payload used in an arithmetic context");
      return ex::Value::integer_v(std::get<long long>(*payload));
    }
    auto it = vars.find(std::string(name));
    if (it == vars.end()) return std::nullopt;
    return ex::Value::integer_v(it->second);
  }
};

}  // namespace

bool MonitorReport::all_passed() const {
  for (const auto& r : results)
    if (!r.passed) return false;
  return true;
}

MonitorReport check_monitors(const Trace& trace, const std::vector<Monitor>& monitors) {
  MonitorReport report;
  for (const auto& mon : monitors) {
    MonitorResult r;
    r.name = mon.name;
    for (const auto& q : trace.quiescent) {
      VarsScope scope(q.vars, nullptr);
      bool ok;
      try {
        ok = ex::eval(*mon.predicate, scope).truthy();
      } catch (const ex::EvalError& e) {
        throw SimError(SimError::Code::eval,
                       "monitor " + mon.name + ": " + e.what());
      }
      if (!ok) {
        r.passed = false;
        r.tick = q.time;
        r.snapshot = q.vars;
        break;
      }
    }
    report.results.push_back(std::move(r));
  }
  return report;
}

std::vector<LightState> light_states(const Model& m,
                                     const std::map<std::string, long long>& vars) {
  std::vector<LightState> out;
  for (const auto& v : m.variables) {
    bool light_name = v.name.size() >= 2 && v.name[0] == 'l' &&
                      std::all_of(v.name.begin() + 1, v.name.end(), [](char c) {
                        return std::isdigit(static_cast<unsigned char>(c));
                      });
    light_name |= v.name.rfind("light", 0) == 0;
    if (!light_name) continue;
    auto it = vars.find(v.name);
    if (it == vars.end()) continue;
    out.push_back({v.name, it->second != 0 ? LightState::Color::green : LightState::Color::red});
  }
  return out;
}

// ---- Simulation -----------------------------------------------------------

Simulation::Simulation(const Model& m, const std::vector<EventDef>& events, const Scenario& s)
    : m_(m), scenario_(s) {
  // variables: model defaults, then scenario overrides; everything without
  // a default must be supplied
  for (const auto& [name, value] : s.init_vars) {
    if (!m.find_variable(name))
      throw SimError(SimError::Code::scenario_parse, "scenario sets unknown variable " + name);
    (void)value;
  }
  for (const auto& v : m.variables) {
    auto it = s.init_vars.find(v.name);
    if (it != s.init_vars.end()) vars_[v.name] = it->second;
    else if (v.has_default) vars_[v.name] = v.init;
    else
      throw SimError(SimError::Code::uninitialized_variable,
                     "UNINITIALIZED_VARIABLE: " + v.name);
  }

  for (const auto& inj : s.injections) {
    if (inj.port < 0 || inj.port >= static_cast<int>(m.stages.size()) ||
        m.stages[inj.port].kind != StageKind::transfer_in || !m.flow_in(inj.port).empty())
      throw SimError(SimError::Code::port_not_boundary,
                     "PORT_NOT_BOUNDARY: injections must enter a boundary transfer input");
  }

  flow_out_.resize(m.stages.size());
  trig_out_.resize(m.stages.size());
  for (size_t i = 0; i < m.flows.size(); i++) flow_out_[m.flows[i].from].push_back(i);
  for (size_t i = 0; i < m.triggers.size(); i++) trig_out_[m.triggers[i].from].push_back(i);

  covered_.assign(m.stages.size(), "");
  for (const auto& e : events) {
    for (StageId st : e.region.stages) {
      if (!covered_[st].empty())
        throw SimError(SimError::Code::scenario_parse,
                       "event regions overlap at " + m.stage_path(st));
      covered_[st] = e.id;
    }
  }

  var_thimac_.assign(m.thimacs.size(), -1);
  for (size_t t = 0; t < m.thimacs.size(); t++)
    for (size_t v = 0; v < m.variables.size(); v++)
      if (m.thimacs[t].name == m.variables[v].name) var_thimac_[t] = static_cast<int>(v);

  // A stage targeted by a trigger is a spawn point (create, a cell's
  // release, a cell's store side) or a gate where tokens wait to be
  // forwarded.
  gated_.assign(m.stages.size(), false);
  auto spawn_target = [&](StageId st) {
    const Stage& stage = m_.stages[st];
    if (stage.kind == StageKind::create) return true;
    if (var_thimac_[stage.owner] < 0) return false;
    return stage.kind == StageKind::release || stage.kind == StageKind::transfer_in ||
           stage.kind == StageKind::receive;
  };
  for (const auto& t : m.triggers)
    if (!spawn_target(t.to)) gated_[t.to] = true;

  trace_.quiescent.push_back({0, vars_});
}

std::string Simulation::event_of(StageId stage) const {
  const std::string& e = covered_[stage];
  return e.empty() ? "-" : e;
}

void Simulation::record(StageId stage, const std::string& detail_suffix, long long token) {
  TraceRecord r;
  r.time = tick_;
  r.event = event_of(stage);
  r.detail = m_.stage_path(stage) + " token=" + std::to_string(token) +
             " payload=" + payload_text(tokens_[token].payload) + detail_suffix;
  trace_.records.push_back(std::move(r));
}

long long Simulation::spawn_token(const Payload& p, StageId at) {
  tokens_.push_back({p, at, true});
  spawned_++;
  return static_cast<long long>(tokens_.size()) - 1;
}

long long Simulation::eval_int(const ex::Expr& e, const Payload& cause) const {
  VarsScope scope(vars_, &cause);
  ex::Value v;
  try {
    v = ex::eval(e, scope);
  } catch (const ex::EvalError& err) {
    throw SimError(SimError::Code::eval, err.what());
  }
  if (v.kind != ex::Value::Kind::integer)
    throw SimError(SimError::Code::eval, "expression did not yield an integer");
  return v.num;
}

void Simulation::arrival(long long token, StageId stage) {
  const Stage& st = m_.stages[stage];
  tokens_[token].location = stage;
  int var = var_thimac_[st.owner];

  bool is_store = var >= 0 && st.kind == StageKind::receive;
  bool is_exit = st.kind == StageKind::transfer_out && flow_out_[stage].empty();

  if (is_store) {
    // the deposited value becomes a variable-update micro-step; the update
    // records under this stage's event
    if (!std::holds_alternative<long long>(tokens_[token].payload))
      throw SimError(SimError::Code::eval, "symbolic payload stored into a variable cell");
    Activation up;
    up.kind = StepKind::var_update;
    up.var = m_.variables[var].name;
    up.value = std::get<long long>(tokens_[token].payload);
    up.attributed_event = event_of(stage);
    queue_.push_back(up);
    tokens_[token].live = false;
    gone_++;
  } else {
    if (!covered_[stage].empty()) record(stage, is_exit ? " exit" : "", token);
    if (st.guard) {
      Activation g;
      g.kind = StepKind::guard_eval;
      g.token = token;
      g.stage = stage;
      queue_.push_back(g);
    } else if (gated_[stage]) {
      waiting_[stage].push_back(token);
    } else if (is_exit) {
      tokens_[token].live = false;
      gone_++;
    } else {
      bool first = true;
      for (int arc : flow_out_[stage]) {
        Activation mv;
        mv.kind = StepKind::move;
        mv.token = token;
        mv.arc = arc;
        mv.copy = !first;
        first = false;
        queue_.push_back(mv);
      }
    }
  }

  for (int ti : trig_out_[stage]) {
    Activation f;
    f.kind = StepKind::fire_trigger;
    f.arc = ti;
    f.cause = tokens_[token].payload;
    queue_.push_back(f);
  }
}

void Simulation::execute(const Activation& a) {
  switch (a.kind) {
    case StepKind::injection: {
      long long tok = spawn_token(a.cause, a.stage);
      arrival(tok, a.stage);
      return;
    }
    case StepKind::move: {
      const FlowArc& arc = m_.flows[a.arc];
      if (a.copy) {
        long long tok = spawn_token(tokens_[a.token].payload, arc.to);
        arrival(tok, arc.to);
        return;
      }
      if (!tokens_[a.token].live || tokens_[a.token].location != arc.from) return;
      arrival(a.token, arc.to);
      return;
    }
    case StepKind::fire_trigger: {
      if (scenario_.signal_mode && !a.in_flight) {
        // the trigger travels as a communication signal; its effect lands
        // on delivery
        Activation sig = a;
        sig.in_flight = true;
        queue_.push_back(sig);
        return;
      }
      const TriggerArc& arc = m_.triggers[a.arc];
      const Stage& target = m_.stages[arc.to];
      int var = var_thimac_[target.owner];
      bool spawn_create = target.kind == StageKind::create;
      bool spawn_pull = var >= 0 && target.kind == StageKind::release;
      bool spawn_store = var >= 0 && (target.kind == StageKind::transfer_in ||
                                      target.kind == StageKind::receive);
      if (spawn_create || spawn_pull || spawn_store) {
        Payload p;
        if (!arc.label.empty()) p = eval_int(*ex::parse(arc.label), a.cause);
        else if (spawn_pull) p = vars_.at(m_.variables[var].name);
        else p = a.cause;
        long long tok = spawn_token(p, arc.to);
        arrival(tok, arc.to);
        return;
      }
      // gate: one firing forwards the oldest waiting token along the
      // target's outgoing flows
      auto& q = waiting_[arc.to];
      if (q.empty()) return;
      long long tok = q.front();
      q.pop_front();
      bool first = true;
      for (int fa : flow_out_[arc.to]) {
        Activation mv;
        mv.kind = StepKind::move;
        mv.token = tok;
        mv.arc = fa;
        mv.copy = !first;
        first = false;
        queue_.push_back(mv);
      }
      return;
    }
    case StepKind::guard_eval: {
      if (!tokens_[a.token].live || tokens_[a.token].location != a.stage) return;
      const GuardSpec& g = *m_.stages[a.stage].guard;
      VarsScope scope(vars_, &tokens_[a.token].payload);
      bool taken;
      try {
        taken = ex::eval(*g.predicate, scope).truthy();
      } catch (const ex::EvalError& e) {
        throw SimError(SimError::Code::eval,
                       "guard at " + m_.stage_path(a.stage) + ": " + e.what());
      }
      std::optional<StageId> target = taken ? g.on_true : g.on_false;
      if (!target) {
        tokens_[a.token].live = false;
        gone_++;
        return;
      }
      arrival(a.token, *target);
      return;
    }
    case StepKind::var_update: {
      long long old = vars_.at(a.var);
      vars_[a.var] = a.value;
      TraceRecord r;
      r.time = tick_;
      r.event = a.attributed_event;
      r.detail = a.var + " " + std::to_string(old) + " -> " + std::to_string(a.value);
      trace_.records.push_back(std::move(r));
      return;
    }
  }
}

bool Simulation::admit_next_tick() {
  if (next_injection_ >= scenario_.injections.size()) return false;
  long long t = scenario_.injections[next_injection_].tick;
  if (t > scenario_.max_ticks) return false;
  tick_ = t;
  while (next_injection_ < scenario_.injections.size() &&
         scenario_.injections[next_injection_].tick == t) {
    const Injection& inj = scenario_.injections[next_injection_++];
    Activation a;
    a.kind = StepKind::injection;
    a.stage = inj.port;
    a.cause = inj.payload;
    queue_.push_back(a);
  }
  return true;
}

Simulation::StepKind Simulation::step() {
  if (queue_.empty() && !admit_next_tick())
    throw SimError(SimError::Code::quiescent, "QUIESCENT: nothing to do");
  Activation a = queue_.front();
  queue_.pop_front();
  execute(a);
  if (queue_.empty()) trace_.quiescent.push_back({tick_, vars_});
  return a.kind;
}

bool Simulation::quiescent() const {
  return queue_.empty() && (next_injection_ >= scenario_.injections.size() ||
                            scenario_.injections[next_injection_].tick > scenario_.max_ticks);
}

void Simulation::finalize() {
  if (finalized_) return;
  finalized_ = true;
  // tokens still waiting at a boundary port were never admitted
  for (const auto& [stage, q] : waiting_) {
    if (m_.stages[stage].kind != StageKind::transfer_in || !m_.flow_in(stage).empty()) continue;
    for (long long tok : q) {
      rejected_.push_back({tok, stage});
      TraceRecord r;
      r.time = tick_;
      r.event = event_of(stage);
      r.detail = "rejected " + m_.stage_path(stage) + " token=" + std::to_string(tok);
      trace_.records.push_back(std::move(r));
    }
  }
}

void Simulation::run_to_end() {
  while (!quiescent()) step();
  finalize();
}

int Simulation::live_tokens() const {
  int n = 0;
  for (const auto& t : tokens_) n += t.live ? 1 : 0;
  return n;
}

std::vector<std::pair<long long, StageId>> Simulation::token_locations() const {
  std::vector<std::pair<long long, StageId>> out;
  for (size_t i = 0; i < tokens_.size(); i++)
    if (tokens_[i].live) out.push_back({static_cast<long long>(i), tokens_[i].location});
  return out;
}

RunResult run(const Model& m, const std::vector<EventDef>& events, const Scenario& s,
              const std::vector<Monitor>& monitors) {
  Simulation sim(m, events, s);
  sim.run_to_end();
  RunResult result;
  result.trace = sim.trace();
  result.monitors = check_monitors(result.trace, monitors);
  result.rejected = sim.rejected();
  result.final_vars = sim.vars();
  return result;
}

}  // namespace tmkit::sim
