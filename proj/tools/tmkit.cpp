// Command-line front end: parse/check/events/behavior/simulate for the
// textual models, explore/refine for the machines, conform for the
// cross-formalism replay, export-dot, and the bundled case corpus.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tmkit/case_models.hpp"
#include "tmkit/eventb_lite.hpp"
#include "tmkit/tm_dynamics.hpp"
#include "tmkit/tm_lang.hpp"
#include "tmkit/tm_sim.hpp"

using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file_or_die(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

tmkit::Model load_model(const std::string& path) {
  return tmkit::parse({read_file_or_die(path), path});
}

tmkit::eb::Machine load_machine(const std::string& path) {
  return tmkit::eb::parse_ebl(read_file_or_die(path), path);
}

tmkit::eb::Bindings parse_bounds(const std::vector<std::string>& bounds) {
  tmkit::eb::Bindings out;
  for (const auto& b : bounds) {
    size_t eq = b.find('=');
    if (eq == std::string::npos) throw UsageError("--bound expects name=value: " + b);
    out[b.substr(0, eq)] = std::stoll(b.substr(eq + 1));
  }
  return out;
}

tmkit::Granularity parse_granularity(const std::string& g) {
  if (g == "fine") return tmkit::Granularity::fine;
  if (g == "declared") return tmkit::Granularity::declared;
  throw UsageError("--granularity expects fine or declared");
}

std::string cases_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("TMKIT_CASES")) return env;
  return "cases";
}

// every subcommand's result funnels through one of these two printers so
// the plain and json forms carry the same fields
void emit(bool as_json, const json& j, const std::string& plain) {
  if (as_json) std::cout << j.dump(2) << "\n";
  else std::cout << plain;
}

int cmd_parse(const std::string& path, bool as_json) {
  tmkit::Model m = load_model(path);
  json j{{"command", "parse"},
         {"file", path},
         {"thimacs", m.thimacs.size()},
         {"stages", m.stages.size()},
         {"flows", m.flows.size()},
         {"triggers", m.triggers.size()},
         {"variables", m.variables.size()},
         {"declared_events", m.declared_events.size()}};
  std::ostringstream out;
  out << "thimacs=" << m.thimacs.size() << " stages=" << m.stages.size()
      << " flows=" << m.flows.size() << " triggers=" << m.triggers.size()
      << " variables=" << m.variables.size() << " events=" << m.declared_events.size()
      << "\n";
  emit(as_json, j, out.str());
  return kExitOk;
}

int cmd_check(const std::string& path, bool as_json) {
  tmkit::Model m = load_model(path);
  tmkit::ValidationReport report = tmkit::validate_static(m);
  json findings = json::array();
  std::ostringstream out;
  for (const auto& f : report.findings) {
    findings.push_back({{"rule", std::string(tmkit::to_string(f.rule))}, {"message", f.message}});
    out << tmkit::to_string(f.rule) << " " << f.message << "\n";
  }
  out << report.findings.size() << " findings\n";
  json j{{"command", "check"}, {"file", path}, {"findings", findings},
         {"count", report.findings.size()}};
  emit(as_json, j, out.str());
  return report.ok() ? kExitOk : kExitCheckFailed;
}

std::vector<tmkit::EventDef> events_for(const tmkit::Model& m, const std::string& granularity) {
  return tmkit::extract_events(m, parse_granularity(granularity)).events;
}

int cmd_events(const std::string& path, const std::string& granularity, bool as_json) {
  tmkit::Model m = load_model(path);
  tmkit::ExtractResult r = tmkit::extract_events(m, parse_granularity(granularity));
  json evs = json::array();
  std::ostringstream out;
  for (const auto& e : r.events) {
    json stages = json::array();
    for (tmkit::StageId s : e.region.stages) stages.push_back(m.stage_path(s));
    evs.push_back({{"id", e.id}, {"name", e.name}, {"stages", stages}});
    out << e.id << "\t" << e.name << "\n";
  }
  json uncovered = json::array();
  for (tmkit::StageId s : r.uncovered) uncovered.push_back(m.stage_path(s));
  for (tmkit::StageId s : r.uncovered) out << "uncovered\t" << m.stage_path(s) << "\n";
  json j{{"command", "events"}, {"file", path}, {"events", evs}, {"uncovered", uncovered}};
  emit(as_json, j, out.str());
  return kExitOk;
}

int cmd_behavior(const std::string& path, const std::string& granularity, bool chains,
                 const std::string& start, bool as_json) {
  tmkit::Model m = load_model(path);
  std::vector<tmkit::EventDef> events = events_for(m, granularity);
  tmkit::BehaviorGraph g = tmkit::behavior_graph(m, events);
  json j{{"command", "behavior"}, {"file", path}};
  std::ostringstream out;
  if (chains) {
    auto cs = tmkit::maximal_chains(
        g, start.empty() ? std::nullopt : std::optional<std::string>(start));
    json arr = json::array();
    for (const auto& chain : cs) {
      json one = json::array();
      for (size_t i = 0; i < chain.size(); i++) {
        one.push_back(chain[i]);
        out << (i ? " " : "") << chain[i];
      }
      out << "\n";
      arr.push_back(one);
    }
    j["chains"] = arr;
  } else {
    json arr = json::array();
    for (const auto& e : g.edges) {
      const char* cause = e.cause == tmkit::BehaviorEdge::Cause::flow ? "flow" : "trigger";
      arr.push_back({{"pred", e.pred}, {"cause", cause}, {"succ", e.succ}});
      out << e.pred << "\t" << cause << "\t" << e.succ << "\n";
    }
    j["edges"] = arr;
  }
  emit(as_json, j, out.str());
  return kExitOk;
}

int cmd_simulate(const std::string& path, const std::string& scenario_path,
                 const std::string& monitors_path, bool signal_mode,
                 const std::string& granularity, bool as_json) {
  tmkit::Model m = load_model(path);
  tmkit::ValidationReport vr = tmkit::validate_static(m);
  if (!vr.ok()) throw UsageError("model fails validation; run check");
  std::vector<tmkit::EventDef> events = events_for(m, granularity);
  tmkit::sim::Scenario s =
      tmkit::sim::parse_scenario(read_file_or_die(scenario_path), m, scenario_path);
  if (signal_mode) s.signal_mode = true;
  std::vector<tmkit::sim::Monitor> monitors;
  if (!monitors_path.empty())
    monitors = tmkit::sim::parse_monitors(read_file_or_die(monitors_path), monitors_path);
  tmkit::sim::RunResult r = tmkit::sim::run(m, events, s, monitors);

  json records = json::array();
  std::ostringstream out;
  for (const auto& rec : r.trace.records) {
    records.push_back({{"t", rec.time}, {"event", rec.event}, {"detail", rec.detail}});
    out << tmkit::sim::format_record(rec) << "\n";
  }
  json mons = json::array();
  for (const auto& mr : r.monitors.results) {
    mons.push_back({{"name", mr.name}, {"passed", mr.passed}, {"tick", mr.tick}});
    out << "monitor " << mr.name << (mr.passed ? " pass" : " FAIL tick=" + std::to_string(mr.tick))
        << "\n";
  }
  json lights = json::array();
  for (const auto& l : tmkit::sim::light_states(m, r.final_vars)) {
    const char* color = l.color == tmkit::sim::LightState::Color::green ? "green" : "red";
    lights.push_back({{"id", l.id}, {"color", color}});
    out << "light " << l.id << "=" << color << "\n";
  }
  json vars = json::object();
  for (const auto& [k, v] : r.final_vars) {
    vars[k] = v;
    out << "var " << k << "=" << v << "\n";
  }
  json j{{"command", "simulate"}, {"file", path}, {"scenario", scenario_path},
         {"records", records}, {"monitors", mons}, {"lights", lights}, {"final_vars", vars}};
  emit(as_json, j, out.str());
  return r.monitors.all_passed() ? kExitOk : kExitCheckFailed;
}

int cmd_explore(const std::string& path, const std::vector<std::string>& bounds, int max_states,
                bool as_json) {
  tmkit::eb::Machine m = load_machine(path);
  tmkit::eb::Bindings consts = parse_bounds(bounds);
  tmkit::eb::StateGraph g = tmkit::eb::explore(m, consts, max_states);
  tmkit::eb::InvariantReport inv = tmkit::eb::check_invariants(g, m, consts);
  std::string inv_text = "pass";
  for (const auto& r : inv.results)
    if (!r.passed) {
      inv_text = "FAIL(" + r.invariant + "@" + tmkit::eb::state_text(m, g.states[r.state]) + ")";
      break;
    }
  size_t deadlocks = 0;
  std::string deadlock_text;
  if (!g.truncated) {
    tmkit::eb::DeadlockReport dr = tmkit::eb::check_deadlock(g, m, consts);
    deadlocks = dr.deadlocked.size();
    for (int s : dr.deadlocked) deadlock_text += "deadlock " + tmkit::eb::state_text(m, g.states[s]) + "\n";
  }
  std::ostringstream out;
  out << "states=" << g.states.size() << " transitions=" << g.transitions.size()
      << " invariants=" << inv_text << " deadlocks=" << deadlocks
      << (g.truncated ? " TRUNCATED" : "") << "\n";
  out << deadlock_text;
  for (const auto& r : inv.results) {
    if (r.passed) continue;
    out << "counterexample " << tmkit::eb::state_text(m, g.states[r.state]) << " path";
    for (const auto& e : r.path) out << " " << e;
    out << "\n";
  }
  json j{{"command", "explore"}, {"file", path}, {"states", g.states.size()},
         {"transitions", g.transitions.size()}, {"invariants", inv_text},
         {"deadlocks", deadlocks}, {"truncated", g.truncated}};
  emit(as_json, j, out.str());
  return inv.all_passed() ? kExitOk : kExitCheckFailed;
}

int cmd_refine(const std::string& abstract_path, const std::string& concrete_path,
               const std::string& gluing, const std::string& map_text,
               const std::vector<std::string>& bounds, int max_states, bool as_json) {
  tmkit::eb::Machine abs = load_machine(abstract_path);
  tmkit::eb::Machine conc = load_machine(concrete_path);
  tmkit::eb::RefinementSpec spec;
  spec.abstract = &abs;
  spec.concrete = &conc;
  spec.gluing_text = gluing;
  spec.gluing = tmkit::ex::parse(gluing);
  std::istringstream in(map_text);
  std::string pair;
  while (std::getline(in, pair, ',')) {
    size_t eq = pair.find('=');
    if (eq == std::string::npos) throw UsageError("--map expects conc=abs pairs: " + pair);
    spec.event_map[pair.substr(0, eq)] = pair.substr(eq + 1);
  }
  tmkit::eb::RefinementReport r =
      tmkit::eb::check_refinement(spec, parse_bounds(bounds), max_states);
  std::ostringstream out;
  if (r.passed) {
    out << "refinement pass\n";
  } else {
    out << "refinement FAIL: " << r.reason << "\n";
    out << "concrete " << r.concrete_from << " -" << r.concrete_event << "-> " << r.concrete_to
        << " abstract " << r.abstract_state << "\n";
  }
  json j{{"command", "refine"}, {"abstract", abstract_path}, {"concrete", concrete_path},
         {"passed", r.passed}, {"reason", r.reason}, {"event", r.concrete_event}};
  emit(as_json, j, out.str());
  return r.passed ? kExitOk : kExitCheckFailed;
}

int cmd_conform(const std::string& path, const std::string& scenario_path,
                const std::string& machine_path, const std::string& map_path, bool signal_mode,
                const std::vector<std::string>& bounds, bool as_json) {
  tmkit::Model m = load_model(path);
  std::vector<tmkit::EventDef> events = events_for(m, "declared");
  tmkit::sim::Scenario s =
      tmkit::sim::parse_scenario(read_file_or_die(scenario_path), m, scenario_path);
  if (signal_mode) s.signal_mode = true;
  tmkit::eb::Machine machine = load_machine(machine_path);
  tmkit::cases::ConformanceMap map =
      tmkit::cases::parse_conformance(read_file_or_die(map_path), map_path);

  tmkit::eb::Bindings consts = parse_bounds(bounds);
  for (const auto& c : machine.context.constants)
    if (c.is_int() && !consts.count(c.name)) {
      auto it = s.init_vars.find(c.name);
      if (it != s.init_vars.end()) consts[c.name] = it->second;
    }

  tmkit::sim::RunResult r = tmkit::sim::run(m, events, s, {});
  tmkit::cases::ConformanceReport report =
      tmkit::cases::conformance_check(r.trace, machine, map, consts);
  std::ostringstream out;
  if (report.passed) out << "REPLAY pass (" << report.replayed << " events)\n";
  else out << report.reason << " step=" << report.failed_step << " state=" << report.state << "\n";
  json j{{"command", "conform"}, {"file", path}, {"machine", machine_path},
         {"passed", report.passed}, {"replayed", report.replayed}, {"reason", report.reason}};
  emit(as_json, j, out.str());
  return report.passed ? kExitOk : kExitCheckFailed;
}

int cmd_export_dot(const std::string& path, bool as_json) {
  tmkit::Model m = load_model(path);
  tmkit::SourceText dot = tmkit::export_dot(m);
  json j{{"command", "export-dot"}, {"file", path}, {"dot", dot.text}};
  emit(as_json, j, dot.text);
  return kExitOk;
}

int cmd_case(const std::string& name, const std::string& dir_flag, bool as_json) {
  std::string dir = cases_dir(dir_flag);
  if (name.empty()) {
    json arr = json::array();
    std::ostringstream out;
    for (const auto& c : tmkit::cases::known_cases()) {
      arr.push_back(c);
      out << c << "\n";
    }
    emit(as_json, json{{"command", "case"}, {"cases", arr}}, out.str());
    return kExitOk;
  }
  tmkit::cases::CaseBundle bundle = tmkit::cases::load_case(name, dir);
  std::ostringstream out;
  out << "case " << bundle.name << "\n";
  out << "model " << (bundle.model ? "yes" : "no") << "\n";
  out << "machine " << (bundle.machine ? "yes" : "no") << "\n";
  out << "events " << bundle.events.size() << "\n";
  out << "monitors " << bundle.monitors.size() << "\n";
  for (const auto& s : bundle.scenarios) out << "scenario " << s.name << "\n";
  out << "conformance " << (bundle.conformance ? "yes" : "no") << "\n";
  json scenarios = json::array();
  for (const auto& s : bundle.scenarios) scenarios.push_back(s.name);
  json j{{"command", "case"}, {"name", bundle.name}, {"model", bundle.model.has_value()},
         {"machine", bundle.machine.has_value()}, {"events", bundle.events.size()},
         {"monitors", bundle.monitors.size()}, {"scenarios", scenarios},
         {"conformance", bundle.conformance.has_value()}};
  emit(as_json, j, out.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Token-flow (thimac) and guarded-event model toolchain"};
  app.require_subcommand(1);
  bool as_json = false;

  std::string file, scenario, monitors, machine, map_path, start, dir_flag, name;
  std::string granularity = "declared";
  std::string abstract_path, concrete_path, gluing, map_text, graph_name;
  std::vector<std::string> bounds;
  bool signal_mode = false, chains = false;
  int max_states = 100000;

  auto* parse_cmd = app.add_subcommand("parse", "parse a model file");
  parse_cmd->add_option("file", file)->required();

  auto* check_cmd = app.add_subcommand("check", "validate a model file");
  check_cmd->add_option("file", file)->required();

  auto* events_cmd = app.add_subcommand("events", "list the dynamic model's events");
  events_cmd->add_option("file", file)->required();
  events_cmd->add_option("--granularity", granularity, "fine|declared");

  auto* behavior_cmd = app.add_subcommand("behavior", "behavior graph or chains");
  behavior_cmd->add_option("file", file)->required();
  behavior_cmd->add_option("--granularity", granularity, "fine|declared");
  behavior_cmd->add_flag("--chains", chains, "emit maximal chains");
  behavior_cmd->add_option("--start", start, "start event for chains");

  auto* simulate_cmd = app.add_subcommand("simulate", "run a scenario");
  simulate_cmd->add_option("file", file)->required();
  simulate_cmd->add_option("--scenario", scenario)->required();
  simulate_cmd->add_option("--monitors", monitors);
  simulate_cmd->add_flag("--signal-mode", signal_mode, "triggers travel as signals");
  simulate_cmd->add_option("--granularity", granularity, "fine|declared");

  auto* explore_cmd = app.add_subcommand("explore", "reachable states of a machine");
  explore_cmd->add_option("file", file)->required();
  explore_cmd->add_option("--bound", bounds, "constant binding name=value");
  explore_cmd->add_option("--max-states", max_states);

  auto* refine_cmd = app.add_subcommand("refine", "check a refinement");
  refine_cmd->add_option("--abstract", abstract_path)->required();
  refine_cmd->add_option("--concrete", concrete_path)->required();
  refine_cmd->add_option("--gluing", gluing)->required();
  refine_cmd->add_option("--map", map_text)->required();
  refine_cmd->add_option("--bound", bounds, "constant binding name=value");
  refine_cmd->add_option("--max-states", max_states);

  auto* conform_cmd = app.add_subcommand("conform", "replay a trace through a machine");
  conform_cmd->add_option("file", file)->required();
  conform_cmd->add_option("--scenario", scenario)->required();
  conform_cmd->add_option("--machine", machine)->required();
  conform_cmd->add_option("--map", map_path)->required();
  conform_cmd->add_flag("--signal-mode", signal_mode);
  conform_cmd->add_option("--bound", bounds, "constant binding name=value");

  auto* dot_cmd = app.add_subcommand("export-dot", "directed-graph description");
  dot_cmd->add_option("file", file)->required();

  auto* case_cmd = app.add_subcommand("case", "bundled cases");
  case_cmd->add_option("name", name);
  case_cmd->add_option("--dir", dir_flag, "corpus directory (default $TMKIT_CASES or ./cases)");

  for (auto* sub : app.get_subcommands({}))
    sub->add_flag("--json", as_json, "structured output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (parse_cmd->parsed()) return cmd_parse(file, as_json);
    if (check_cmd->parsed()) return cmd_check(file, as_json);
    if (events_cmd->parsed()) return cmd_events(file, granularity, as_json);
    if (behavior_cmd->parsed()) return cmd_behavior(file, granularity, chains, start, as_json);
    if (simulate_cmd->parsed())
      return cmd_simulate(file, scenario, monitors, signal_mode, granularity, as_json);
    if (explore_cmd->parsed()) return cmd_explore(file, bounds, max_states, as_json);
    if (refine_cmd->parsed())
      return cmd_refine(abstract_path, concrete_path, gluing, map_text, bounds, max_states,
                        as_json);
    if (conform_cmd->parsed())
      return cmd_conform(file, scenario, machine, map_path, signal_mode, bounds, as_json);
    if (dot_cmd->parsed()) return cmd_export_dot(file, as_json);
    if (case_cmd->parsed()) return cmd_case(name, dir_flag, as_json);
  } catch (const tmkit::TmParseError& e) {
    std::cerr << "parse error:" << e.line << ":" << e.column << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
