#include "tmkit/case_models.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace tmkit::cases {

namespace {

std::optional<std::string> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

[[noreturn]] void load_fail(const std::string& file, const std::string& msg) {
  throw CaseError(CaseError::Code::load, file + ": " + msg);
}

}  // namespace

ConformanceMap parse_conformance(const std::string& text, const std::string& origin) {
  ConformanceMap map;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    lineno++;
    size_t hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    std::string line = ex::normalize_text(raw);
    if (line.empty()) continue;
    size_t arrow = line.find("->");
    if (arrow == std::string::npos)
      load_fail(origin + ":" + std::to_string(lineno), "expected `EVENT -> NAME`");
    std::string from = ex::normalize_text(line.substr(0, arrow));
    std::string to = ex::normalize_text(line.substr(arrow + 2));
    if (from.empty() || to.empty())
      load_fail(origin + ":" + std::to_string(lineno), "expected `EVENT -> NAME`");
    if (map.pairs.count(from))
      load_fail(origin + ":" + std::to_string(lineno), "duplicate mapping for " + from);
    map.pairs[from] = to;
  }
  return map;
}

const std::vector<std::string>& known_cases() {
  static const std::vector<std::string> kCases = {"y10x", "trafficlight", "bridge_m0",
                                                  "bridge_m1", "bridge_m2"};
  return kCases;
}

CaseBundle load_case(const std::string& name, const std::string& cases_dir) {
  const auto& known = known_cases();
  if (std::find(known.begin(), known.end(), name) == known.end())
    throw CaseError(CaseError::Code::unknown_case, "UNKNOWN_CASE: " + name);
  fs::path dir = fs::path(cases_dir) / name;
  if (!fs::is_directory(dir))
    load_fail(dir.string(), "case directory missing");

  CaseBundle bundle;
  bundle.name = name;

  fs::path model_path = dir / "model.tm";
  if (auto text = read_file(model_path)) {
    Model m;
    try {
      m = parse({*text, model_path.string()});
    } catch (const TmParseError& e) {
      load_fail(model_path.string() + ":" + std::to_string(e.line) + ":" +
                    std::to_string(e.column),
                e.what());
    }
    ValidationReport report = validate_static(m);
    if (!report.ok())
      load_fail(model_path.string(), std::string(to_string(report.findings[0].rule)) + " " +
                                         report.findings[0].message);
    bundle.model = std::move(m);
    if (!bundle.model->declared_events.empty()) {
      ExtractResult er = extract_events(*bundle.model, Granularity::declared);
      bundle.events = std::move(er.events);
      bundle.uncovered = std::move(er.uncovered);
    }
  }

  fs::path machine_path = dir / "machine.ebl";
  if (auto text = read_file(machine_path)) {
    try {
      bundle.machine = eb::parse_ebl(*text, machine_path.string());
    } catch (const eb::EbError& e) {
      load_fail(machine_path.string(), e.what());
    }
  }

  if (!bundle.model && !bundle.machine)
    load_fail(dir.string(), "neither model.tm nor machine.ebl present");

  fs::path monitors_path = dir / "monitors.txt";
  if (auto text = read_file(monitors_path)) {
    try {
      bundle.monitors = sim::parse_monitors(*text, monitors_path.string());
    } catch (const sim::SimError& e) {
      load_fail(monitors_path.string(), e.what());
    }
    // monitors must be closed over the model's variables
    if (bundle.model) {
      for (const auto& mon : bundle.monitors) {
        std::vector<std::string> names;
        ex::collect_names(*mon.predicate, names);
        for (const auto& n : names)
          if (!bundle.model->find_variable(n))
            load_fail(monitors_path.string(),
                      "monitor " + mon.name + " reads unknown variable " + n);
      }
    }
  }

  std::vector<fs::path> scenario_files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string fname = entry.path().filename().string();
    if (fname.rfind("scenario-", 0) == 0 && entry.path().extension() == ".txt")
      scenario_files.push_back(entry.path());
  }
  std::sort(scenario_files.begin(), scenario_files.end());
  for (const auto& p : scenario_files) {
    if (!bundle.model) load_fail(p.string(), "scenario without a model");
    auto text = read_file(p);
    ScenarioEntry entry;
    entry.name = p.stem().string();
    entry.path = p.string();
    try {
      entry.scenario = sim::parse_scenario(*text, *bundle.model, p.string());
    } catch (const sim::SimError& e) {
      load_fail(p.string(), e.what());
    }
    bundle.scenarios.push_back(std::move(entry));
  }

  fs::path map_path = dir / "conformance.map";
  if (auto text = read_file(map_path)) {
    ConformanceMap map = parse_conformance(*text, map_path.string());
    // total over the model's declared events; targets must exist
    for (const auto& e : bundle.events)
      if (!map.pairs.count(e.id))
        load_fail(map_path.string(), "event " + e.id + " unmapped");
    if (bundle.machine) {
      for (const auto& [from, to] : map.pairs) {
        if (to == "IGNORE") continue;
        if (!bundle.machine->find_event(to))
          load_fail(map_path.string(), from + " maps to unknown machine event " + to);
      }
    }
    bundle.conformance = std::move(map);
  }

  return bundle;
}

std::vector<std::string> project_trace(const sim::Trace& trace, const ConformanceMap& map) {
  std::vector<std::string> out;
  for (const auto& r : trace.records) {
    if (r.event == "-") continue;
    auto it = map.pairs.find(r.event);
    if (it == map.pairs.end())
      throw CaseError(CaseError::Code::unmapped_event, "UNMAPPED_EVENT: " + r.event);
    if (it->second == "IGNORE") continue;
    out.push_back(it->second);
  }
  return out;
}

ConformanceReport conformance_check(const sim::Trace& trace, const eb::Machine& machine,
                                    const ConformanceMap& map, const eb::Bindings& consts) {
  std::vector<std::string> projected = project_trace(trace, map);
  ConformanceReport report;
  eb::State state = eb::initial_state(machine, consts);

  if (auto broken = eb::violated_invariant(machine, state, consts)) {
    report.passed = false;
    report.failed_step = 0;
    report.reason = "REPLAY_FAILED: invariant " + *broken + " fails at init";
    report.state = eb::state_text(machine, state);
    return report;
  }
  for (size_t i = 0; i < projected.size(); i++) {
    const std::string& ev = projected[i];
    const eb::Event* e = machine.find_event(ev);
    if (!e || !eb::event_enabled(machine, *e, state, consts)) {
      report.passed = false;
      report.failed_step = static_cast<int>(i);
      report.failed_event = ev;
      report.reason = "REPLAY_FAILED: " + ev + (e ? " not enabled" : " does not exist");
      report.state = eb::state_text(machine, state);
      return report;
    }
    state = eb::fire(machine, state, ev, consts);
    report.replayed++;
    if (auto broken = eb::violated_invariant(machine, state, consts)) {
      report.passed = false;
      report.failed_step = static_cast<int>(i);
      report.failed_event = ev;
      report.reason = "REPLAY_FAILED: invariant " + *broken + " fails after " + ev;
      report.state = eb::state_text(machine, state);
      return report;
    }
  }
  report.state = eb::state_text(machine, state);
  return report;
}

}  // namespace tmkit::cases
