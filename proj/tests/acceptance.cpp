// Acceptance suite: one pass/fail line per criterion, exit 0 only when all
// pass. Run through ctest or directly from the build tree.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tmkit/case_models.hpp"
#include "tmkit/eventb_lite.hpp"
#include "tmkit/tm_dynamics.hpp"
#include "tmkit/tm_lang.hpp"
#include "tmkit/tm_sim.hpp"

using namespace tmkit;

namespace {

const char* kCases = TMKIT_CASES_DIR;
const char* kCli = TMKIT_CLI_PATH;

struct Checker {
  bool ok = true;
  std::string why;
  void expect(bool cond, const std::string& msg) {
    if (!cond && ok) {
      ok = false;
      why = msg;
    }
  }
};

int failures = 0;

void criterion(int n, const std::string& title, const std::function<void(Checker&)>& body) {
  Checker c;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  std::printf("[%s] criterion %d: %s%s%s\n", c.ok ? "PASS" : "FAIL", n, title.c_str(),
              c.ok ? "" : " -- ", c.ok ? "" : c.why.c_str());
  std::fflush(stdout);
  if (!c.ok) failures++;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Model case_model(const std::string& name) {
  std::string path = std::string(kCases) + "/" + name + "/model.tm";
  return parse({slurp(path), path});
}

eb::Machine case_machine(const std::string& name) {
  std::string path = std::string(kCases) + "/" + name + "/machine.ebl";
  return eb::parse_ebl(slurp(path), path);
}

struct CliRun {
  int status = -1;
  std::string output;
};

CliRun run_cli(const std::string& args, const std::string& tag) {
  std::string file =
      (std::filesystem::temp_directory_path() / ("tmkit_acceptance_" + tag + ".txt")).string();
  std::string cmd = std::string(kCli) + " " + args + " > " + file + " 2>&1";
  int rc = std::system(cmd.c_str());
  CliRun r;
  r.status = rc < 0 ? rc : WEXITSTATUS(rc);
  r.output = slurp(file);
  std::filesystem::remove(file);
  return r;
}

// ---- criterion 1: the adjacency relation ----------------------------------

using KindSeq = std::vector<StageKind>;

std::vector<KindSeq> oracle_sequences() {
  using K = StageKind;
  return {
      {K::create, K::release, K::transfer_out},
      {K::create, K::process, K::release, K::transfer_out},
      {K::transfer_in, K::receive, K::release, K::transfer_out},
      {K::transfer_in, K::arrive, K::release, K::transfer_out},
      {K::transfer_in, K::arrive, K::accept, K::release, K::transfer_out},
      {K::transfer_in, K::arrive, K::accept, K::process, K::release, K::transfer_out},
      {K::transfer_in, K::receive, K::process, K::release, K::transfer_out},
      {K::transfer_out, K::transfer_in},
  };
}

std::set<std::pair<StageKind, StageKind>> oracle_pairs() {
  std::set<std::pair<StageKind, StageKind>> pairs;
  for (const auto& seq : oracle_sequences())
    for (size_t i = 0; i + 1 < seq.size(); i++) pairs.insert({seq[i], seq[i + 1]});
  return pairs;
}

// hand-build a model whose single chain follows the kinds; the transfer
// hop crosses a thimac boundary, everything else stays inside one
Model chain_model(const KindSeq& seq) {
  Model m;
  Thimac t0;
  t0.id = 0;
  t0.name = "m";
  m.thimacs.push_back(t0);
  ThimacId cur = 0;
  StageId prev = -1;
  for (size_t i = 0; i < seq.size(); i++) {
    if (i > 0 && seq[i - 1] == StageKind::transfer_out && seq[i] == StageKind::transfer_in) {
      Thimac t;
      t.id = static_cast<ThimacId>(m.thimacs.size());
      t.name = "m" + std::to_string(t.id);
      m.thimacs.push_back(t);
      cur = t.id;
    }
    Stage s;
    s.id = static_cast<StageId>(m.stages.size());
    s.kind = seq[i];
    s.owner = cur;
    m.stages.push_back(s);
    m.thimacs[cur].stages.push_back(s.id);
    if (prev >= 0) m.flows.push_back({prev, s.id});
    prev = s.id;
  }
  return m;
}

void criterion1(Checker& c) {
  auto legal = oracle_pairs();
  c.expect(legal.size() == 13, "oracle must enumerate 13 pairs");
  int trues = 0;
  for (int i = 0; i < kStageKindCount; i++)
    for (int j = 0; j < kStageKindCount; j++) {
      auto from = static_cast<StageKind>(i);
      auto to = static_cast<StageKind>(j);
      bool want = legal.count({from, to}) != 0;
      if (adjacency_legal(from, to)) trues++;
      c.expect(adjacency_legal(from, to) == want,
               "adjacency_legal disagrees with the enumeration at (" +
                   std::string(to_string(from)) + ", " + std::string(to_string(to)) + ")");
    }
  c.expect(trues == 13, "truth table must have exactly 13 true entries");

  // each chain validates end-to-end
  for (const auto& seq : oracle_sequences()) {
    Model m = chain_model(seq);
    c.expect(validate_static(m).ok(), "legal chain failed validation");
  }

  // any single stage-kind substitution creating an illegal pair is rejected
  int substitutions = 0;
  for (const auto& seq : oracle_sequences()) {
    for (size_t at = 0; at < seq.size(); at++) {
      for (int k = 0; k < kStageKindCount; k++) {
        auto replacement = static_cast<StageKind>(k);
        if (replacement == seq[at]) continue;
        KindSeq mutated = seq;
        mutated[at] = replacement;
        bool introduces_illegal = false;
        for (size_t i = 0; i + 1 < mutated.size(); i++)
          introduces_illegal |= legal.count({mutated[i], mutated[i + 1]}) == 0;
        if (!introduces_illegal) continue;
        substitutions++;
        Model m = chain_model(mutated);
        bool flagged = false;
        for (const auto& f : validate_static(m).findings)
          flagged |= f.rule == RuleCode::illegal_adjacency || f.rule == RuleCode::cross_machine;
        c.expect(flagged, "an illegal substitution slipped through validation");
      }
    }
  }
  c.expect(substitutions > 0, "the substitution sweep must exercise something");
}

// ---- criterion 2: y = 10/x -------------------------------------------------

void criterion2(Checker& c) {
  Model m = case_model("y10x");
  c.expect(validate_static(m).ok(), "y10x must validate");
  ExtractResult er = extract_events(m, Granularity::declared);
  c.expect(er.events.size() == 5, "y10x must declare exactly 5 events");
  BehaviorGraph g = behavior_graph(m, er.events);
  auto chains = maximal_chains(g);
  std::vector<std::vector<std::string>> want = {{"A", "D", "B", "C"}, {"A", "E"}};
  c.expect(chains == want, "y10x chains must be A D B C and A E");

  sim::Scenario s5 =
      sim::parse_scenario("at 1 inject check.transfer.input 5\n", m, "<acc>");
  sim::RunResult r5 = sim::run(m, er.events, s5, {});
  c.expect(!r5.trace.records.empty() && r5.trace.records.back().event == "C",
           "x=5 must end in the calculation event");
  c.expect(r5.trace.records.back().detail.find("y.create") == 0 &&
               r5.trace.records.back().detail.find("payload=2") != std::string::npos,
           "x=5 must create y=2");

  sim::Scenario s0 =
      sim::parse_scenario("at 1 inject check.transfer.input 0\n", m, "<acc>");
  sim::RunResult r0 = sim::run(m, er.events, s0, {});
  c.expect(!r0.trace.records.empty() && r0.trace.records.back().event == "E",
           "x=0 must terminate at the zero event");
  for (const auto& rec : r0.trace.records)
    c.expect(rec.detail.find("y.create") == std::string::npos, "x=0 must not create y");
}

// ---- criterion 3: bridge m0 -------------------------------------------------

void criterion3(Checker& c) {
  Model m = case_model("bridge_m0");
  auto events = extract_events(m, Granularity::declared).events;
  auto monitors = sim::parse_monitors("n_nat : n in NAT\nbound : n <= d\n", "<acc>");
  for (long long d = 1; d <= 3; d++) {
    std::ostringstream text;
    text << "var d = " << d << "\noption max_ticks 100\n";
    long long t = 1;
    for (long long i = 0; i <= d; i++) text << "at " << t++ << " inject gate.transfer.input " << (100 + i) << "\n";
    for (long long i = 0; i < d; i++) text << "at " << t++ << " inject exit.transfer.input 1\n";
    sim::Scenario s = sim::parse_scenario(text.str(), m, "<acc>");
    sim::RunResult r = sim::run(m, events, s, monitors);
    c.expect(r.monitors.all_passed(), "m0 monitors must hold at d=" + std::to_string(d));
    c.expect(r.rejected.size() == 1, "the arrival at n=d must be rejected (d=" + std::to_string(d) + ")");
    c.expect(r.final_vars.at("n") == 0, "all admitted cars must leave again");
  }

  eb::Machine mm = case_machine("bridge_m0");
  for (long long d = 1; d <= 3; d++) {
    eb::Bindings consts{{"d", d}};
    eb::StateGraph g = eb::explore(mm, consts, 1000);
    c.expect(static_cast<long long>(g.states.size()) == d + 1,
             "m0 must reach exactly d+1 states at d=" + std::to_string(d));
    c.expect(eb::check_invariants(g, mm, consts).all_passed(), "m0 invariants must pass");
    c.expect(eb::check_deadlock(g, mm, consts).deadlocked.empty(),
             "m0 must be deadlock-free for d >= 1");
  }
  eb::StateGraph g0 = eb::explore(mm, {{"d", 0}}, 1000);
  eb::DeadlockReport dr = eb::check_deadlock(g0, mm, {{"d", 0}});
  c.expect(dr.deadlocked == std::vector<int>{0}, "d=0 must deadlock in the initial state");
}

// ---- criterion 4: bridge m1 -------------------------------------------------

void criterion4(Checker& c) {
  eb::Machine m1 = case_machine("bridge_m1");
  for (long long d = 1; d <= 3; d++) {
    eb::Bindings consts{{"d", d}};
    eb::StateGraph g = eb::explore(m1, consts, 10000);
    c.expect(!g.truncated, "m1 exploration must complete");
    int ia = m1.variable_index("a"), ib = m1.variable_index("b"), ic = m1.variable_index("c");
    for (const auto& s : g.states) {
      long long a = s.vals[ia].num, b = s.vals[ib].num, cc = s.vals[ic].num;
      c.expect(a == 0 || cc == 0, "one-way must hold in every reachable state");
      c.expect(a + b + cc <= d, "the capacity bound must hold in every reachable state");
    }
    c.expect(eb::check_invariants(g, m1, consts).all_passed(), "m1 invariants must pass");
  }

  // brute-force count of the one-way triples reachable at d=1
  std::set<std::tuple<long long, long long, long long>> oracle{{0, 0, 0}};
  bool grew = true;
  while (grew) {
    grew = false;
    auto snap = oracle;
    for (auto [a, b, cc] : snap) {
      auto push = [&](long long x, long long y, long long z) {
        if (x >= 0 && y >= 0 && z >= 0 && x + y + z <= 1 && (x == 0 || z == 0))
          grew |= oracle.insert({x, y, z}).second;
      };
      if (a + b + cc < 1 && cc == 0) push(a + 1, b, cc);
      if (a > 0) push(a - 1, b + 1, cc);
      if (b > 0 && a == 0) push(a, b - 1, cc + 1);
      if (cc > 0) push(a, b, cc - 1);
    }
  }
  c.expect(oracle.size() == 4, "the d=1 oracle must count 4 states");
  eb::StateGraph g1 = eb::explore(m1, {{"d", 1}}, 10000);
  c.expect(g1.states.size() == oracle.size(), "m1 at d=1 must reach exactly 4 states");

  eb::Machine m0 = case_machine("bridge_m0");
  eb::RefinementSpec spec;
  spec.abstract = &m0;
  spec.concrete = &m1;
  spec.gluing_text = "abs_n = a + b + c";
  spec.gluing = ex::parse(spec.gluing_text);
  spec.event_map = {{"ML_in", "ML_in"}, {"IL_in", "SKIP"}, {"IL_out", "SKIP"},
                    {"ML_out", "ML_out"}};
  for (long long d = 1; d <= 3; d++) {
    eb::RefinementReport r = eb::check_refinement(spec, {{"d", d}}, 10000);
    c.expect(r.passed, "m1 must refine m0 under n = a+b+c at d=" + std::to_string(d));
  }
}

// ---- criterion 5: bridge m2 -------------------------------------------------

void criterion5(Checker& c) {
  Model m = case_model("bridge_m2");
  ExtractResult er = extract_events(m, Granularity::declared);
  c.expect(er.events.size() == 33, "m2 must declare 33 events");
  BehaviorGraph g = behavior_graph(m, er.events);
  c.expect(g.has_edge("E1", "E2"), "entry chain must contain E1->E2");
  c.expect(g.has_edge("E2", "E3"), "entry chain must contain E2->E3");
  c.expect(g.has_edge("E3", "E4"), "entry chain must contain E3->E4");
  struct Branch {
    const char* counter;
    const char* full;
    const char* free;
  };
  for (const Branch& br : {Branch{"E5", "E6", "E8"}, Branch{"E16", "E17", "E18"},
                           Branch{"E27", "E28", "E29"}}) {
    auto succ = g.successors(br.counter);
    bool has_full = std::find(succ.begin(), succ.end(), br.full) != succ.end();
    bool has_free = std::find(succ.begin(), succ.end(), br.free) != succ.end();
    c.expect(has_full && has_free && std::string(br.full) != br.free,
             std::string("branch pair of ") + br.counter + " must be distinct successors");
  }

  // both signal modes project to the same car-movement trace
  cases::CaseBundle b = cases::load_case("bridge_m2", kCases);
  for (const auto& entry : b.scenarios) {
    sim::Scenario plain = entry.scenario;
    sim::Scenario signal = entry.scenario;
    plain.signal_mode = false;
    signal.signal_mode = true;
    sim::RunResult ra = sim::run(*b.model, b.events, plain, b.monitors);
    sim::RunResult rb = sim::run(*b.model, b.events, signal, b.monitors);
    c.expect(ra.monitors.all_passed() && rb.monitors.all_passed(),
             "m2 monitors must hold in both modes for " + entry.name);
    auto pa = cases::project_trace(ra.trace, *b.conformance);
    auto pb = cases::project_trace(rb.trace, *b.conformance);
    c.expect(pa == pb, "projected traces must agree across signal modes for " + entry.name);
    c.expect(!pa.empty(), "projected traces must not be empty for " + entry.name);
  }
}

// ---- criterion 6: conformance ----------------------------------------------

void criterion6(Checker& c) {
  for (const std::string name : {"bridge_m0", "bridge_m1", "bridge_m2"}) {
    cases::CaseBundle b = cases::load_case(name, kCases);
    c.expect(b.conformance.has_value() && b.machine.has_value(), name + " must bundle a map");
    for (const auto& entry : b.scenarios) {
      for (bool signal : {false, true}) {
        sim::Scenario s = entry.scenario;
        s.signal_mode = signal;
        sim::RunResult r = sim::run(*b.model, b.events, s, b.monitors);
        eb::Bindings consts;
        for (const auto& k : b.machine->context.constants) {
          auto it = s.init_vars.find(k.name);
          if (it != s.init_vars.end()) consts[k.name] = it->second;
        }
        cases::ConformanceReport report =
            cases::conformance_check(r.trace, *b.machine, *b.conformance, consts);
        c.expect(report.passed, name + "/" + entry.name +
                                    (signal ? " (signal)" : " (inline)") +
                                    " must replay: " + report.reason);
      }
    }
  }
}

// ---- criterion 7: round-trip and determinism --------------------------------

void criterion7(Checker& c) {
  for (const auto& name : cases::known_cases()) {
    cases::CaseBundle b = cases::load_case(name, kCases);
    if (!b.model) continue;
    std::string once = serialize(*b.model).text;
    Model again = parse({once, "<round>"});
    c.expect(serialize(again).text == once, name + " must be a serialization fixed point");
  }

  std::string y10x = std::string(kCases) + "/y10x/model.tm";
  CliRun chains1 = run_cli("behavior " + y10x + " --chains", "chains1");
  CliRun chains2 = run_cli("behavior " + y10x + " --chains", "chains2");
  c.expect(chains1.status == 0, "behavior --chains must exit 0");
  c.expect(chains1.output == "A D B C\nA E\n", "chains output must be the two published lines");
  c.expect(chains1.output == chains2.output, "behavior output must repeat byte for byte");

  std::string m1 = std::string(kCases) + "/bridge_m1";
  std::string sim_args = "simulate " + m1 + "/model.tm --scenario " + m1 +
                         "/scenario-roundtrip.txt --monitors " + m1 + "/monitors.txt";
  CliRun sim1 = run_cli(sim_args, "sim1");
  CliRun sim2 = run_cli(sim_args, "sim2");
  c.expect(sim1.status == 0, "simulate must exit 0 on a clean run");
  c.expect(sim1.output == sim2.output, "simulate output must repeat byte for byte");

  CliRun explore1 = run_cli("explore " + m1 + "/machine.ebl --bound d=2", "exp1");
  CliRun explore2 = run_cli("explore " + m1 + "/machine.ebl --bound d=2", "exp2");
  c.expect(explore1.status == 0 && explore1.output == explore2.output,
           "explore output must repeat byte for byte");
  c.expect(explore1.output.find("invariants=pass") != std::string::npos,
           "explore must report passing invariants");

  // frozen reference outputs for the trace byte format
  struct Golden {
    const char* args;
    const char* file;
  };
  for (const Golden& g :
       {Golden{"simulate %C/y10x/model.tm --scenario %C/y10x/scenario-x5.txt",
               "y10x-x5.out"},
        Golden{"simulate %C/bridge_m0/model.tm --scenario %C/bridge_m0/scenario-basic.txt "
               "--monitors %C/bridge_m0/monitors.txt",
               "bridge_m0-basic.out"},
        Golden{"simulate %C/bridge_m2/model.tm --scenario %C/bridge_m2/scenario-roundtrip.txt "
               "--monitors %C/bridge_m2/monitors.txt",
               "bridge_m2-roundtrip.out"}}) {
    std::string args = g.args;
    for (size_t at = args.find("%C"); at != std::string::npos; at = args.find("%C"))
      args.replace(at, 2, kCases);
    CliRun run = run_cli(args, std::string("golden_") + g.file);
    std::string want = slurp(std::string(kCases) + "/../tests/golden/" + g.file);
    c.expect(!want.empty(), std::string("golden file missing: ") + g.file);
    c.expect(run.output == want, std::string("output drifted from tests/golden/") + g.file);
  }

  CliRun check = run_cli("check " + y10x, "check");
  c.expect(check.status == 0 && check.output.find("0 findings") != std::string::npos,
           "check must report 0 findings on y10x");
  CliRun check_json = run_cli("check " + y10x + " --json", "checkjson");
  c.expect(check_json.output.find("\"count\": 0") != std::string::npos,
           "check --json must carry the same finding count");
  CliRun missing = run_cli("parse no_such_file.tm", "missing");
  c.expect(missing.status == 2, "parse of a missing file must exit 2");
}

// ---- criterion 8: frame and simultaneity ------------------------------------

void criterion8(Checker& c) {
  std::mt19937 rng(424242);
  auto pick_var = [&](int nvars) { return "v" + std::to_string(rng() % nvars); };
  int fired_total = 0;
  for (int round = 0; round < 60; round++) {
    int nvars = 2 + static_cast<int>(rng() % 3);
    std::ostringstream text;
    text << "MACHINE gen" << round << "\nVARIABLES\n";
    for (int v = 0; v < nvars; v++) text << "  v" << v << " : int\n";
    text << "INIT\n";
    for (int v = 0; v < nvars; v++) text << "  v" << v << " := " << (rng() % 5) << "\n";
    int nevents = 1 + static_cast<int>(rng() % 3);
    for (int e = 0; e < nevents; e++) {
      text << "EVENT Ev" << e << "\nWHEN\n";
      text << "  grd1: " << pick_var(nvars) << " + " << (rng() % 4) << " <= "
           << pick_var(nvars) << " + " << (rng() % 7) << "\nTHEN\n";
      int nacts = 1 + static_cast<int>(rng() % nvars);
      std::vector<int> lhs(nvars);
      for (int v = 0; v < nvars; v++) lhs[v] = v;
      std::shuffle(lhs.begin(), lhs.end(), rng);
      for (int a = 0; a < nacts; a++)
        text << "  act" << a << ": v" << lhs[a] << " := " << pick_var(nvars) << " + "
             << pick_var(nvars) << " - " << (rng() % 3) << "\n";
      text << "END\n";
    }
    eb::Machine m = eb::parse_ebl(text.str(), "<gen>");
    eb::State s = eb::initial_state(m, {});
    for (int step = 0; step < 8; step++) {
      auto en = eb::enabled(m, s, {});
      if (en.empty()) break;
      const std::string& pick = en[rng() % en.size()];
      eb::State next = eb::fire(m, s, pick, {});
      fired_total++;
      const eb::Event* ev = m.find_event(pick);
      for (size_t v = 0; v < m.variables.size(); v++) {
        bool assigned = false;
        for (const auto& a : ev->actions) assigned |= a.var == m.variables[v].name;
        if (!assigned)
          c.expect(next.vals[v] == s.vals[v], "an unassigned variable changed across fire");
      }
      // permuting the actions never changes the post-state
      for (int perm = 0; perm < 4; perm++) {
        eb::Machine shuffled = m;
        for (auto& e : shuffled.events)
          std::shuffle(e.actions.begin(), e.actions.end(), rng);
        c.expect(eb::fire(shuffled, s, pick, {}) == next,
                 "permuting actions changed the post-state");
      }
      s = next;
    }
  }
  c.expect(fired_total > 100, "the generator must actually exercise fire");
}

}  // namespace

int main() {
  criterion(1, "adjacency relation is exactly the 13 derivable pairs", criterion1);
  criterion(2, "y=10/x events, chains, and both simulations reproduce", criterion2);
  criterion(3, "bridge m0 bounds, rejection, state counts, deadlock behavior", criterion3);
  criterion(4, "bridge m1 one-way + capacity invariants and refinement of m0", criterion4);
  criterion(5, "bridge m2 behavior graph and signal-mode agreement", criterion5);
  criterion(6, "conformance replay passes for every bundled bridge scenario", criterion6);
  criterion(7, "serialize/parse fixed point and byte-identical reruns", criterion7);
  criterion(8, "randomized frame rule and action-order independence", criterion8);
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  else std::printf("all criteria passed\n");
  return failures == 0 ? 0 : 1;
}
