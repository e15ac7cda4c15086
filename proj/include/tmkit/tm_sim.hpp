#pragma once

#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tmkit/tm_core.hpp"
#include "tmkit/tm_dynamics.hpp"

namespace tmkit::sim {

// Token payloads are integers (values, car numbers) or bare symbols.
using Payload = std::variant<long long, std::string>;
std::string payload_text(const Payload& p);

struct SimError : std::runtime_error {
  enum class Code {
    quiescent,
    uninitialized_variable,
    port_not_boundary,
    scenario_parse,
    eval,
  };
  Code code;
  SimError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

struct Injection {
  long long tick = 1;
  StageId port = -1;  // boundary transfer_in
  Payload payload;
};

struct Scenario {
  std::vector<Injection> injections;  // time-ordered
  std::map<std::string, long long> init_vars;
  bool signal_mode = false;
  long long max_ticks = 100;
};

// Line format: `at <tick> inject <port-path> <payload>`, `var <name> = <int>`,
// `option signal_mode on|off`, `option max_ticks <int>`.
Scenario parse_scenario(const std::string& text, const Model& m,
                        const std::string& origin = "<memory>");

struct TraceRecord {
  long long time = 0;
  std::string event;  // "-" when the executing stage is in no region
  std::string detail;
};
std::string format_record(const TraceRecord& r);  // "t=.. event=.. detail=.."

struct QuiescentPoint {
  long long time = 0;
  std::map<std::string, long long> vars;
};

// Chronological record of fired events plus the variable snapshots taken
// at every quiescent point (empty activation queue).
struct Trace {
  std::vector<TraceRecord> records;
  std::vector<QuiescentPoint> quiescent;
};

struct Monitor {
  enum class Kind : uint8_t { safety };
  std::string name;
  ex::ExprPtr predicate;
  std::string text;
  Kind kind = Kind::safety;
};

std::vector<Monitor> parse_monitors(const std::string& text,
                                    const std::string& origin = "<memory>");

struct MonitorResult {
  std::string name;
  bool passed = true;
  long long tick = -1;  // first violation
  std::map<std::string, long long> snapshot;
};

struct MonitorReport {
  std::vector<MonitorResult> results;
  bool all_passed() const;
};

// Safety monitors evaluated at every quiescent point of the trace.
MonitorReport check_monitors(const Trace& trace, const std::vector<Monitor>& monitors);

struct LightState {
  std::string id;
  enum class Color { green, red } color = Color::red;
};
// Lights are the model variables named like l1/l2/light_x holding 0 (red)
// or 1 (green).
std::vector<LightState> light_states(const Model& m, const std::map<std::string, long long>& vars);

struct RejectedToken {
  long long token = -1;
  StageId port = -1;
};

struct RunResult {
  Trace trace;
  MonitorReport monitors;
  std::vector<RejectedToken> rejected;
  std::map<std::string, long long> final_vars;
};

// Deterministic token-flow execution under one global FIFO activation
// queue. Micro-steps: token moves along one flow arc, one trigger firing,
// one guard evaluation, or one variable update; consequents enqueue FIFO;
// injections enter at their tick ahead of that tick's queued work.
class Simulation {
 public:
  enum class StepKind : uint8_t { injection, move, fire_trigger, guard_eval, var_update };

  Simulation(const Model& m, const std::vector<EventDef>& events, const Scenario& s);

  // Executes exactly one micro-step, admitting the next tick's injections
  // when the queue has drained. Throws SimError(quiescent) when neither
  // queued work nor pending injections remain.
  StepKind step();

  bool quiescent() const;
  void run_to_end();  // drain everything up to max_ticks, then finalize
  long long now() const { return tick_; }

  const Trace& trace() const { return trace_; }
  std::map<std::string, long long> vars() const { return vars_; }
  const std::vector<RejectedToken>& rejected() const { return rejected_; }

  // token accounting, for conservation checks
  long long tokens_spawned() const { return spawned_; }
  long long tokens_gone() const { return gone_; }
  int live_tokens() const;
  std::vector<std::pair<long long, StageId>> token_locations() const;

 private:
  struct TokenState {
    Payload payload;
    StageId location = -1;
    bool live = false;
  };

  struct Activation {
    StepKind kind;
    long long token = -1;
    int arc = -1;        // flow arc (move) or trigger arc (fire)
    bool copy = false;   // move: spawn a copy instead of moving
    bool in_flight = false;  // fire: signal already materialized
    StageId stage = -1;  // guard stage / injection port
    Payload cause;       // fire: payload context; injection payload
    std::string var;     // var_update
    long long value = 0;
    std::string attributed_event;
  };

  void arrival(long long token, StageId stage);
  void execute(const Activation& a);
  long long spawn_token(const Payload& p, StageId at);
  void record(StageId stage, const std::string& detail_suffix, long long token);
  std::string event_of(StageId stage) const;
  long long eval_int(const ex::Expr& e, const Payload& cause) const;
  bool admit_next_tick();
  void finalize();

  const Model& m_;
  Scenario scenario_;
  std::map<std::string, long long> vars_;
  std::vector<TokenState> tokens_;
  std::deque<Activation> queue_;
  std::map<StageId, std::deque<long long>> waiting_;
  Trace trace_;
  std::vector<RejectedToken> rejected_;
  long long tick_ = 0;
  size_t next_injection_ = 0;
  long long spawned_ = 0, gone_ = 0;
  bool finalized_ = false;

  // static views of the model
  std::vector<std::vector<int>> flow_out_;   // stage -> flow arc indices
  std::vector<std::vector<int>> trig_out_;   // stage -> trigger indices
  std::vector<std::string> covered_;         // stage -> event id or ""
  std::vector<bool> gated_;
  std::vector<int> var_thimac_;              // thimac -> variable index or -1
};

RunResult run(const Model& m, const std::vector<EventDef>& events, const Scenario& s,
              const std::vector<Monitor>& monitors);

}  // namespace tmkit::sim
