#include "tmkit/tm_dynamics.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

namespace tmkit {

bool BehaviorGraph::has_edge(const std::string& pred, const std::string& succ) const {
  for (const auto& e : edges)
    if (e.pred == pred && e.succ == succ) return true;
  return false;
}

std::vector<std::string> BehaviorGraph::successors(const std::string& node) const {
  std::vector<std::string> out;
  for (const auto& e : edges)
    if (e.pred == node && std::find(out.begin(), out.end(), e.succ) == out.end())
      out.push_back(e.succ);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// Undirected connectivity over the arcs induced by a stage set (flows,
// explicit triggers, and guard branches all connect).
bool region_connected(const Model& m, const std::vector<StageId>& stages) {
  if (stages.empty()) return false;
  if (stages.size() == 1) return true;
  std::set<StageId> in(stages.begin(), stages.end());
  std::map<StageId, std::vector<StageId>> adj;
  auto link = [&](StageId a, StageId b) {
    if (in.count(a) && in.count(b)) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
  };
  for (const auto& f : m.flows) link(f.from, f.to);
  for (const auto& t : m.trigger_view()) link(t.from, t.to);
  std::set<StageId> seen{stages[0]};
  std::vector<StageId> work{stages[0]};
  while (!work.empty()) {
    StageId s = work.back();
    work.pop_back();
    for (StageId n : adj[s])
      if (seen.insert(n).second) work.push_back(n);
  }
  return seen.size() == in.size();
}

}  // namespace

ExtractResult extract_events(const Model& m, Granularity g) {
  ExtractResult result;
  if (g == Granularity::fine) {
    // traversal: thimacs in declaration order, stages in declaration order
    int counter = 1;
    for (const auto& th : m.thimacs) {
      for (StageId s : th.stages) {
        EventDef e;
        e.id = "E" + std::to_string(counter++);
        e.name = m.stage_path(s);
        e.region.stages = {s};
        result.events.push_back(std::move(e));
      }
    }
    return result;
  }
  if (m.declared_events.empty())
    throw DynError(DynError::Code::empty_declarations,
                   "EMPTY_DECLARATIONS: declared granularity needs event declarations");
  std::set<StageId> covered;
  for (const auto& decl : m.declared_events) {
    if (!region_connected(m, decl.stages))
      throw DynError(DynError::Code::disconnected_region,
                     "DISCONNECTED_REGION: event " + decl.id);
    EventDef e;
    e.id = decl.id;
    e.name = decl.id;
    e.region.stages = decl.stages;
    result.events.push_back(std::move(e));
    covered.insert(decl.stages.begin(), decl.stages.end());
  }
  for (const auto& s : m.stages)
    if (!covered.count(s.id)) result.uncovered.push_back(s.id);
  return result;
}

BehaviorGraph behavior_graph(const Model& m, const std::vector<EventDef>& events) {
  std::map<StageId, std::string> owner_event;
  for (const auto& e : events) {
    for (StageId s : e.region.stages) {
      auto [it, fresh] = owner_event.insert({s, e.id});
      if (!fresh)
        throw DynError(DynError::Code::overlapping_regions,
                       "OVERLAPPING_REGIONS: stage " + m.stage_path(s) + " in " +
                           it->second + " and " + e.id);
    }
  }
  BehaviorGraph g;
  for (const auto& e : events) g.nodes.push_back(e.id);
  auto add_edge = [&](StageId from, StageId to, BehaviorEdge::Cause cause) {
    auto a = owner_event.find(from);
    auto b = owner_event.find(to);
    if (a == owner_event.end() || b == owner_event.end()) return;
    if (a->second == b->second) return;
    BehaviorEdge e{a->second, b->second, cause};
    if (std::find(g.edges.begin(), g.edges.end(), e) == g.edges.end())
      g.edges.push_back(e);
  };
  for (const auto& f : m.flows) add_edge(f.from, f.to, BehaviorEdge::Cause::flow);
  for (const auto& t : m.trigger_view()) add_edge(t.from, t.to, BehaviorEdge::Cause::trigger);
  return g;
}

namespace {

bool graph_cyclic(const BehaviorGraph& g) {
  std::map<std::string, int> state;  // 0 fresh, 1 on stack, 2 done
  std::function<bool(const std::string&)> visit = [&](const std::string& n) {
    state[n] = 1;
    for (const auto& s : g.successors(n)) {
      if (state[s] == 1) return true;
      if (state[s] == 0 && visit(s)) return true;
    }
    state[n] = 2;
    return false;
  };
  for (const auto& n : g.nodes)
    if (state[n] == 0 && visit(n)) return true;
  return false;
}

void extend_chain(const BehaviorGraph& g, std::vector<std::string>& path,
                  std::set<std::string>& on_path,
                  std::vector<std::vector<std::string>>& out) {
  bool extended = false;
  for (const auto& s : g.successors(path.back())) {
    if (on_path.count(s)) continue;  // cut at first revisit
    extended = true;
    path.push_back(s);
    on_path.insert(s);
    extend_chain(g, path, on_path, out);
    on_path.erase(s);
    path.pop_back();
  }
  if (!extended) out.push_back(path);
}

}  // namespace

std::vector<std::vector<std::string>> maximal_chains(const BehaviorGraph& g,
                                                     std::optional<std::string> start) {
  std::vector<std::string> starts;
  if (start) {
    starts.push_back(*start);
  } else {
    if (graph_cyclic(g))
      throw DynError(DynError::Code::cyclic_without_start,
                     "CYCLIC_WITHOUT_START: cyclic graph needs a start event");
    std::set<std::string> has_pred;
    for (const auto& e : g.edges) has_pred.insert(e.succ);
    for (const auto& n : g.nodes)
      if (!has_pred.count(n)) starts.push_back(n);
    std::sort(starts.begin(), starts.end());
  }
  std::vector<std::vector<std::string>> out;
  for (const auto& s : starts) {
    std::vector<std::string> path{s};
    std::set<std::string> on_path{s};
    extend_chain(g, path, on_path, out);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace tmkit
