#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shelfbrg/error.hpp"
#include "shelfbrg/json_util.hpp"
#include "shelfbrg/physics.hpp"
#include "shelfbrg/scene.hpp"

// Box Relations Graph: edge (d, b) means removing d (possibly through a
// cascade) brings b down, i.e. b depends on d.
namespace shelfbrg::brg {

using IdSet = std::set<std::string, std::less<>>;

/// entries[b] = boxes whose removal destabilizes b.
struct DependencyDictionary {
  std::map<std::string, IdSet, std::less<>> entries;

  friend bool operator==(const DependencyDictionary&, const DependencyDictionary&) = default;

  const IdSet& of(std::string_view id) const {
    static const IdSet kEmpty;
    auto it = entries.find(id);
    return it == entries.end() ? kEmpty : it->second;
  }
};

struct BoxRelationsGraph {
  IdSet nodes;
  std::set<std::pair<std::string, std::string>> edges;  // (supporter, dependent)
  // Centre height per node. Ready nodes of equal dependency rank are emitted
  // highest first; nodes without an entry count as height 0.
  std::map<std::string, double, std::less<>> elevation;

  friend bool operator==(const BoxRelationsGraph&, const BoxRelationsGraph&) = default;

  bool contains(std::string_view id) const { return nodes.contains(id); }

  /// Boxes that depend on `id` directly.
  IdSet dependents(std::string_view id) const {
    IdSet out;
    for (const auto& [d, b] : edges)
      if (d == id) out.insert(b);
    return out;
  }

  /// Boxes `id` depends on directly (its D entry).
  IdSet dependencies(std::string_view id) const {
    IdSet out;
    for (const auto& [d, b] : edges)
      if (b == id) out.insert(d);
    return out;
  }

  double height_of(std::string_view id) const {
    auto it = elevation.find(id);
    return it == elevation.end() ? 0.0 : it->second;
  }
};

struct ExtractionPlan {
  std::string target;  // a box id or scene::kAllTarget
  std::vector<std::string> sequence;

  friend bool operator==(const ExtractionPlan&, const ExtractionPlan&) = default;
};

struct TaskSplit {
  std::vector<std::string> robot_tasks;
  std::vector<std::string> human_tasks;

  friend bool operator==(const TaskSplit&, const TaskSplit&) = default;
};

struct Candidate {
  std::string id;
  int support_count = 0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct SupportCandidates {
  std::vector<Candidate> ranked;

  friend bool operator==(const SupportCandidates&, const SupportCandidates&) = default;
};

enum class TaskPolicy { Literal, Independence };
enum class Ranking { Literal, AtRisk };

// ---------------------------------------------------------------------------

inline DependencyDictionary build_dependency_dictionary(const scene::Scene& s) {
  DependencyDictionary d;
  for (const auto& b : s.boxes) d.entries[b.id];
  for (const auto& b : s.boxes)
    for (const auto& fallen : physics::probe_removal(s, b.id)) d.entries[fallen].insert(b.id);
  return d;
}

namespace detail {

inline const std::string& missing_guard(const BoxRelationsGraph& g, std::string_view id) {
  auto it = g.nodes.find(id);
  if (it == g.nodes.end())
    throw Error(ErrorCode::MissingBox, "no box '" + std::string(id) + "' in the graph");
  return *it;
}

/// Kahn's algorithm over `subset`, emitting dependents before the boxes they
/// depend on. Among ready nodes the highest goes first, then the smallest id.
inline std::vector<std::string> removal_order(const BoxRelationsGraph& g, const IdSet& subset) {
  std::map<std::string, int, std::less<>> pending;  // dependents not yet emitted
  std::map<std::string, std::vector<std::string>, std::less<>> supporters;
  for (const auto& id : subset) pending[id] = 0;
  for (const auto& [d, b] : g.edges) {
    if (!subset.contains(d) || !subset.contains(b)) continue;
    ++pending[d];
    supporters[b].push_back(d);
  }

  auto later = [&g](const std::string& a, const std::string& b) {
    const double ha = g.height_of(a);
    const double hb = g.height_of(b);
    if (ha != hb) return ha < hb;
    return a > b;
  };
  std::priority_queue<std::string, std::vector<std::string>, decltype(later)> ready(later);
  for (const auto& [id, count] : pending)
    if (count == 0) ready.push(id);

  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string next = ready.top();
    ready.pop();
    for (const auto& d : supporters[next])
      if (--pending[d] == 0) ready.push(d);
    order.push_back(std::move(next));
  }
  if (order.size() != subset.size())
    throw Error(ErrorCode::CyclicDependencies,
                "dependency cycle among " + std::to_string(subset.size() - order.size()) +
                    " boxes");
  return order;
}

}  // namespace detail

/// One node per dictionary key (and per referenced id), one edge (d, b) per
/// d in D[b]. Throws CyclicDependencies if the result is not a DAG.
inline BoxRelationsGraph build_graph(const DependencyDictionary& d,
                                     std::map<std::string, double, std::less<>> elevation = {}) {
  BoxRelationsGraph g;
  g.elevation = std::move(elevation);
  for (const auto& [b, deps] : d.entries) {
    g.nodes.insert(b);
    for (const auto& dep : deps) {
      g.nodes.insert(dep);
      g.edges.emplace(dep, b);
    }
  }
  detail::removal_order(g, g.nodes);
  return g;
}

/// Dictionary plus centre heights taken from the scene.
inline BoxRelationsGraph build_graph(const scene::Scene& s) {
  std::map<std::string, double, std::less<>> elevation;
  for (const auto& b : s.boxes) elevation[b.id] = b.center.z;
  return build_graph(build_dependency_dictionary(s), std::move(elevation));
}

inline DependencyDictionary to_dictionary(const BoxRelationsGraph& g) {
  DependencyDictionary d;
  for (const auto& n : g.nodes) d.entries[n];
  for (const auto& [dep, b] : g.edges) d.entries[b].insert(dep);
  return d;
}

/// The target plus every box that transitively depends on it.
inline IdSet related_set(const BoxRelationsGraph& g, std::string_view target) {
  const std::string& root = detail::missing_guard(g, target);
  std::map<std::string, std::vector<std::string>, std::less<>> dependents;
  for (const auto& [d, b] : g.edges) dependents[d].push_back(b);

  IdSet visited{root};
  std::vector<std::string> stack{root};
  while (!stack.empty()) {
    const std::string box = std::move(stack.back());
    stack.pop_back();
    for (const auto& b : dependents[box])
      if (visited.insert(b).second) stack.push_back(b);
  }
  return visited;
}

inline ExtractionPlan safe_sequence(const BoxRelationsGraph& g, std::string_view target) {
  const IdSet related = related_set(g, target);
  return {std::string(target), detail::removal_order(g, related)};
}

inline ExtractionPlan full_clear_sequence(const BoxRelationsGraph& g) {
  return {std::string(scene::kAllTarget), detail::removal_order(g, g.nodes)};
}

inline TaskSplit divide_tasks(const ExtractionPlan& plan, const DependencyDictionary& d,
                              TaskPolicy policy = TaskPolicy::Literal) {
  IdSet seen;
  for (const auto& b : plan.sequence) {
    if (!d.entries.contains(b))
      throw Error(ErrorCode::PlanDictionaryMismatch,
                  "plan box '" + b + "' is not in the dependency dictionary");
    if (!seen.insert(b).second)
      throw Error(ErrorCode::PlanDictionaryMismatch, "plan lists box '" + b + "' twice");
  }

  TaskSplit split;
  IdSet removed;
  for (const auto& b : plan.sequence) {
    bool robot = false;
    if (policy == TaskPolicy::Literal) {
      robot = d.of(b).empty();
    } else {
      robot = true;
      for (const auto& [other, deps] : d.entries)
        if (other != b && !removed.contains(other) && deps.contains(b)) robot = false;
    }
    (robot ? split.robot_tasks : split.human_tasks).push_back(b);
    removed.insert(b);
  }
  return split;
}

/// Literal: score(b) = |D[b] ∩ R| over R = related_set(target), target
/// included. AtRisk: score(b) = how many boxes in R depend on b, target
/// excluded. Sorted by score descending then id, truncated to k.
inline SupportCandidates support_candidates(const BoxRelationsGraph& g, std::string_view target,
                                            long long k, Ranking ranking = Ranking::Literal) {
  if (k < 1) throw Error(ErrorCode::InvalidK, "k must be at least 1, got " + std::to_string(k));
  const IdSet related = related_set(g, target);

  SupportCandidates out;
  for (const auto& b : related) {
    int score = 0;
    if (ranking == Ranking::Literal) {
      for (const auto& dep : g.dependencies(b)) score += related.contains(dep) ? 1 : 0;
    } else {
      if (b == target) continue;
      for (const auto& r : g.dependents(b)) score += related.contains(r) ? 1 : 0;
    }
    out.ranked.push_back({b, score});
  }
  std::stable_sort(out.ranked.begin(), out.ranked.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return a.support_count > b.support_count;
                   });
  if (out.ranked.size() > static_cast<std::size_t>(k)) out.ranked.resize(k);
  return out;
}

namespace detail {

inline std::string dot_quote(std::string_view id) {
  std::string out = "\"";
  for (char c : id) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// Graphviz text: nodes in id order, then edges in lexicographic order.
inline std::string export_dot(const BoxRelationsGraph& g) {
  std::string out = "digraph brg {\n  rankdir=BT;\n";
  for (const auto& n : g.nodes) out += "  " + detail::dot_quote(n) + ";\n";
  for (const auto& [d, b] : g.edges)
    out += "  " + detail::dot_quote(d) + " -> " + detail::dot_quote(b) + ";\n";
  return out + "}\n";
}

// ---------------------------------------------------------------------------
// JSON mirrors

inline std::string_view to_string(TaskPolicy p) {
  return p == TaskPolicy::Literal ? "literal" : "independence";
}
inline std::string_view to_string(Ranking r) {
  return r == Ranking::Literal ? "literal" : "at_risk";
}

inline TaskPolicy parse_policy(std::string_view s) {
  if (s == "literal") return TaskPolicy::Literal;
  if (s == "independence") return TaskPolicy::Independence;
  throw Error(ErrorCode::SchemaError,
              "policy must be 'literal' or 'independence', got '" + std::string(s) + "'");
}

inline Ranking parse_ranking(std::string_view s) {
  if (s == "literal") return Ranking::Literal;
  if (s == "at_risk") return Ranking::AtRisk;
  throw Error(ErrorCode::SchemaError,
              "ranking must be 'literal' or 'at_risk', got '" + std::string(s) + "'");
}

inline Json to_json(const DependencyDictionary& d) {
  Json j = Json::object();
  for (const auto& [b, deps] : d.entries) j[b] = Json(std::vector<std::string>(deps.begin(), deps.end()));
  return j;
}

inline Json to_json(const BoxRelationsGraph& g) {
  Json edges = Json::array();
  for (const auto& [d, b] : g.edges) edges.push_back(Json::array({d, b}));
  return Json{{"nodes", std::vector<std::string>(g.nodes.begin(), g.nodes.end())},
              {"edges", std::move(edges)},
              {"dependencies", to_json(to_dictionary(g))}};
}

inline Json to_json(const ExtractionPlan& p) {
  return Json{{"target", p.target}, {"sequence", p.sequence}};
}

inline ExtractionPlan plan_from_json(const Json& j) {
  using namespace json_util;
  check_keys(j, {"target", "sequence"}, "plan");
  ExtractionPlan p;
  p.target = as_string(require(j, "target", "plan"), "plan.target");
  const Json& seq = require(j, "sequence", "plan");
  if (!seq.is_array()) throw Error(ErrorCode::SchemaError, "plan.sequence: expected an array");
  for (const auto& v : seq) p.sequence.push_back(as_string(v, "plan.sequence"));
  return p;
}

inline Json to_json(const TaskSplit& s) {
  return Json{{"robot_tasks", s.robot_tasks}, {"human_tasks", s.human_tasks}};
}

inline Json to_json(const SupportCandidates& c) {
  Json ranked = Json::array();
  for (const auto& cand : c.ranked)
    ranked.push_back(Json{{"id", cand.id}, {"support_count", cand.support_count}});
  return Json{{"ranked", std::move(ranked)}};
}

}  // namespace shelfbrg::brg
