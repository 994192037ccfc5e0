#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "shelfbrg/brg.hpp"
#include "shelfbrg/error.hpp"
#include "shelfbrg/json_util.hpp"
#include "shelfbrg/physics.hpp"
#include "shelfbrg/pointing.hpp"
#include "shelfbrg/scene.hpp"
#include "shelfbrg/validation.hpp"

namespace shelfbrg::service {

enum class Actor { Robot, Human };

inline std::string_view to_string(Actor a) { return a == Actor::Robot ? "robot" : "human"; }

inline Actor parse_actor(std::string_view s) {
  if (s == "robot") return Actor::Robot;
  if (s == "human") return Actor::Human;
  throw Error(ErrorCode::SchemaError, "actor must be 'robot' or 'human', got '" + std::string(s) + "'");
}

struct StepOutcome {
  std::optional<std::string> removed_box;  // empty when a frozen plan refused the step
  Actor actor = Actor::Robot;
  std::vector<std::string> collapsed;
  bool plan_valid = true;

  friend bool operator==(const StepOutcome&, const StepOutcome&) = default;
};

struct Event {
  std::uint64_t seq = 0;
  std::string timestamp;
  std::string kind;
  Json payload;
};

struct PointingSettings {
  pointing::ClusterParams cluster;
  pointing::TargetOptions target;
};

struct SessionState {
  std::string session_id;
  scene::Scene scene;
  brg::BoxRelationsGraph brg;
  std::optional<brg::ExtractionPlan> plan;
  std::size_t cursor = 0;
  std::optional<brg::TaskSplit> split;
  bool plan_valid = true;
  std::vector<std::string> invalidated_by;  // collapse that froze the plan
  brg::TaskPolicy policy = brg::TaskPolicy::Literal;
  brg::Ranking ranking = brg::Ranking::Literal;
  PointingSettings pointing;
  std::vector<Event> events;
};

struct PlanResponse {
  brg::ExtractionPlan plan;
  brg::TaskSplit split;
};

// ---------------------------------------------------------------------------
// JSON mirrors

inline Json to_json(const StepOutcome& o) {
  Json j = Json::object();
  j["removed_box"] = o.removed_box ? Json(*o.removed_box) : Json(nullptr);
  j["actor"] = to_string(o.actor);
  j["collapsed"] = o.collapsed;
  j["plan_valid"] = o.plan_valid;
  return j;
}

inline Json to_json(const Event& e) {
  return Json{{"seq", e.seq}, {"ts", e.timestamp}, {"kind", e.kind}, {"payload", e.payload}};
}

inline Json to_json(const PlanResponse& r) {
  return Json{{"plan", brg::to_json(r.plan)}, {"split", brg::to_json(r.split)}};
}

inline Json to_json(const PointingSettings& p) {
  return Json{{"eps", p.cluster.eps},
              {"min_pts", p.cluster.min_pts},
              {"min_cluster_size", p.cluster.min_cluster_size},
              {"fraction", p.target.fraction},
              {"depth_order", p.target.order == pointing::DepthOrder::Farthest ? "farthest"
                                                                                : "nearest"}};
}

inline PointingSettings pointing_settings_from_json(const Json& j) {
  using namespace json_util;
  check_keys(j, {"eps", "min_pts", "min_cluster_size", "fraction", "depth_order"}, "pointing");
  PointingSettings p;
  if (j.contains("eps")) p.cluster.eps = as_number(j["eps"], "pointing.eps");
  if (j.contains("min_pts")) p.cluster.min_pts = static_cast<int>(as_integer(j["min_pts"], "pointing.min_pts"));
  if (j.contains("min_cluster_size"))
    p.cluster.min_cluster_size =
        static_cast<int>(as_integer(j["min_cluster_size"], "pointing.min_cluster_size"));
  if (j.contains("fraction")) p.target.fraction = as_number(j["fraction"], "pointing.fraction");
  if (j.contains("depth_order")) {
    const auto s = as_string(j["depth_order"], "pointing.depth_order");
    if (s == "farthest") p.target.order = pointing::DepthOrder::Farthest;
    else if (s == "nearest") p.target.order = pointing::DepthOrder::Nearest;
    else throw Error(ErrorCode::SchemaError, "pointing.depth_order must be 'farthest' or 'nearest'");
  }
  return p;
}

inline constexpr std::size_t kEventTail = 50;

inline Json to_json(const SessionState& s, std::size_t event_tail = kEventTail) {
  Json j = Json::object();
  j["session_id"] = s.session_id;
  j["scene"] = scene::encode_scene(s.scene);
  j["brg"] = brg::to_json(s.brg);
  j["plan"] = s.plan ? brg::to_json(*s.plan) : Json(nullptr);
  j["cursor"] = s.cursor;
  j["plan_valid"] = s.plan_valid;
  j["invalidated_by"] = s.invalidated_by;
  j["split"] = s.split ? brg::to_json(*s.split) : Json(nullptr);
  j["policy"] = brg::to_string(s.policy);
  j["ranking"] = brg::to_string(s.ranking);
  j["event_count"] = s.events.size();
  Json tail = Json::array();
  const std::size_t first = s.events.size() > event_tail ? s.events.size() - event_tail : 0;
  for (std::size_t i = first; i < s.events.size(); ++i) tail.push_back(to_json(s.events[i]));
  j["events"] = std::move(tail);
  return j;
}

/// UTC, millisecond resolution, ISO-8601.
inline std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()) % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms.count()));
  return out;
}

// ---------------------------------------------------------------------------

/// Owns all sessions. Calls on different sessions run independently; calls
/// on one session are serialized by that session's mutex, and each mutation
/// appends exactly one event.
class SessionManager {
 public:
  struct Options {
    std::optional<std::filesystem::path> events_dir;  // one <id>.jsonl per session
    std::function<std::string()> clock = utc_now;
    PointingSettings pointing;
  };

  SessionManager() : SessionManager(Options{}) {}
  explicit SessionManager(Options opts) : opts_(std::move(opts)) {
    if (opts_.events_dir) std::filesystem::create_directories(*opts_.events_dir);
  }

  std::string create_session(const Json& scene_doc, std::optional<std::string> forced_id = {},
                             std::optional<PointingSettings> pointing = {}) {
    scene::Scene s = scene::load_scene(scene_doc);
    auto slot = std::make_shared<Slot>();
    slot->state.scene = std::move(s);
    slot->state.brg = brg::build_graph(slot->state.scene);
    slot->state.pointing = pointing.value_or(opts_.pointing);

    std::string id;
    {
      std::lock_guard lock(map_mutex_);
      id = forced_id ? *forced_id : next_id();
      if (sessions_.contains(id))
        throw Error(ErrorCode::ValidationError, "session '" + id + "' already exists");
      slot->state.session_id = id;
      sessions_[id] = slot;
    }

    std::lock_guard lock(slot->mutex);
    const auto& st = slot->state;
    log(*slot, "session_created",
        Json{{"scene", scene::encode_scene(st.scene)}, {"pointing", to_json(st.pointing)}},
        Json{{"session_id", id}, {"nodes", st.brg.nodes.size()}, {"edges", st.brg.edges.size()}});
    return id;
  }

  PlanResponse request_plan(const std::string& id, const std::string& target,
                            std::optional<brg::TaskPolicy> policy = {}) {
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    auto& st = slot->state;
    if (policy) st.policy = *policy;

    brg::ExtractionPlan plan = target == scene::kAllTarget ? brg::full_clear_sequence(st.brg)
                                                           : brg::safe_sequence(st.brg, target);
    brg::TaskSplit split = brg::divide_tasks(plan, brg::to_dictionary(st.brg), st.policy);
    st.plan = plan;
    st.split = split;
    st.cursor = 0;
    st.plan_valid = true;
    st.invalidated_by.clear();

    PlanResponse resp{std::move(plan), std::move(split)};
    log(*slot, "plan_requested",
        Json{{"target", target}, {"policy", brg::to_string(st.policy)}}, to_json(resp));
    return resp;
  }

  StepOutcome step_plan(const std::string& id, Actor actor) {
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    auto& st = slot->state;
    if (!st.plan) throw Error(ErrorCode::NoPlan, "session has no plan; request one first");
    if (st.cursor >= st.plan->sequence.size())
      throw Error(ErrorCode::PlanExhausted, "every step of the plan has been executed");

    const Json request{{"actor", to_string(actor)}};
    const std::string& box = st.plan->sequence[st.cursor];
    if (!st.plan_valid || !st.scene.contains(box)) {
      if (st.plan_valid) {
        st.plan_valid = false;
        st.invalidated_by = {box};
      }
      StepOutcome refused{std::nullopt, actor, st.invalidated_by, false};
      log(*slot, "step_rejected", request, to_json(refused));
      return refused;
    }

    StepOutcome out = apply_removal(st, box, actor);
    ++st.cursor;
    if (!out.collapsed.empty()) {
      st.plan_valid = false;
      st.invalidated_by = out.collapsed;
    }
    out.plan_valid = st.plan_valid;
    log(*slot, "plan_step", request, to_json(out));
    return out;
  }

  /// Out-of-plan removal (operator what-if). Any stored plan whose remaining
  /// steps mention the removed or collapsed boxes is frozen.
  StepOutcome remove_box(const std::string& id, const std::string& box,
                         Actor actor = Actor::Human) {
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    auto& st = slot->state;
    if (!st.scene.contains(box))
      throw Error(ErrorCode::MissingBox, "no box '" + box + "' in the current scene");

    StepOutcome out = apply_removal(st, box, actor);
    if (st.plan && st.plan_valid) {
      std::set<std::string> gone(out.collapsed.begin(), out.collapsed.end());
      gone.insert(box);
      for (std::size_t i = st.cursor; i < st.plan->sequence.size(); ++i)
        if (gone.contains(st.plan->sequence[i])) {
          st.plan_valid = false;
          st.invalidated_by = out.collapsed;
          break;
        }
    }
    out.plan_valid = out.collapsed.empty() && (!st.plan || st.plan_valid);
    log(*slot, "box_removed", Json{{"box", box}, {"actor", to_string(actor)}}, to_json(out));
    return out;
  }

  brg::SupportCandidates request_support(const std::string& id, const std::string& target,
                                         long long k, std::optional<brg::Ranking> ranking = {}) {
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    auto& st = slot->state;
    const brg::Ranking r = ranking.value_or(st.ranking);
    auto cands = brg::support_candidates(st.brg, target, k, r);
    st.ranking = r;
    log(*slot, "support_requested",
        Json{{"target", target}, {"k", k}, {"ranking", brg::to_string(r)}}, brg::to_json(cands));
    return cands;
  }

  pointing::PointingResult resolve_pointing(const std::string& id, const Json& cloud_doc) {
    auto slot = find(id);
    const auto cloud = pointing::decode_cloud(cloud_doc);
    std::lock_guard lock(slot->mutex);
    auto& st = slot->state;
    auto result = pointing::resolve_pointing(cloud.cloud, st.scene, st.pointing.cluster,
                                             cloud.camera_pose, st.pointing.target);
    Json logged = pointing::to_json(result);
    if (!result.detected)
      logged["prompt"] = "No pointing gesture detected; please point at the box to remove.";
    log(*slot, "pointing_resolved", Json{{"cloud", cloud_doc}}, std::move(logged));
    return result;
  }

  SessionState get_state(const std::string& id) const {
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    return slot->state;
  }

  std::string brg_dot(const std::string& id) const {
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    return brg::export_dot(slot->state.brg);
  }

  std::vector<std::string> session_ids() const {
    std::lock_guard lock(map_mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : sessions_) ids.push_back(id);
    return ids;
  }

 private:
  struct Slot {
    mutable std::mutex mutex;
    SessionState state;
  };

  std::shared_ptr<Slot> find(const std::string& id) const {
    std::lock_guard lock(map_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end())
      throw Error(ErrorCode::SessionNotFound, "no session '" + id + "'");
    return it->second;
  }

  std::string next_id() {
    for (;;) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(++counter_));
      std::string id = buf;
      const bool on_disk =
          opts_.events_dir && std::filesystem::exists(*opts_.events_dir / (id + ".jsonl"));
      if (!sessions_.contains(id) && !on_disk) return id;
    }
  }

  static StepOutcome apply_removal(SessionState& st, const std::string& box, Actor actor) {
    const auto report = physics::settle(st.scene, std::set<std::string>{box});
    std::set<std::string> gone(report.collapsed.begin(), report.collapsed.end());
    gone.insert(box);
    st.scene = st.scene.without(gone);
    st.brg = brg::build_graph(st.scene);
    return {box, actor, report.collapsed, true};
  }

  void log(Slot& slot, std::string kind, Json request, Json result) {
    auto& st = slot.state;
    Event e{st.events.size() + 1, opts_.clock(), std::move(kind),
            Json{{"request", std::move(request)}, {"result", std::move(result)}}};
    if (opts_.events_dir) {
      std::ofstream out(*opts_.events_dir / (st.session_id + ".jsonl"), std::ios::app);
      out << to_json(e).dump() << '\n';
    }
    st.events.push_back(std::move(e));
  }

  Options opts_;
  mutable std::mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Replay

struct ReplayReport {
  std::string session_id;
  std::size_t events_replayed = 0;
  std::vector<std::string> mismatches;
  SessionState final_state;
};

inline Json to_json(const ReplayReport& r) {
  return Json{{"session_id", r.session_id},
              {"events_replayed", r.events_replayed},
              {"verified", r.mismatches.empty()},
              {"mismatches", r.mismatches},
              {"state", to_json(r.final_state)}};
}

/// Re-executes a session event file (JSON lines) against a fresh manager,
/// reusing the recorded timestamps, and checks every recomputed result
/// against the recorded one.
inline ReplayReport replay_events(std::istream& in) {
  using namespace json_util;
  std::vector<Event> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const Json j = parse_text(line, "event line " + std::to_string(lineno));
    const std::string ctx = "event line " + std::to_string(lineno);
    check_keys(j, {"seq", "ts", "kind", "payload"}, ctx);
    Event e;
    e.seq = static_cast<std::uint64_t>(as_integer(require(j, "seq", ctx), ctx + ".seq"));
    e.timestamp = as_string(require(j, "ts", ctx), ctx + ".ts");
    e.kind = as_string(require(j, "kind", ctx), ctx + ".kind");
    e.payload = require(j, "payload", ctx);
    check_keys(e.payload, {"request", "result"}, ctx + ".payload");
    require(e.payload, "request", ctx);
    require(e.payload, "result", ctx);
    if (e.seq != events.size() + 1)
      throw Error(ErrorCode::ReplayMismatch, ctx + ": expected seq " +
                                                 std::to_string(events.size() + 1) + ", found " +
                                                 std::to_string(e.seq));
    events.push_back(std::move(e));
  }
  if (events.empty()) throw Error(ErrorCode::SchemaError, "event file is empty");
  if (events.front().kind != "session_created")
    throw Error(ErrorCode::SchemaError, "event file must start with session_created");

  std::size_t current = 0;
  SessionManager::Options opts;
  opts.clock = [&] { return events[current].timestamp; };
  SessionManager mgr(opts);

  ReplayReport report;
  const Json& first = events.front().payload;
  report.session_id = as_string(require(first["result"], "session_id", "session_created"),
                                "session_created.session_id");

  for (current = 0; current < events.size(); ++current) {
    const Event& e = events[current];
    const Json& req = e.payload["request"];
    const Json& expected = e.payload["result"];
    Json got;
    try {
      if (e.kind == "session_created") {
        std::optional<PointingSettings> ps;
        if (req.contains("pointing")) ps = pointing_settings_from_json(req["pointing"]);
        mgr.create_session(require(req, "scene", "request"), report.session_id, ps);
      } else if (e.kind == "plan_requested") {
        mgr.request_plan(report.session_id, as_string(require(req, "target", "request"), "target"),
                         brg::parse_policy(as_string(require(req, "policy", "request"), "policy")));
      } else if (e.kind == "plan_step" || e.kind == "step_rejected") {
        mgr.step_plan(report.session_id, parse_actor(as_string(require(req, "actor", "request"), "actor")));
      } else if (e.kind == "box_removed") {
        mgr.remove_box(report.session_id, as_string(require(req, "box", "request"), "box"),
                       parse_actor(as_string(require(req, "actor", "request"), "actor")));
      } else if (e.kind == "support_requested") {
        mgr.request_support(report.session_id, as_string(require(req, "target", "request"), "target"),
                            as_integer(require(req, "k", "request"), "k"),
                            brg::parse_ranking(as_string(require(req, "ranking", "request"), "ranking")));
      } else if (e.kind == "pointing_resolved") {
        mgr.resolve_pointing(report.session_id, require(req, "cloud", "request"));
      } else {
        throw Error(ErrorCode::SchemaError, "unknown event kind '" + e.kind + "'");
      }
      const auto st = mgr.get_state(report.session_id);
      const Event& produced = st.events.back();
      got = produced.payload["result"];
      if (produced.kind != e.kind)
        report.mismatches.push_back("seq " + std::to_string(e.seq) + ": kind '" + produced.kind +
                                    "' instead of '" + e.kind + "'");
    } catch (const Error& err) {
      if (err.code() == ErrorCode::SchemaError && current == 0) throw;
      report.mismatches.push_back("seq " + std::to_string(e.seq) + ": " + err.what());
      continue;
    }
    if (got != expected)
      report.mismatches.push_back("seq " + std::to_string(e.seq) + " (" + e.kind +
                                  "): result differs from the recorded one");
    ++report.events_replayed;
  }
  report.final_state = mgr.get_state(report.session_id);
  return report;
}

}  // namespace shelfbrg::service
