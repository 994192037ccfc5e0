#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "shelfbrg/generator.hpp"
#include "shelfbrg/service.hpp"

using namespace shelfbrg;
using namespace shelfbrg::service;
using Seq = std::vector<std::string>;

namespace {

Json doc_of(const scene::Scene& s) { return scene::encode_scene(s); }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::ReplayMismatch;
}

SessionManager::Options fixed_clock() {
  SessionManager::Options o;
  o.clock = [] { return std::string("2026-01-01T00:00:00.000Z"); };
  return o;
}

Json arm_cloud_doc(const Vec3& tip_shelf, std::uint64_t seed) {
  const auto pose = oracle::front_camera();
  std::mt19937_64 rng(seed);
  const auto sample = oracle::arm_cloud(rng, pose.to_camera(tip_shelf));
  Json pts = Json::array();
  for (std::size_t i = 0; i < sample.points.size(); ++i)
    pts.push_back(Json{{"p", {sample.points[i].x, sample.points[i].y, sample.points[i].z}},
                       {"mask", static_cast<bool>(sample.mask[i])}});
  return Json{{"camera_pose",
               Json{{"translation", {pose.t.x, pose.t.y, pose.t.z}},
                    {"rotation_rowmajor", std::vector<double>(pose.r, pose.r + 9)}}},
              {"points", pts}};
}

}  // namespace

TEST(Session, CreateFromPyramid) {
  SessionManager mgr;
  const auto id = mgr.create_session(doc_of(fixtures::pyramid_p1()));
  const auto st = mgr.get_state(id);
  EXPECT_EQ(st.brg.nodes.size(), 3u);
  EXPECT_EQ(st.brg.edges.size(), 2u);
  EXPECT_EQ(st.cursor, 0u);
  EXPECT_FALSE(st.plan.has_value());
  ASSERT_EQ(st.events.size(), 1u);
  EXPECT_EQ(st.events[0].kind, "session_created");
}

TEST(Session, CreateRejectsBadDocuments) {
  SessionManager mgr;
  EXPECT_EQ(code_of([&] { mgr.create_session(Json{{"boxes", 3}}); }), ErrorCode::SchemaError);
  scene::Scene floating;
  floating.boxes = {scene::make_box("F", {0.2, 0.2, 0.2}, {0.5, 0.1, 1.0})};
  EXPECT_EQ(code_of([&] { mgr.create_session(doc_of(floating)); }), ErrorCode::ValidationError);
  EXPECT_TRUE(mgr.session_ids().empty());
}

TEST(Session, TrialShelfScene) {
  SessionManager mgr;
  EXPECT_NO_THROW(mgr.create_session(Json::parse(fixtures::read_data("paper_shelf.json"))));
}

TEST(Session, PlanAndSplit) {
  SessionManager mgr;
  const auto id = mgr.create_session(doc_of(fixtures::pyramid_p1()));
  const auto r = mgr.request_plan(id, "A");
  EXPECT_EQ(r.plan.sequence, (Seq{"C", "A"}));
  EXPECT_EQ(r.split.robot_tasks, (Seq{"A"}));
  EXPECT_EQ(r.split.human_tasks, (Seq{"C"}));
  EXPECT_EQ(mgr.request_plan(id, "ALL").plan.sequence, (Seq{"C", "A", "B"}));
  EXPECT_EQ(code_of([&] { mgr.request_plan(id, "zz"); }), ErrorCode::MissingBox);
  EXPECT_EQ(code_of([&] { mgr.request_plan("nope", "A"); }), ErrorCode::SessionNotFound);
}

TEST(Session, StepThroughPlan) {
  SessionManager mgr;
  const auto id = mgr.create_session(doc_of(fixtures::pyramid_p1()));
  EXPECT_EQ(code_of([&] { mgr.step_plan(id, Actor::Robot); }), ErrorCode::NoPlan);
  mgr.request_plan(id, "A");

  const auto first = mgr.step_plan(id, Actor::Human);
  EXPECT_EQ(first.removed_box, "C");
  EXPECT_TRUE(first.collapsed.empty());
  EXPECT_TRUE(first.plan_valid);
  const auto mid = mgr.get_state(id);
  EXPECT_EQ(mid.cursor, 1u);
  EXPECT_FALSE(mid.scene.contains("C"));

  const auto second = mgr.step_plan(id, Actor::Robot);
  EXPECT_EQ(second.removed_box, "A");
  EXPECT_TRUE(second.collapsed.empty());
  const auto st = mgr.get_state(id);
  ASSERT_EQ(st.scene.boxes.size(), 1u);
  EXPECT_EQ(st.scene.boxes[0].id, "B");
  EXPECT_EQ(code_of([&] { mgr.step_plan(id, Actor::Robot); }), ErrorCode::PlanExhausted);
}

TEST(Session, OutOfPlanRemovalFreezesPlan) {
  SessionManager mgr;
  const auto id = mgr.create_session(doc_of(fixtures::pyramid_p1()));
  mgr.request_plan(id, "A");
  const auto removed = mgr.remove_box(id, "A");
  EXPECT_EQ(removed.collapsed, (Seq{"C"}));
  EXPECT_FALSE(removed.plan_valid);

  const auto stale = mgr.step_plan(id, Actor::Robot);
  EXPECT_FALSE(stale.plan_valid);
  EXPECT_FALSE(stale.removed_box.has_value());
  EXPECT_EQ(stale.collapsed, (Seq{"C"}));
  EXPECT_EQ(mgr.get_state(id).events.back().kind, "step_rejected");

  // Replanning unfreezes.
  mgr.request_plan(id, "ALL");
  const auto ok = mgr.step_plan(id, Actor::Robot);
  EXPECT_TRUE(ok.plan_valid);
  EXPECT_EQ(ok.removed_box, "B");
}

TEST(Session, RemoveBox) {
  SessionManager mgr;
  const auto s1 = mgr.create_session(doc_of(fixtures::stack_s1()));
  const auto top = mgr.remove_box(s1, "C");
  EXPECT_TRUE(top.collapsed.empty());
  EXPECT_TRUE(top.plan_valid);
  EXPECT_EQ(code_of([&] { mgr.remove_box(s1, "C"); }), ErrorCode::MissingBox);
  EXPECT_EQ(code_of([&] { mgr.remove_box("nope", "A"); }), ErrorCode::SessionNotFound);
}

TEST(Session, Support) {
  SessionManager mgr;
  const auto id = mgr.create_session(doc_of(fixtures::stack_s1()));
  EXPECT_EQ(mgr.request_support(id, "A", 1).ranked, (std::vector<brg::Candidate>{{"C", 2}}));
  EXPECT_EQ(mgr.request_support(id, "C", 2).ranked, (std::vector<brg::Candidate>{{"C", 0}}));
  EXPECT_EQ(mgr.request_support(id, "A", 1, brg::Ranking::AtRisk).ranked,
            (std::vector<brg::Candidate>{{"B", 1}}));
  EXPECT_EQ(code_of([&] { mgr.request_support(id, "A", 0); }), ErrorCode::InvalidK);
  EXPECT_EQ(code_of([&] { mgr.request_support(id, "Q", 1); }), ErrorCode::MissingBox);
}

TEST(Session, Pointing) {
  SessionManager mgr;
  const auto id = mgr.create_session(doc_of(fixtures::pyramid_p1()));
  const auto hit = mgr.resolve_pointing(id, arm_cloud_doc({0.1, 0.07, 0.1}, 4));
  EXPECT_TRUE(hit.detected);
  EXPECT_EQ(hit.selected_box, "A");

  const auto miss = mgr.resolve_pointing(id, Json{{"points", Json::array({Json{{"p", {0, 0, 1}}}})}});
  EXPECT_FALSE(miss.detected);
  const auto st = mgr.get_state(id);
  EXPECT_TRUE(st.events.back().payload["result"].contains("prompt"));

  EXPECT_EQ(code_of([&] { mgr.resolve_pointing(id, Json{{"pts", 1}}); }), ErrorCode::SchemaError);
}

TEST(Session, StateSnapshotsAreStable) {
  SessionManager mgr(fixed_clock());
  const auto id = mgr.create_session(doc_of(fixtures::pyramid_p1()));
  mgr.request_plan(id, "A");
  mgr.step_plan(id, Actor::Robot);
  EXPECT_EQ(to_json(mgr.get_state(id)).dump(), to_json(mgr.get_state(id)).dump());
  const auto st = mgr.get_state(id);
  EXPECT_EQ(st.cursor, 1u);
  EXPECT_FALSE(st.scene.contains("C"));
  EXPECT_EQ(code_of([&] { mgr.get_state("nope"); }), ErrorCode::SessionNotFound);
}

TEST(Session, BrgCoherentAndPlansSafeOnGeneratedScenes) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    SessionManager mgr;
    const auto s = scene::generate_scene(seed, 10);
    const auto id = mgr.create_session(doc_of(s));
    const auto target = seed % 2 ? std::string("ALL") : s.boxes[seed % s.boxes.size()].id;
    const auto plan = mgr.request_plan(id, target).plan;
    for (std::size_t i = 0; i < plan.sequence.size(); ++i) {
      const auto out = mgr.step_plan(id, i % 2 ? Actor::Human : Actor::Robot);
      EXPECT_TRUE(out.collapsed.empty()) << "seed " << seed;
      EXPECT_TRUE(out.plan_valid);
      const auto st = mgr.get_state(id);
      EXPECT_EQ(st.brg, brg::build_graph(st.scene));
    }
    const auto st = mgr.get_state(id);
    if (target == "ALL") EXPECT_TRUE(st.scene.boxes.empty());
    else EXPECT_FALSE(st.scene.contains(target));
  }
}

TEST(Session, EventLogGapFreeAndPersisted) {
  const auto dir = std::filesystem::temp_directory_path() / "shelfbrg_events_test";
  std::filesystem::remove_all(dir);
  auto opts = fixed_clock();
  opts.events_dir = dir;
  SessionManager mgr(opts);
  const auto id = mgr.create_session(doc_of(fixtures::pyramid_p1()));
  mgr.request_plan(id, "A", brg::TaskPolicy::Independence);
  mgr.step_plan(id, Actor::Robot);
  mgr.request_support(id, "A", 2);
  mgr.remove_box(id, "A");
  mgr.step_plan(id, Actor::Human);
  mgr.resolve_pointing(id, arm_cloud_doc({0.5, 0.07, 0.1}, 9));

  const auto st = mgr.get_state(id);
  for (std::size_t i = 0; i < st.events.size(); ++i) EXPECT_EQ(st.events[i].seq, i + 1);

  std::ifstream in(dir / (id + ".jsonl"));
  const auto report = replay_events(in);
  EXPECT_TRUE(report.mismatches.empty());
  EXPECT_EQ(report.events_replayed, st.events.size());
  EXPECT_EQ(to_json(report.final_state).dump(), to_json(st).dump());
  std::filesystem::remove_all(dir);
}

TEST(Replay, DetectsTamperingAndGaps) {
  SessionManager mgr(fixed_clock());
  const auto id = mgr.create_session(doc_of(fixtures::stack_s1()));
  mgr.request_plan(id, "A");
  const auto st = mgr.get_state(id);

  std::ostringstream tampered;
  for (auto e : st.events) {
    if (e.kind == "plan_requested") e.payload["result"]["plan"]["sequence"] = {"A"};
    tampered << to_json(e).dump() << "\n";
  }
  std::istringstream in(tampered.str());
  EXPECT_EQ(replay_events(in).mismatches.size(), 1u);

  std::istringstream gap(to_json(st.events[1]).dump() + "\n");
  EXPECT_EQ(code_of([&] { replay_events(gap); }), ErrorCode::ReplayMismatch);
}

TEST(Session, ConcurrentSessionsIndependent) {
  SessionManager mgr;
  std::vector<std::thread> workers;
  std::vector<std::string> ids(4);
  for (int w = 0; w < 4; ++w)
    workers.emplace_back([&, w] {
      ids[w] = mgr.create_session(doc_of(fixtures::stack_s1()));
      mgr.request_plan(ids[w], "A");
      for (int i = 0; i < 3; ++i) mgr.step_plan(ids[w], Actor::Robot);
    });
  for (auto& t : workers) t.join();
  for (const auto& id : ids) {
    const auto st = mgr.get_state(id);
    EXPECT_TRUE(st.scene.boxes.empty());
    EXPECT_EQ(st.events.size(), 5u);
  }
}
