#include <gtest/gtest.h>

#include <algorithm>
#include <string>

#include "fixtures.hpp"
#include "shelfbrg/error.hpp"
#include "shelfbrg/generator.hpp"
#include "shelfbrg/validation.hpp"

using namespace shelfbrg;
using namespace shelfbrg::scene;

namespace {

bool has_kind(const ValidationReport& r, const std::string& kind) {
  return std::any_of(r.begin(), r.end(), [&](const Violation& v) { return v.kind == kind; });
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::ReplayMismatch;
}

}  // namespace

TEST(SceneConfig, DefaultsMatchSimulationConstants) {
  const SceneConfig c;
  EXPECT_EQ(c.gravity, 9.81);
  EXPECT_EQ(c.friction, 0.75);
  EXPECT_EQ(c.spinning_friction, 0.01);
  EXPECT_EQ(c.density, 1.0);
  EXPECT_EQ(c.contact_tolerance, 0.001);
  EXPECT_EQ(c.min_overlap_area, 0.0001);
  EXPECT_EQ(c.stability_margin, 0.0);
}

TEST(ParseScene, SingleCubeGetsDensityMass) {
  const Scene s = parse_scene(R"({"shelf": {"width_x": 1.0, "depth_y": 0.3, "height_z": 1.6},
      "boxes": [{"id": "b1", "dims": [0.2, 0.2, 0.2], "center": [0.1, 0.1, 0.1]}]})");
  ASSERT_EQ(s.boxes.size(), 1u);
  EXPECT_NEAR(s.boxes[0].mass, 0.008, 1e-15);
  EXPECT_FALSE(s.boxes[0].mass_overridden);
  EXPECT_EQ(s.config, SceneConfig{});
}

TEST(ParseScene, TrialCartonOnTrialShelf) {
  // 0.31 m is deeper than the 0.30 m shelf, so the carton only fits yawed.
  const std::string shelf = R"("shelf": {"width_x": 1.0, "depth_y": 0.3, "height_z": 1.6})";
  EXPECT_NO_THROW(parse_scene("{" + shelf + R"(, "boxes": [{"id": "c", "dims": [0.31, 0.23, 0.25],
      "center": [0.155, 0.115, 0.125]}]})"));
  EXPECT_EQ(code_of([&] {
              parse_scene("{" + shelf + R"(, "boxes": [{"id": "c", "dims": [0.23, 0.31, 0.25],
                  "center": [0.115, 0.15, 0.125]}]})");
            }),
            ErrorCode::ValidationError);
  EXPECT_NO_THROW(parse_scene(fixtures::read_data("paper_shelf.json")));
}

TEST(ParseScene, DuplicateIdIsValidationError) {
  try {
    parse_scene(R"({"shelf": {"width_x": 1.0, "depth_y": 0.3, "height_z": 1.6}, "boxes": [
        {"id": "b1", "dims": [0.2, 0.2, 0.2], "center": [0.1, 0.1, 0.1]},
        {"id": "b1", "dims": [0.2, 0.2, 0.2], "center": [0.5, 0.1, 0.1]}]})");
    FAIL() << "duplicate accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ValidationError);
    EXPECT_NE(e.detail().find("duplicate id"), std::string::npos);
  }
}

TEST(ParseScene, SchemaErrors) {
  const std::string shelf = R"("shelf": {"width_x": 1.0, "depth_y": 0.3, "height_z": 1.6})";
  EXPECT_EQ(code_of([] { parse_scene("{not json"); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([&] { parse_scene("{" + shelf + "}"); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([&] { parse_scene("{" + shelf + R"(, "boxes": [], "colour": 1})"); }),
            ErrorCode::SchemaError);
  EXPECT_EQ(code_of([&] {
              parse_scene("{" + shelf + R"(, "boxes": [{"id": "a", "dims": [1, 2], "center": [0, 0, 0]}]})");
            }),
            ErrorCode::SchemaError);
  EXPECT_EQ(code_of([&] {
              parse_scene("{" + shelf + R"(, "config": {"gravity": "down"}, "boxes": []})");
            }),
            ErrorCode::SchemaError);
  EXPECT_EQ(code_of([&] {
              parse_scene("{" + shelf + R"(, "boxes": [{"id": 7, "dims": [1, 1, 1], "center": [0, 0, 0]}]})");
            }),
            ErrorCode::SchemaError);
}

TEST(ValidateScene, PyramidIsValid) { EXPECT_TRUE(validate_scene(fixtures::pyramid_p1()).empty()); }

TEST(ValidateScene, PenetratesShelfSurface) {
  Scene s;
  s.boxes = {make_box("A", {0.2, 0.2, 0.2}, {0.1, 0.1, 0.05})};
  const auto r = validate_scene(s);
  ASSERT_TRUE(has_kind(r, "penetrates_shelf_surface"));
  EXPECT_NE(describe(r).find("penetrates shelf surface"), std::string::npos);
}

TEST(ValidateScene, FloatingBoxIsInitiallyUnstable) {
  Scene s;
  s.boxes = {make_box("F", {0.2, 0.2, 0.2}, {0.5, 0.1, 1.0})};
  const auto r = validate_scene(s);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].kind, "initially_unstable");
  EXPECT_NE(r[0].message.find("initially unstable"), std::string::npos);
}

TEST(ValidateScene, OutsideShelfAndInterpenetration) {
  Scene s;
  s.boxes = {make_box("A", {0.2, 0.2, 0.2}, {0.95, 0.1, 0.1}),
             make_box("B", {0.2, 0.2, 0.2}, {0.1, 0.1, 0.1}),
             make_box("C", {0.2, 0.2, 0.2}, {0.15, 0.1, 0.1})};
  const auto r = validate_scene(s);
  EXPECT_TRUE(has_kind(r, "outside_shelf"));
  EXPECT_TRUE(has_kind(r, "interpenetration"));
}

TEST(ValidateScene, ReservedAndMalformedIds) {
  Scene s;
  s.boxes = {make_box("SHELF", {0.2, 0.2, 0.2}, {0.1, 0.1, 0.1}),
             make_box("has space", {0.2, 0.2, 0.2}, {0.5, 0.1, 0.1})};
  const auto r = validate_scene(s);
  EXPECT_TRUE(has_kind(r, "reserved_id"));
  EXPECT_TRUE(has_kind(r, "invalid_id"));
}

TEST(ValidateScene, TouchingSideBySideIsFine) {
  Scene s;
  s.boxes = {make_box("A", {0.2, 0.2, 0.2}, {0.1, 0.1, 0.1}),
             make_box("B", {0.2, 0.2, 0.2}, {0.3, 0.1, 0.1})};
  EXPECT_TRUE(validate_scene(s).empty());
}

TEST(ExportScene, RoundTripPreservesMassOverride) {
  Scene s = fixtures::pyramid_p1();
  s.boxes[1].mass = 2.5;
  s.boxes[1].mass_overridden = true;
  const std::string doc = export_scene(s);
  EXPECT_NE(doc.find("\"mass\": 2.5"), std::string::npos);
  EXPECT_EQ(parse_scene(doc), s);
}

TEST(ExportScene, EmptySceneRoundTrips) {
  const Scene s;
  const Scene back = parse_scene(export_scene(s));
  EXPECT_TRUE(back.boxes.empty());
  EXPECT_EQ(back, s);
}

TEST(GenerateScene, SingleBoxSitsOnFloor) {
  const Scene s = generate_scene(42, 1);
  ASSERT_EQ(s.boxes.size(), 1u);
  EXPECT_NEAR(s.boxes[0].bottom(), 0.0, 1e-12);
  EXPECT_TRUE(validate_scene(s).empty());
}

TEST(GenerateScene, SameSeedSameDocument) {
  EXPECT_EQ(export_scene(generate_scene(42, 8)), export_scene(generate_scene(42, 8)));
  EXPECT_NE(export_scene(generate_scene(42, 8)), export_scene(generate_scene(43, 8)));
}

TEST(GenerateScene, ThousandBoxesExhaustTheShelf) {
  EXPECT_EQ(code_of([] { generate_scene(7, 1000); }), ErrorCode::GenerationExhausted);
}

TEST(GenerateScene, RejectsBadArguments) {
  const std::vector<Vec3> empty;
  EXPECT_EQ(code_of([&] { generate_scene(1, 3, empty); }), ErrorCode::ValidationError);
  EXPECT_EQ(code_of([] { generate_scene(1, 0); }), ErrorCode::ValidationError);
}

// Property: every generated scene validates and round-trips exactly.
TEST(GenerateScene, GeneratedScenesValidateAndRoundTrip) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const std::size_t n = 1 + seed % 14;
    const Scene s = generate_scene(seed, n);
    ASSERT_EQ(s.boxes.size(), n);
    EXPECT_TRUE(validate_scene(s).empty()) << "seed " << seed;
    EXPECT_EQ(parse_scene(export_scene(s)), s) << "seed " << seed;
  }
}

TEST(GenerateScene, ProducesStacks) {
  int stacked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    for (const auto& b : generate_scene(seed, 6).boxes) stacked += b.bottom() > 0.01 ? 1 : 0;
  EXPECT_GT(stacked, 20);
}
