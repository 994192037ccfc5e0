#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shelfbrg/geometry.hpp"
#include "shelfbrg/json_util.hpp"

namespace shelfbrg::scene {

// Supporter id used for contacts with the shelf surface.
inline constexpr std::string_view kShelfId = "SHELF";
// Plan target meaning "clear every box".
inline constexpr std::string_view kAllTarget = "ALL";

struct SceneConfig {
  double gravity = 9.81;           // m/s^2
  double friction = 0.75;          // carried for format parity; unused by the stability rule
  double spinning_friction = 0.01; // same
  double density = 1.0;            // kg/m^3
  double contact_tolerance = 1e-3; // faces within this vertical gap touch (m)
  double min_overlap_area = 1e-4;  // smallest footprint overlap that carries load (m^2)
  double stability_margin = 0.0;   // required COM inset from the support hull edge (m)

  friend bool operator==(const SceneConfig&, const SceneConfig&) = default;
};

/// Usable shelf volume; origin at the front-left corner of the shelf surface.
struct ShelfSpec {
  double width_x = 1.0;
  double depth_y = 0.3;
  double height_z = 1.6;

  friend bool operator==(const ShelfSpec&, const ShelfSpec&) = default;

  Rect2 surface() const { return {0.0, 0.0, width_x, depth_y}; }
};

/// Axis-aligned box. `dims` are full extents (x, y, z); `center` is the
/// centroid in the shelf frame.
struct BoxSpec {
  std::string id;
  Vec3 dims;
  Vec3 center;
  double mass = 0.0;
  bool mass_overridden = false;

  friend bool operator==(const BoxSpec&, const BoxSpec&) = default;

  double volume() const { return dims.x * dims.y * dims.z; }
  double bottom() const { return center.z - dims.z / 2.0; }
  double top() const { return center.z + dims.z / 2.0; }
  Rect2 footprint() const {
    return {center.x - dims.x / 2.0, center.y - dims.y / 2.0, center.x + dims.x / 2.0,
            center.y + dims.y / 2.0};
  }
};

struct Scene {
  ShelfSpec shelf;
  std::vector<BoxSpec> boxes;
  SceneConfig config;

  friend bool operator==(const Scene&, const Scene&) = default;

  const BoxSpec* find(std::string_view id) const {
    for (const auto& b : boxes)
      if (b.id == id) return &b;
    return nullptr;
  }
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  /// Copy of this scene without the listed boxes.
  template <typename IdSet>
  Scene without(const IdSet& removed) const {
    Scene out{shelf, {}, config};
    for (const auto& b : boxes)
      if (!removed.contains(b.id)) out.boxes.push_back(b);
    return out;
  }
};

/// Builds a box whose mass follows the uniform-density rule.
inline BoxSpec make_box(std::string id, Vec3 dims, Vec3 center, const SceneConfig& cfg = {}) {
  BoxSpec b{std::move(id), dims, center, 0.0, false};
  b.mass = cfg.density * b.volume();
  return b;
}

// ---------------------------------------------------------------------------
// Scene document codec. Decoding enforces the schema only; semantic checks
// live in validation.hpp.

inline Json encode_config(const SceneConfig& c) {
  Json j = Json::object();
  j["gravity"] = c.gravity;
  j["friction"] = c.friction;
  j["spinning_friction"] = c.spinning_friction;
  j["density"] = c.density;
  j["contact_tolerance"] = c.contact_tolerance;
  j["min_overlap_area"] = c.min_overlap_area;
  j["stability_margin"] = c.stability_margin;
  return j;
}

inline SceneConfig decode_config(const Json& j) {
  using namespace json_util;
  check_keys(j,
             {"gravity", "friction", "spinning_friction", "density", "contact_tolerance",
              "min_overlap_area", "stability_margin"},
             "config");
  SceneConfig c;
  auto read = [&](const char* key, double& field) {
    if (auto it = j.find(key); it != j.end())
      field = as_number(*it, std::string("config.") + key);
  };
  read("gravity", c.gravity);
  read("friction", c.friction);
  read("spinning_friction", c.spinning_friction);
  read("density", c.density);
  read("contact_tolerance", c.contact_tolerance);
  read("min_overlap_area", c.min_overlap_area);
  read("stability_margin", c.stability_margin);
  return c;
}

inline Json encode_scene(const Scene& s) {
  Json doc = Json::object();
  doc["shelf"] = Json{{"width_x", s.shelf.width_x},
                      {"depth_y", s.shelf.depth_y},
                      {"height_z", s.shelf.height_z}};
  doc["config"] = encode_config(s.config);
  Json boxes = Json::array();
  for (const auto& b : s.boxes) {
    Json jb = Json::object();
    jb["id"] = b.id;
    jb["dims"] = json_util::to_json(b.dims);
    jb["center"] = json_util::to_json(b.center);
    if (b.mass_overridden) jb["mass"] = b.mass;
    boxes.push_back(std::move(jb));
  }
  doc["boxes"] = std::move(boxes);
  return doc;
}

inline Scene decode_scene(const Json& doc) {
  using namespace json_util;
  check_keys(doc, {"shelf", "config", "boxes"}, "scene");
  Scene s;

  const Json& shelf = require(doc, "shelf", "scene");
  check_keys(shelf, {"width_x", "depth_y", "height_z"}, "shelf");
  s.shelf.width_x = as_number(require(shelf, "width_x", "shelf"), "shelf.width_x");
  s.shelf.depth_y = as_number(require(shelf, "depth_y", "shelf"), "shelf.depth_y");
  s.shelf.height_z = as_number(require(shelf, "height_z", "shelf"), "shelf.height_z");

  if (auto it = doc.find("config"); it != doc.end()) s.config = decode_config(*it);

  const Json& boxes = require(doc, "boxes", "scene");
  if (!boxes.is_array()) throw Error(ErrorCode::SchemaError, "boxes: expected an array");
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const std::string ctx = "boxes[" + std::to_string(i) + "]";
    const Json& jb = boxes[i];
    check_keys(jb, {"id", "dims", "center", "mass"}, ctx);
    BoxSpec b;
    b.id = as_string(require(jb, "id", ctx), ctx + ".id");
    b.dims = as_vec3(require(jb, "dims", ctx), ctx + ".dims");
    b.center = as_vec3(require(jb, "center", ctx), ctx + ".center");
    if (auto it = jb.find("mass"); it != jb.end()) {
      b.mass = as_number(*it, ctx + ".mass");
      b.mass_overridden = true;
    } else {
      b.mass = s.config.density * b.volume();
    }
    s.boxes.push_back(std::move(b));
  }
  return s;
}

}  // namespace shelfbrg::scene
