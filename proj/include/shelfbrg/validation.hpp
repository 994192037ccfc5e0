#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "shelfbrg/error.hpp"
#include "shelfbrg/json_util.hpp"
#include "shelfbrg/physics.hpp"
#include "shelfbrg/scene.hpp"

namespace shelfbrg::scene {

struct Violation {
  std::string kind;
  std::vector<std::string> boxes;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

using ValidationReport = std::vector<Violation>;

inline Json to_json(const ValidationReport& report) {
  Json violations = Json::array();
  for (const auto& v : report)
    violations.push_back(Json{{"kind", v.kind}, {"boxes", v.boxes}, {"message", v.message}});
  return Json{{"valid", report.empty()}, {"violations", std::move(violations)}};
}

inline bool is_valid_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-' || c == '.' || c == ':';
  });
}

namespace detail {

inline double overlap_1d(double a_min, double a_max, double b_min, double b_max) {
  return std::min(a_max, b_max) - std::max(a_min, b_min);
}

}  // namespace detail

/// Lists every invariant violation of `s`; an empty report means valid.
inline ValidationReport validate_scene(const Scene& s) {
  ValidationReport report;
  auto add = [&](std::string kind, std::vector<std::string> boxes, std::string msg) {
    report.push_back({std::move(kind), std::move(boxes), std::move(msg)});
  };
  bool geometry_ok = true;

  if (!(s.shelf.width_x > 0 && s.shelf.depth_y > 0 && s.shelf.height_z > 0)) {
    add("invalid_shelf", {}, "shelf extents must be positive");
    geometry_ok = false;
  }
  const auto& c = s.config;
  if (!(c.gravity > 0 && c.density > 0 && c.friction >= 0 && c.spinning_friction >= 0 &&
        c.contact_tolerance >= 0 && c.min_overlap_area >= 0 && c.stability_margin >= 0)) {
    add("invalid_config", {},
        "config requires gravity > 0, density > 0 and non-negative friction/tolerances");
    geometry_ok = false;
  }

  std::set<std::string, std::less<>> seen;
  for (const auto& b : s.boxes) {
    const std::string who = "box '" + b.id + "'";
    if (!is_valid_id(b.id))
      add("invalid_id", {b.id}, who + ": id must be a non-empty token of [A-Za-z0-9_.:-]");
    if (b.id == kShelfId || b.id == kAllTarget)
      add("reserved_id", {b.id}, who + ": id is reserved");
    if (!seen.insert(b.id).second) {
      add("duplicate_id", {b.id}, who + ": duplicate id");
      geometry_ok = false;
    }
    if (!(b.dims.x > 0 && b.dims.y > 0 && b.dims.z > 0)) {
      add("invalid_dims", {b.id}, who + ": dimensions must be positive");
      geometry_ok = false;
      continue;
    }
    if (!(b.mass > 0)) add("invalid_mass", {b.id}, who + ": mass must be positive");
    if (b.bottom() < -kGeomEps)
      add("penetrates_shelf_surface", {b.id}, who + ": penetrates shelf surface");
    const Rect2 fp = b.footprint();
    if (fp.min_x < -kGeomEps || fp.min_y < -kGeomEps ||
        fp.max_x > s.shelf.width_x + kGeomEps || fp.max_y > s.shelf.depth_y + kGeomEps ||
        b.top() > s.shelf.height_z + kGeomEps)
      add("outside_shelf", {b.id}, who + ": extends outside the shelf volume");
  }

  if (geometry_ok) {
    const double tol = c.contact_tolerance;
    for (std::size_t i = 0; i < s.boxes.size(); ++i) {
      for (std::size_t j = i + 1; j < s.boxes.size(); ++j) {
        const auto& a = s.boxes[i];
        const auto& b = s.boxes[j];
        const Rect2 fa = a.footprint();
        const Rect2 fb = b.footprint();
        const bool overlaps =
            detail::overlap_1d(fa.min_x, fa.max_x, fb.min_x, fb.max_x) > tol &&
            detail::overlap_1d(fa.min_y, fa.max_y, fb.min_y, fb.max_y) > tol &&
            detail::overlap_1d(a.bottom(), a.top(), b.bottom(), b.top()) > tol;
        if (overlaps)
          add("interpenetration", {a.id, b.id},
              "boxes '" + a.id + "' and '" + b.id + "' inter-penetrate");
      }
    }
    for (const auto& id : physics::settle(s).collapsed)
      add("initially_unstable", {id}, "box '" + id + "' is initially unstable");
  }
  return report;
}

inline std::string describe(const ValidationReport& report) {
  std::string out;
  for (const auto& v : report) {
    if (!out.empty()) out += "; ";
    out += v.message;
  }
  return out;
}

/// Decodes and validates a scene document already parsed as JSON.
inline Scene load_scene(const Json& doc) {
  Scene s = decode_scene(doc);
  if (auto report = validate_scene(s); !report.empty())
    throw Error(ErrorCode::ValidationError, describe(report));
  return s;
}

inline Scene parse_scene(std::string_view text) {
  return load_scene(json_util::parse_text(text, "scene document"));
}

inline std::string export_scene(const Scene& s) { return encode_scene(s).dump(2) + "\n"; }

}  // namespace shelfbrg::scene
