#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "shelfbrg/error.hpp"
#include "shelfbrg/geometry.hpp"
#include "shelfbrg/json_util.hpp"
#include "shelfbrg/scene.hpp"

// Quasi-static stability: a box stands iff the x-y projection of its centre
// of mass lies inside the convex hull of its contact patches. Collapsed boxes
// vanish; they are not simulated as falling bodies.
namespace shelfbrg::physics {

using scene::BoxSpec;
using scene::Scene;

struct ContactPatch {
  std::string supporter_id;  // scene::kShelfId for the shelf surface
  std::string supported_id;
  Rect2 rect;
  double z_level = 0.0;

  friend bool operator==(const ContactPatch&, const ContactPatch&) = default;
};

struct SupportMap {
  std::vector<ContactPatch> patches;
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_supported;

  std::vector<const ContactPatch*> patches_of(std::string_view id) const {
    std::vector<const ContactPatch*> out;
    if (auto it = by_supported.find(id); it != by_supported.end())
      for (auto i : it->second) out.push_back(&patches[i]);
    return out;
  }
};

struct StabilityReport {
  std::vector<std::string> collapsed;  // cascade order
  std::vector<std::string> survivors;  // scene order

  friend bool operator==(const StabilityReport&, const StabilityReport&) = default;
};

inline Json to_json(const StabilityReport& r) {
  return Json{{"collapsed", r.collapsed}, {"survivors", r.survivors}};
}

inline SupportMap compute_contacts(const Scene& s) {
  const auto& cfg = s.config;
  SupportMap map;
  auto add = [&](std::string supporter, const BoxSpec& supported, Rect2 rect, double z) {
    map.by_supported[supported.id].push_back(map.patches.size());
    map.patches.push_back({std::move(supporter), supported.id, rect, z});
  };

  for (const auto& b : s.boxes) {
    if (std::abs(b.bottom()) <= cfg.contact_tolerance) {
      const Rect2 rect = intersect(b.footprint(), s.shelf.surface());
      if (rect.area() > cfg.min_overlap_area) add(std::string(scene::kShelfId), b, rect, 0.0);
    }
    for (const auto& a : s.boxes) {
      if (&a == &b) continue;
      const double gap = b.bottom() - a.top();
      if (gap < -cfg.contact_tolerance || gap > cfg.contact_tolerance) continue;
      const Rect2 rect = intersect(a.footprint(), b.footprint());
      if (rect.area() > cfg.min_overlap_area) add(a.id, b, rect, a.top());
    }
  }
  return map;
}

inline bool is_stable(std::string_view box_id, const SupportMap& supports, const Scene& s) {
  const BoxSpec* box = s.find(box_id);
  if (!box) throw Error(ErrorCode::MissingBox, "no box '" + std::string(box_id) + "'");

  std::vector<Point2> corners;
  for (const ContactPatch* p : supports.patches_of(box_id))
    for (const auto& c : p->rect.corners()) corners.push_back(c);
  if (corners.empty()) return false;

  const auto hull = convex_hull(std::move(corners));
  return contains_with_margin(hull, {box->center.x, box->center.y},
                              s.config.stability_margin);
}

/// Removes `removed` and runs the collapse cascade to a fixpoint. Each round
/// drops every box that fails `is_stable` against the boxes still standing,
/// ordered by lowest centre height then id.
template <typename IdSet = std::set<std::string, std::less<>>>
StabilityReport settle(const Scene& s, const IdSet& removed) {
  std::set<std::string, std::less<>> gone;
  for (const auto& id : removed) {
    if (!s.contains(id))
      throw Error(ErrorCode::MissingBox, "no box '" + std::string(id) + "'");
    gone.insert(std::string(id));
  }

  StabilityReport report;
  for (;;) {
    const Scene active = s.without(gone);
    const SupportMap supports = compute_contacts(active);
    std::vector<const BoxSpec*> falling;
    for (const auto& b : active.boxes)
      if (!is_stable(b.id, supports, active)) falling.push_back(&b);
    if (falling.empty()) {
      for (const auto& b : active.boxes) report.survivors.push_back(b.id);
      return report;
    }
    std::sort(falling.begin(), falling.end(), [](const BoxSpec* a, const BoxSpec* b) {
      if (a->center.z != b->center.z) return a->center.z < b->center.z;
      return a->id < b->id;
    });
    for (const BoxSpec* b : falling) {
      report.collapsed.push_back(b->id);
      gone.insert(b->id);
    }
  }
}

inline StabilityReport settle(const Scene& s) {
  return settle(s, std::set<std::string, std::less<>>{});
}

/// Boxes that collapse when `box_id` alone is taken out.
inline std::set<std::string> probe_removal(const Scene& s, std::string_view box_id) {
  if (!s.contains(box_id))
    throw Error(ErrorCode::MissingBox, "no box '" + std::string(box_id) + "'");
  const auto report = settle(s, std::set<std::string, std::less<>>{std::string(box_id)});
  return {report.collapsed.begin(), report.collapsed.end()};
}

}  // namespace shelfbrg::physics
