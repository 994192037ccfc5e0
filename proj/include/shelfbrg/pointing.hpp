#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "shelfbrg/error.hpp"
#include "shelfbrg/geometry.hpp"
#include "shelfbrg/json_util.hpp"
#include "shelfbrg/scene.hpp"

// Pointing-gesture resolution on an already segmented arm cloud: DBSCAN to
// drop mask noise, the largest cluster is the arm, the median of its deepest
// points is the fingertip estimate, the nearest box centroid is the answer.
namespace shelfbrg::pointing {

inline constexpr int kNoise = -1;

struct CloudPoint {
  Vec3 p;
  bool mask = false;
};

/// Camera frame: z is depth, increasing away from the camera.
struct PointCloud {
  std::vector<CloudPoint> points;
};

struct ClusterParams {
  double eps = 0.03;
  int min_pts = 8;
  int min_cluster_size = 30;
};

enum class DepthOrder { Farthest, Nearest };

struct TargetOptions {
  double fraction = 0.02;
  DepthOrder order = DepthOrder::Farthest;
};

/// Maps camera-frame points into the shelf frame: p_shelf = R * p_cam + t.
struct RigidTransform {
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  Vec3 translation;

  Vec3 apply(const Vec3& p) const {
    const auto& r = rotation;
    return {r[0] * p.x + r[1] * p.y + r[2] * p.z + translation.x,
            r[3] * p.x + r[4] * p.y + r[5] * p.z + translation.y,
            r[6] * p.x + r[7] * p.y + r[8] * p.z + translation.z};
  }
};

struct PointingResult {
  bool detected = false;
  std::optional<Vec3> target_point;  // shelf frame
  std::optional<std::string> selected_box;
  std::optional<double> distance;

  friend bool operator==(const PointingResult&, const PointingResult&) = default;
};

inline void check_params(const ClusterParams& p) {
  if (!(p.eps > 0) || p.min_pts < 1 || p.min_cluster_size < p.min_pts)
    throw Error(ErrorCode::ValidationError,
                "cluster params need eps > 0, min_pts >= 1, min_cluster_size >= min_pts");
}

namespace detail {

struct CellKey {
  std::int64_t x, y, z;
  friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

/// Uniform grid with cell edge eps; a radius query scans the 27 cells around
/// the query point.
class NeighborGrid {
 public:
  NeighborGrid(std::span<const Vec3> points, double eps) : points_(points), eps_(eps) {
    for (std::size_t i = 0; i < points.size(); ++i) cells_[key(points[i])].push_back(i);
  }

  std::vector<std::size_t> within(std::size_t i) const {
    std::vector<std::size_t> out;
    const Vec3& p = points_[i];
    const CellKey c = key(p);
    const double eps2 = eps_ * eps_;
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = cells_.find({c.x + dx, c.y + dy, c.z + dz});
          if (it == cells_.end()) continue;
          for (std::size_t j : it->second) {
            const Vec3 d = points_[j] - p;
            if (d.x * d.x + d.y * d.y + d.z * d.z <= eps2) out.push_back(j);
          }
        }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  CellKey key(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x / eps_)),
            static_cast<std::int64_t>(std::floor(p.y / eps_)),
            static_cast<std::int64_t>(std::floor(p.z / eps_))};
  }

  std::span<const Vec3> points_;
  double eps_;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> cells_;
};

}  // namespace detail

/// Per-point cluster index or kNoise. Core points have at least min_pts
/// neighbours within eps (self included). Clusters are numbered in the order
/// their first core point appears in the input; a border point joins the
/// first cluster that reaches it.
inline std::vector<int> dbscan(std::span<const Vec3> points, const ClusterParams& params) {
  check_params(params);
  constexpr int kUnvisited = -2;
  std::vector<int> labels(points.size(), kUnvisited);
  const detail::NeighborGrid grid(points, params.eps);
  const auto min_pts = static_cast<std::size_t>(params.min_pts);

  int cluster = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i] != kUnvisited) continue;
    auto seeds = grid.within(i);
    if (seeds.size() < min_pts) {
      labels[i] = kNoise;
      continue;
    }
    labels[i] = cluster;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const std::size_t q = seeds[k];
      if (labels[q] == kNoise) labels[q] = cluster;
      if (labels[q] != kUnvisited) continue;
      labels[q] = cluster;
      auto more = grid.within(q);
      if (more.size() >= min_pts) seeds.insert(seeds.end(), more.begin(), more.end());
    }
    ++cluster;
  }
  return labels;
}

/// Points of the most populous cluster (ties: lower index); empty if none.
inline std::vector<Vec3> largest_cluster(std::span<const Vec3> points,
                                         std::span<const int> labels) {
  std::vector<std::size_t> sizes;
  for (int l : labels) {
    if (l < 0) continue;
    if (static_cast<std::size_t>(l) >= sizes.size()) sizes.resize(l + 1, 0);
    ++sizes[l];
  }
  if (sizes.empty()) return {};
  const int best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());

  std::vector<Vec3> out;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (labels[i] == best) out.push_back(points[i]);
  return out;
}

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Per-coordinate median of the max(1, ceil(fraction * n)) deepest points.
inline Vec3 estimate_target(std::span<const Vec3> cluster, const TargetOptions& opt = {}) {
  if (cluster.empty()) throw Error(ErrorCode::EmptyCluster, "no points to estimate from");
  if (!(opt.fraction > 0.0 && opt.fraction <= 1.0))
    throw Error(ErrorCode::ValidationError, "fraction must lie in (0, 1]");

  const std::size_t n = cluster.size();
  // The 1e-9 keeps products like 0.02 * 100 from rounding up to 3.
  const auto wanted = static_cast<std::size_t>(std::ceil(opt.fraction * n - 1e-9));
  const std::size_t m = std::clamp<std::size_t>(wanted, 1, n);

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return opt.order == DepthOrder::Farthest ? cluster[a].z > cluster[b].z
                                             : cluster[a].z < cluster[b].z;
  });

  std::vector<double> xs, ys, zs;
  for (std::size_t k = 0; k < m; ++k) {
    xs.push_back(cluster[idx[k]].x);
    ys.push_back(cluster[idx[k]].y);
    zs.push_back(cluster[idx[k]].z);
  }
  return {detail::median(std::move(xs)), detail::median(std::move(ys)),
          detail::median(std::move(zs))};
}

/// Nearest box centroid to a camera-frame point, ties by id ascending.
inline std::pair<std::string, double> select_box(const Vec3& target_cam, const scene::Scene& s,
                                                 const RigidTransform& camera_pose) {
  if (s.boxes.empty()) throw Error(ErrorCode::EmptyScene, "scene has no boxes to select");
  const Vec3 p = camera_pose.apply(target_cam);
  const scene::BoxSpec* best = nullptr;
  double best_d = 0.0;
  for (const auto& b : s.boxes) {
    const double d = distance(p, b.center);
    if (!best || d < best_d || (d == best_d && b.id < best->id)) {
      best = &b;
      best_d = d;
    }
  }
  return {best->id, best_d};
}

inline PointingResult resolve_pointing(const PointCloud& cloud, const scene::Scene& s,
                                       const ClusterParams& params,
                                       const RigidTransform& camera_pose,
                                       const TargetOptions& opt = {}) {
  check_params(params);
  std::vector<Vec3> masked;
  for (const auto& cp : cloud.points)
    if (cp.mask) masked.push_back(cp.p);

  const auto labels = dbscan(masked, params);
  const auto arm = largest_cluster(masked, labels);
  if (arm.size() < static_cast<std::size_t>(params.min_cluster_size) || s.boxes.empty())
    return {};

  const Vec3 tip = estimate_target(arm, opt);
  auto [box, dist] = select_box(tip, s, camera_pose);
  return {true, camera_pose.apply(tip), std::move(box), dist};
}

// ---------------------------------------------------------------------------
// Point-cloud document

struct CloudDocument {
  PointCloud cloud;
  RigidTransform camera_pose;
};

inline CloudDocument decode_cloud(const Json& doc) {
  using namespace json_util;
  check_keys(doc, {"camera_pose", "points"}, "cloud");
  CloudDocument out;

  if (auto it = doc.find("camera_pose"); it != doc.end()) {
    check_keys(*it, {"translation", "rotation_rowmajor"}, "camera_pose");
    out.camera_pose.translation =
        as_vec3(require(*it, "translation", "camera_pose"), "camera_pose.translation");
    const Json& rot = require(*it, "rotation_rowmajor", "camera_pose");
    if (!rot.is_array() || rot.size() != 9)
      throw Error(ErrorCode::SchemaError, "camera_pose.rotation_rowmajor: expected 9 numbers");
    for (std::size_t i = 0; i < 9; ++i)
      out.camera_pose.rotation[i] = as_number(rot[i], "camera_pose.rotation_rowmajor");
    const auto& r = out.camera_pose.rotation;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double dot = r[3 * a] * r[3 * b] + r[3 * a + 1] * r[3 * b + 1] +
                           r[3 * a + 2] * r[3 * b + 2];
        if (std::abs(dot - (a == b ? 1.0 : 0.0)) > 1e-6)
          throw Error(ErrorCode::SchemaError, "camera_pose.rotation_rowmajor is not a rotation");
      }
  }

  const Json& pts = require(doc, "points", "cloud");
  if (!pts.is_array()) throw Error(ErrorCode::SchemaError, "points: expected an array");
  out.cloud.points.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::string ctx = "points[" + std::to_string(i) + "]";
    check_keys(pts[i], {"p", "mask"}, ctx);
    CloudPoint cp;
    cp.p = as_vec3(require(pts[i], "p", ctx), ctx + ".p");
    if (auto it = pts[i].find("mask"); it != pts[i].end()) cp.mask = as_bool(*it, ctx + ".mask");
    if (cp.mask && !(cp.p.z > 0))
      throw Error(ErrorCode::SchemaError, ctx + ": masked points need positive depth");
    out.cloud.points.push_back(cp);
  }
  return out;
}

inline Json encode_cloud(const CloudDocument& d) {
  Json pts = Json::array();
  for (const auto& cp : d.cloud.points)
    pts.push_back(Json{{"p", json_util::to_json(cp.p)}, {"mask", cp.mask}});
  return Json{{"camera_pose",
               Json{{"translation", json_util::to_json(d.camera_pose.translation)},
                    {"rotation_rowmajor", d.camera_pose.rotation}}},
              {"points", std::move(pts)}};
}

inline Json to_json(const PointingResult& r) {
  Json j{{"detected", r.detected}};
  if (r.target_point) j["target_point"] = json_util::to_json(*r.target_point);
  if (r.selected_box) j["selected_box"] = *r.selected_box;
  if (r.distance) j["distance"] = *r.distance;
  return j;
}

}  // namespace shelfbrg::pointing
