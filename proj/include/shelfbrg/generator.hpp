#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shelfbrg/error.hpp"
#include "shelfbrg/physics.hpp"
#include "shelfbrg/scene.hpp"
#include "shelfbrg/validation.hpp"

namespace shelfbrg::scene {

/// The three carton sizes used in the shelf trials (x, y, z in meters).
inline std::vector<Vec3> default_palette() {
  return {{0.23, 0.31, 0.25}, {0.20, 0.20, 0.20}, {0.50, 0.17, 0.17}};
}

inline constexpr int kAttemptsPerBox = 200;
inline constexpr double kPlacementGrid = 0.005;  // footprint corners snap to 5 mm
inline constexpr double kStackBias = 0.6;  // share of drop spots taken over a placed box
inline constexpr int kDropCandidates = 3;
inline constexpr int kPatience = 8;  // attempts pooled before taking the lowest spot

namespace detail {

// mt19937_64 output is fixed by the standard; the distributions are not, so
// sampling is done by hand to keep generated scenes identical everywhere.
class SceneRng {
 public:
  explicit SceneRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

 private:
  std::mt19937_64 engine_;
};

inline double snap_min_edge(double min_edge, double extent, double limit) {
  double snapped = std::round(min_edge / kPlacementGrid) * kPlacementGrid;
  return std::clamp(snapped, 0.0, limit - extent);
}

inline std::string box_name(std::size_t index, std::size_t total) {
  std::string digits = std::to_string(index + 1);
  const std::size_t width = std::max<std::size_t>(2, std::to_string(total).size());
  return "b" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

}  // namespace detail

/// Seeded random stacking. Each box is dropped either onto the shelf floor or
/// over a previously placed box, resting on whatever lies highest beneath its
/// footprint. Placements that leave the shelf or would be unstable are
/// discarded; among the rest the lowest wins. A box that finds no spot within
/// kAttemptsPerBox attempts ends generation.
inline Scene generate_scene(std::uint64_t seed, std::size_t n_boxes,
                            std::span<const Vec3> palette, const ShelfSpec& shelf = {},
                            const SceneConfig& config = {}) {
  if (n_boxes < 1) throw Error(ErrorCode::ValidationError, "n_boxes must be at least 1");
  if (palette.empty()) throw Error(ErrorCode::ValidationError, "palette must not be empty");
  for (const auto& d : palette)
    if (!(d.x > 0 && d.y > 0 && d.z > 0))
      throw Error(ErrorCode::ValidationError, "palette dimensions must be positive");

  detail::SceneRng rng(seed);
  Scene s{shelf, {}, config};

  for (std::size_t i = 0; i < n_boxes; ++i) {
    // The lowest stable spot found over the first kPatience attempts wins;
    // later attempts only run while nothing stable has turned up.
    std::optional<Scene> best;
    double best_rest = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < kAttemptsPerBox; ++attempt) {
      if (best && attempt >= kPatience) break;
      Vec3 dims = palette[rng.index(palette.size())];
      // Yaw by 90 degrees when that is the only way (or a coin flip) to fit.
      const Vec3 yawed{dims.y, dims.x, dims.z};
      auto fits = [&](const Vec3& d) {
        return d.x <= shelf.width_x && d.y <= shelf.depth_y && d.z <= shelf.height_z;
      };
      const bool coin = rng.uniform() < 0.5;
      if (!fits(dims) || (coin && fits(yawed))) dims = yawed;
      if (!fits(dims)) continue;

      auto rest_height = [&](double min_x, double min_y) {
        const Rect2 fp{min_x, min_y, min_x + dims.x, min_y + dims.y};
        double rest = 0.0;
        for (const auto& other : s.boxes)
          if (intersect(fp, other.footprint()).area() > 0.0) rest = std::max(rest, other.top());
        return rest;
      };

      // A handful of drop spots: over a placed box, anywhere, flush against
      // a side wall, or beside a placed box.
      for (int k = 0; k < kDropCandidates + 3; ++k) {
        double raw_x;
        double raw_y = rng.uniform(0.0, shelf.depth_y - dims.y);
        if (k == kDropCandidates) {
          raw_x = 0.0;
        } else if (k == kDropCandidates + 1) {
          raw_x = shelf.width_x - dims.x;
        } else if (k == kDropCandidates + 2) {
          if (s.boxes.empty()) continue;
          const BoxSpec& side = s.boxes[rng.index(s.boxes.size())];
          raw_x = rng.uniform() < 0.5 ? side.footprint().max_x : side.footprint().min_x - dims.x;
        } else if (!s.boxes.empty() && rng.uniform() < kStackBias) {
          const BoxSpec& base = s.boxes[rng.index(s.boxes.size())];
          const double reach = 0.5 * (base.dims.x + dims.x) * 0.6;
          raw_x = base.center.x + rng.uniform(-reach, reach) - dims.x / 2.0;
          raw_y = base.center.y + rng.uniform(-0.02, 0.02) - dims.y / 2.0;
        } else {
          raw_x = rng.uniform(0.0, shelf.width_x - dims.x);
        }
        const double x = detail::snap_min_edge(raw_x, dims.x, shelf.width_x);
        const double y = detail::snap_min_edge(raw_y, dims.y, shelf.depth_y);
        const double rest = rest_height(x, y);
        if (rest >= best_rest || rest + dims.z > shelf.height_z) continue;
        BoxSpec box = make_box(detail::box_name(i, n_boxes), dims,
                               {x + dims.x / 2.0, y + dims.y / 2.0, rest + dims.z / 2.0}, config);
        Scene trial = s;
        trial.boxes.push_back(std::move(box));
        if (!physics::is_stable(trial.boxes.back().id, physics::compute_contacts(trial), trial))
          continue;
        best = std::move(trial);
        best_rest = rest;
      }
    }
    if (!best)
      throw Error(ErrorCode::GenerationExhausted,
                  "placed " + std::to_string(i) + " of " + std::to_string(n_boxes) +
                      " boxes before the attempt budget ran out");
    s = std::move(*best);
  }

  if (auto report = validate_scene(s); !report.empty())
    throw std::logic_error("generator produced an invalid scene: " + describe(report));
  return s;
}

inline Scene generate_scene(std::uint64_t seed, std::size_t n_boxes) {
  const auto palette = default_palette();
  return generate_scene(seed, n_boxes, palette);
}

}  // namespace shelfbrg::scene
