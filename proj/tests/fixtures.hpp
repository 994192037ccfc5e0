#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "shelfbrg/scene.hpp"

namespace fixtures {

using shelfbrg::scene::make_box;
using shelfbrg::scene::Scene;

/// Pyramid: cubes A and B on the floor, bridge C across both.
inline Scene pyramid_p1() {
  Scene s;
  s.boxes = {make_box("A", {0.2, 0.2, 0.2}, {0.1, 0.1, 0.1}),
             make_box("B", {0.2, 0.2, 0.2}, {0.5, 0.1, 0.1}),
             make_box("C", {0.6, 0.2, 0.2}, {0.3, 0.1, 0.3})};
  return s;
}

/// Three aligned cubes: A under B under C.
inline Scene stack_s1() {
  Scene s;
  s.boxes = {make_box("A", {0.2, 0.2, 0.2}, {0.1, 0.1, 0.1}),
             make_box("B", {0.2, 0.2, 0.2}, {0.1, 0.1, 0.3}),
             make_box("C", {0.2, 0.2, 0.2}, {0.1, 0.1, 0.5})};
  return s;
}

/// A long box resting on three floor cubes with its centre over the middle
/// one; any single support can go, but not two of them.
inline Scene triple_bridge() {
  Scene s;
  s.boxes = {make_box("L", {0.2, 0.2, 0.2}, {0.1, 0.1, 0.1}),
             make_box("M", {0.2, 0.2, 0.2}, {0.3, 0.1, 0.1}),
             make_box("R", {0.2, 0.2, 0.2}, {0.5, 0.1, 0.1}),
             make_box("Z", {0.5, 0.2, 0.2}, {0.3, 0.1, 0.3})};
  return s;
}

inline std::string read_data(const std::string& name) {
  std::ifstream in(std::string(SHELFBRG_DATA_DIR) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fixtures
