#pragma once

#include <string>
#include <vector>

#include "attnav/gridworld.hpp"

namespace fixtures {

// Builds a scene from '.'/'#' rows; objects take their default height band
// unless given.
inline attnav::Scene grid_scene(const std::vector<std::string>& rows,
                                std::vector<attnav::ObjectInstance> objects = {},
                                attnav::RoomType room = attnav::RoomType::Kitchen) {
  attnav::Scene s;
  s.id = "fixture";
  s.room_type = room;
  s.height = static_cast<int>(rows.size());
  s.width = static_cast<int>(rows.front().size());
  for (const auto& r : rows) {
    for (char c : r) s.walls.push_back(c == '#' ? 1 : 0);
  }
  s.objects = std::move(objects);
  return s;
}

inline attnav::ObjectInstance object(attnav::ObjectClass cls, int x, int y,
                                     attnav::HeightBand band = attnav::HeightBand::Mid) {
  return {cls, {x, y}, band};
}

// Open room with an outer wall ring.
inline attnav::Scene open_room(int side, std::vector<attnav::ObjectInstance> objects = {}) {
  std::vector<std::string> rows;
  for (int y = 0; y < side; ++y) {
    std::string r;
    for (int x = 0; x < side; ++x) r += (x == 0 || y == 0 || x == side - 1 || y == side - 1) ? '#' : '.';
    rows.push_back(r);
  }
  return grid_scene(rows, std::move(objects));
}

// The hand-enumerated shortest-path fixture:
//   #####
//   #.#T#     T = toaster (mid band) at (3,1), wall at (2,1)
//   #...#
//   #...#
//   #####
inline attnav::Scene bfs_fixture() {
  return grid_scene({"#####", "#.#.#", "#...#", "#...#", "#####"},
                    {object(attnav::ObjectClass::Toaster, 3, 1)});
}

}  // namespace fixtures
