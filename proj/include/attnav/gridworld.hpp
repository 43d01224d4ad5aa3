#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attnav/rng.hpp"

namespace attnav {

enum class RoomType : std::uint8_t { Kitchen, LivingRoom, Bedroom, Bathroom };
inline constexpr std::array<RoomType, 4> kRoomTypes = {RoomType::Kitchen, RoomType::LivingRoom,
                                                       RoomType::Bedroom, RoomType::Bathroom};

enum class ObjectClass : std::uint8_t {
  Toaster,
  Microwave,
  Refrigerator,
  CoffeeMaker,
  GarbageCan,
  Box,
  Bowl,
  Pillow,
  Laptop,
  Television,
  Plant,
  Lamp,
  Book,
  AlarmClock,
  Sink,
  ToiletPaper,
  SoapBottle,
  LightSwitch,
};
inline constexpr std::size_t kNumClasses = 18;

enum class HeightBand : std::uint8_t { Low, Mid, High };
enum class Split : std::uint8_t { Train, Val, Test };

enum class Action : std::uint8_t { MoveAhead, RotateLeft, RotateRight, LookDown, LookUp, Done };
inline constexpr std::size_t kNumActions = 6;
inline constexpr std::array<Action, 5> kMovementActions = {
    Action::MoveAhead, Action::RotateLeft, Action::RotateRight, Action::LookDown, Action::LookUp};

std::string_view to_string(RoomType r);
std::string_view to_string(ObjectClass c);
std::string_view to_string(HeightBand b);
std::string_view to_string(Split s);
std::string_view to_string(Action a);
RoomType parse_room_type(std::string_view s);
ObjectClass parse_object_class(std::string_view s);
HeightBand parse_height_band(std::string_view s);
Split parse_split(std::string_view s);
Action action_from_index(std::size_t index);

// Target classes per room type, in the order the taxonomy lists them.
std::span<const ObjectClass> room_classes(RoomType room);
HeightBand default_height_band(ObjectClass c);

inline constexpr double kCellSizeM = 0.25;
inline constexpr double kSuccessRadiusM = 1.0;
inline constexpr double kViewRangeM = 5.0;
inline constexpr int kHalfFovDeg = 45;
inline constexpr int kTrainStepCap = 30;

// Evaluation step cap: 200 actions in living rooms, 100 elsewhere.
int eval_step_cap(RoomType room);

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

struct AgentPose {
  Cell cell;
  int heading_deg = 0;  // clockwise from north (-y); multiple of 45
  int tilt_deg = 0;     // -30 (down), 0, +30 (up)
  auto operator<=>(const AgentPose&) const = default;
};

// Unit step for a heading: 0 -> (0,-1), 90 -> (1,0), 45 -> (1,-1), ...
Cell heading_vector(int heading_deg);

struct ObjectInstance {
  ObjectClass cls = ObjectClass::Toaster;
  Cell cell;
  HeightBand band = HeightBand::Mid;
  bool operator==(const ObjectInstance&) const = default;
};

// Row-major occupancy grid; objects sit on non-wall cells and block movement.
struct Scene {
  std::string id;
  RoomType room_type = RoomType::Kitchen;
  Split split = Split::Train;
  double cell_size_m = kCellSizeM;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> walls;  // 1 = wall
  std::vector<ObjectInstance> objects;
  std::vector<ObjectClass> absent;  // taxonomy classes with no instance

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  bool is_wall(Cell c) const {
    return !in_bounds(c) || walls[static_cast<std::size_t>(c.y * width + c.x)] != 0;
  }
  bool has_object_at(Cell c) const;
  // Walkable: inside, not a wall, not an object.
  bool is_free(Cell c) const { return !is_wall(c) && !has_object_at(c); }
  bool has_class(ObjectClass c) const;
  std::vector<ObjectClass> present_classes() const;

  bool operator==(const Scene&) const = default;
};

struct Task {
  std::string scene_id;
  AgentPose start;
  ObjectClass target = ObjectClass::Toaster;
  bool operator==(const Task&) const = default;
};

struct StepOutcome {
  double reward = 0.0;
  bool done = false;
  bool success = false;
  AgentPose pose;
  int steps_used = 0;
};

inline constexpr double kStepPenalty = -0.01;
inline constexpr double kSuccessReward = 5.0;

bool valid_pose(const Scene& scene, const AgentPose& pose);

// Kinematics only: MoveAhead to the (possibly diagonal) neighbour if it is
// free, rotations by 45 degrees mod 360, tilts clamped to [-30, 30].
AgentPose apply_action(const Scene& scene, const AgentPose& pose, Action action);

// One environment transition. Non-Done actions cost 0.01; a successful Done
// pays 5; a failed Done ends the episode with reward 0. Reaching the cap ends
// the episode unsuccessfully.
StepOutcome step(const Scene& scene, const AgentPose& pose, Action action, ObjectClass target,
                 int steps_used, int cap);

// Walls strictly between the two cells along the Bresenham line.
bool line_of_sight(const Scene& scene, Cell from, Cell to);

// Heading within +-45 deg, range <= 5 m, unoccluded, and the object's height
// band visible at the current tilt.
bool in_view(const Scene& scene, const AgentPose& pose, const ObjectInstance& object);
bool band_visible(int tilt_deg, HeightBand band);

// Some instance of target within 1 m and in view. Throws ContractError if the
// scene has no instance of target.
bool is_success(const Scene& scene, const AgentPose& pose, ObjectClass target);

// Dense index over (cell, heading, tilt).
std::size_t state_index(const Scene& scene, const AgentPose& pose);
std::size_t state_count(const Scene& scene);
AgentPose state_pose(const Scene& scene, std::size_t index);

inline constexpr int kUnreachable = -1;

// BFS distances from start over the five movement actions, expanded in the
// given action order.
std::vector<int> bfs_distances(const Scene& scene, const AgentPose& start,
                               std::span<const Action> order = kMovementActions);

// Minimum number of movement actions from task.start to a pose where
// is_success holds. Throws UnsolvableTaskError if no such pose is reachable.
int shortest_path_len(const Scene& scene, const Task& task,
                      std::span<const Action> order = kMovementActions);

// Movement-action distance between two poses, or kUnreachable.
int pose_distance(const Scene& scene, const AgentPose& from, const AgentPose& to);

struct Corpus {
  std::vector<Scene> scenes;
  // When non-empty, tasks only target these classes.
  std::vector<ObjectClass> target_filter;

  const Scene& find(std::string_view id) const;
  std::vector<const Scene*> in_split(Split split) const;
};

// Uniform over room type, then scene of that type in the split, then present
// target class, free start cell and heading (tilt 0); resamples until the
// task is solvable.
Task sample_task(Rng& rng, const Corpus& corpus, Split split);
// Same, restricted to one room type.
Task sample_task(Rng& rng, const Corpus& corpus, Split split, RoomType room);

}  // namespace attnav
