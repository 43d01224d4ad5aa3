#include "attnav/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>

#include "attnav/errors.hpp"

namespace attnav {

namespace {

constexpr std::array<std::string_view, 4> kRoomNames = {"kitchen", "living_room", "bedroom",
                                                        "bathroom"};
constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "toaster",    "microwave",   "refrigerator", "coffee_maker", "garbage_can", "box",
    "bowl",       "pillow",      "laptop",       "television",   "plant",       "lamp",
    "book",       "alarm_clock", "sink",         "toilet_paper", "soap_bottle", "light_switch"};
constexpr std::array<std::string_view, 3> kBandNames = {"low", "mid", "high"};
constexpr std::array<std::string_view, 3> kSplitNames = {"train", "val", "test"};
constexpr std::array<std::string_view, kNumActions> kActionNames = {
    "MoveAhead", "RotateLeft", "RotateRight", "LookDown", "LookUp", "Done"};

constexpr std::array<ObjectClass, 7> kKitchen = {
    ObjectClass::Toaster,    ObjectClass::Microwave, ObjectClass::Refrigerator,
    ObjectClass::CoffeeMaker, ObjectClass::GarbageCan, ObjectClass::Box, ObjectClass::Bowl};
constexpr std::array<ObjectClass, 6> kLivingRoom = {ObjectClass::Pillow,     ObjectClass::Laptop,
                                                    ObjectClass::Television, ObjectClass::GarbageCan,
                                                    ObjectClass::Box,        ObjectClass::Bowl};
constexpr std::array<ObjectClass, 4> kBedroom = {ObjectClass::Plant, ObjectClass::Lamp,
                                                 ObjectClass::Book, ObjectClass::AlarmClock};
constexpr std::array<ObjectClass, 4> kBathroom = {ObjectClass::Sink, ObjectClass::ToiletPaper,
                                                  ObjectClass::SoapBottle, ObjectClass::LightSwitch};

template <std::size_t N>
std::size_t lookup(const std::array<std::string_view, N>& names, std::string_view s,
                   const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return i;
  }
  throw ContractError(std::string("unknown ") + what + ": " + std::string(s));
}

int norm_heading(int deg) { return ((deg % 360) + 360) % 360; }

}  // namespace

std::string_view to_string(RoomType r) { return kRoomNames[static_cast<std::size_t>(r)]; }
std::string_view to_string(ObjectClass c) { return kClassNames[static_cast<std::size_t>(c)]; }
std::string_view to_string(HeightBand b) { return kBandNames[static_cast<std::size_t>(b)]; }
std::string_view to_string(Split s) { return kSplitNames[static_cast<std::size_t>(s)]; }
std::string_view to_string(Action a) { return kActionNames[static_cast<std::size_t>(a)]; }

RoomType parse_room_type(std::string_view s) {
  return static_cast<RoomType>(lookup(kRoomNames, s, "room type"));
}
ObjectClass parse_object_class(std::string_view s) {
  return static_cast<ObjectClass>(lookup(kClassNames, s, "object class"));
}
HeightBand parse_height_band(std::string_view s) {
  return static_cast<HeightBand>(lookup(kBandNames, s, "height band"));
}
Split parse_split(std::string_view s) {
  return static_cast<Split>(lookup(kSplitNames, s, "split"));
}

Action action_from_index(std::size_t index) {
  if (index >= kNumActions) throw ContractError("invalid action id " + std::to_string(index));
  return static_cast<Action>(index);
}

std::span<const ObjectClass> room_classes(RoomType room) {
  switch (room) {
    case RoomType::Kitchen: return kKitchen;
    case RoomType::LivingRoom: return kLivingRoom;
    case RoomType::Bedroom: return kBedroom;
    case RoomType::Bathroom: return kBathroom;
  }
  return {};
}

HeightBand default_height_band(ObjectClass c) {
  switch (c) {
    case ObjectClass::GarbageCan:
    case ObjectClass::Box:
    case ObjectClass::Plant:
    case ObjectClass::ToiletPaper:
      return HeightBand::Low;
    case ObjectClass::Microwave:
    case ObjectClass::Refrigerator:
    case ObjectClass::Television:
    case ObjectClass::LightSwitch:
      return HeightBand::High;
    default:
      return HeightBand::Mid;
  }
}

int eval_step_cap(RoomType room) { return room == RoomType::LivingRoom ? 200 : 100; }

Cell heading_vector(int heading_deg) {
  switch (norm_heading(heading_deg)) {
    case 0: return {0, -1};
    case 45: return {1, -1};
    case 90: return {1, 0};
    case 135: return {1, 1};
    case 180: return {0, 1};
    case 225: return {-1, 1};
    case 270: return {-1, 0};
    case 315: return {-1, -1};
  }
  throw ContractError("heading must be a multiple of 45, got " + std::to_string(heading_deg));
}

bool Scene::has_object_at(Cell c) const {
  return std::any_of(objects.begin(), objects.end(),
                     [c](const ObjectInstance& o) { return o.cell == c; });
}

bool Scene::has_class(ObjectClass c) const {
  return std::any_of(objects.begin(), objects.end(),
                     [c](const ObjectInstance& o) { return o.cls == c; });
}

std::vector<ObjectClass> Scene::present_classes() const {
  std::vector<ObjectClass> out;
  for (ObjectClass c : room_classes(room_type)) {
    if (has_class(c)) out.push_back(c);
  }
  return out;
}

bool valid_pose(const Scene& scene, const AgentPose& pose) {
  return scene.is_free(pose.cell) && pose.heading_deg >= 0 && pose.heading_deg < 360 &&
         pose.heading_deg % 45 == 0 &&
         (pose.tilt_deg == -30 || pose.tilt_deg == 0 || pose.tilt_deg == 30);
}

AgentPose apply_action(const Scene& scene, const AgentPose& pose, Action action) {
  AgentPose next = pose;
  switch (action) {
    case Action::MoveAhead: {
      const Cell d = heading_vector(pose.heading_deg);
      const Cell dest{pose.cell.x + d.x, pose.cell.y + d.y};
      if (scene.is_free(dest)) next.cell = dest;
      break;
    }
    case Action::RotateLeft: next.heading_deg = norm_heading(pose.heading_deg - 45); break;
    case Action::RotateRight: next.heading_deg = norm_heading(pose.heading_deg + 45); break;
    case Action::LookDown: next.tilt_deg = std::max(pose.tilt_deg - 30, -30); break;
    case Action::LookUp: next.tilt_deg = std::min(pose.tilt_deg + 30, 30); break;
    case Action::Done: break;
  }
  return next;
}

StepOutcome step(const Scene& scene, const AgentPose& pose, Action action, ObjectClass target,
                 int steps_used, int cap) {
  if (static_cast<std::size_t>(action) >= kNumActions) {
    throw ContractError("invalid action id " + std::to_string(static_cast<int>(action)));
  }
  if (steps_used >= cap) throw ContractError("step called after the step cap was reached");
  StepOutcome out;
  out.steps_used = steps_used + 1;
  if (action == Action::Done) {
    out.pose = pose;
    out.done = true;
    out.success = is_success(scene, pose, target);
    out.reward = out.success ? kSuccessReward : 0.0;
    return out;
  }
  out.pose = apply_action(scene, pose, action);
  out.reward = kStepPenalty;
  out.done = out.steps_used >= cap;
  return out;
}

bool line_of_sight(const Scene& scene, Cell from, Cell to) {
  int x = from.x, y = from.y;
  const int dx = std::abs(to.x - from.x), dy = std::abs(to.y - from.y);
  const int sx = from.x < to.x ? 1 : -1, sy = from.y < to.y ? 1 : -1;
  int err = dx - dy;
  while (true) {
    if (x == to.x && y == to.y) return true;
    if (!(x == from.x && y == from.y) && scene.is_wall({x, y})) return false;
    const int e2 = 2 * err;
    if (e2 > -dy) {
      err -= dy;
      x += sx;
    }
    if (e2 < dx) {
      err += dx;
      y += sy;
    }
  }
}

bool band_visible(int tilt_deg, HeightBand band) {
  switch (tilt_deg) {
    case -30: return band == HeightBand::Low || band == HeightBand::Mid;
    case 0: return band == HeightBand::Mid || band == HeightBand::High;
    case 30: return band == HeightBand::High;
  }
  return false;
}

namespace {

// Within the +-45 deg cone, decided in integers: dot >= 0 and
// 2 dot^2 >= |h|^2 |d|^2, i.e. cos^2 >= 1/2.
bool within_cone(Cell h, int dx, int dy) {
  const long long dot = static_cast<long long>(h.x) * dx + static_cast<long long>(h.y) * dy;
  if (dot < 0) return false;
  const long long hh = static_cast<long long>(h.x) * h.x + static_cast<long long>(h.y) * h.y;
  const long long dd = static_cast<long long>(dx) * dx + static_cast<long long>(dy) * dy;
  return 2 * dot * dot >= hh * dd;
}

}  // namespace

bool in_view(const Scene& scene, const AgentPose& pose, const ObjectInstance& object) {
  if (!band_visible(pose.tilt_deg, object.band)) return false;
  const int dx = object.cell.x - pose.cell.x;
  const int dy = object.cell.y - pose.cell.y;
  if (dx == 0 && dy == 0) return true;
  const double dist_m = std::sqrt(static_cast<double>(dx * dx + dy * dy)) * scene.cell_size_m;
  if (dist_m > kViewRangeM + 1e-9) return false;
  if (!within_cone(heading_vector(pose.heading_deg), dx, dy)) return false;
  return line_of_sight(scene, pose.cell, object.cell);
}

bool is_success(const Scene& scene, const AgentPose& pose, ObjectClass target) {
  bool present = false;
  for (const ObjectInstance& obj : scene.objects) {
    if (obj.cls != target) continue;
    present = true;
    const int dx = obj.cell.x - pose.cell.x;
    const int dy = obj.cell.y - pose.cell.y;
    const double dist_m = std::sqrt(static_cast<double>(dx * dx + dy * dy)) * scene.cell_size_m;
    if (dist_m <= kSuccessRadiusM + 1e-9 && in_view(scene, pose, obj)) return true;
  }
  if (!present) {
    throw ContractError("target class " + std::string(to_string(target)) + " absent from scene " +
                        scene.id);
  }
  return false;
}

std::size_t state_count(const Scene& scene) {
  return static_cast<std::size_t>(scene.width * scene.height) * 8 * 3;
}

std::size_t state_index(const Scene& scene, const AgentPose& pose) {
  const auto cell = static_cast<std::size_t>(pose.cell.y * scene.width + pose.cell.x);
  return (cell * 8 + static_cast<std::size_t>(pose.heading_deg / 45)) * 3 +
         static_cast<std::size_t>((pose.tilt_deg + 30) / 30);
}

AgentPose state_pose(const Scene& scene, std::size_t index) {
  AgentPose pose;
  pose.tilt_deg = static_cast<int>(index % 3) * 30 - 30;
  index /= 3;
  pose.heading_deg = static_cast<int>(index % 8) * 45;
  index /= 8;
  pose.cell = {static_cast<int>(index) % scene.width, static_cast<int>(index) / scene.width};
  return pose;
}

std::vector<int> bfs_distances(const Scene& scene, const AgentPose& start,
                               std::span<const Action> order) {
  if (!valid_pose(scene, start)) throw ContractError("bfs from an invalid pose");
  std::vector<int> dist(state_count(scene), kUnreachable);
  std::deque<std::size_t> queue;
  const std::size_t s0 = state_index(scene, start);
  dist[s0] = 0;
  queue.push_back(s0);
  while (!queue.empty()) {
    const std::size_t s = queue.front();
    queue.pop_front();
    const AgentPose pose = state_pose(scene, s);
    for (Action a : order) {
      const std::size_t n = state_index(scene, apply_action(scene, pose, a));
      if (dist[n] == kUnreachable) {
        dist[n] = dist[s] + 1;
        queue.push_back(n);
      }
    }
  }
  return dist;
}

int shortest_path_len(const Scene& scene, const Task& task, std::span<const Action> order) {
  if (!scene.has_class(task.target)) {
    throw ContractError("target class " + std::string(to_string(task.target)) +
                        " absent from scene " + scene.id);
  }
  const std::vector<int> dist = bfs_distances(scene, task.start, order);
  int best = kUnreachable;
  for (std::size_t s = 0; s < dist.size(); ++s) {
    if (dist[s] == kUnreachable) continue;
    if (best != kUnreachable && dist[s] >= best) continue;
    if (is_success(scene, state_pose(scene, s), task.target)) best = dist[s];
  }
  if (best == kUnreachable) {
    throw UnsolvableTaskError("no reachable success pose for " +
                              std::string(to_string(task.target)) + " in " + scene.id);
  }
  return best;
}

int pose_distance(const Scene& scene, const AgentPose& from, const AgentPose& to) {
  return bfs_distances(scene, from)[state_index(scene, to)];
}

const Scene& Corpus::find(std::string_view id) const {
  for (const Scene& s : scenes) {
    if (s.id == id) return s;
  }
  throw ContractError("no scene with id " + std::string(id));
}

std::vector<const Scene*> Corpus::in_split(Split split) const {
  std::vector<const Scene*> out;
  for (const Scene& s : scenes) {
    if (s.split == split) out.push_back(&s);
  }
  return out;
}

namespace {

std::vector<ObjectClass> candidate_targets(const Corpus& corpus, const Scene& scene) {
  std::vector<ObjectClass> out;
  for (ObjectClass c : scene.present_classes()) {
    if (corpus.target_filter.empty() ||
        std::find(corpus.target_filter.begin(), corpus.target_filter.end(), c) !=
            corpus.target_filter.end()) {
      out.push_back(c);
    }
  }
  return out;
}

Task sample_from(Rng& rng, const Corpus& corpus, const std::vector<const Scene*>& scenes) {
  constexpr int kMaxAttempts = 10000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const Scene& scene = *scenes[uniform_index(rng, scenes.size())];
    const std::vector<ObjectClass> targets = candidate_targets(corpus, scene);
    if (targets.empty()) continue;
    const ObjectClass target = targets[uniform_index(rng, targets.size())];
    std::vector<Cell> free_cells;
    for (int y = 0; y < scene.height; ++y) {
      for (int x = 0; x < scene.width; ++x) {
        if (scene.is_free({x, y})) free_cells.push_back({x, y});
      }
    }
    const Cell cell = free_cells[uniform_index(rng, free_cells.size())];
    const int heading = static_cast<int>(uniform_index(rng, 8)) * 45;
    Task task{scene.id, AgentPose{cell, heading, 0}, target};
    try {
      shortest_path_len(scene, task);
      return task;
    } catch (const UnsolvableTaskError&) {
    }
  }
  throw ContractError("could not sample a solvable task");
}

}  // namespace

Task sample_task(Rng& rng, const Corpus& corpus, Split split) {
  std::vector<RoomType> rooms;
  for (RoomType r : kRoomTypes) {
    for (const Scene* s : corpus.in_split(split)) {
      if (s->room_type == r) {
        rooms.push_back(r);
        break;
      }
    }
  }
  if (rooms.empty()) throw ContractError("no scenes in split " + std::string(to_string(split)));
  return sample_task(rng, corpus, split, rooms[uniform_index(rng, rooms.size())]);
}

Task sample_task(Rng& rng, const Corpus& corpus, Split split, RoomType room) {
  std::vector<const Scene*> scenes;
  for (const Scene* s : corpus.in_split(split)) {
    if (s->room_type == room) scenes.push_back(s);
  }
  if (scenes.empty()) {
    throw ContractError("no " + std::string(to_string(room)) + " scenes in split " +
                        std::string(to_string(split)));
  }
  return sample_from(rng, corpus, scenes);
}

}  // namespace attnav
