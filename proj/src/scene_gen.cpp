#include "attnav/scene_gen.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

#include "attnav/errors.hpp"

namespace attnav {

namespace {

struct CueRule {
  ObjectClass dependent;
  ObjectClass anchor;
};

constexpr int kCueRadius = 3;
constexpr double kCueProbability = 0.8;
constexpr double kPresenceProbability = 0.85;
constexpr double kSecondInstanceProbability = 0.25;
constexpr int kMaxAttempts = 1000;

std::vector<CueRule> cue_rules(RoomType room) {
  switch (room) {
    case RoomType::Kitchen:
      return {{ObjectClass::Toaster, ObjectClass::Refrigerator},
              {ObjectClass::CoffeeMaker, ObjectClass::Toaster},
              {ObjectClass::Bowl, ObjectClass::Microwave}};
    case RoomType::LivingRoom:
      return {{ObjectClass::Laptop, ObjectClass::Television},
              {ObjectClass::Bowl, ObjectClass::Pillow}};
    case RoomType::Bedroom:
      return {{ObjectClass::AlarmClock, ObjectClass::Lamp}, {ObjectClass::Book, ObjectClass::Lamp}};
    case RoomType::Bathroom:
      return {{ObjectClass::SoapBottle, ObjectClass::Sink},
              {ObjectClass::ToiletPaper, ObjectClass::Sink}};
  }
  return {};
}

// Classes that every scene of the room type contains.
std::vector<ObjectClass> anchors(RoomType room) {
  switch (room) {
    case RoomType::Kitchen: return {ObjectClass::Refrigerator};
    case RoomType::LivingRoom: return {ObjectClass::Television};
    case RoomType::Bedroom: return {ObjectClass::Lamp};
    case RoomType::Bathroom: return {ObjectClass::Sink};
  }
  return {};
}

int randint(Rng& rng, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(hi - lo + 1)));
}

void set_wall(Scene& s, int x, int y) { s.walls[static_cast<std::size_t>(y * s.width + x)] = 1; }

void clear_wall(Scene& s, int x, int y) {
  s.walls[static_cast<std::size_t>(y * s.width + x)] = 0;
}

bool walkable_connected(const Scene& s) {
  std::vector<Cell> free;
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      if (s.is_free({x, y})) free.push_back({x, y});
    }
  }
  if (free.empty()) return false;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(s.width * s.height), 0);
  std::deque<Cell> queue{free.front()};
  seen[static_cast<std::size_t>(free.front().y * s.width + free.front().x)] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    for (int heading = 0; heading < 360; heading += 45) {
      const Cell d = heading_vector(heading);
      const Cell n{c.x + d.x, c.y + d.y};
      if (!s.is_free(n)) continue;
      auto& flag = seen[static_cast<std::size_t>(n.y * s.width + n.x)];
      if (flag) continue;
      flag = 1;
      ++reached;
      queue.push_back(n);
    }
  }
  return reached == free.size();
}

void add_partitions(Scene& s, Rng& rng) {
  const int count = randint(rng, 1, 3);
  std::vector<int> used_x, used_y;
  for (int p = 0; p < count; ++p) {
    const bool vertical = uniform_index(rng, 2) == 0;
    const int span = vertical ? s.width : s.height;
    const int pos = randint(rng, 4, span - 5);
    auto& used = vertical ? used_x : used_y;
    if (std::any_of(used.begin(), used.end(), [pos](int u) { return std::abs(u - pos) < 3; })) {
      continue;
    }
    used.push_back(pos);
    const int length = vertical ? s.height : s.width;
    // Partitions run from one outer wall part of the way across, leaving a
    // door gap of 2 cells somewhere along them.
    const int extent = randint(rng, length / 2, length - 1);
    const bool from_start = uniform_index(rng, 2) == 0;
    for (int k = 0; k < extent; ++k) {
      const int t = from_start ? k : length - 1 - k;
      if (vertical) set_wall(s, pos, t); else set_wall(s, t, pos);
    }
    const int door = randint(rng, 2, extent - 3 > 2 ? extent - 3 : 2);
    for (int k = door; k < door + 2; ++k) {
      const int t = from_start ? k : length - 1 - k;
      if (t <= 0 || t >= length - 1) continue;
      if (vertical) clear_wall(s, pos, t); else clear_wall(s, t, pos);
    }
  }
}

std::vector<Cell> free_cells(const Scene& s) {
  std::vector<Cell> out;
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      if (s.is_free({x, y})) out.push_back({x, y});
    }
  }
  return out;
}

std::vector<Cell> cells_near(const Scene& s, Cell anchor, int radius) {
  std::vector<Cell> out;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy > radius * radius || (dx == 0 && dy == 0)) continue;
      const Cell c{anchor.x + dx, anchor.y + dy};
      if (s.is_free(c)) out.push_back(c);
    }
  }
  return out;
}

bool place(Scene& s, Rng& rng, ObjectClass cls, const std::vector<Cell>& candidates) {
  if (candidates.empty()) return false;
  const Cell c = candidates[uniform_index(rng, candidates.size())];
  s.objects.push_back({cls, c, default_height_band(cls)});
  if (!walkable_connected(s)) {
    s.objects.pop_back();
    return false;
  }
  return true;
}

bool populate(Scene& s, Rng& rng) {
  const std::vector<ObjectClass> must = anchors(s.room_type);
  const std::vector<CueRule> rules = cue_rules(s.room_type);
  // Anchors, then free classes, then dependents in rule order (rules list
  // their anchors first).
  auto is_dependent = [&](ObjectClass c) {
    return std::any_of(rules.begin(), rules.end(), [c](const CueRule& r) { return r.dependent == c; });
  };
  std::vector<ObjectClass> order = must;
  for (ObjectClass c : room_classes(s.room_type)) {
    if (std::find(must.begin(), must.end(), c) == must.end() && !is_dependent(c)) order.push_back(c);
  }
  for (const CueRule& r : rules) order.push_back(r.dependent);

  for (ObjectClass cls : order) {
    const bool required = std::find(must.begin(), must.end(), cls) != must.end();
    if (!required && uniform_unit(rng) >= kPresenceProbability) {
      s.absent.push_back(cls);
      continue;
    }
    const int instances = uniform_unit(rng) < kSecondInstanceProbability ? 2 : 1;
    for (int k = 0; k < instances; ++k) {
      std::vector<Cell> candidates;
      for (const CueRule& r : rules) {
        if (r.dependent != cls || uniform_unit(rng) >= kCueProbability) continue;
        for (const ObjectInstance& o : s.objects) {
          if (o.cls != r.anchor) continue;
          auto near = cells_near(s, o.cell, kCueRadius);
          candidates.insert(candidates.end(), near.begin(), near.end());
        }
      }
      if (candidates.empty()) candidates = free_cells(s);
      bool ok = false;
      for (int tries = 0; tries < 20 && !ok; ++tries) ok = place(s, rng, cls, candidates);
      if (!ok && k == 0) return false;
    }
  }
  return s.present_classes().size() >= 2;
}

Scene empty_room(std::string id, RoomType room, Split split, int width, int height) {
  Scene s;
  s.id = std::move(id);
  s.room_type = room;
  s.split = split;
  s.width = width;
  s.height = height;
  s.walls.assign(static_cast<std::size_t>(width * height), 0);
  for (int x = 0; x < width; ++x) {
    set_wall(s, x, 0);
    set_wall(s, x, height - 1);
  }
  for (int y = 0; y < height; ++y) {
    set_wall(s, 0, y);
    set_wall(s, width - 1, y);
  }
  return s;
}

std::string scene_id(RoomType room, int index) {
  std::string id(to_string(room));
  id += '_';
  if (index < 10) id += '0';
  id += std::to_string(index);
  return id;
}

}  // namespace

Split split_for_index(int index) {
  if (index < kTrainScenesPerRoom) return Split::Train;
  if (index < kTrainScenesPerRoom + kValScenesPerRoom) return Split::Val;
  return Split::Test;
}

Scene generate_scene(std::uint64_t seed, RoomType room, Split split, int index) {
  Rng rng = make_rng(seed, "scene", static_cast<std::uint64_t>(room) * 1000 +
                                        static_cast<std::uint64_t>(index));
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const int width = randint(rng, 12, 20);
    const int height = randint(rng, 12, 20);
    Scene s = empty_room(scene_id(room, index), room, split, width, height);
    add_partitions(s, rng);
    if (!walkable_connected(s)) continue;
    if (!populate(s, rng)) continue;
    return s;
  }
  throw std::runtime_error("scene generation failed after 1000 attempts for " +
                           scene_id(room, index));
}

Corpus generate_corpus(std::uint64_t seed) {
  Corpus corpus;
  for (RoomType room : kRoomTypes) {
    for (int i = 0; i < kScenesPerRoom; ++i) {
      corpus.scenes.push_back(generate_scene(seed, room, split_for_index(i), i));
    }
  }
  return corpus;
}

// Large enough that the target is usually out of view at the start, so the
// refrigerator cue matters.
constexpr int kSmokeSide = 14;

Corpus make_smoke_corpus(std::uint64_t seed) {
  Corpus corpus;
  corpus.target_filter = {ObjectClass::Toaster, ObjectClass::Microwave};
  for (int index = 0; index < 4; ++index) {
    Rng rng = make_rng(seed, "smoke-scene", static_cast<std::uint64_t>(index));
    for (int attempt = 0;; ++attempt) {
      if (attempt >= kMaxAttempts) throw std::runtime_error("smoke scene generation failed");
      Scene s = empty_room("smoke_" + std::to_string(index), RoomType::Kitchen, Split::Train, kSmokeSide,
                           kSmokeSide);
      if (!place(s, rng, ObjectClass::Refrigerator, free_cells(s))) continue;
      if (!place(s, rng, ObjectClass::Toaster, cells_near(s, s.objects[0].cell, 1))) continue;
      if (!place(s, rng, ObjectClass::Microwave, free_cells(s))) continue;
      if (!place(s, rng, ObjectClass::CoffeeMaker, free_cells(s))) continue;
      bool ok = true;
      for (ObjectClass c : {ObjectClass::Sink, ObjectClass::Bowl, ObjectClass::GarbageCan, ObjectClass::Box}) {
        ok = ok && place(s, rng, c, free_cells(s));
      }
      if (!ok) continue;
      for (ObjectClass c : room_classes(RoomType::Kitchen)) {
        if (!s.has_class(c)) s.absent.push_back(c);
      }
      corpus.scenes.push_back(std::move(s));
      break;
    }
  }
  return corpus;
}

}  // namespace attnav
