#pragma once

#include <cstdint>

#include "attnav/gridworld.hpp"

namespace attnav {

inline constexpr int kScenesPerRoom = 30;
inline constexpr int kTrainScenesPerRoom = 20;
inline constexpr int kValScenesPerRoom = 5;

// Split of the index-th scene of a room type under the 20/5/5 layout.
Split split_for_index(int index);

// Procedural room: 12..20 cells per side, outer walls, 1-3 partitions with
// door gaps, taxonomy objects placed under co-occurrence rules (e.g. a toaster
// lands within 3 cells of the refrigerator with probability 0.8). The walkable
// area is connected. Deterministic in (seed, room, index). Throws
// std::runtime_error after 1000 failed placement attempts.
Scene generate_scene(std::uint64_t seed, RoomType room, Split split, int index = 0);

// 30 scenes per room type, 120 in total, split 20/5/5 by index.
Corpus generate_corpus(std::uint64_t seed);

// Four open 14x14 kitchens with toaster/microwave targets and four distractor
// objects; the toaster always sits next to the refrigerator. All scenes are in
// the train split.
Corpus make_smoke_corpus(std::uint64_t seed);

}  // namespace attnav
