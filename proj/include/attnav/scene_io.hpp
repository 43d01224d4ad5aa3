#pragma once

#include <filesystem>
#include <string>

#include "attnav/gridworld.hpp"

namespace attnav {

inline constexpr int kSceneFormatVersion = 1;

// One JSON document per scene: id, room_type, split, cell_size_m, grid rows
// ('.' free, '#' wall) and object records (class, x, y, height_band).
std::string scene_to_text(const Scene& scene);
Scene scene_from_text(const std::string& text);

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);
// Reads every *.json file in dir, ordered by file name.
Corpus read_corpus(const std::filesystem::path& dir);

}  // namespace attnav
