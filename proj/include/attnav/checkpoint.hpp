#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "attnav/tensor.hpp"

namespace attnav {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Named-tensor record layout, all integers little-endian:
//   "ATNV" | u16 version (=1) | u32 count |
//   count x { u16 name_len | name bytes | u8 rank | rank x u32 dim | f32 values }
inline constexpr char kCheckpointMagic[4] = {'A', 'T', 'N', 'V'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

// Values are narrowed to 32-bit floats on write.
void write_named_tensors(std::ostream& out, std::span<const NamedTensor> records);
std::vector<NamedTensor> read_named_tensors(std::istream& in);

void save_named_tensors(const std::filesystem::path& path, std::span<const NamedTensor> records);
std::vector<NamedTensor> load_named_tensors(const std::filesystem::path& path);

// Rounds every value to the nearest 32-bit float, so a tensor survives a
// save/load cycle unchanged.
Tensor round_to_float(const Tensor& t);

}  // namespace attnav
