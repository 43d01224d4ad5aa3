#include "attnav/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <istream>
#include <ostream>

#include "attnav/errors.hpp"

namespace attnav {

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(bytes, sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw FormatError("checkpoint truncated");
  }
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_named_tensors(std::ostream& out, std::span<const NamedTensor> records) {
  out.write(kCheckpointMagic, 4);
  put_le<std::uint16_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(records.size()));
  for (const NamedTensor& rec : records) {
    if (rec.name.size() > 0xFFFF) throw FormatError("tensor name too long: " + rec.name);
    if (rec.tensor.rank() > 0xFF) throw FormatError("tensor rank too large: " + rec.name);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(rec.name.size()));
    out.write(rec.name.data(), static_cast<std::streamsize>(rec.name.size()));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(rec.tensor.rank()));
    for (std::size_t d : rec.tensor.shape()) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double v : rec.tensor.data()) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  if (!out) throw FormatError("failed writing checkpoint");
}

std::vector<NamedTensor> read_named_tensors(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != std::string(kCheckpointMagic, 4)) {
    throw FormatError("not an ATNV checkpoint (bad magic)");
  }
  const auto version = get_le<std::uint16_t>(in);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = get_le<std::uint32_t>(in);
  std::vector<NamedTensor> records;
  records.reserve(count);
  for (std::uint32_t r = 0; r < count; ++r) {
    const auto name_len = get_le<std::uint16_t>(in);
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw FormatError("checkpoint truncated in name");
    const auto rank = get_le<std::uint8_t>(in);
    if (rank == 0) throw FormatError("record '" + name + "' has rank 0");
    Shape shape(rank);
    for (auto& d : shape) d = get_le<std::uint32_t>(in);
    std::vector<double> values(shape_size(shape));
    for (double& v : values) v = std::bit_cast<float>(get_le<std::uint32_t>(in));
    records.push_back({std::move(name), Tensor(std::move(shape), std::move(values))});
  }
  return records;
}

void save_named_tensors(const std::filesystem::path& path, std::span<const NamedTensor> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_named_tensors(out, records);
}

std::vector<NamedTensor> load_named_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint not found: " + path.string());
  return read_named_tensors(in);
}

Tensor round_to_float(const Tensor& t) {
  std::vector<double> values(t.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<float>(t[i]);
  return Tensor(t.shape(), std::move(values));
}

}  // namespace attnav
