#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "attnav/gridworld.hpp"
#include "attnav/tensor.hpp"

namespace attnav {

inline constexpr int kDefaultGrid = 7;       // n_v
inline constexpr int kDefaultFeatureDim = 32;  // d_v
inline constexpr int kDefaultTargetDim = 32;   // d_g
inline constexpr int kClassCodeDim = 24;

// Channel layout of a rendered sub-window vector.
inline constexpr int kFreeChannel = kClassCodeDim;
inline constexpr int kWallChannel = kClassCodeDim + 1;
inline constexpr int kDepthChannel = kClassCodeDim + 2;
inline constexpr int kMinFeatureDim = kClassCodeDim + 3;

inline constexpr std::uint64_t kTargetEmbeddingSeed = 7;

// n_v x n_v grid of d_v vectors, stored as a [n_v*n_v x d_v] tensor with
// sub-window (i, j) at row i*n_v + j. i runs near -> far, j left -> right.
struct FeatureMap {
  int n_v = kDefaultGrid;
  int d_v = kDefaultFeatureDim;
  Tensor values;

  double at(int i, int j, int channel) const {
    return values[static_cast<std::size_t>((i * n_v + j) * d_v + channel)];
  }
};

// Per-class code vectors occupying the first kClassCodeDim channels. Codes
// are one-hot, so pairwise cosine is 0; the quasi-orthogonality bound is
// verified when the table is built.
class ClassEmbeddingTable {
 public:
  static constexpr double kMaxCosine = 0.35;

  static const ClassEmbeddingTable& instance();

  std::span<const double> code(ObjectClass c) const;
  double max_pairwise_cosine() const;
  double max_code_norm() const;

 private:
  ClassEmbeddingTable();
  std::array<std::array<double, kClassCodeDim>, kNumClasses> codes_{};
};

struct ViewBin {
  int row = 0;  // depth
  int col = 0;  // azimuth
  bool operator==(const ViewBin&) const = default;
};

// Signed azimuth of a cell relative to the heading, degrees in (-180, 180],
// positive to the right.
double relative_azimuth_deg(const AgentPose& pose, Cell target);

// Frustum bin of a visible object, or nullopt if in_view fails.
std::optional<ViewBin> object_bin(const Scene& scene, const AgentPose& pose,
                                  const ObjectInstance& object, int n_v = kDefaultGrid);

// Partitions the 90 deg, 5 m frustum into n_v azimuth columns x n_v depth rows.
// Each bin holds the sum of class codes of objects visible in it, a free
// indicator, a wall indicator and the bin's mid-depth / 5 m. Bins with no
// visible cell carry only the depth channel.
FeatureMap render(const Scene& scene, const AgentPose& pose, int n_v = kDefaultGrid,
                  int d_v = kDefaultFeatureDim);

struct TargetEmbedding {
  ObjectClass cls = ObjectClass::Toaster;
  Tensor u_g;
};

// Frozen unit-norm Gaussian vector per class (seed 7, stream = class ordinal).
TargetEmbedding target_embedding(ObjectClass cls, int d_g = kDefaultTargetDim);

// Row-major n_v*n_v mask of bins that hold a visible instance of cls.
std::vector<bool> target_visible_mask(const Scene& scene, const AgentPose& pose, ObjectClass cls,
                                      int n_v = kDefaultGrid);

}  // namespace attnav
