#include "attnav/observe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "attnav/errors.hpp"
#include "attnav/rng.hpp"

namespace attnav {

namespace {

constexpr int kAzimuthSamples = 4;
constexpr int kDepthSamples = 4;

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

int bin_index(double value, double lo, double width, int n) {
  const int k = static_cast<int>(std::floor((value - lo) / width));
  return std::clamp(k, 0, n - 1);
}

}  // namespace

ClassEmbeddingTable::ClassEmbeddingTable() {
  for (std::size_t c = 0; c < kNumClasses; ++c) codes_[c][c] = 1.0;
  if (max_pairwise_cosine() > kMaxCosine) {
    throw ContractError("class codes violate the quasi-orthogonality bound");
  }
}

const ClassEmbeddingTable& ClassEmbeddingTable::instance() {
  static const ClassEmbeddingTable table;
  return table;
}

std::span<const double> ClassEmbeddingTable::code(ObjectClass c) const {
  return codes_[static_cast<std::size_t>(c)];
}

double ClassEmbeddingTable::max_pairwise_cosine() const {
  double worst = -1.0;
  for (std::size_t a = 0; a < kNumClasses; ++a) {
    for (std::size_t b = a + 1; b < kNumClasses; ++b) {
      worst = std::max(worst, cosine(codes_[a], codes_[b]));
    }
  }
  return worst;
}

double ClassEmbeddingTable::max_code_norm() const {
  double worst = 0.0;
  for (const auto& code : codes_) {
    double s = 0;
    for (double v : code) s += v * v;
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

double relative_azimuth_deg(const AgentPose& pose, Cell target) {
  const double dx = target.x - pose.cell.x;
  const double dy = target.y - pose.cell.y;
  const double bearing = std::atan2(dx, -dy) * 180.0 / std::numbers::pi;
  double rel = bearing - pose.heading_deg;
  while (rel <= -180.0) rel += 360.0;
  while (rel > 180.0) rel -= 360.0;
  return rel;
}

std::optional<ViewBin> object_bin(const Scene& scene, const AgentPose& pose,
                                  const ObjectInstance& object, int n_v) {
  if (!in_view(scene, pose, object)) return std::nullopt;
  const int dx = object.cell.x - pose.cell.x;
  const int dy = object.cell.y - pose.cell.y;
  const double dist_m = std::sqrt(static_cast<double>(dx * dx + dy * dy)) * scene.cell_size_m;
  const double rel = (dx == 0 && dy == 0) ? 0.0 : relative_azimuth_deg(pose, object.cell);
  return ViewBin{bin_index(dist_m, 0.0, kViewRangeM / n_v, n_v),
                 bin_index(rel, -kHalfFovDeg, 2.0 * kHalfFovDeg / n_v, n_v)};
}

FeatureMap render(const Scene& scene, const AgentPose& pose, int n_v, int d_v) {
  if (d_v < kMinFeatureDim) {
    throw DimensionError("render needs d_v >= " + std::to_string(kMinFeatureDim) + ", got " +
                         std::to_string(d_v));
  }
  if (!valid_pose(scene, pose)) throw ContractError("render from an invalid pose");
  const auto n = static_cast<std::size_t>(n_v);
  const auto d = static_cast<std::size_t>(d_v);
  std::vector<double> values(n * n * d, 0.0);
  const double row_width_m = kViewRangeM / n_v;
  const double col_width_deg = 2.0 * kHalfFovDeg / n_v;
  const double cx = pose.cell.x + 0.5, cy = pose.cell.y + 0.5;

  for (int i = 0; i < n_v; ++i) {
    for (int j = 0; j < n_v; ++j) {
      double* bin = values.data() + (static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)) * d;
      bin[kDepthChannel] = (i + 0.5) * row_width_m / kViewRangeM;
      for (int a = 0; a < kAzimuthSamples; ++a) {
        const double rel = -kHalfFovDeg + (j + (a + 0.5) / kAzimuthSamples) * col_width_deg;
        const double theta = (pose.heading_deg + rel) * std::numbers::pi / 180.0;
        for (int r = 0; r < kDepthSamples; ++r) {
          const double dist_cells =
              (i + (r + 0.5) / kDepthSamples) * row_width_m / scene.cell_size_m;
          const Cell c{static_cast<int>(std::floor(cx + dist_cells * std::sin(theta))),
                       static_cast<int>(std::floor(cy - dist_cells * std::cos(theta)))};
          if (!scene.in_bounds(c) || !line_of_sight(scene, pose.cell, c)) continue;
          if (scene.is_wall(c)) {
            bin[kWallChannel] = 1.0;
          } else {
            bin[kFreeChannel] = 1.0;
          }
        }
      }
    }
  }

  const auto& table = ClassEmbeddingTable::instance();
  for (const ObjectInstance& obj : scene.objects) {
    const auto where = object_bin(scene, pose, obj, n_v);
    if (!where) continue;
    double* bin =
        values.data() + (static_cast<std::size_t>(where->row) * n + static_cast<std::size_t>(where->col)) * d;
    const auto code = table.code(obj.cls);
    for (int k = 0; k < kClassCodeDim; ++k) bin[k] += code[static_cast<std::size_t>(k)];
  }
  return FeatureMap{n_v, d_v, Tensor({n * n, d}, std::move(values))};
}

TargetEmbedding target_embedding(ObjectClass cls, int d_g) {
  if (static_cast<std::size_t>(cls) >= kNumClasses) throw ContractError("unknown object class");
  if (d_g <= 0) throw DimensionError("target embedding dimension must be positive");
  Rng rng = make_rng(kTargetEmbeddingSeed, "target-embedding", static_cast<std::uint64_t>(cls));
  std::vector<double> u(static_cast<std::size_t>(d_g));
  for (std::size_t k = 0; k < u.size(); k += 2) {
    // Box-Muller pair.
    const double u1 = 1.0 - uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    u[k] = radius * std::cos(2.0 * std::numbers::pi * u2);
    if (k + 1 < u.size()) u[k + 1] = radius * std::sin(2.0 * std::numbers::pi * u2);
  }
  double norm = 0.0;
  for (double v : u) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : u) v /= norm;
  return {cls, Tensor::vector(std::move(u))};
}

std::vector<bool> target_visible_mask(const Scene& scene, const AgentPose& pose, ObjectClass cls,
                                      int n_v) {
  std::vector<bool> mask(static_cast<std::size_t>(n_v * n_v), false);
  for (const ObjectInstance& obj : scene.objects) {
    if (obj.cls != cls) continue;
    if (const auto where = object_bin(scene, pose, obj, n_v)) {
      mask[static_cast<std::size_t>(where->row * n_v + where->col)] = true;
    }
  }
  return mask;
}

}  // namespace attnav
