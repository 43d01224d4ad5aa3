#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "attnav/episode.hpp"

namespace attnav {

struct EpisodeResult {
  Task task;
  RoomType room = RoomType::Kitchen;
  bool success = false;
  int path_length = 0;     // P_i, actions excluding Done
  int optimal_length = 0;  // L_i from BFS
  int terminal_distance = 0;  // BFS distance from start to the terminal pose
  std::vector<std::array<double, 3>> betas;
  std::vector<double> target_mass;
  std::vector<bool> target_visible;
};

// Rates over one result set; nullopt marks an undefined value (no episodes).
struct RateSet {
  std::size_t n = 0;
  std::optional<double> success;
  std::optional<double> spl;
};

struct Metrics {
  std::size_t episodes = 0;
  RateSet all;
  RateSet hard;  // L >= 5
  std::map<RoomType, RateSet> room_all;
  std::map<RoomType, RateSet> room_hard;
};

enum class PolicyMode { Greedy, Sampled, UniformRandom };

struct EvalOptions {
  Split split = Split::Test;
  int episodes_per_room = 50;
  std::uint64_t seed = 0;
  PolicyMode mode = PolicyMode::Greedy;
  AttentionFlags flags;
  AdaptationConfig adaptation;
  std::optional<int> cap;  // overrides the per-room cap
  int threads = 1;
};

struct EvalReport {
  Metrics metrics;
  std::vector<EpisodeResult> episodes;
};

inline constexpr int kHardPathLength = 5;

// Rooms without scenes in the split are skipped. Throws ContractError when
// the split has no scenes at all.
EvalReport evaluate(const Model& model, const Corpus& corpus, const EvalOptions& options);

// S_i L_i / max(P_i, L_i) averaged; L_i = P_i = 0 successes count 1.
// Returns 0 for an empty set.
double spl(std::span<const EpisodeResult> results);
// Throws ContractError on an empty set.
double success_rate(std::span<const EpisodeResult> results);
std::vector<EpisodeResult> hard_subset(std::span<const EpisodeResult> results);
RateSet rates(std::span<const EpisodeResult> results);
Metrics compute_metrics(std::span<const EpisodeResult> results);

struct BetaRow {
  int t = 0;  // 1-based step
  std::size_t episodes = 0;
  std::array<double, 3> proportion{};
};

inline constexpr int kBetaStepCap = 37;

// Mean |beta_x| / sum|beta| over episodes reaching step t, t = 1..t_cap.
// Rows with no episodes are omitted; steps with all-zero beta are skipped.
std::vector<BetaRow> beta_statistics(std::span<const EpisodeResult> results,
                                     int t_cap = kBetaStepCap);

// Fraction of all logged steps where the target was in view; 0 without steps.
double target_detection_rate(std::span<const EpisodeResult> results);

EpisodeResult make_result(const Scene& scene, const EpisodeRun& run, int optimal_length);

}  // namespace attnav
