#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

#include "attnav/evaluator.hpp"
#include "attnav/observe.hpp"

namespace attnav {

inline constexpr int kReportFormatVersion = 1;

// Binary graymap (P5), rows x cols, scaled so the maximum maps to 255. An
// all-zero grid stays black. Throws ContractError on negative entries.
void write_pgm(const std::filesystem::path& path, std::span<const double> values, int rows, int cols);

nlohmann::json rate_json(const RateSet& r);
nlohmann::json metrics_json(const Metrics& m);
nlohmann::json beta_table_json(std::span<const BetaRow> rows);
// Headline metrics, per-room table, beta statistics and detection rate.
nlohmann::json report_json(const EvalReport& report, int t_cap = kBetaStepCap);

// One record per step: pose, action, reward, beta, top-k fused cells and
// target visibility; the last record carries the success flag.
nlohmann::json step_json(const StepLog& step, std::size_t index, int n_v, int top_k = 3);
nlohmann::json rollout_json(const Scene& scene, const EpisodeRun& run, int n_v, int top_k = 3);

// Per-step graymaps (g, a, m, fused) plus records.jsonl into dir. The run must
// have been recorded with keep_bundles.
void export_attention(const std::filesystem::path& dir, const EpisodeRun& run, int n_v);

nlohmann::json feature_map_json(const FeatureMap& map);

nlohmann::json pose_json(const AgentPose& pose);

}  // namespace attnav
