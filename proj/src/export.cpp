#include "attnav/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "attnav/errors.hpp"

namespace attnav {

using nlohmann::json;

void write_pgm(const std::filesystem::path& path, std::span<const double> values, int rows, int cols) {
  if (rows <= 0 || cols <= 0 || values.size() != static_cast<std::size_t>(rows * cols)) {
    throw DimensionError("write_pgm: " + std::to_string(values.size()) + " values for " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  double peak = 0.0;
  for (double v : values) {
    if (!(v >= 0.0)) throw ContractError("write_pgm: negative or NaN value");
    peak = std::max(peak, v);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << cols << ' ' << rows << "\n255\n";
  for (double v : values) {
    const double scaled = peak > 0.0 ? std::round(255.0 * v / peak) : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(scaled)));
  }
}

json rate_json(const RateSet& r) {
  json j;
  j["n"] = r.n;
  j["success"] = r.success ? json(*r.success) : json(nullptr);
  j["spl"] = r.spl ? json(*r.spl) : json(nullptr);
  return j;
}

json metrics_json(const Metrics& m) {
  json j;
  j["episodes"] = m.episodes;
  j["spl"] = rate_json(m.all)["spl"];
  j["success"] = rate_json(m.all)["success"];
  j["spl_hard"] = rate_json(m.hard)["spl"];
  j["success_hard"] = rate_json(m.hard)["success"];
  j["n_hard"] = m.hard.n;
  json rooms = json::array();
  for (const auto& [room, all] : m.room_all) {
    const RateSet& hard = m.room_hard.at(room);
    rooms.push_back({{"room", std::string(to_string(room))},
                     {"n", all.n},
                     {"spl", rate_json(all)["spl"]},
                     {"success", rate_json(all)["success"]},
                     {"spl_hard", rate_json(hard)["spl"]},
                     {"success_hard", rate_json(hard)["success"]},
                     {"n_hard", hard.n}});
  }
  j["per_room"] = rooms;
  return j;
}

json beta_table_json(std::span<const BetaRow> rows) {
  json out = json::array();
  for (const BetaRow& r : rows) {
    out.push_back({{"t", r.t},
                   {"episodes", r.episodes},
                   {"target", r.proportion[0]},
                   {"action", r.proportion[1]},
                   {"memory", r.proportion[2]}});
  }
  return out;
}

json report_json(const EvalReport& report, int t_cap) {
  json j;
  j["format_version"] = kReportFormatVersion;
  j["metrics"] = metrics_json(report.metrics);
  const auto rows = beta_statistics(report.episodes, t_cap);
  j["beta_statistics"] = beta_table_json(rows);
  j["target_detection_rate"] = target_detection_rate(report.episodes);
  return j;
}

json pose_json(const AgentPose& pose) {
  return {{"x", pose.cell.x}, {"y", pose.cell.y}, {"heading", pose.heading_deg}, {"tilt", pose.tilt_deg}};
}

json step_json(const StepLog& step, std::size_t index, int n_v, int top_k) {
  json j;
  j["format_version"] = kReportFormatVersion;
  j["t"] = index;
  j["pose"] = pose_json(step.pose);
  j["action"] = std::string(to_string(step.action));
  j["reward"] = step.reward;
  j["beta"] = step.beta;
  j["value"] = step.value;
  j["target_visible"] = step.target_visible;
  j["target_mass"] = step.target_mass;
  std::vector<std::size_t> order(step.p_fused.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t k = std::min(order.size(), static_cast<std::size_t>(std::max(0, top_k)));
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return step.p_fused[a] > step.p_fused[b] || (step.p_fused[a] == step.p_fused[b] && a < b);
                    });
  json top = json::array();
  for (std::size_t r = 0; r < k; ++r) {
    const auto idx = order[r];
    top.push_back({{"row", idx / static_cast<std::size_t>(n_v)},
                   {"col", idx % static_cast<std::size_t>(n_v)},
                   {"p", step.p_fused[idx]}});
  }
  j["top_fused"] = top;
  return j;
}

json rollout_json(const Scene& scene, const EpisodeRun& run, int n_v, int top_k) {
  json j;
  j["format_version"] = kReportFormatVersion;
  j["scene"] = scene.id;
  j["target"] = std::string(to_string(run.task.target));
  j["start"] = pose_json(run.task.start);
  json steps = json::array();
  for (std::size_t t = 0; t < run.steps.size(); ++t) {
    json s = step_json(run.steps[t], t, n_v, top_k);
    if (t + 1 == run.steps.size()) s["success"] = run.success;
    steps.push_back(std::move(s));
  }
  j["steps"] = steps;
  j["success"] = run.success;
  j["path_length"] = run.path_length;
  j["terminal"] = pose_json(run.terminal);
  j["total_reward"] = run.total_reward;
  return j;
}

void export_attention(const std::filesystem::path& dir, const EpisodeRun& run, int n_v) {
  std::filesystem::create_directories(dir);
  std::ofstream records(dir / "records.jsonl");
  if (!records) throw std::runtime_error("cannot write " + (dir / "records.jsonl").string());
  for (std::size_t t = 0; t < run.steps.size(); ++t) {
    const StepLog& s = run.steps[t];
    if (!s.bundle) throw ContractError("export_attention: step without attention bundle");
    char stem[32];
    std::snprintf(stem, sizeof stem, "step_%03zu", t);
    const std::pair<const char*, const Tensor*> maps[] = {
        {"g", &s.bundle->p_g}, {"a", &s.bundle->p_a}, {"m", &s.bundle->p_m}, {"fused", &s.bundle->p_fused}};
    for (const auto& [tag, grid] : maps) {
      write_pgm(dir / (std::string(stem) + "_" + tag + ".pgm"), grid->data(), n_v, n_v);
    }
    json rec = step_json(s, t, n_v);
    rec["images"] = {std::string(stem) + "_g.pgm", std::string(stem) + "_a.pgm",
                     std::string(stem) + "_m.pgm", std::string(stem) + "_fused.pgm"};
    records << rec.dump() << '\n';
  }
}

json feature_map_json(const FeatureMap& map) {
  json j;
  j["format_version"] = kReportFormatVersion;
  j["n_v"] = map.n_v;
  j["d_v"] = map.d_v;
  json cells = json::array();
  for (int i = 0; i < map.n_v; ++i) {
    for (int jj = 0; jj < map.n_v; ++jj) {
      std::vector<double> v(static_cast<std::size_t>(map.d_v));
      for (int c = 0; c < map.d_v; ++c) v[static_cast<std::size_t>(c)] = map.at(i, jj, c);
      cells.push_back({{"row", i}, {"col", jj}, {"values", v}});
    }
  }
  j["cells"] = cells;
  return j;
}

}  // namespace attnav
