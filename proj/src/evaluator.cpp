#include "attnav/evaluator.hpp"

#include <cmath>
#include <thread>

#include "attnav/errors.hpp"

namespace attnav {

namespace {

struct Job {
  Task task;
  RoomType room;
  std::size_t index;
};

EpisodeRun run_uniform_random(const Scene& scene, const Task& task, int cap, Rng& rng) {
  EpisodeRun run;
  run.task = task;
  AgentPose pose = task.start;
  int used = 0;
  bool done = false;
  while (!done) {
    const Action action = action_from_index(uniform_index(rng, kActionDim));
    const StepOutcome out = step(scene, pose, action, task.target, used, cap);
    StepLog log;
    log.pose = pose;
    log.action = action;
    log.reward = out.reward;
    run.steps.push_back(log);
    run.total_reward += out.reward;
    if (action != Action::Done) ++run.path_length;
    pose = out.pose;
    used = out.steps_used;
    done = out.done;
    run.success = out.success;
  }
  run.terminal = pose;
  return run;
}

template <class F>
void parallel_for(std::size_t n, int threads, F&& body) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

EpisodeResult make_result(const Scene& scene, const EpisodeRun& run, int optimal_length) {
  EpisodeResult r;
  r.task = run.task;
  r.room = scene.room_type;
  r.success = run.success;
  r.path_length = run.path_length;
  r.optimal_length = optimal_length;
  r.terminal_distance = pose_distance(scene, run.task.start, run.terminal);
  for (const StepLog& s : run.steps) {
    r.betas.push_back(s.beta);
    r.target_mass.push_back(s.target_mass);
    r.target_visible.push_back(s.target_visible);
  }
  return r;
}

EvalReport evaluate(const Model& model, const Corpus& corpus, const EvalOptions& options) {
  if (corpus.in_split(options.split).empty()) {
    throw ContractError("evaluate: split " + std::string(to_string(options.split)) + " has no scenes");
  }
  if (options.episodes_per_room < 0) throw ContractError("evaluate: negative episodes_per_room");

  std::vector<Job> jobs;
  for (RoomType room : kRoomTypes) {
    bool any = false;
    for (const Scene* s : corpus.in_split(options.split)) any = any || s->room_type == room;
    if (!any) continue;
    for (int k = 0; k < options.episodes_per_room; ++k) {
      Rng rng = make_rng(options.seed, "eval-task",
                         static_cast<std::uint64_t>(room) * 1000000u + static_cast<std::uint64_t>(k));
      jobs.push_back({sample_task(rng, corpus, options.split, room), room, jobs.size()});
    }
  }

  EvalReport report;
  report.episodes.resize(jobs.size());
  parallel_for(jobs.size(), options.threads, [&](std::size_t i) {
    const Job& job = jobs[i];
    const Scene& scene = corpus.find(job.task.scene_id);
    const int cap = options.cap.value_or(eval_step_cap(scene.room_type));
    Rng rng = make_rng(options.seed, "eval-action", i);
    EpisodeRun run;
    if (options.mode == PolicyMode::UniformRandom) {
      run = run_uniform_random(scene, job.task, cap, rng);
    } else {
      EpisodeOptions eo;
      eo.cap = cap;
      eo.greedy = options.mode == PolicyMode::Greedy;
      eo.flags = options.flags;
      eo.adaptation = options.adaptation;
      run = run_episode(model, scene, job.task, eo, &rng);
    }
    report.episodes[i] = make_result(scene, run, shortest_path_len(scene, job.task));
  });
  report.metrics = compute_metrics(report.episodes);
  return report;
}

double spl(std::span<const EpisodeResult> results) {
  if (results.empty()) return 0.0;
  double sum = 0.0;
  for (const EpisodeResult& r : results) {
    if (!r.success) continue;
    if (r.optimal_length < 0 || r.path_length < 0) throw ContractError("spl: negative length");
    if (r.optimal_length == 0 && r.path_length == 0) {
      sum += 1.0;
      continue;
    }
    sum += static_cast<double>(r.optimal_length) /
           static_cast<double>(std::max(r.path_length, r.optimal_length));
  }
  return sum / static_cast<double>(results.size());
}

double success_rate(std::span<const EpisodeResult> results) {
  if (results.empty()) throw ContractError("success_rate over zero episodes");
  std::size_t hits = 0;
  for (const EpisodeResult& r : results) hits += r.success ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

std::vector<EpisodeResult> hard_subset(std::span<const EpisodeResult> results) {
  std::vector<EpisodeResult> out;
  for (const EpisodeResult& r : results) {
    if (r.optimal_length >= kHardPathLength) out.push_back(r);
  }
  return out;
}

RateSet rates(std::span<const EpisodeResult> results) {
  RateSet r;
  r.n = results.size();
  if (results.empty()) return r;
  r.success = success_rate(results);
  r.spl = spl(results);
  return r;
}

Metrics compute_metrics(std::span<const EpisodeResult> results) {
  Metrics m;
  m.episodes = results.size();
  m.all = rates(results);
  const auto hard = hard_subset(results);
  m.hard = rates(hard);
  for (RoomType room : kRoomTypes) {
    std::vector<EpisodeResult> sub;
    for (const EpisodeResult& r : results) {
      if (r.room == room) sub.push_back(r);
    }
    if (sub.empty()) continue;
    m.room_all[room] = rates(sub);
    m.room_hard[room] = rates(hard_subset(sub));
  }
  return m;
}

std::vector<BetaRow> beta_statistics(std::span<const EpisodeResult> results, int t_cap) {
  std::vector<BetaRow> rows;
  for (int t = 1; t <= t_cap; ++t) {
    BetaRow row;
    row.t = t;
    std::array<double, 3> acc{};
    for (const EpisodeResult& r : results) {
      if (r.betas.size() < static_cast<std::size_t>(t)) continue;
      const auto& b = r.betas[static_cast<std::size_t>(t - 1)];
      const double total = std::abs(b[0]) + std::abs(b[1]) + std::abs(b[2]);
      if (total == 0.0) continue;
      for (int u = 0; u < 3; ++u) acc[u] += std::abs(b[u]) / total;
      ++row.episodes;
    }
    if (row.episodes == 0) continue;
    for (int u = 0; u < 3; ++u) row.proportion[u] = acc[u] / static_cast<double>(row.episodes);
    rows.push_back(row);
  }
  return rows;
}

double target_detection_rate(std::span<const EpisodeResult> results) {
  std::size_t steps = 0, seen = 0;
  for (const EpisodeResult& r : results) {
    for (bool v : r.target_visible) {
      ++steps;
      seen += v ? 1 : 0;
    }
  }
  return steps == 0 ? 0.0 : static_cast<double>(seen) / static_cast<double>(steps);
}

}  // namespace attnav
