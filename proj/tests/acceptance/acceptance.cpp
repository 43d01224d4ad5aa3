// Prints one PASS/FAIL line per acceptance criterion; exits 1 if any fail.
#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "attnav/evaluator.hpp"
#include "attnav/scene_gen.hpp"
#include "attnav/stack_check.hpp"
#include "attnav/trainer.hpp"

using namespace attnav;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kGradTol = 1e-4;
constexpr double kGradSeconds = 60.0;
constexpr int kGradInstances = 20;
constexpr int kDistributionFuzz = 10000;
constexpr double kSumTol = 1e-10;
constexpr int kFuseTriples = 1000;
constexpr double kFuseTol = 1e-9;
constexpr long kEnvActions = 100000;
constexpr double kSmokeSuccess = 0.8;
constexpr int kSmokeSeedsNeeded = 2;
constexpr double kRandomFloorMax = 0.3;
constexpr long kSmokeEpisodeBudget = 50000;
constexpr int kSmokeEvalEpisodes = 100;
constexpr int kTrajectoryTasks = 10;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

Tensor random_tensor(Rng& rng, Shape shape) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = n(rng);
  return Tensor(std::move(shape), std::move(v));
}

Tensor random_distribution(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  double s = 0.0;
  for (double& x : v) s += (x = 0.05 + uniform_unit(rng));
  for (double& x : v) x /= s;
  return Tensor({n}, std::move(v));
}

bool is_distribution(const Tensor& p, double& worst) {
  double s = 0.0;
  bool ok = true;
  for (double x : p.data()) {
    ok = ok && x >= 0.0;
    s += x;
  }
  worst = std::max(worst, std::abs(s - 1.0));
  return ok && std::abs(s - 1.0) <= kSumTol;
}

Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int s = 0; s < kGradInstances; ++s) {
    worst = std::max(worst, check_stack(make_stack_instance(s, gradcheck_model_config())).max_rel_error);
  }
  const double secs = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "max rel error %.3g over %d instances (tol %.0e), %.1f s (limit %.0f s)", worst,
                kGradInstances, kGradTol, secs, kGradSeconds);
  return {worst <= kGradTol && secs < kGradSeconds, buf};
}

Outcome distribution_invariants() {
  const AttentionDims dims{7, 8, 8, 16, 16};
  double worst_sum = 0.0, worst_phi = 0.0;
  long failures = 0;
  for (int k = 0; k < kDistributionFuzz; ++k) {
    Rng rng = make_rng(2, "accept-dist", static_cast<std::uint64_t>(k));
    AttentionParams params = AttentionParams::init(dims, rng);
    params.beta_W = random_tensor(rng, {3, 16});
    const Tensor v = random_tensor(rng, {49, 8});
    const AttentionBundle b =
        full_attention(params, v, random_tensor(rng, {8}), random_distribution(rng, 6), random_tensor(rng, {16}));
    bool ok = true;
    for (const Tensor* p : {&b.p_g, &b.p_a, &b.p_m, &b.p_fused}) ok = is_distribution(*p, worst_sum) && ok;
    for (const Tensor* phi : {&b.phi_g, &b.phi_a, &b.phi_m}) {
      for (double x : phi->data()) {
        worst_phi = std::max(worst_phi, std::abs(x));
        ok = ok && x >= -1.0 && x <= 1.0;
      }
    }
    for (std::size_t r = 0; r < 49; ++r) {
      for (std::size_t c = 0; c < 8; ++c) ok = ok && b.v_hat.at(r, c) == b.p_fused[r] * v.at(r, c);
    }
    if (!ok) ++failures;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%ld/%d inputs violate; worst |sum-1| %.2g (tol %.0e), max |phi| %.6f", failures,
                kDistributionFuzz, worst_sum, kSumTol, worst_phi);
  return {failures == 0, buf};
}

Outcome fusion_oracle() {
  double worst = 0.0;
  for (int k = 0; k < kFuseTriples; ++k) {
    Rng rng = make_rng(3, "accept-fuse", static_cast<std::uint64_t>(k));
    const Tensor g = random_distribution(rng, 49), a = random_distribution(rng, 49), m = random_distribution(rng, 49);
    const Tensor f = fuse(g, a, m, {1.0, 1.0, 1.0});
    double z = 0.0;
    for (std::size_t i = 0; i < 49; ++i) z += g[i] * a[i] * m[i];
    for (std::size_t i = 0; i < 49; ++i) worst = std::max(worst, std::abs(f[i] - g[i] * a[i] * m[i] / z));
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "max abs error %.3g over %d triples (tol %.0e)", worst, kFuseTriples, kFuseTol);
  return {worst <= kFuseTol, buf};
}

Outcome metric_oracles() {
  auto result = [](bool s, int l, int p) {
    EpisodeResult r;
    r.success = s;
    r.optimal_length = l;
    r.path_length = p;
    return r;
  };
  const std::vector<EpisodeResult> rs = {result(true, 4, 4), result(true, 6, 12)};
  const double v_spl = spl(rs), v_success = success_rate(rs);
  const std::vector<EpisodeResult> mixed = {result(true, 3, 3), result(false, 3, 3), result(false, 5, 40),
                                            result(true, 2, 8)};
  const double m_spl = spl(mixed), m_success = success_rate(mixed);

  // Five-by-five fixture: wall at (2,1), toaster at (3,1); from (1,1) facing
  // south the agent needs MoveAhead, RotateLeft, MoveAhead to see it.
  Scene s;
  s.id = "fixture";
  s.room_type = RoomType::Kitchen;
  s.width = s.height = 5;
  for (const char* row : {"#####", "#.#.#", "#...#", "#...#", "#####"}) {
    for (const char* c = row; *c; ++c) s.walls.push_back(*c == '#' ? 1 : 0);
  }
  s.objects = {{ObjectClass::Toaster, {3, 1}, HeightBand::Mid}};
  const int bfs = shortest_path_len(s, {"fixture", {{1, 1}, 90, 0}, ObjectClass::Toaster});

  const bool ok = v_spl == 0.75 && v_success == 1.0 && m_spl == 0.3125 && m_success == 0.5 && bfs == 3;
  char buf[200];
  std::snprintf(buf, sizeof buf, "SPL %.17g (want 0.75), Success %.17g (want 1), mixed SPL %.17g (want 0.3125), "
                "BFS %d (want 3)", v_spl, v_success, m_spl, bfs);
  return {ok, buf};
}

Outcome environment_invariants() {
  const Corpus corpus = generate_corpus(0);
  Rng rng = make_rng(5, "accept-env");
  long actions = 0, episodes = 0, bad_pose = 0, bad_reward = 0;
  while (actions < kEnvActions) {
    const Task t = sample_task(rng, corpus, Split::Train);
    const Scene& s = corpus.find(t.scene_id);
    AgentPose p = t.start;
    int used = 0, moves = 0;
    double total = 0.0;
    for (bool done = false, success = false; !done;) {
      const Action a = action_from_index(uniform_index(rng, kNumActions));
      const StepOutcome out = step(s, p, a, t.target, used, eval_step_cap(s.room_type));
      ++actions;
      if (!valid_pose(s, out.pose)) ++bad_pose;
      if (a != Action::Done) ++moves;
      total += out.reward;
      p = out.pose;
      used = out.steps_used;
      done = out.done;
      success = out.success;
      if (done && std::abs(total - (-0.01 * moves + 5.0 * (success ? 1 : 0))) > 1e-9) ++bad_reward;
    }
    ++episodes;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%ld actions, %ld episodes: %ld invalid poses, %ld reward mismatches", actions,
                episodes, bad_pose, bad_reward);
  return {bad_pose == 0 && bad_reward == 0, buf};
}

int worker_threads() {
  return static_cast<int>(std::clamp(std::thread::hardware_concurrency(), 1u, 4u));
}

EvalOptions smoke_eval(std::uint64_t seed, const AttentionFlags& flags) {
  EvalOptions o;
  o.split = Split::Train;
  o.episodes_per_room = kSmokeEvalEpisodes;
  o.seed = 1000 + seed;
  o.flags = flags;
  o.threads = worker_threads();
  return o;
}

// Greedy success of the best-validation model over 100 episodes.
double smoke_run(const Corpus& corpus, const std::string& ablation, std::uint64_t seed) {
  TrainConfig c = ablation_config(smoke_train_config(), ablation);
  c.seed = seed;
  c.threads = worker_threads();
  const TrainResult r = train(c, corpus);
  return *evaluate(r.best.model, corpus, smoke_eval(seed, c.flags)).metrics.all.success;
}

struct SmokeRuns {
  std::vector<double> full, no_pg;
  double random_floor = 0.0;
  double seconds = 0.0;
};

const SmokeRuns& smoke_runs() {
  static const SmokeRuns runs = [] {
    SmokeRuns r;
    const Corpus corpus = make_smoke_corpus(0);
    const auto t0 = Clock::now();
    for (std::uint64_t s = 0; s < 3; ++s) {
      r.full.push_back(smoke_run(corpus, "full", s));
      std::printf("  full seed %llu: %.2f\n", static_cast<unsigned long long>(s), r.full.back());
      std::fflush(stdout);
    }
    r.seconds = seconds_since(t0);
    for (std::uint64_t s = 0; s < 3; ++s) {
      r.no_pg.push_back(smoke_run(corpus, "no-pg", s));
      std::printf("  no-pg seed %llu: %.2f\n", static_cast<unsigned long long>(s), r.no_pg.back());
      std::fflush(stdout);
    }
    EvalOptions o = smoke_eval(0, {});
    o.mode = PolicyMode::UniformRandom;
    r.random_floor = *evaluate(Model::zeros(smoke_train_config().model), corpus, o).metrics.all.success;
    return r;
  }();
  return runs;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Outcome training_smoke() {
  const SmokeRuns& r = smoke_runs();
  const int hits = static_cast<int>(std::count_if(r.full.begin(), r.full.end(), [](double x) { return x >= kSmokeSuccess; }));
  const long episodes = smoke_train_config().total_episodes;
  char buf[220];
  std::snprintf(buf, sizeof buf, "greedy success %.2f/%.2f/%.2f, %d/3 seeds >= %.1f (need %d); random floor %.2f "
                "(max %.1f); %ld episodes per seed (budget %ld); %.0f s for 3 seeds", r.full[0], r.full[1], r.full[2],
                hits, kSmokeSuccess, kSmokeSeedsNeeded, r.random_floor, kRandomFloorMax, episodes, kSmokeEpisodeBudget,
                r.seconds);
  return {hits >= kSmokeSeedsNeeded && r.random_floor <= kRandomFloorMax && episodes <= kSmokeEpisodeBudget, buf};
}

Outcome ablation_direction() {
  const SmokeRuns& r = smoke_runs();
  const double f = mean(r.full), n = mean(r.no_pg);
  char buf[160];
  std::snprintf(buf, sizeof buf, "mean success without p_g %.4f (%.2f/%.2f/%.2f) vs full %.4f", n, r.no_pg[0],
                r.no_pg[1], r.no_pg[2], f);
  return {n < f, buf};
}

Outcome determinism_and_persistence() {
  const Corpus corpus = make_smoke_corpus(0);
  TrainConfig c = smoke_train_config();
  c.workers = 1;
  c.total_episodes = 300;
  c.eval_every = 0;
  c.seed = 8;
  const TrainResult a = train(c, corpus), b = train(c, corpus);
  bool same_trace = a.log.size() == b.log.size();
  for (std::size_t i = 0; same_trace && i < a.log.size(); ++i) {
    same_trace = std::bit_cast<std::uint64_t>(a.log[i].mean_loss) == std::bit_cast<std::uint64_t>(b.log[i].mean_loss);
  }

  const fs::path path = fs::temp_directory_path() / "attnav_acceptance.atnv";
  save_checkpoint(path, a.final);
  const Checkpoint back = load_checkpoint(path);
  fs::remove(path);
  Rng rng = make_rng(8, "accept-trajectories");
  EpisodeOptions eo;
  eo.greedy = true;
  int identical = 0;
  for (int k = 0; k < kTrajectoryTasks; ++k) {
    const Task task = sample_task(rng, corpus, Split::Train);
    const Scene& scene = corpus.find(task.scene_id);
    eo.cap = eval_step_cap(scene.room_type);
    const EpisodeRun x = run_episode(a.final.model, scene, task, eo);
    const EpisodeRun y = run_episode(back.model, scene, task, eo);
    bool same = x.steps.size() == y.steps.size();
    for (std::size_t t = 0; same && t < x.steps.size(); ++t) {
      same = x.steps[t].action == y.steps[t].action && x.steps[t].log_prob == y.steps[t].log_prob;
    }
    identical += same ? 1 : 0;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "loss traces over %zu updates %s; %d/%d greedy trajectories identical after reload",
                a.log.size(), same_trace ? "bit-identical" : "differ", identical, kTrajectoryTasks);
  return {same_trace && identical == kTrajectoryTasks, buf};
}

Outcome beta_pipeline() {
  std::vector<EpisodeResult> rs(4);
  for (std::size_t e = 0; e < rs.size(); ++e) rs[e].betas.assign(30 + 5 * e, {1.0, 1.0, 1.0});
  const auto rows = beta_statistics(rs, kBetaStepCap);
  bool ok = rows.size() == static_cast<std::size_t>(kBetaStepCap);
  for (const BetaRow& r : rows) {
    for (double p : r.proportion) ok = ok && p == 1.0 / 3.0;
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "%zu rows (want %d), all proportions exactly 1/3: %s", rows.size(), kBetaStepCap,
                ok ? "yes" : "no");
  return {ok, buf};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  app.add_option("--only", only, "run only these criteria (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient oracle", gradient_oracle},
      {"distribution invariants", distribution_invariants},
      {"fusion oracle", fusion_oracle},
      {"metric oracles", metric_oracles},
      {"environment invariants", environment_invariants},
      {"training smoke", training_smoke},
      {"ablation direction", ablation_direction},
      {"determinism and persistence", determinism_and_persistence},
      {"beta statistics", beta_pipeline},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
