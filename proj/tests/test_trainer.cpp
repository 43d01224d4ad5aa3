#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "attnav/config.hpp"
#include "attnav/errors.hpp"
#include "attnav/evaluator.hpp"
#include "attnav/scene_gen.hpp"
#include "attnav/trainer.hpp"

using namespace attnav;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.workers = 2;
  c.total_episodes = 8;
  c.seed = 4;
  c.lr = 1e-3;
  c.model.d_v = 32;
  c.model.d_g = 32;
  c.model.d = 8;
  c.model.d_p = 2;
  c.model.d_in = 16;
  c.model.d_m = 16;
  return c;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("attnav_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<double> loss_trace(const TrainResult& r) {
  std::vector<double> out;
  for (const UpdateLog& l : r.log) out.push_back(l.mean_loss);
  return out;
}

}  // namespace

TEST(Optimizer, AdamFirstStepIsLearningRate) {
  const std::vector<Tensor> theta = {Tensor::vector({1.0, -2.0, 0.5})};
  const std::vector<Tensor> grads = {Tensor::vector({3.0, -0.1, 1e-3})};
  OptimizerState state;
  const auto next = optimizer_step(OptimizerKind::AdaptiveMoment, theta, grads, 1e-2, state);
  EXPECT_NEAR(next[0][0], 1.0 - 1e-2, 1e-9);
  EXPECT_NEAR(next[0][1], -2.0 + 1e-2, 1e-9);
  EXPECT_NEAR(next[0][2], 0.5 - 1e-2, 1e-7);
  EXPECT_EQ(state.step, 1);
}

TEST(Optimizer, AdamMatchesScalarRecurrence) {
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double x = 2.0, m = 0.0, v = 0.0;
  std::vector<Tensor> theta = {Tensor::scalar(2.0)};
  OptimizerState state;
  for (int t = 1; t <= 100; ++t) {
    const double g = 2.0 * x;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    x -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
    const std::vector<Tensor> grads = {Tensor::scalar(2.0 * theta[0][0])};
    theta = optimizer_step(OptimizerKind::AdaptiveMoment, theta, grads, lr, state);
  }
  EXPECT_NEAR(theta[0][0], x, 1e-10);
}

TEST(Optimizer, PlainGradientStep) {
  const std::vector<Tensor> theta = {Tensor::vector({1.0, -3.0})};
  OptimizerState state;
  const auto next = optimizer_step(OptimizerKind::PlainGradient, theta, theta, 1.0, state);
  EXPECT_EQ(next[0][0], 0.0);
  EXPECT_EQ(next[0][1], 0.0);
}

TEST(Optimizer, RejectsBadGradients) {
  const std::vector<Tensor> theta = {Tensor::vector({1.0, 2.0})};
  OptimizerState state;
  const std::vector<Tensor> inf = {Tensor::vector({INFINITY, 0.0})};
  EXPECT_THROW(optimizer_step(OptimizerKind::AdaptiveMoment, theta, inf, 0.1, state), NumericError);
  const std::vector<Tensor> wrong = {Tensor::vector({1.0})};
  EXPECT_THROW(optimizer_step(OptimizerKind::AdaptiveMoment, theta, wrong, 0.1, state), DimensionError);
}

TEST(Optimizer, AverageGradients) {
  const std::vector<std::vector<Tensor>> w = {{Tensor::vector({1, 2})}, {Tensor::vector({3, 6})},
                                              {Tensor::vector({5, 1})}};
  const auto avg = average_gradients(w);
  EXPECT_EQ(avg[0][0], 3.0);
  EXPECT_EQ(avg[0][1], 3.0);
}

TEST(Optimizer, ClipByGlobalNorm) {
  const std::vector<Tensor> g = {Tensor::vector({3, 0}), Tensor::vector({4})};
  EXPECT_EQ(global_norm(g), 5.0);
  const auto c = clip_by_global_norm(g, 1.0);
  EXPECT_NEAR(global_norm(c), 1.0, 1e-15);
  EXPECT_NEAR(c[0][0], 0.6, 1e-15);
  EXPECT_TRUE(clip_by_global_norm(g, 10.0)[1].identical(g[1]));
  EXPECT_TRUE(clip_by_global_norm(g, 0.0)[0].identical(g[0]));
}

TEST(Train, SingleWorkerRunsAreBitIdentical) {
  const Corpus corpus = make_smoke_corpus(0);
  TrainConfig c = tiny_config();
  c.workers = 1;
  c.total_episodes = 6;
  const TrainResult a = train(c, corpus);
  const TrainResult b = train(c, corpus);
  ASSERT_EQ(a.log.size(), 6u);
  EXPECT_EQ(loss_trace(a), loss_trace(b));
  const auto pa = parameters(a.final.model), pb = parameters(b.final.model);
  for (std::size_t k = 0; k < pa.size(); ++k) EXPECT_TRUE(pa[k].identical(pb[k]));
}

TEST(Train, ThreadCountDoesNotChangeResults) {
  const Corpus corpus = make_smoke_corpus(0);
  TrainConfig c = tiny_config();
  const TrainResult a = train(c, corpus);
  c.threads = 2;
  const TrainResult b = train(c, corpus);
  EXPECT_EQ(loss_trace(a), loss_trace(b));
}

TEST(Train, ParametersMove) {
  const Corpus corpus = make_smoke_corpus(0);
  const TrainConfig c = tiny_config();
  const TrainResult r = train(c, corpus);
  EXPECT_EQ(r.final.episodes, 8);
  EXPECT_EQ(r.final.optimizer.step, 4);
  const auto p0 = parameters(Model::init(c.model, c.seed)), p1 = parameters(r.final.model);
  bool moved = false;
  for (std::size_t k = 0; k < p0.size(); ++k) moved = moved || !p0[k].identical(p1[k]);
  EXPECT_TRUE(moved);
}

TEST(Train, AdaptationCalls) {
  const Corpus corpus = make_smoke_corpus(0);
  TrainConfig c = tiny_config();
  EXPECT_EQ(train(c, corpus).adapt_calls, 0);
  c.adaptation.enabled = true;
  c.adaptation.k_hat = 2;
  EXPECT_GT(train(c, corpus).adapt_calls, 0);
}

TEST(Train, InvalidConfig) {
  const Corpus corpus = make_smoke_corpus(0);
  TrainConfig c = tiny_config();
  c.workers = 0;
  EXPECT_THROW(train(c, corpus), ContractError);
  c = tiny_config();
  c.flags = {false, false, false, false};
  EXPECT_THROW(train(c, corpus), ContractError);
}

TEST(Train, WritesCheckpointsAndLog) {
  const fs::path dir = scratch_dir("train_out");
  const Corpus corpus = make_smoke_corpus(0);
  TrainConfig c = tiny_config();
  c.out_dir = dir;
  c.checkpoint_every = 4;
  const TrainResult r = train(c, corpus);
  EXPECT_TRUE(fs::exists(dir / "final.atnv"));
  EXPECT_TRUE(fs::exists(dir / "ckpt_4.atnv"));
  EXPECT_TRUE(fs::exists(dir / "ckpt_8.atnv"));
  std::ifstream log(dir / "train_log.jsonl");
  int lines = 0;
  for (std::string s; std::getline(log, s);) ++lines;
  EXPECT_EQ(lines, static_cast<int>(r.log.size()));
  fs::remove_all(dir);
}

TEST(Checkpoint, RoundTripReproducesGreedyTrajectories) {
  const fs::path dir = scratch_dir("ckpt");
  const Corpus corpus = make_smoke_corpus(0);
  const TrainConfig c = tiny_config();
  const TrainResult r = train(c, corpus);
  save_checkpoint(dir / "m.atnv", r.final);
  const Checkpoint back = load_checkpoint(dir / "m.atnv");
  EXPECT_EQ(back.episodes, r.final.episodes);
  EXPECT_EQ(back.config_hash, c.hash());
  EXPECT_EQ(back.optimizer.step, r.final.optimizer.step);
  for (std::size_t k = 0; k < back.optimizer.m.size(); ++k) {
    EXPECT_TRUE(back.optimizer.m[k].identical(r.final.optimizer.m[k]));
    EXPECT_TRUE(back.optimizer.v[k].identical(r.final.optimizer.v[k]));
  }
  Rng rng = make_rng(9, "ckpt-tasks");
  EpisodeOptions eo;
  eo.greedy = true;
  for (int k = 0; k < 10; ++k) {
    const Task task = sample_task(rng, corpus, Split::Train);
    const Scene& scene = corpus.find(task.scene_id);
    const EpisodeRun a = run_episode(r.final.model, scene, task, eo);
    const EpisodeRun b = run_episode(back.model, scene, task, eo);
    ASSERT_EQ(a.steps.size(), b.steps.size());
    for (std::size_t t = 0; t < a.steps.size(); ++t) EXPECT_EQ(a.steps[t].action, b.steps[t].action);
  }
  fs::remove_all(dir);
}

TEST(Checkpoint, ResumeContinuesCounters) {
  const Corpus corpus = make_smoke_corpus(0);
  TrainConfig c = tiny_config();
  const TrainResult first = train(c, corpus);
  c.total_episodes = 12;
  const TrainResult second = train(c, corpus, first.final);
  EXPECT_EQ(second.final.episodes, 12);
  EXPECT_EQ(second.final.optimizer.step, 6);
}

TEST(Checkpoint, MissingFile) {
  EXPECT_THROW(load_checkpoint("/nonexistent/model.atnv"), std::runtime_error);
}

TEST(Ablation, MatrixFlags) {
  const auto m = ablation_matrix(TrainConfig{});
  ASSERT_EQ(m.size(), 5u);
  EXPECT_EQ(m[0].name, "full");
  EXPECT_FALSE(ablation_config({}, "no-pg").flags.use_p_g);
  EXPECT_TRUE(ablation_config({}, "no-pg").flags.use_p_a);
  EXPECT_FALSE(ablation_config({}, "no-pa").flags.use_p_a);
  EXPECT_FALSE(ablation_config({}, "no-pm").flags.use_p_m);
  EXPECT_TRUE(ablation_config({}, "beta1").flags.fixed_beta_one);
  EXPECT_THROW(ablation_config({}, "no-everything"), ContractError);
  EXPECT_NE(m[0].hash(), m[1].hash());
}

TEST(Ablation, BetaOneRunLogsUnitBetas) {
  const Corpus corpus = make_smoke_corpus(0);
  const TrainConfig c = ablation_config(tiny_config(), "beta1");
  const TrainResult r = train(c, corpus);
  EXPECT_TRUE(r.final.flags.fixed_beta_one);
  EvalOptions o;
  o.split = Split::Train;
  o.episodes_per_room = 4;
  o.flags = c.flags;
  for (const EpisodeResult& e : evaluate(r.final.model, corpus, o).episodes) {
    for (const auto& b : e.betas) EXPECT_EQ(b, (std::array<double, 3>{1.0, 1.0, 1.0}));
  }
}

TEST(Config, ParsesSections) {
  const WorkbenchConfig w = parse_config(
      "[train]\nworkers = 3\nlr = 0.002\nepisodes = 500\n[model]\nd_m = 24\n"
      "[attention]\nuse_p_g = off\n[adaptation]\nenabled = true\nk_hat = 4\n[eval]\nsplit = val\n");
  EXPECT_EQ(w.train.workers, 3);
  EXPECT_EQ(w.train.lr, 0.002);
  EXPECT_EQ(w.train.total_episodes, 500);
  EXPECT_EQ(w.train.model.d_m, 24);
  EXPECT_FALSE(w.train.flags.use_p_g);
  EXPECT_TRUE(w.train.adaptation.enabled);
  EXPECT_EQ(w.train.adaptation.k_hat, 4);
  EXPECT_EQ(w.eval.split, Split::Val);
  EXPECT_EQ(w.train.model.d_v, ModelConfig{}.d_v);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("[train]\nworkerz = 3\n"), FormatError);
  EXPECT_THROW(parse_config("[train]\nworkers = three\n"), FormatError);
  EXPECT_THROW(parse_config("[attention]\nuse_p_g = maybe\n"), FormatError);
  EXPECT_THROW(load_config("/nonexistent/attnav.ini"), std::runtime_error);
}

TEST(Config, SmokeFileMatchesBuiltInDefaults) {
  const WorkbenchConfig w = load_config(fs::path(ATTNAV_SOURCE_DIR) / "configs" / "smoke.ini");
  const TrainConfig smoke = smoke_train_config();
  EXPECT_EQ(w.train.hash(), smoke.hash());
  EXPECT_EQ(w.train.eval_every, smoke.eval_every);
  EXPECT_EQ(w.train.eval_episodes_per_room, smoke.eval_episodes_per_room);
  EXPECT_EQ(w.train.eval_split, smoke.eval_split);
  EXPECT_NO_THROW(load_config(fs::path(ATTNAV_SOURCE_DIR) / "configs" / "full.ini"));
}
