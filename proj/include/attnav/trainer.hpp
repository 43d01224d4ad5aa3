#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "attnav/episode.hpp"
#include "attnav/optimizer.hpp"

namespace attnav {

struct TrainConfig {
  std::string name = "full";
  int workers = 12;
  int threads = 1;  // parallelism degree; results do not depend on it
  long total_episodes = 1200;
  int train_cap = kTrainStepCap;
  std::uint64_t seed = 0;
  double lr = 1e-4;
  double max_grad_norm = 0.0;  // 0 disables clipping
  LossConfig loss;
  AttentionFlags flags;
  AdaptationConfig adaptation;
  ModelConfig model;
  long eval_every = 0;  // episodes between validation passes; 0 disables
  int eval_episodes_per_room = 10;
  Split eval_split = Split::Val;
  long checkpoint_every = 0;  // episodes; needs out_dir
  std::filesystem::path out_dir;

  // Throws ContractError on workers < 1, non-positive caps or no enabled
  // attention unit.
  void validate() const;
  // FNV-1a over every field that affects the optimisation trajectory.
  std::uint64_t hash() const;
};

// Settings tuned for the smoke corpus: small model, lr 2e-3, gradient clipping
// at 5, 30000 episodes, validation every 2400 episodes on the train split with
// best-model selection.
TrainConfig smoke_train_config();

// full, no-pg, no-pa, no-pm, beta1.
std::vector<TrainConfig> ablation_matrix(const TrainConfig& base);
TrainConfig ablation_config(const TrainConfig& base, const std::string& name);
const std::vector<std::string>& ablation_names();

struct Checkpoint {
  Model model;
  OptimizerState optimizer;
  long episodes = 0;
  std::uint64_t config_hash = 0;
  AttentionFlags flags;
  bool use_adaptation = false;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws std::runtime_error when the file is missing, FormatError when malformed.
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct UpdateLog {
  long update = 0;
  long episodes = 0;
  double mean_loss = 0.0;
  double mean_reward = 0.0;
  double success_ma = 0.0;  // over the last 200 training episodes
  bool skipped = false;
  double val_success = -1.0;  // set on rounds with a validation pass
};

std::string to_json_line(const UpdateLog& log);

struct TrainResult {
  Checkpoint final;
  Checkpoint best;
  double best_val_success = -1.0;
  std::vector<UpdateLog> log;
  std::vector<std::filesystem::path> checkpoints;
  long adapt_calls = 0;
};

// Synchronous rounds: every worker plays one episode on the same parameter
// snapshot, gradients are averaged in worker order and one optimizer step is
// applied. Rounds with a non-finite loss or gradient are skipped; three
// consecutive skips abort with std::runtime_error.
TrainResult train(const TrainConfig& config, const Corpus& corpus,
                  const std::function<void(const UpdateLog&)>& on_update = {});

// Continues from a checkpoint (model, moments and episode counter).
TrainResult train(const TrainConfig& config, const Corpus& corpus, Checkpoint start,
                  const std::function<void(const UpdateLog&)>& on_update = {});

}  // namespace attnav
