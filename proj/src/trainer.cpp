#include "attnav/trainer.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "attnav/errors.hpp"
#include "attnav/evaluator.hpp"

namespace attnav {

namespace {

constexpr int kMaxConsecutiveSkips = 3;
constexpr std::size_t kSuccessWindow = 200;

Tensor pack_u64(std::uint64_t v) {
  std::vector<double> chunks(4);
  for (int i = 0; i < 4; ++i) chunks[static_cast<std::size_t>(i)] = static_cast<double>((v >> (16 * i)) & 0xffffu);
  return Tensor({4}, std::move(chunks));
}

std::uint64_t unpack_u64(const Tensor& t) {
  if (t.size() != 4) throw FormatError("packed integer record has wrong size");
  std::uint64_t v = 0;
  for (int i = 0; i < 4; ++i) {
    const double c = t[static_cast<std::size_t>(i)];
    if (c < 0 || c > 65535 || c != std::floor(c)) throw FormatError("packed integer chunk out of range");
    v |= static_cast<std::uint64_t>(c) << (16 * i);
  }
  return v;
}

const Tensor* find_record(std::span<const NamedTensor> records, const std::string& name) {
  for (const auto& r : records) {
    if (r.name == name) return &r.tensor;
  }
  return nullptr;
}

struct WorkerOut {
  EpisodeRun run;
  bool finite = true;
};

template <class F>
void run_workers(int count, int threads, F&& body) {
  const int pool_size = std::min(count, std::max(1, threads));
  if (pool_size <= 1) {
    for (int w = 0; w < count; ++w) body(w);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(pool_size));
  for (int p = 0; p < pool_size; ++p) {
    pool.emplace_back([&, p] {
      try {
        for (int w = p; w < count; w += pool_size) body(w);
      } catch (...) {
        errors[static_cast<std::size_t>(p)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

bool all_finite(std::span<const Tensor> ts) {
  for (const Tensor& t : ts) {
    if (!t.all_finite()) return false;
  }
  return true;
}

}  // namespace

void TrainConfig::validate() const {
  if (workers < 1) throw ContractError("workers must be >= 1");
  if (threads < 1) throw ContractError("threads must be >= 1");
  if (train_cap < 1) throw ContractError("train_cap must be >= 1");
  if (total_episodes < 0) throw ContractError("total_episodes must be >= 0");
  if (!flags.any_unit() && !flags.fixed_beta_one) {
    throw ContractError("at least one attention unit must be enabled");
  }
  if (adaptation.enabled && adaptation.k_hat < 1) throw ContractError("k_hat must be >= 1");
}

std::uint64_t TrainConfig::hash() const {
  std::ostringstream s;
  s << std::hexfloat;
  s << workers << '|' << total_episodes << '|' << train_cap << '|' << seed << '|' << lr << '|'
    << max_grad_norm << '|' << loss.gamma << '|' << loss.value_coef << '|' << loss.entropy_coef
    << '|' << loss.entropy_coef_int << '|' << flags.use_p_g << flags.use_p_a << flags.use_p_m
    << flags.fixed_beta_one << '|' << adaptation.enabled << '|' << adaptation.k_hat << '|'
    << adaptation.inner_lr << '|' << model.n_v << ',' << model.d_v << ',' << model.d_g << ','
    << model.d << ',' << model.d_p << ',' << model.d_in << ',' << model.d_m;
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s.str()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

const std::vector<std::string>& ablation_names() {
  static const std::vector<std::string> names = {"full", "no-pg", "no-pa", "no-pm", "beta1"};
  return names;
}

TrainConfig ablation_config(const TrainConfig& base, const std::string& name) {
  TrainConfig c = base;
  c.name = name;
  c.flags = AttentionFlags{};
  if (name == "full") {
  } else if (name == "no-pg") {
    c.flags.use_p_g = false;
  } else if (name == "no-pa") {
    c.flags.use_p_a = false;
  } else if (name == "no-pm") {
    c.flags.use_p_m = false;
  } else if (name == "beta1") {
    c.flags.fixed_beta_one = true;
  } else {
    throw ContractError("unknown ablation '" + name + "'");
  }
  return c;
}

TrainConfig smoke_train_config() {
  TrainConfig c;
  c.name = "full";
  c.workers = 12;
  c.total_episodes = 30000;
  c.lr = 2e-3;
  c.max_grad_norm = 5.0;
  c.model.d_v = 32;
  c.model.d_g = 32;
  c.model.d = 16;
  c.model.d_p = 4;
  c.model.d_in = 64;
  c.model.d_m = 64;
  c.eval_every = 2400;
  c.eval_episodes_per_room = 100;
  c.eval_split = Split::Train;
  return c;
}

std::vector<TrainConfig> ablation_matrix(const TrainConfig& base) {
  std::vector<TrainConfig> out;
  for (const auto& n : ablation_names()) out.push_back(ablation_config(base, n));
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::vector<NamedTensor> records = model_records(ckpt.model);
  const auto& names = parameter_names();
  for (std::size_t k = 0; k < ckpt.optimizer.m.size(); ++k) {
    records.push_back({"optim.m." + names[k], ckpt.optimizer.m[k]});
    records.push_back({"optim.v." + names[k], ckpt.optimizer.v[k]});
  }
  records.push_back({"meta.optim_step", pack_u64(static_cast<std::uint64_t>(ckpt.optimizer.step))});
  records.push_back({"meta.episodes", pack_u64(static_cast<std::uint64_t>(ckpt.episodes))});
  records.push_back({"meta.config_hash", pack_u64(ckpt.config_hash)});
  records.push_back({"meta.flags", Tensor::vector({ckpt.flags.use_p_g ? 1.0 : 0.0, ckpt.flags.use_p_a ? 1.0 : 0.0,
                                                   ckpt.flags.use_p_m ? 1.0 : 0.0,
                                                   ckpt.flags.fixed_beta_one ? 1.0 : 0.0,
                                                   ckpt.use_adaptation ? 1.0 : 0.0})});
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_named_tensors(path, records);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto records = load_named_tensors(path);
  Checkpoint c;
  c.model = model_from_records(records);
  const auto& names = parameter_names();
  const auto params = parameters(c.model);
  if (find_record(records, "optim.m." + names.front()) != nullptr) {
    for (std::size_t k = 0; k < names.size(); ++k) {
      const Tensor* m = find_record(records, "optim.m." + names[k]);
      const Tensor* v = find_record(records, "optim.v." + names[k]);
      if (m == nullptr || v == nullptr) throw FormatError("incomplete optimizer moments for " + names[k]);
      if (m->shape() != params[k].shape() || v->shape() != params[k].shape()) {
        throw FormatError("optimizer moment shape mismatch for " + names[k]);
      }
      c.optimizer.m.push_back(*m);
      c.optimizer.v.push_back(*v);
    }
  }
  if (const Tensor* t = find_record(records, "meta.optim_step")) c.optimizer.step = static_cast<std::int64_t>(unpack_u64(*t));
  if (const Tensor* t = find_record(records, "meta.episodes")) c.episodes = static_cast<long>(unpack_u64(*t));
  if (const Tensor* t = find_record(records, "meta.config_hash")) c.config_hash = unpack_u64(*t);
  if (const Tensor* t = find_record(records, "meta.flags")) {
    if (t->size() != 5) throw FormatError("meta.flags has wrong size");
    c.flags = {(*t)[0] != 0.0, (*t)[1] != 0.0, (*t)[2] != 0.0, (*t)[3] != 0.0};
    c.use_adaptation = (*t)[4] != 0.0;
  }
  return c;
}

std::string to_json_line(const UpdateLog& log) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["update"] = log.update;
  j["episodes"] = log.episodes;
  j["mean_loss"] = log.skipped ? nlohmann::json(nullptr) : nlohmann::json(log.mean_loss);
  j["mean_reward"] = log.mean_reward;
  j["success_ma"] = log.success_ma;
  j["skipped"] = log.skipped;
  if (log.val_success >= 0.0) j["val_success"] = log.val_success;
  return j.dump();
}

TrainResult train(const TrainConfig& config, const Corpus& corpus,
                  const std::function<void(const UpdateLog&)>& on_update) {
  Checkpoint start;
  start.model = Model::init(config.model, config.seed);
  return train(config, corpus, std::move(start), on_update);
}

TrainResult train(const TrainConfig& config, const Corpus& corpus, Checkpoint start,
                  const std::function<void(const UpdateLog&)>& on_update) {
  config.validate();
  if (corpus.in_split(Split::Train).empty()) throw ContractError("train: corpus has no train split");
  if (!(start.model.config == config.model)) throw ContractError("train: checkpoint model config differs");

  TrainResult result;
  Checkpoint current = std::move(start);
  current.config_hash = config.hash();
  current.flags = config.flags;
  current.use_adaptation = config.adaptation.enabled;
  result.best = current;

  std::ofstream log_file;
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    log_file.open(config.out_dir / "train_log.jsonl", std::ios::app);
  }

  EpisodeOptions eo;
  eo.cap = config.train_cap;
  eo.compute_gradients = true;
  eo.flags = config.flags;
  eo.loss = config.loss;
  eo.adaptation = config.adaptation;

  const Split eval_split = corpus.in_split(config.eval_split).empty() ? Split::Train : config.eval_split;
  std::deque<bool> recent;
  int consecutive_skips = 0;
  long update = 0;
  long next_eval = config.eval_every > 0 ? current.episodes + config.eval_every : -1;
  long next_ckpt = config.checkpoint_every > 0 ? current.episodes + config.checkpoint_every : -1;

  while (current.episodes < config.total_episodes) {
    const int workers = static_cast<int>(
        std::min<long>(config.workers, config.total_episodes - current.episodes));
    std::vector<WorkerOut> outs(static_cast<std::size_t>(workers));
    const Model& snapshot = current.model;
    const long base = current.episodes;
    run_workers(workers, config.threads, [&](int w) {
      const auto e = static_cast<std::uint64_t>(base + w);
      Rng task_rng = make_rng(config.seed, "train-task", e);
      const Task task = sample_task(task_rng, corpus, Split::Train);
      Rng act_rng = make_rng(config.seed, "train-action", e);
      WorkerOut& out = outs[static_cast<std::size_t>(w)];
      out.run = run_episode(snapshot, corpus.find(task.scene_id), task, eo, &act_rng);
      out.finite = std::isfinite(out.run.loss) && all_finite(out.run.grads);
    });

    UpdateLog entry;
    entry.update = ++update;
    bool finite = true;
    double loss_sum = 0.0, reward_sum = 0.0;
    std::vector<std::vector<Tensor>> grads;
    for (WorkerOut& o : outs) {
      finite = finite && o.finite;
      loss_sum += o.run.loss;
      reward_sum += o.run.total_reward;
      result.adapt_calls += o.run.adapt_calls;
      recent.push_back(o.run.success);
      if (recent.size() > kSuccessWindow) recent.pop_front();
      grads.push_back(std::move(o.run.grads));
    }
    current.episodes += workers;
    entry.episodes = current.episodes;
    entry.mean_loss = loss_sum / workers;
    entry.mean_reward = reward_sum / workers;
    std::size_t hits = 0;
    for (bool s : recent) hits += s ? 1 : 0;
    entry.success_ma = static_cast<double>(hits) / static_cast<double>(recent.size());

    std::vector<Tensor> avg;
    if (finite) {
      avg = clip_by_global_norm(average_gradients(grads), config.max_grad_norm);
      finite = all_finite(avg);
    }
    if (!finite) {
      entry.skipped = true;
      if (++consecutive_skips >= kMaxConsecutiveSkips) {
        std::ostringstream msg;
        msg << "training aborted: " << kMaxConsecutiveSkips
            << " consecutive non-finite updates ending at episode " << current.episodes
            << " (last mean loss " << entry.mean_loss << ")";
        throw std::runtime_error(msg.str());
      }
    } else {
      consecutive_skips = 0;
      const auto params = parameters(current.model);
      std::vector<Tensor> next =
          optimizer_step(OptimizerKind::AdaptiveMoment, params, avg, config.lr, current.optimizer);
      for (Tensor& t : next) t = round_to_float(t);
      for (Tensor& t : current.optimizer.m) t = round_to_float(t);
      for (Tensor& t : current.optimizer.v) t = round_to_float(t);
      current.model = with_parameters(current.model, std::move(next));
    }

    if (next_eval > 0 && current.episodes >= next_eval) {
      while (next_eval <= current.episodes) next_eval += config.eval_every;
      EvalOptions opt;
      opt.split = eval_split;
      opt.episodes_per_room = config.eval_episodes_per_room;
      opt.seed = config.seed;
      opt.flags = config.flags;
      opt.adaptation = config.adaptation;
      opt.threads = config.threads;
      const double s = *evaluate(current.model, corpus, opt).metrics.all.success;
      entry.val_success = s;
      if (s > result.best_val_success) {
        result.best_val_success = s;
        result.best = current;
        if (!config.out_dir.empty()) save_checkpoint(config.out_dir / "best.atnv", current);
      }
    }
    if (next_ckpt > 0 && current.episodes >= next_ckpt && !config.out_dir.empty()) {
      while (next_ckpt <= current.episodes) next_ckpt += config.checkpoint_every;
      const auto path = config.out_dir / ("ckpt_" + std::to_string(current.episodes) + ".atnv");
      save_checkpoint(path, current);
      result.checkpoints.push_back(path);
    }

    result.log.push_back(entry);
    if (log_file.is_open()) log_file << to_json_line(entry) << '\n' << std::flush;
    if (on_update) on_update(entry);
  }

  result.final = current;
  if (result.best_val_success < 0.0) result.best = current;
  if (!config.out_dir.empty()) {
    save_checkpoint(config.out_dir / "final.atnv", current);
    if (result.best_val_success < 0.0) save_checkpoint(config.out_dir / "best.atnv", current);
  }
  return result;
}

}  // namespace attnav
