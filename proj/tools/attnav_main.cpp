#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "attnav/config.hpp"
#include "attnav/errors.hpp"
#include "attnav/evaluator.hpp"
#include "attnav/export.hpp"
#include "attnav/scene_gen.hpp"
#include "attnav/scene_io.hpp"
#include "attnav/stack_check.hpp"
#include "attnav/trainer.hpp"

namespace fs = std::filesystem;
using namespace attnav;

namespace {

struct Options {
  std::uint64_t seed = 0;
  int workers = 12;
  int threads = 1;
  long episodes = -1;
  std::string config;
  std::string out;
  std::string ckpt;
  std::string ablation;
  std::string adapt;
  int episodes_per_room = -1;
  std::string corpus;
  bool smoke = false;
  std::string scene;
  std::string target;
  bool greedy = false;
  std::string split;
  int x = -1, y = -1, heading = 0, tilt = 0;
  int t_cap = kBetaStepCap;
};

Corpus load_corpus(const Options& o) {
  if (o.smoke) return make_smoke_corpus(0);
  if (o.corpus.empty()) throw std::runtime_error("no corpus given (use --corpus DIR or --smoke)");
  return read_corpus(o.corpus);
}

WorkbenchConfig workbench(const Options& o) {
  WorkbenchConfig cfg;
  if (o.smoke) cfg.train = smoke_train_config();
  if (!o.config.empty()) cfg = load_config(o.config, cfg);
  return cfg;
}

void apply_flags(const Options& o, TrainConfig& t) {
  t.seed = o.seed;
  t.workers = o.workers;
  t.threads = o.threads;
  if (o.episodes >= 0) t.total_episodes = o.episodes;
  if (!o.ablation.empty()) {
    const ModelConfig model = t.model;
    t = ablation_config(t, o.ablation);
    t.model = model;
  }
  if (o.adapt == "on") t.adaptation.enabled = true;
  if (o.adapt == "off") t.adaptation.enabled = false;
  if (!o.out.empty()) t.out_dir = o.out;
}

void write_json(const std::string& path, const nlohmann::json& doc) {
  if (path.empty()) {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << doc.dump(2) << '\n';
}

// Start pose from --x/--y/--heading when given, otherwise sampled in the scene.
Task make_task(const Options& o, const Corpus& corpus) {
  if (o.scene.empty() || o.target.empty()) throw std::runtime_error("--scene and --target are required");
  const Scene& scene = corpus.find(o.scene);
  Task task;
  task.scene_id = scene.id;
  task.target = parse_object_class(o.target);
  if (!scene.has_class(task.target)) {
    throw UnsolvableTaskError("scene " + scene.id + " has no " + o.target);
  }
  if (o.x >= 0 && o.y >= 0) {
    task.start = {{o.x, o.y}, o.heading, o.tilt};
    if (!valid_pose(scene, task.start)) throw std::runtime_error("start pose is not on a free cell");
    shortest_path_len(scene, task);
    return task;
  }
  Corpus single;
  single.scenes.push_back(scene);
  single.target_filter = {task.target};
  Rng rng = make_rng(o.seed, "cli-task");
  return sample_task(rng, single, scene.split, scene.room_type);
}

struct Loaded {
  Checkpoint ckpt;
  AttentionFlags flags;
  AdaptationConfig adaptation;
};

Loaded load_model(const Options& o) {
  if (o.ckpt.empty()) throw std::runtime_error("--ckpt is required");
  Loaded l{load_checkpoint(o.ckpt), {}, {}};
  l.flags = l.ckpt.flags;
  l.adaptation.enabled = l.ckpt.use_adaptation;
  if (!o.ablation.empty()) l.flags = ablation_config(TrainConfig{}, o.ablation).flags;
  if (o.adapt == "on") l.adaptation.enabled = true;
  if (o.adapt == "off") l.adaptation.enabled = false;
  return l;
}

EvalOptions eval_options(const Options& o, const Loaded& l, const Corpus& corpus) {
  EvalOptions e = workbench(o).eval;
  e.seed = o.seed;
  e.threads = o.threads;
  e.flags = l.flags;
  e.adaptation = l.adaptation;
  if (o.episodes_per_room >= 0) e.episodes_per_room = o.episodes_per_room;
  if (!o.split.empty()) {
    e.split = parse_split(o.split);
  } else if (corpus.in_split(e.split).empty()) {
    e.split = Split::Train;
  }
  return e;
}

int cmd_gen_scenes(const Options& o) {
  if (o.out.empty()) throw std::runtime_error("--out is required");
  const Corpus corpus = o.smoke ? make_smoke_corpus(0) : generate_corpus(o.seed);
  write_corpus(corpus, o.out);
  std::cout << "wrote " << corpus.scenes.size() << " scenes to " << o.out << '\n';
  return 0;
}

int cmd_train(const Options& o) {
  WorkbenchConfig cfg = workbench(o);
  apply_flags(o, cfg.train);
  const Corpus corpus = load_corpus(o);
  TrainResult result;
  auto print = [](const UpdateLog& l) { std::cout << to_json_line(l) << '\n'; };
  if (!o.ckpt.empty()) {
    Checkpoint start = load_checkpoint(o.ckpt);
    cfg.train.model = start.model.config;
    result = train(cfg.train, corpus, std::move(start), print);
  } else {
    result = train(cfg.train, corpus, print);
  }
  std::cerr << "episodes " << result.final.episodes << ", adapt calls " << result.adapt_calls;
  if (result.best_val_success >= 0.0) std::cerr << ", best validation success " << result.best_val_success;
  std::cerr << '\n';
  return 0;
}

int cmd_eval(const Options& o) {
  const Loaded l = load_model(o);
  const Corpus corpus = load_corpus(o);
  const EvalReport report = evaluate(l.ckpt.model, corpus, eval_options(o, l, corpus));
  nlohmann::json doc = report_json(report, o.t_cap);
  write_json(o.out.empty() ? "" : (fs::path(o.out) / "report.json").string(), doc);
  return 0;
}

int cmd_beta_stats(const Options& o) {
  const Loaded l = load_model(o);
  const Corpus corpus = load_corpus(o);
  const EvalReport report = evaluate(l.ckpt.model, corpus, eval_options(o, l, corpus));
  const auto rows = beta_statistics(report.episodes, o.t_cap);
  nlohmann::json doc;
  doc["format_version"] = kReportFormatVersion;
  doc["t_cap"] = o.t_cap;
  doc["rows"] = beta_table_json(rows);
  write_json(o.out.empty() ? "" : (fs::path(o.out) / "beta_stats.json").string(), doc);
  return 0;
}

EpisodeRun rollout(const Options& o, const Loaded& l, const Scene& scene, const Task& task,
                   bool keep_bundles) {
  EpisodeOptions eo;
  eo.cap = eval_step_cap(scene.room_type);
  eo.greedy = o.greedy;
  eo.keep_bundles = keep_bundles;
  eo.flags = l.flags;
  eo.adaptation = l.adaptation;
  Rng rng = make_rng(o.seed, "cli-rollout");
  return run_episode(l.ckpt.model, scene, task, eo, &rng);
}

int cmd_rollout(const Options& o) {
  const Loaded l = load_model(o);
  const Corpus corpus = load_corpus(o);
  const Task task = make_task(o, corpus);
  const Scene& scene = corpus.find(task.scene_id);
  const EpisodeRun run = rollout(o, l, scene, task, false);
  write_json(o.out, rollout_json(scene, run, l.ckpt.model.config.n_v));
  return 0;
}

int cmd_export_attn(const Options& o) {
  if (o.out.empty()) throw std::runtime_error("--out is required");
  const Loaded l = load_model(o);
  const Corpus corpus = load_corpus(o);
  const Task task = make_task(o, corpus);
  const Scene& scene = corpus.find(task.scene_id);
  const EpisodeRun run = rollout(o, l, scene, task, true);
  export_attention(o.out, run, l.ckpt.model.config.n_v);
  write_json((fs::path(o.out) / "episode.json").string(), rollout_json(scene, run, l.ckpt.model.config.n_v));
  std::cout << "exported " << run.steps.size() << " steps to " << o.out << '\n';
  return 0;
}

int cmd_export_view(const Options& o) {
  const Corpus corpus = load_corpus(o);
  if (o.scene.empty()) throw std::runtime_error("--scene is required");
  const Scene& scene = corpus.find(o.scene);
  const AgentPose pose{{o.x, o.y}, o.heading, o.tilt};
  if (!valid_pose(scene, pose)) throw std::runtime_error("pose is not on a free cell");
  nlohmann::json doc = feature_map_json(render(scene, pose));
  doc["scene"] = scene.id;
  doc["pose"] = pose_json(pose);
  write_json(o.out, doc);
  return 0;
}

int cmd_gradcheck(const Options& o) {
  const StackInstance inst = make_stack_instance(o.seed, gradcheck_model_config());
  const GradCheckResult r = check_stack(inst);
  std::cout << "max relative error " << r.max_rel_error << " over " << r.coordinates
            << " coordinates (worst " << parameter_names()[r.worst_param] << "[" << r.worst_index
            << "], analytic " << r.analytic << ", numeric " << r.numeric << ")\n";
  return r.max_rel_error <= 1e-4 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attention-driven object navigation workbench"};
  app.require_subcommand(1, 1);
  Options o;

  auto common = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "seed for every random stream");
    c->add_option("--config", o.config, "INI configuration file");
    c->add_option("--out", o.out, "output path");
  };
  auto corpus = [&](CLI::App* c) {
    c->add_option("--corpus", o.corpus, "scene directory");
    c->add_flag("--smoke", o.smoke, "use the built-in smoke corpus");
  };
  auto model = [&](CLI::App* c) {
    c->add_option("--ckpt", o.ckpt, "checkpoint file");
    c->add_option("--ablation", o.ablation, "attention configuration")
        ->check(CLI::IsMember({"full", "no-pg", "no-pa", "no-pm", "beta1"}));
    c->add_option("--adapt", o.adapt, "in-episode adaptation")->check(CLI::IsMember({"on", "off"}));
    c->add_option("--threads", o.threads, "parallel episodes");
  };
  auto eval_flags = [&](CLI::App* c) {
    c->add_option("--episodes-per-room", o.episodes_per_room, "evaluation episodes per room type");
    c->add_option("--split", o.split, "train, val or test");
    c->add_option("--t-cap", o.t_cap, "last step of the beta table");
  };
  auto task = [&](CLI::App* c) {
    c->add_option("--scene", o.scene, "scene id");
    c->add_option("--target", o.target, "target class");
    c->add_option("--x", o.x, "start cell x");
    c->add_option("--y", o.y, "start cell y");
    c->add_option("--heading", o.heading, "start heading in degrees");
    c->add_option("--tilt", o.tilt, "start camera tilt in degrees");
  };

  auto* gen = app.add_subcommand("gen-scenes", "write the procedural scene corpus");
  common(gen);
  gen->add_flag("--smoke", o.smoke, "write the smoke corpus instead");

  auto* tr = app.add_subcommand("train", "synchronous actor-critic training");
  common(tr);
  corpus(tr);
  model(tr);
  tr->add_option("--workers", o.workers, "episodes per update");
  tr->add_option("--episodes", o.episodes, "total training episodes");

  auto* ev = app.add_subcommand("eval", "greedy evaluation report");
  common(ev);
  corpus(ev);
  model(ev);
  eval_flags(ev);

  auto* ro = app.add_subcommand("rollout", "per-step trajectory dump");
  common(ro);
  corpus(ro);
  model(ro);
  task(ro);
  ro->add_flag("--greedy", o.greedy, "argmax actions");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the full stack");
  gc->add_option("--seed", o.seed, "instance seed");

  auto* ex = app.add_subcommand("export-attn", "per-step attention graymaps");
  common(ex);
  corpus(ex);
  model(ex);
  task(ex);
  ex->add_flag("--greedy", o.greedy, "argmax actions");

  auto* bs = app.add_subcommand("beta-stats", "per-step unit proportions");
  common(bs);
  corpus(bs);
  model(bs);
  eval_flags(bs);

  auto* vw = app.add_subcommand("export-view", "rendered feature map for one pose");
  common(vw);
  corpus(vw);
  task(vw);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*gen) return cmd_gen_scenes(o);
    if (*tr) return cmd_train(o);
    if (*ev) return cmd_eval(o);
    if (*ro) return cmd_rollout(o);
    if (*gc) return cmd_gradcheck(o);
    if (*ex) return cmd_export_attn(o);
    if (*bs) return cmd_beta_stats(o);
    if (*vw) return cmd_export_view(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
