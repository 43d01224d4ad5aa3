#include "attnav/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "attnav/errors.hpp"

namespace attnav {

namespace {

namespace pt = boost::property_tree;

template <class T>
T as(const std::string& key, const std::string& raw) {
  std::istringstream in(raw);
  T value{};
  in >> value;
  if (in.fail() || !(in >> std::ws).eof()) throw FormatError("config: bad value for " + key + ": '" + raw + "'");
  return value;
}

bool as_bool(const std::string& key, const std::string& raw) {
  if (raw == "true" || raw == "on" || raw == "1" || raw == "yes") return true;
  if (raw == "false" || raw == "off" || raw == "0" || raw == "no") return false;
  throw FormatError("config: bad boolean for " + key + ": '" + raw + "'");
}

using Setter = std::function<void(WorkbenchConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> m;
    m["train.name"] = [](auto& c, auto&, auto& v) { c.train.name = v; };
    m["train.workers"] = [](auto& c, auto& k, auto& v) { c.train.workers = as<int>(k, v); };
    m["train.threads"] = [](auto& c, auto& k, auto& v) { c.train.threads = as<int>(k, v); };
    m["train.episodes"] = [](auto& c, auto& k, auto& v) { c.train.total_episodes = as<long>(k, v); };
    m["train.cap"] = [](auto& c, auto& k, auto& v) { c.train.train_cap = as<int>(k, v); };
    m["train.seed"] = [](auto& c, auto& k, auto& v) { c.train.seed = as<std::uint64_t>(k, v); };
    m["train.lr"] = [](auto& c, auto& k, auto& v) { c.train.lr = as<double>(k, v); };
    m["train.max_grad_norm"] = [](auto& c, auto& k, auto& v) { c.train.max_grad_norm = as<double>(k, v); };
    m["train.eval_every"] = [](auto& c, auto& k, auto& v) { c.train.eval_every = as<long>(k, v); };
    m["train.eval_episodes_per_room"] = [](auto& c, auto& k, auto& v) {
      c.train.eval_episodes_per_room = as<int>(k, v);
    };
    m["train.eval_split"] = [](auto& c, auto&, auto& v) { c.train.eval_split = parse_split(v); };
    m["train.checkpoint_every"] = [](auto& c, auto& k, auto& v) { c.train.checkpoint_every = as<long>(k, v); };
    m["loss.gamma"] = [](auto& c, auto& k, auto& v) { c.train.loss.gamma = as<double>(k, v); };
    m["loss.value_coef"] = [](auto& c, auto& k, auto& v) { c.train.loss.value_coef = as<double>(k, v); };
    m["loss.entropy_coef"] = [](auto& c, auto& k, auto& v) { c.train.loss.entropy_coef = as<double>(k, v); };
    m["loss.entropy_coef_int"] = [](auto& c, auto& k, auto& v) {
      c.train.loss.entropy_coef_int = as<double>(k, v);
    };
    m["model.n_v"] = [](auto& c, auto& k, auto& v) { c.train.model.n_v = as<int>(k, v); };
    m["model.d_v"] = [](auto& c, auto& k, auto& v) { c.train.model.d_v = as<int>(k, v); };
    m["model.d_g"] = [](auto& c, auto& k, auto& v) { c.train.model.d_g = as<int>(k, v); };
    m["model.d"] = [](auto& c, auto& k, auto& v) { c.train.model.d = as<int>(k, v); };
    m["model.d_p"] = [](auto& c, auto& k, auto& v) { c.train.model.d_p = as<int>(k, v); };
    m["model.d_in"] = [](auto& c, auto& k, auto& v) { c.train.model.d_in = as<int>(k, v); };
    m["model.d_m"] = [](auto& c, auto& k, auto& v) { c.train.model.d_m = as<int>(k, v); };
    m["attention.use_p_g"] = [](auto& c, auto& k, auto& v) { c.train.flags.use_p_g = as_bool(k, v); };
    m["attention.use_p_a"] = [](auto& c, auto& k, auto& v) { c.train.flags.use_p_a = as_bool(k, v); };
    m["attention.use_p_m"] = [](auto& c, auto& k, auto& v) { c.train.flags.use_p_m = as_bool(k, v); };
    m["attention.fixed_beta_one"] = [](auto& c, auto& k, auto& v) {
      c.train.flags.fixed_beta_one = as_bool(k, v);
    };
    m["adaptation.enabled"] = [](auto& c, auto& k, auto& v) { c.train.adaptation.enabled = as_bool(k, v); };
    m["adaptation.k_hat"] = [](auto& c, auto& k, auto& v) { c.train.adaptation.k_hat = as<int>(k, v); };
    m["adaptation.inner_lr"] = [](auto& c, auto& k, auto& v) { c.train.adaptation.inner_lr = as<double>(k, v); };
    m["eval.split"] = [](auto& c, auto&, auto& v) { c.eval.split = parse_split(v); };
    m["eval.episodes_per_room"] = [](auto& c, auto& k, auto& v) { c.eval.episodes_per_room = as<int>(k, v); };
    m["eval.cap"] = [](auto& c, auto& k, auto& v) { c.eval.cap = as<int>(k, v); };
    m["eval.threads"] = [](auto& c, auto& k, auto& v) { c.eval.threads = as<int>(k, v); };
    return m;
  }();
  return table;
}

}  // namespace

WorkbenchConfig parse_config(const std::string& text, WorkbenchConfig base) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw FormatError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = setters().find(full);
      if (it == setters().end()) throw FormatError("config: unknown key '" + full + "'");
      it->second(base, full, value.data());
    }
  }
  return base;
}

WorkbenchConfig load_config(const std::filesystem::path& path, WorkbenchConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config not found: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

}  // namespace attnav
