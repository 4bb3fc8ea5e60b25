#include "mzl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mzl {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  if (!obj.is_object()) throw FormatError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw FormatError("unknown config key '" + where + key + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where = "") {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError("config key '" + where + key + "': " + e.what());
  }
}

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Index>(v.size()));
}

std::vector<double> from_vec(const Vec& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

void ExperimentConfig::validate() const {
  const auto spec = make_system_spec();
  resolved_domain().validate(spec.n);
  solver().validate();
  if (n_traj < 1) throw ContractError("n_traj must be >= 1");
  if (traj_len < 0) throw ContractError("traj_len must be >= 0");
  if (n_mem < 0) throw ContractError("n_mem must be >= 0");
  if (hidden.empty()) throw ContractError("hidden must list at least one width");
  for (const int w : hidden) {
    if (w < 1) throw ContractError("hidden widths must be >= 1");
  }
  if (selection == SelectionKind::random && per_trajectory < 1) {
    throw ContractError("per_trajectory must be >= 1 for random selection");
  }
  if (selection == SelectionKind::random && per_trajectory > data_config().length_for(n_mem) - n_mem - 1) {
    throw ContractError("per_trajectory exceeds the available windows per trajectory");
  }
  if (!(eval_horizon > 0.0) || n_eval_runs < 1) throw ContractError("bad evaluation settings");
  if (train.epochs < 1 || train.batch_size < 1 || !(train.learning_rate >= 0.0)) {
    throw ContractError("bad training settings");
  }
}

SystemSpec ExperimentConfig::make_system_spec() const {
  SystemSpec spec;
  if (system == "linear-generic") {
    if (linear_matrix.empty()) throw ContractError("linear-generic needs linear_matrix");
    const Index n = static_cast<Index>(linear_matrix.size());
    Mat a(n, n);
    for (Index r = 0; r < n; ++r) {
      if (static_cast<Index>(linear_matrix[static_cast<std::size_t>(r)].size()) != n) {
        throw ContractError("linear_matrix must be square");
      }
      for (Index c = 0; c < n; ++c) a(r, c) = linear_matrix[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    spec = make_linear_system("linear-generic", a, observed_dim > 0 ? observed_dim : 1);
  } else {
    spec = make_system(system, params);
  }
  if (observed_dim > 0) {
    if (observed_dim > spec.n) throw ContractError("observed_dim exceeds state dimension");
    spec.d = observed_dim;
  }
  return spec;
}

Domain ExperimentConfig::resolved_domain() const {
  if (domain) return *domain;
  return default_domain(system);
}

DataConfig ExperimentConfig::data_config() const {
  DataConfig data;
  data.solver = solver();
  data.domain = resolved_domain();
  data.n_traj = n_traj;
  data.traj_len = traj_len;
  data.selection.kind = selection;
  data.selection.per_trajectory = per_trajectory;
  return data;
}

ModelConfig ExperimentConfig::model_config() const { return {hidden, train}; }

// ---------------------------------------------------------------------------

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown_keys(j,
                      {"system", "params", "linear_matrix", "observed_dim", "domain", "delta",
                       "substeps", "n_traj", "traj_len", "selection", "per_trajectory", "n_mem",
                       "hidden", "train", "eval_horizon", "n_eval_runs", "sweep_n_mem", "seed",
                       "out_dir"},
                      "");
  ExperimentConfig cfg;
  read(j, "system", cfg.system);
  read(j, "params", cfg.params);
  read(j, "linear_matrix", cfg.linear_matrix);
  read(j, "observed_dim", cfg.observed_dim);
  if (j.contains("domain")) {
    const auto& dom = j.at("domain");
    reject_unknown_keys(dom, {"lower", "upper"}, "domain.");
    std::vector<double> lower, upper;
    read(dom, "lower", lower, "domain.");
    read(dom, "upper", upper, "domain.");
    cfg.domain = Domain{to_vec(lower), to_vec(upper)};
  }
  read(j, "delta", cfg.delta);
  read(j, "substeps", cfg.substeps);
  read(j, "n_traj", cfg.n_traj);
  read(j, "traj_len", cfg.traj_len);
  if (j.contains("selection")) {
    std::string kind;
    read(j, "selection", kind);
    if (kind == "random") {
      cfg.selection = SelectionKind::random;
    } else if (kind == "deterministic") {
      cfg.selection = SelectionKind::deterministic;
    } else {
      throw FormatError("selection must be 'random' or 'deterministic'");
    }
  }
  read(j, "per_trajectory", cfg.per_trajectory);
  read(j, "n_mem", cfg.n_mem);
  read(j, "hidden", cfg.hidden);
  if (j.contains("train")) {
    const auto& t = j.at("train");
    reject_unknown_keys(t,
                        {"learning_rate", "final_learning_rate", "batch_size", "epochs",
                         "adam_beta1", "adam_beta2", "adam_eps", "shuffle_each_epoch",
                         "normalize"},
                        "train.");
    read(t, "learning_rate", cfg.train.learning_rate, "train.");
    read(t, "final_learning_rate", cfg.train.final_learning_rate, "train.");
    read(t, "batch_size", cfg.train.batch_size, "train.");
    read(t, "epochs", cfg.train.epochs, "train.");
    read(t, "adam_beta1", cfg.train.adam_beta1, "train.");
    read(t, "adam_beta2", cfg.train.adam_beta2, "train.");
    read(t, "adam_eps", cfg.train.adam_eps, "train.");
    read(t, "shuffle_each_epoch", cfg.train.shuffle_each_epoch, "train.");
    read(t, "normalize", cfg.train.normalize, "train.");
  }
  read(j, "eval_horizon", cfg.eval_horizon);
  read(j, "n_eval_runs", cfg.n_eval_runs);
  read(j, "sweep_n_mem", cfg.sweep_n_mem);
  read(j, "seed", cfg.seed);
  read(j, "out_dir", cfg.out_dir);
  cfg.validate();
  return cfg;
}

std::string config_to_json_text(const ExperimentConfig& cfg) {
  json j;
  j["system"] = cfg.system;
  j["params"] = cfg.params;
  if (!cfg.linear_matrix.empty()) j["linear_matrix"] = cfg.linear_matrix;
  j["observed_dim"] = cfg.observed_dim;
  if (cfg.domain) {
    j["domain"] = {{"lower", from_vec(cfg.domain->lower)}, {"upper", from_vec(cfg.domain->upper)}};
  }
  j["delta"] = cfg.delta;
  j["substeps"] = cfg.substeps;
  j["n_traj"] = cfg.n_traj;
  j["traj_len"] = cfg.traj_len;
  j["selection"] = cfg.selection == SelectionKind::random ? "random" : "deterministic";
  j["per_trajectory"] = cfg.per_trajectory;
  j["n_mem"] = cfg.n_mem;
  j["hidden"] = cfg.hidden;
  j["train"] = {{"learning_rate", cfg.train.learning_rate},
                {"final_learning_rate", cfg.train.final_learning_rate},
                {"batch_size", cfg.train.batch_size},
                {"epochs", cfg.train.epochs},
                {"adam_beta1", cfg.train.adam_beta1},
                {"adam_beta2", cfg.train.adam_beta2},
                {"adam_eps", cfg.train.adam_eps},
                {"shuffle_each_epoch", cfg.train.shuffle_each_epoch},
                {"normalize", cfg.train.normalize}};
  j["eval_horizon"] = cfg.eval_horizon;
  j["n_eval_runs"] = cfg.n_eval_runs;
  j["sweep_n_mem"] = cfg.sweep_n_mem;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  return j.dump(2) + "\n";
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json_text(buf.str());
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path.string());
  out << config_to_json_text(cfg);
}

// ---------------------------------------------------------------------------
// Presets. Network sizes, N_T and optimiser schedules are this project's desk-scale
// choices; the dataset is sized at roughly 5-10x the parameter count.

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"example1-fast", "example1-slow", "example2",
                                                 "example3", "example4", "linear2d-full"};
  return names;
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig cfg;
  cfg.train.learning_rate = 1e-3;
  cfg.train.final_learning_rate = 1e-5;
  cfg.train.batch_size = 64;
  cfg.train.normalize = true;
  cfg.out_dir = "runs/" + name;
  if (name == "example1-fast" || name == "example1-slow") {
    cfg.system = "example1";
    cfg.params = {{"alpha", name == "example1-fast" ? 2.0 : 1.1}};
    cfg.n_traj = 20000;
    cfg.traj_len = 0;  // n_mem + 2: one window per trajectory
    cfg.selection = SelectionKind::random;
    cfg.per_trajectory = 1;
    cfg.n_mem = 30;
    cfg.hidden = {30, 30, 30};
    cfg.train.epochs = 200;
    cfg.eval_horizon = name == "example1-fast" ? 20.0 : 100.0;
    cfg.n_eval_runs = 10;
    cfg.sweep_n_mem = {5, 10, 20, 30, 40};
  } else if (name == "example2") {
    cfg.system = "example2";
    cfg.n_traj = 4000;
    cfg.traj_len = 50;
    cfg.selection = SelectionKind::random;
    cfg.per_trajectory = 5;
    cfg.n_mem = 20;
    cfg.hidden = {30, 30, 30};
    cfg.train.epochs = 200;
    cfg.eval_horizon = 100.0;
    cfg.n_eval_runs = 5;
    cfg.sweep_n_mem = {3, 5, 8, 10, 13, 15, 18, 20};
  } else if (name == "example3") {
    cfg.system = "example3";
    cfg.params = {{"eps", 0.01}};
    cfg.n_traj = 20000;
    cfg.traj_len = 100;
    cfg.selection = SelectionKind::random;
    cfg.per_trajectory = 5;
    cfg.n_mem = 60;
    cfg.hidden = {120, 120, 120};
    cfg.train.epochs = 150;
    cfg.eval_horizon = 50.0;
    cfg.n_eval_runs = 10;
    cfg.sweep_n_mem = {10, 20, 30, 40, 50, 60, 70, 80};
  } else if (name == "example4") {
    cfg.system = "example4";
    cfg.n_traj = 30000;
    cfg.traj_len = 100;
    cfg.selection = SelectionKind::random;
    cfg.per_trajectory = 5;
    cfg.n_mem = 30;
    cfg.hidden = {160, 160, 160};
    cfg.train.epochs = 100;
    cfg.eval_horizon = 150.0;
    cfg.n_eval_runs = 10;
    cfg.sweep_n_mem = {10, 15, 20, 25, 30, 35, 40, 45, 50};
  } else if (name == "linear2d-full") {
    // Both states observed: no memory is needed, the plain residual flow map suffices.
    cfg.system = "example1";
    cfg.params = {{"alpha", 2.0}};
    cfg.observed_dim = 2;
    cfg.n_traj = 20000;
    cfg.traj_len = 2;
    cfg.selection = SelectionKind::deterministic;
    cfg.n_mem = 0;
    cfg.hidden = {30, 30};
    cfg.train.epochs = 400;
    cfg.eval_horizon = 2.0;
    cfg.n_eval_runs = 10;
    cfg.sweep_n_mem = {0};
  } else {
    throw ContractError("unknown preset '" + name + "'");
  }
  return cfg;
}

}  // namespace mzl
