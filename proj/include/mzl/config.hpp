#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mzl/rollout.hpp"

namespace mzl {

/// Everything one experiment needs. Serialized as a flat JSON object; unknown keys are
/// rejected on load.
struct ExperimentConfig {
  std::string system = "example1";
  std::map<std::string, double> params;
  std::vector<std::vector<double>> linear_matrix;  ///< linear-generic only
  int observed_dim = 0;                           ///< 0: the system's own d
  std::optional<Domain> domain;                   ///< default: the system's box
  double delta = 0.02;
  int substeps = 20;
  int n_traj = 1000;
  int traj_len = 0;  ///< 0: n_mem + 2
  SelectionKind selection = SelectionKind::random;
  int per_trajectory = 1;
  int n_mem = 10;
  std::vector<int> hidden = {30, 30, 30};
  TrainConfig train;
  double eval_horizon = 20.0;
  int n_eval_runs = 10;
  std::vector<int> sweep_n_mem;
  std::uint64_t seed = 1;
  std::string out_dir = "out";

  void validate() const;

  SystemSpec make_system_spec() const;
  Domain resolved_domain() const;
  DataConfig data_config() const;
  ModelConfig model_config() const;
  SolverConfig solver() const { return {delta, substeps}; }
};

ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

const std::vector<std::string>& preset_names();
ExperimentConfig preset(const std::string& name);

}  // namespace mzl
