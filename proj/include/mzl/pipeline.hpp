#pragma once

// Subcommand bodies for the command-line tool. Each writes its artifacts under
// cfg.out_dir (created on demand) and reports progress to `log`.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mzl/config.hpp"

namespace mzl::pipeline {

namespace fs = std::filesystem;

struct Paths {
  fs::path trajectories;
  fs::path dataset;
  fs::path model;
  fs::path training_log;
  fs::path rollout;
  fs::path sweep;
  fs::path comparison;
  fs::path config;

  static Paths in(const fs::path& dir);
};

fs::path run_generate(const ExperimentConfig& cfg, std::ostream& log);
fs::path run_build_dataset(const ExperimentConfig& cfg, const fs::path& trajectories,
                           std::ostream& log);
fs::path run_train(const ExperimentConfig& cfg, const fs::path& dataset, std::ostream& log);

/// Seeds a rollout from the truth system started at `x0` (or a random in-domain state
/// drawn from the evaluation seed) and writes the rollout CSV with reference columns.
fs::path run_predict(const ExperimentConfig& cfg, const fs::path& model, int steps,
                     const std::optional<Vec>& x0, std::ostream& log);
fs::path run_sweep(const ExperimentConfig& cfg, const std::vector<int>& n_mem_list,
                   std::ostream& log);
/// CSV `t,nn_err,reduced_err`; returns the path and prints both time averages.
fs::path run_compare_reduced(const ExperimentConfig& cfg, const fs::path& model,
                             std::ostream& log);
/// Checks the linear MZ identity for example1 and example4; returns true when every
/// residual is below 1e-4.
bool run_oracle_check(std::uint64_t seed, std::ostream& log);

/// generate -> build-dataset -> train -> predict with default paths.
void run_all(const ExperimentConfig& cfg, int predict_steps, std::ostream& log);

}  // namespace mzl::pipeline
