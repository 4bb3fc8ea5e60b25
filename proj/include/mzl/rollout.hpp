#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "mzl/data.hpp"
#include "mzl/dynamics.hpp"
#include "mzl/net.hpp"
#include "mzl/train.hpp"

namespace mzl {

/// Prediction z_0, z_1, ... with the first `seed_len` columns copied from the seeds.
struct RolloutResult {
  double delta = 0.0;
  Mat states;  ///< d x (seed_len + steps), fewer columns if the rollout diverged
  int seed_len = 0;
  std::optional<int> diverged_at;  ///< index of the first non-finite prediction
};

/// Iterates z_{n+1} = z_n + N(z_n, ..., z_{n-n_mem}) from n_mem+1 seed states
/// (columns of `seeds`, oldest first).
RolloutResult rollout(const NetworkParams& model, const Mat& seeds, int steps,
                      double delta = 0.02);

struct ErrorSeries {
  std::vector<double> times;
  std::vector<double> errors;

  /// Mean error over samples with index >= first.
  double time_average(std::size_t first = 0) const;
};

/// Pointwise l2 error against a d x K reference. Entries past a divergence are +inf.
ErrorSeries error_series(const RolloutResult& pred, const Mat& reference);

/// Pointwise mean of equally sized series.
ErrorSeries mean_series(const std::vector<ErrorSeries>& runs);

/// CSV `t,z_1..z_d,ref_1..ref_d,err`.
void save_rollout_csv(const RolloutResult& pred, const Mat& reference,
                      const std::filesystem::path& path);

/// Explicit Euler on the discrete approximate MZ equation of a linear system:
///   z_{n+1} = z_n + delta * (A11 z_n + M(z_n, ..., z_{n-n_mem}))
/// with M the trapezoid rule for A12 int_0^{T_M} e^{A22 s} A21 z(t_n - s) ds on the
/// history grid. A negative n_mem keeps the whole history (T_M = t_n); the seeds then
/// supply z_0..z_{s-1} for any s >= 1.
Mat euler_damz(const LinearMZOracle& oracle, const Mat& seeds, int steps, double delta,
               int n_mem);

// ---------------------------------------------------------------------------
// Experiment-level helpers shared by the sweep, the comparison and the CLI.

struct DataConfig {
  SolverConfig solver;
  Domain domain;
  int n_traj = 1000;
  int traj_len = 0;  ///< K; 0 means n_mem + 2
  SelectionStrategy selection;

  int length_for(int n_mem) const { return traj_len > 0 ? traj_len : n_mem + 2; }
};

struct ModelConfig {
  std::vector<int> hidden = {30, 30, 30};
  TrainConfig train;
};

struct EvalConfig {
  double horizon = 20.0;
  int n_runs = 10;
};

/// Derives the per-stage seeds from one master seed.
struct StageSeeds {
  std::uint64_t data;
  std::uint64_t select;
  std::uint64_t init;
  std::uint64_t train;
  std::uint64_t eval;

  static StageSeeds from_master(std::uint64_t master);
};

/// Generates data, windows it, initialises and trains a model.
struct FitResult {
  NetworkParams model;
  TrainReport report;
  Index dataset_size = 0;
};
FitResult fit_model(const SystemSpec& system, const DataConfig& data, int n_mem,
                    const ModelConfig& model_cfg, std::uint64_t master_seed,
                    const EpochCallback& on_epoch = {});

/// Truth trajectories (observed block) for fresh initial conditions, each covering
/// [0, horizon] at the solver's delta.
std::vector<Mat> reference_trajectories(const SystemSpec& system, const SolverConfig& solver,
                                        const Domain& domain, double horizon, int n_runs,
                                        std::uint64_t seed);
std::vector<Vec> evaluation_initial_conditions(const Domain& domain, int n_runs,
                                               std::uint64_t seed);

/// Rolls the model out from the leading n_mem+1 states of each reference.
std::vector<ErrorSeries> evaluate_model(const NetworkParams& model,
                                        const std::vector<Mat>& references, double delta);

struct SweepRow {
  int n_mem = 0;
  double memory_length = 0.0;  ///< T_M = n_mem * delta
  double mean_error = 0.0;     ///< mean over runs of the time-averaged l2 error
};

using SweepProgress = std::function<void(const SweepRow&)>;

/// Trains one model per memory length and scores it on shared evaluation runs.
std::vector<SweepRow> memory_sweep(const SystemSpec& system, const DataConfig& data,
                                   const std::vector<int>& n_mem_list,
                                   const ModelConfig& model_cfg, const EvalConfig& eval,
                                   std::uint64_t master_seed, const SweepProgress& progress = {});

/// CSV `n_mem,T_M,mean_error`.
void save_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

/// Mean error series of the network rollout and of the homogenized slow system, both
/// against the full slow-fast system, over shared random initial conditions.
struct ReducedComparison {
  ErrorSeries network;
  ErrorSeries homogenized;
};
ReducedComparison compare_reduced_example3(const NetworkParams& model, const SystemSpec& truth,
                                           const SolverConfig& solver, const Domain& domain,
                                           double horizon, int n_runs, std::uint64_t seed);

}  // namespace mzl
