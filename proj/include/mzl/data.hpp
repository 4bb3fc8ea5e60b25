#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mzl/common.hpp"
#include "mzl/dynamics.hpp"

namespace mzl {

/// Observed-variable trajectories sampled every `delta`. Each trajectory is a d x K matrix
/// whose columns are consecutive samples.
struct TrajectorySet {
  int d = 0;
  double delta = 0.0;
  std::vector<Mat> trajectories;

  void validate() const;
};

/// Input/target pairs for one-step training. Column j of `inputs` is the stacked window
/// (z_n, z_{n-1}, ..., z_{n-n_mem}), newest first; column j of `targets` is z_{n+1}.
struct MemoryWindowDataset {
  int d = 0;
  int n_mem = 0;
  Mat inputs;   ///< d*(n_mem+1) x J
  Mat targets;  ///< d x J

  Index size() const { return targets.cols(); }
  int input_width() const { return d * (n_mem + 1); }
  void validate() const;
};

enum class SelectionKind { deterministic, random };

struct SelectionStrategy {
  SelectionKind kind = SelectionKind::deterministic;
  int per_trajectory = 1;  ///< J0, random only
  std::uint64_t seed = 0;  ///< random only

  void validate() const;
};

std::vector<Vec> sample_initial_conditions(const Domain& domain, int count, std::uint64_t seed);

TrajectorySet generate_trajectories(const SystemSpec& spec, const SolverConfig& config,
                                    const Domain& domain, int n_traj, int traj_len,
                                    std::uint64_t seed);

/// Window start positions (0-based) that build_dataset would use for trajectory `index`
/// of length `length`. Empty when the trajectory is too short to hold one window.
std::vector<int> window_starts(int length, int n_mem, const SelectionStrategy& strategy,
                               std::size_t index);

MemoryWindowDataset build_dataset(const TrajectorySet& trajs, int n_mem,
                                  const SelectionStrategy& strategy);

void save_dataset(const MemoryWindowDataset& ds, const std::filesystem::path& path);
MemoryWindowDataset load_dataset(const std::filesystem::path& path);

void save_trajectories(const TrajectorySet& trajs, const std::filesystem::path& path);
TrajectorySet load_trajectories(const std::filesystem::path& path);

}  // namespace mzl
