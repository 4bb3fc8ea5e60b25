#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mzl/data.hpp"
#include "mzl/net.hpp"

namespace mzl {

struct TrainConfig {
  double learning_rate = 1e-3;
  /// When positive, the step size decays geometrically from learning_rate to this value
  /// over the epochs; otherwise it stays constant.
  double final_learning_rate = 0.0;
  int batch_size = 64;
  int epochs = 100;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  bool shuffle_each_epoch = true;
  /// Optimise in standardized coordinates (see Standardization). The returned parameters
  /// are always expressed in the original coordinates.
  bool normalize = false;

  void validate(Index dataset_size) const;
  double rate_at(int epoch) const;
};

struct TrainReport {
  std::vector<double> loss_per_epoch;
  double final_loss = 0.0;
  double wall_time = 0.0;  ///< seconds
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, long long step)
      : std::runtime_error(what), step_(step) {}
  long long step() const { return step_; }

 private:
  long long step_;
};

/// Affine change of coordinates used for training: each observed component is centred
/// and scaled in the input windows, and the network increment is divided by one scalar.
/// A scalar output scale keeps the standardized loss proportional to the original one.
struct Standardization {
  Vec mean;      ///< per observed component
  Vec scale;     ///< per observed component
  double output_scale = 1.0;

  static Standardization identity(int d);
  static Standardization from_dataset(const MemoryWindowDataset& ds);
};

/// Maps parameters acting on standardized coordinates to the equivalent residual network
/// on original coordinates, and back.
NetworkParams fold_standardization(const NetworkParams& standardized, const Standardization& s);
NetworkParams unfold_standardization(const NetworkParams& original, const Standardization& s);

/// (1/J) * sum_j |forward(params, Z_j) - z_j|^2.
double mse_loss(const NetworkParams& params, const MemoryWindowDataset& ds);

using EpochCallback = std::function<void(int epoch, double loss)>;

/// Minibatch Adam on mse_loss. Deterministic for a fixed cfg.seed.
std::pair<NetworkParams, TrainReport> train_model(const NetworkParams& init,
                                                  const MemoryWindowDataset& ds,
                                                  const TrainConfig& cfg,
                                                  const EpochCallback& on_epoch = {});

/// CSV `epoch,loss`.
void save_training_log(const TrainReport& report, const std::filesystem::path& path);

}  // namespace mzl
