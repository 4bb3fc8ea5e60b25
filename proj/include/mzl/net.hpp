#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "mzl/common.hpp"

namespace mzl {

struct Layer {
  Mat weight;  ///< fan_out x fan_in
  Vec bias;    ///< fan_out
};

/// Parameters of the memory-residual network
///   z_out = z_n + N(z_n, z_{n-1}, ..., z_{n-n_mem})
/// where N is a fully connected net with tanh hidden layers and an affine output layer.
struct NetworkParams {
  int d = 0;
  int n_mem = 0;
  std::vector<int> hidden;
  std::vector<Layer> layers;  ///< hidden.size() + 1 entries

  int input_width() const { return d * (n_mem + 1); }
  void validate() const;
};

/// Same layout as NetworkParams::layers; holds derivatives.
struct GradientSet {
  std::vector<Layer> layers;

  static GradientSet zeros_like(const NetworkParams& params);
  void set_zero();
  GradientSet& operator+=(const GradientSet& other);
};

NetworkParams init_params(int d, int n_mem, const std::vector<int>& hidden, std::uint64_t seed);

/// Output of the fully connected part N alone.
Vec network_output(const NetworkParams& params, const Vec& z_stack);

/// Full residual map: first d entries of z_stack plus N(z_stack).
Vec forward(const NetworkParams& params, const Vec& z_stack);

/// Reverse-mode gradients of dot(forward(params, z_stack), output_grad) with respect to
/// every parameter and to the input stack.
std::pair<GradientSet, Vec> backward(const NetworkParams& params, const Vec& z_stack,
                                     const Vec& output_grad);

std::size_t count_params(const NetworkParams& params);

/// Checkpoint text format: header `d=<d> n_mem=<n> layers=<w1,...>` then, per layer, a `W`
/// line followed by the weight rows and a `B` line carrying the bias values.
void save_model(const NetworkParams& params, const std::filesystem::path& path);
NetworkParams load_model(const std::filesystem::path& path);

}  // namespace mzl
