#pragma once

// Data-parallel kernels. Each has an OpenMP implementation and a plain serial reference
// used by the tests; both produce bitwise-identical results for any thread count
// because work is cut into fixed chunks and reduced in chunk order.

#include <span>
#include <vector>

#include "mzl/common.hpp"
#include "mzl/dynamics.hpp"
#include "mzl/net.hpp"

namespace mzl::kernels {

enum class Exec { parallel, serial };

/// Samples per gradient chunk. Fixed so results do not depend on the thread count.
inline constexpr Index kChunk = 32;

/// integrate() for many initial conditions.
std::vector<Mat> integrate_batch(const SystemSpec& spec, const SolverConfig& config,
                                 const std::vector<Vec>& initial, int num_samples,
                                 Exec exec = Exec::parallel);

/// Batched network output for the columns of `inputs`. With `skip` the first d rows of
/// each input are added (the residual map); without it only N is evaluated.
Mat forward_batch(const NetworkParams& params, const Mat& inputs, bool skip = true);

/// Sum of squared errors over the selected columns and its gradient with respect to
/// the parameters (not divided by the row count). `grad` is overwritten.
/// The parallel path batches each chunk through dense products; the serial path
/// evaluates samples one at a time with forward()/backward().
double loss_gradient(const NetworkParams& params, const Mat& inputs, const Mat& targets,
                     std::span<const Index> rows, bool skip, GradientSet& grad,
                     Exec exec = Exec::parallel);

/// Sum of squared errors over every column.
double sum_squared_error(const NetworkParams& params, const Mat& inputs, const Mat& targets,
                         bool skip = true, Exec exec = Exec::parallel);

}  // namespace mzl::kernels
