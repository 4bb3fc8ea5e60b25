#include "mzl/kernels.hpp"

#include <exception>
#include <optional>

namespace mzl::kernels {

std::vector<Mat> integrate_batch(const SystemSpec& spec, const SolverConfig& config,
                                 const std::vector<Vec>& initial, int num_samples, Exec exec) {
  const auto count = static_cast<std::ptrdiff_t>(initial.size());
  std::vector<Mat> out(initial.size());
  if (exec == Exec::serial) {
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      out[static_cast<std::size_t>(i)] =
          integrate(spec, config, initial[static_cast<std::size_t>(i)], num_samples);
    }
    return out;
  }

  // Exceptions cannot cross the parallel region; keep the lowest failing index.
  std::vector<std::exception_ptr> errors(initial.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = integrate(spec, config, initial[k], num_samples);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const IntegrationError& e) {
      throw IntegrationError("initial condition " + std::to_string(k) + ": " + e.what(), e.sample_index());
    }
  }
  return out;
}

namespace {

struct ChunkForward {
  std::vector<Mat> acts;  // acts[0] = inputs, acts[l] = tanh activations, back() = affine output
};

ChunkForward chunk_forward(const NetworkParams& params, Mat inputs) {
  ChunkForward f;
  f.acts.reserve(params.layers.size() + 1);
  f.acts.push_back(std::move(inputs));
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Mat pre = params.layers[l].weight * f.acts.back();
    pre.colwise() += params.layers[l].bias;
    if (l < last) pre = pre.array().tanh().matrix();
    f.acts.push_back(std::move(pre));
  }
  return f;
}

Mat gather(const Mat& source, std::span<const Index> rows, Index begin, Index end) {
  Mat out(source.rows(), end - begin);
  for (Index j = begin; j < end; ++j) out.col(j - begin) = source.col(rows[static_cast<std::size_t>(j)]);
  return out;
}

void check_shapes(const NetworkParams& params, const Mat& inputs, const Mat& targets) {
  if (inputs.rows() != params.input_width() || targets.rows() != params.d ||
      inputs.cols() != targets.cols()) {
    throw ContractError("dataset shape (" + std::to_string(inputs.rows()) + ", " +
                        std::to_string(targets.rows()) + ") does not match network (" +
                        std::to_string(params.input_width()) + ", " + std::to_string(params.d) +
                        ")");
  }
}

// SSE and its parameter gradient over one chunk of columns.
double chunk_loss_gradient(const NetworkParams& params, const Mat& x, const Mat& y, bool skip,
                           GradientSet& grad) {
  auto f = chunk_forward(params, x);
  Mat residual = f.acts.back() - y;
  if (skip) residual += x.topRows(params.d);
  const double sse = residual.squaredNorm();

  Mat delta = 2.0 * residual;
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    grad.layers[l].weight.noalias() = delta * f.acts[l].transpose();
    grad.layers[l].bias = delta.rowwise().sum();
    if (l == 0) break;
    Mat upstream = params.layers[l].weight.transpose() * delta;
    upstream.array() *= 1.0 - f.acts[l].array().square();
    delta = std::move(upstream);
  }
  return sse;
}

}  // namespace

Mat forward_batch(const NetworkParams& params, const Mat& inputs, bool skip) {
  if (inputs.rows() != params.input_width()) {
    throw ContractError("forward_batch: input rows " + std::to_string(inputs.rows()) +
                        " != " + std::to_string(params.input_width()));
  }
  auto f = chunk_forward(params, inputs);
  Mat out = std::move(f.acts.back());
  if (skip) out += inputs.topRows(params.d);
  return out;
}

double loss_gradient(const NetworkParams& params, const Mat& inputs, const Mat& targets,
                     std::span<const Index> rows, bool skip, GradientSet& grad, Exec exec) {
  check_shapes(params, inputs, targets);
  if (grad.layers.size() != params.layers.size()) grad = GradientSet::zeros_like(params);
  grad.set_zero();
  const auto count = static_cast<Index>(rows.size());

  if (exec == Exec::serial) {
    double sse = 0.0;
    for (Index j = 0; j < count; ++j) {
      const Index row = rows[static_cast<std::size_t>(j)];
      const Vec x = inputs.col(row);
      Vec out = skip ? forward(params, x) : network_output(params, x);
      const Vec residual = out - targets.col(row);
      sse += residual.squaredNorm();
      grad += backward(params, x, 2.0 * residual).first;
    }
    return sse;
  }

  const Index chunks = (count + kChunk - 1) / kChunk;
  std::vector<GradientSet> partial(static_cast<std::size_t>(chunks));
  std::vector<double> partial_sse(static_cast<std::size_t>(chunks), 0.0);
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < chunks; ++c) {
    const Index begin = c * kChunk;
    const Index end = std::min(count, begin + kChunk);
    auto& g = partial[static_cast<std::size_t>(c)];
    g = GradientSet::zeros_like(params);
    partial_sse[static_cast<std::size_t>(c)] = chunk_loss_gradient(
        params, gather(inputs, rows, begin, end), gather(targets, rows, begin, end), skip, g);
  }
  double sse = 0.0;
  for (Index c = 0; c < chunks; ++c) {
    grad += partial[static_cast<std::size_t>(c)];
    sse += partial_sse[static_cast<std::size_t>(c)];
  }
  return sse;
}

double sum_squared_error(const NetworkParams& params, const Mat& inputs, const Mat& targets,
                         bool skip, Exec exec) {
  check_shapes(params, inputs, targets);
  const Index count = inputs.cols();
  if (exec == Exec::serial) {
    double sse = 0.0;
    for (Index j = 0; j < count; ++j) {
      const Vec x = inputs.col(j);
      const Vec out = skip ? forward(params, x) : network_output(params, x);
      sse += (out - targets.col(j)).squaredNorm();
    }
    return sse;
  }

  // Larger chunks here: there is no gradient to keep per chunk.
  constexpr Index kEvalChunk = 8 * kChunk;
  const Index chunks = (count + kEvalChunk - 1) / kEvalChunk;
  std::vector<double> partial(static_cast<std::size_t>(chunks), 0.0);
#pragma omp parallel for schedule(static)
  for (Index c = 0; c < chunks; ++c) {
    const Index begin = c * kEvalChunk;
    const Index width = std::min(count, begin + kEvalChunk) - begin;
    const Mat x = inputs.middleCols(begin, width);
    partial[static_cast<std::size_t>(c)] =
        (forward_batch(params, x, skip) - targets.middleCols(begin, width)).squaredNorm();
  }
  double sse = 0.0;
  for (const double v : partial) sse += v;
  return sse;
}

}  // namespace mzl::kernels
