#include "mzl/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "mzl/kernels.hpp"

namespace mzl {

void TrainConfig::validate(Index dataset_size) const {
  if (!(learning_rate >= 0.0)) throw ContractError("learning_rate must be >= 0");
  if (final_learning_rate < 0.0) throw ContractError("final_learning_rate must be >= 0");
  if (batch_size < 1 || batch_size > dataset_size) {
    throw ContractError("batch_size " + std::to_string(batch_size) + " must lie in [1, J=" +
                        std::to_string(dataset_size) + "]");
  }
  if (epochs < 1) throw ContractError("epochs must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ContractError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ContractError("adam_eps must be positive");
}

double TrainConfig::rate_at(int epoch) const {
  if (final_learning_rate <= 0.0 || epochs == 1 || learning_rate == 0.0) return learning_rate;
  const double frac = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
  return learning_rate * std::pow(final_learning_rate / learning_rate, frac);
}

// ---------------------------------------------------------------------------

Standardization Standardization::identity(int d) {
  return {Vec::Zero(d), Vec::Ones(d), 1.0};
}

Standardization Standardization::from_dataset(const MemoryWindowDataset& ds) {
  ds.validate();
  if (ds.size() == 0) return identity(ds.d);
  const int d = ds.d;
  const Index blocks = ds.n_mem + 1;
  const double count = static_cast<double>(ds.size() * blocks);
  Vec sum = Vec::Zero(d);
  for (Index b = 0; b < blocks; ++b) sum += ds.inputs.middleRows(b * d, d).rowwise().sum();
  const Vec mean = sum / count;
  Vec sq = Vec::Zero(d);
  for (Index b = 0; b < blocks; ++b) {
    sq += (ds.inputs.middleRows(b * d, d).colwise() - mean).rowwise().squaredNorm();
  }
  Standardization s;
  s.mean = mean;
  s.scale = (sq / count).cwiseSqrt();
  for (Index k = 0; k < d; ++k) {
    if (!(s.scale(k) > 0.0)) s.scale(k) = 1.0;
  }
  const Mat increments = ds.targets - ds.inputs.topRows(d);
  const double rms = std::sqrt(increments.squaredNorm() / static_cast<double>(increments.size()));
  s.output_scale = rms > 0.0 ? rms : 1.0;
  return s;
}

namespace {

Vec tile(const Vec& v, Index times) { return v.replicate(times, 1); }

}  // namespace

NetworkParams fold_standardization(const NetworkParams& standardized, const Standardization& s) {
  NetworkParams p = standardized;
  const Index blocks = p.n_mem + 1;
  const Vec inv_scale = tile(s.scale.cwiseInverse(), blocks);
  const Vec shift = tile(s.mean, blocks);
  auto& first = p.layers.front();
  // W~ ((x - mu) / sigma) + b~  ==  (W~ / sigma) x + (b~ - (W~ / sigma) mu)
  first.weight = first.weight * inv_scale.asDiagonal();
  first.bias -= first.weight * shift;
  auto& last = p.layers.back();
  last.weight *= s.output_scale;
  last.bias *= s.output_scale;
  return p;
}

NetworkParams unfold_standardization(const NetworkParams& original, const Standardization& s) {
  NetworkParams p = original;
  const Index blocks = p.n_mem + 1;
  const Vec scale = tile(s.scale, blocks);
  const Vec shift = tile(s.mean, blocks);
  auto& first = p.layers.front();
  first.bias += first.weight * shift;
  first.weight = first.weight * scale.asDiagonal();
  auto& last = p.layers.back();
  last.weight /= s.output_scale;
  last.bias /= s.output_scale;
  return p;
}

double mse_loss(const NetworkParams& params, const MemoryWindowDataset& ds) {
  ds.validate();
  if (ds.d != params.d || ds.n_mem != params.n_mem) {
    throw ContractError("mse_loss: dataset (d=" + std::to_string(ds.d) +
                        ", n_mem=" + std::to_string(ds.n_mem) + ") does not match network (d=" +
                        std::to_string(params.d) + ", n_mem=" + std::to_string(params.n_mem) +
                        ")");
  }
  if (ds.size() == 0) throw ContractError("mse_loss: empty dataset");
  return kernels::sum_squared_error(params, ds.inputs, ds.targets) /
         static_cast<double>(ds.size());
}

namespace {

struct AdamState {
  GradientSet m;
  GradientSet v;
  long long t = 0;
};

void adam_update(NetworkParams& params, const GradientSet& grad, AdamState& state, double lr,
                 const TrainConfig& cfg) {
  ++state.t;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  auto step = [&](auto& theta, const auto& g, auto& m, auto& v) {
    m.array() = b1 * m.array() + (1.0 - b1) * g.array();
    v.array() = b2 * v.array() + (1.0 - b2) * g.array().square();
    theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.adam_eps);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    step(params.layers[l].weight, grad.layers[l].weight, state.m.layers[l].weight,
         state.v.layers[l].weight);
    step(params.layers[l].bias, grad.layers[l].bias, state.m.layers[l].bias,
         state.v.layers[l].bias);
  }
}

}  // namespace

std::pair<NetworkParams, TrainReport> train_model(const NetworkParams& init,
                                                  const MemoryWindowDataset& ds,
                                                  const TrainConfig& cfg,
                                                  const EpochCallback& on_epoch) {
  const auto started = std::chrono::steady_clock::now();
  init.validate();
  ds.validate();
  if (ds.size() == 0) throw ContractError("train_model: empty dataset");
  if (ds.d != init.d || ds.n_mem != init.n_mem) {
    throw ContractError("train_model: dataset shape does not match network");
  }
  cfg.validate(ds.size());

  // Working problem: either the residual map on raw data, or the bare network on
  // standardized windows regressing the scaled increment.
  const Standardization standard =
      cfg.normalize ? Standardization::from_dataset(ds) : Standardization::identity(ds.d);
  const bool skip = !cfg.normalize;
  NetworkParams params = cfg.normalize ? unfold_standardization(init, standard) : init;
  Mat inputs;
  Mat targets;
  if (cfg.normalize) {
    const Index blocks = ds.n_mem + 1;
    inputs = (ds.inputs.colwise() - tile(standard.mean, blocks)).array().colwise() /
             tile(standard.scale, blocks).array();
    targets = (ds.targets - ds.inputs.topRows(ds.d)) / standard.output_scale;
  }
  const Mat& x = cfg.normalize ? inputs : ds.inputs;
  const Mat& y = cfg.normalize ? targets : ds.targets;
  const double loss_scale = standard.output_scale * standard.output_scale;
  const double inv_count = 1.0 / static_cast<double>(ds.size());

  AdamState adam{GradientSet::zeros_like(params), GradientSet::zeros_like(params), 0};
  GradientSet grad = GradientSet::zeros_like(params);
  std::vector<Index> order(static_cast<std::size_t>(ds.size()));
  std::iota(order.begin(), order.end(), Index{0});
  auto rng = make_stream(cfg.seed, "shuffle");

  TrainReport report;
  long long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle_each_epoch) {
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
      }
    }
    const double lr = cfg.rate_at(epoch);
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      const std::span<const Index> rows(order.data() + begin, end - begin);
      const double sse = kernels::loss_gradient(params, x, y, rows, skip, grad);
      ++step;
      if (!std::isfinite(sse)) {
        throw TrainingDiverged("non-finite minibatch loss at step " + std::to_string(step) +
                                   " (epoch " + std::to_string(epoch) + ")",
                               step);
      }
      const double inv_batch = 1.0 / static_cast<double>(rows.size());
      for (auto& layer : grad.layers) {
        layer.weight *= inv_batch;
        layer.bias *= inv_batch;
      }
      adam_update(params, grad, adam, lr, cfg);
    }
    const double loss = kernels::sum_squared_error(params, x, y, skip) * inv_count * loss_scale;
    if (!std::isfinite(loss)) {
      throw TrainingDiverged("non-finite loss after step " + std::to_string(step), step);
    }
    report.loss_per_epoch.push_back(loss);
    if (on_epoch) on_epoch(epoch, loss);
  }

  NetworkParams trained = cfg.normalize ? fold_standardization(params, standard) : params;
  report.final_loss = mse_loss(trained, ds);
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(trained), std::move(report)};
}

void save_training_log(const TrainReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,loss\n";
  for (std::size_t e = 0; e < report.loss_per_epoch.size(); ++e) {
    out << e << ',' << format_double(report.loss_per_epoch[e]) << '\n';
  }
}

}  // namespace mzl
