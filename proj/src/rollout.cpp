#include "mzl/rollout.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "mzl/kernels.hpp"

namespace mzl {

RolloutResult rollout(const NetworkParams& model, const Mat& seeds, int steps, double delta) {
  model.validate();
  const int d = model.d;
  const int window = model.n_mem + 1;
  if (seeds.rows() != d || seeds.cols() != window) {
    throw ContractError("rollout needs n_mem+1 = " + std::to_string(window) +
                        " seed states of dimension " + std::to_string(d) + ", got " +
                        std::to_string(seeds.cols()) + " of dimension " +
                        std::to_string(seeds.rows()));
  }
  if (steps < 0) throw ContractError("rollout: steps must be >= 0");

  RolloutResult result;
  result.delta = delta;
  result.seed_len = window;
  result.states.resize(d, window + steps);
  result.states.leftCols(window) = seeds;
  Vec stack(model.input_width());
  for (int n = window - 1; n < window - 1 + steps; ++n) {
    for (int k = 0; k < window; ++k) stack.segment(static_cast<Index>(k) * d, d) = result.states.col(n - k);
    const Vec next = forward(model, stack);
    if (!next.allFinite()) {
      result.diverged_at = n + 1;
      result.states.conservativeResize(Eigen::NoChange, n + 1);
      break;
    }
    result.states.col(n + 1) = next;
  }
  return result;
}

double ErrorSeries::time_average(std::size_t first) const {
  if (first >= errors.size()) throw ContractError("time_average: empty range");
  double sum = 0.0;
  for (std::size_t k = first; k < errors.size(); ++k) sum += errors[k];
  return sum / static_cast<double>(errors.size() - first);
}

ErrorSeries error_series(const RolloutResult& pred, const Mat& reference) {
  if (reference.rows() != pred.states.rows()) {
    throw ContractError("error_series: dimension mismatch");
  }
  const Index len = reference.cols();
  const bool complete = pred.states.cols() == len;
  const bool truncated = pred.diverged_at && pred.states.cols() < len;
  if (!complete && !truncated) {
    throw ContractError("error_series: prediction has " + std::to_string(pred.states.cols()) +
                        " states, reference has " + std::to_string(len));
  }
  ErrorSeries s;
  s.times.resize(static_cast<std::size_t>(len));
  s.errors.resize(static_cast<std::size_t>(len));
  for (Index k = 0; k < len; ++k) {
    s.times[static_cast<std::size_t>(k)] = static_cast<double>(k) * pred.delta;
    s.errors[static_cast<std::size_t>(k)] =
        k < pred.states.cols() ? (pred.states.col(k) - reference.col(k)).norm()
                               : std::numeric_limits<double>::infinity();
  }
  return s;
}

ErrorSeries mean_series(const std::vector<ErrorSeries>& runs) {
  if (runs.empty()) throw ContractError("mean_series: no runs");
  ErrorSeries out = runs.front();
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].errors.size() != out.errors.size()) {
      throw ContractError("mean_series: runs have different lengths");
    }
    for (std::size_t k = 0; k < out.errors.size(); ++k) out.errors[k] += runs[r].errors[k];
  }
  for (auto& e : out.errors) e /= static_cast<double>(runs.size());
  return out;
}

void save_rollout_csv(const RolloutResult& pred, const Mat& reference,
                      const std::filesystem::path& path) {
  const auto errors = error_series(pred, reference);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const Index d = reference.rows();
  out << "t";
  for (Index i = 1; i <= d; ++i) out << ",z_" << i;
  for (Index i = 1; i <= d; ++i) out << ",ref_" << i;
  out << ",err\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Index k = 0; k < reference.cols(); ++k) {
    out << format_double(errors.times[static_cast<std::size_t>(k)]);
    for (Index i = 0; i < d; ++i) {
      out << ',' << format_double(k < pred.states.cols() ? pred.states(i, k) : nan);
    }
    for (Index i = 0; i < d; ++i) out << ',' << format_double(reference(i, k));
    out << ',' << format_double(errors.errors[static_cast<std::size_t>(k)]) << '\n';
  }
}

Mat euler_damz(const LinearMZOracle& oracle, const Mat& seeds, int steps, double delta,
               int n_mem) {
  oracle.validate();
  const int d = oracle.d();
  if (seeds.rows() != d || seeds.cols() < 1) throw ContractError("euler_damz: bad seed shape");
  if (n_mem >= 0 && seeds.cols() != n_mem + 1) {
    throw ContractError("euler_damz: need n_mem+1 = " + std::to_string(n_mem + 1) + " seeds");
  }
  if (steps < 0 || !(delta > 0.0)) throw ContractError("euler_damz: bad steps/delta");

  const Index seed_len = seeds.cols();
  Mat z(d, seed_len + steps);
  z.leftCols(seed_len) = seeds;
  for (Index n = seed_len - 1; n < seed_len - 1 + steps; ++n) {
    const Index window = n_mem >= 0 ? std::min<Index>(n_mem, n) : n;
    const Mat history = z.middleCols(n - window, window + 1);
    const Vec rate = mz_markov_term(oracle, z.col(n)) + mz_memory_integral(oracle, history, delta);
    z.col(n + 1) = z.col(n) + delta * rate;
  }
  return z;
}

// ---------------------------------------------------------------------------

StageSeeds StageSeeds::from_master(std::uint64_t master) {
  return {derive_seed(master, "data"), derive_seed(master, "select"),
          derive_seed(master, "init"), derive_seed(master, "train"),
          derive_seed(master, "eval")};
}

FitResult fit_model(const SystemSpec& system, const DataConfig& data, int n_mem,
                    const ModelConfig& model_cfg, std::uint64_t master_seed,
                    const EpochCallback& on_epoch) {
  const auto seeds = StageSeeds::from_master(master_seed);
  const auto trajs = generate_trajectories(system, data.solver, data.domain, data.n_traj,
                                           data.length_for(n_mem), seeds.data);
  SelectionStrategy selection = data.selection;
  selection.seed = seeds.select;
  const auto ds = build_dataset(trajs, n_mem, selection);
  if (ds.size() == 0) throw ContractError("fit_model: no training windows (trajectories too short)");

  NetworkParams init = init_params(system.d, n_mem, model_cfg.hidden, seeds.init);
  TrainConfig train = model_cfg.train;
  train.seed = seeds.train;
  if (train.normalize) {
    init = fold_standardization(init, Standardization::from_dataset(ds));
  }
  auto [model, report] = train_model(init, ds, train, on_epoch);
  return {std::move(model), std::move(report), ds.size()};
}

std::vector<Vec> evaluation_initial_conditions(const Domain& domain, int n_runs,
                                               std::uint64_t seed) {
  return sample_initial_conditions(domain, n_runs, derive_seed(seed, "evaluation-runs"));
}

std::vector<Mat> reference_trajectories(const SystemSpec& system, const SolverConfig& solver,
                                        const Domain& domain, double horizon, int n_runs,
                                        std::uint64_t seed) {
  const int samples = static_cast<int>(std::lround(horizon / solver.delta));
  if (samples < 1) throw ContractError("reference_trajectories: horizon shorter than delta");
  const auto initial = evaluation_initial_conditions(domain, n_runs, seed);
  auto full = kernels::integrate_batch(system, solver, initial, samples);
  std::vector<Mat> out;
  out.reserve(full.size());
  for (auto& states : full) out.push_back(states.topRows(system.d));
  return out;
}

std::vector<ErrorSeries> evaluate_model(const NetworkParams& model,
                                        const std::vector<Mat>& references, double delta) {
  const int window = model.n_mem + 1;
  std::vector<ErrorSeries> out(references.size());
  const auto count = static_cast<std::ptrdiff_t>(references.size());
  for (const auto& ref : references) {
    if (ref.cols() <= window) throw ContractError("evaluate_model: horizon shorter than memory window");
  }
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t r = 0; r < count; ++r) {
    const auto& ref = references[static_cast<std::size_t>(r)];
    const auto pred = rollout(model, ref.leftCols(window), static_cast<int>(ref.cols()) - window, delta);
    out[static_cast<std::size_t>(r)] = error_series(pred, ref);
  }
  return out;
}

std::vector<SweepRow> memory_sweep(const SystemSpec& system, const DataConfig& data,
                                   const std::vector<int>& n_mem_list,
                                   const ModelConfig& model_cfg, const EvalConfig& eval,
                                   std::uint64_t master_seed, const SweepProgress& progress) {
  if (n_mem_list.empty()) throw ContractError("memory_sweep: empty n_mem list");
  for (std::size_t i = 0; i < n_mem_list.size(); ++i) {
    if (n_mem_list[i] < 0 || (i > 0 && n_mem_list[i] <= n_mem_list[i - 1])) {
      throw ContractError("memory_sweep: n_mem list must be non-negative and ascending");
    }
  }
  const auto seeds = StageSeeds::from_master(master_seed);
  const auto references = reference_trajectories(system, data.solver, data.domain, eval.horizon,
                                                  eval.n_runs, seeds.eval);
  std::vector<SweepRow> rows;
  for (const int n_mem : n_mem_list) {
    const auto fit = fit_model(system, data, n_mem, model_cfg, master_seed);
    const auto runs = evaluate_model(fit.model, references, data.solver.delta);
    double total = 0.0;
    for (const auto& run : runs) total += run.time_average(static_cast<std::size_t>(n_mem + 1));
    SweepRow row{n_mem, n_mem * data.solver.delta, total / static_cast<double>(runs.size())};
    if (progress) progress(row);
    rows.push_back(row);
  }
  return rows;
}

void save_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "n_mem,T_M,mean_error\n";
  for (const auto& r : rows) {
    out << r.n_mem << ',' << format_double(r.memory_length) << ',' << format_double(r.mean_error)
        << '\n';
  }
}

ReducedComparison compare_reduced_example3(const NetworkParams& model, const SystemSpec& truth,
                                           const SolverConfig& solver, const Domain& domain,
                                           double horizon, int n_runs, std::uint64_t seed) {
  if (truth.d != 3 || model.d != 3) throw ContractError("compare_reduced_example3: needs d = 3");
  const int samples = static_cast<int>(std::lround(horizon / solver.delta));
  const auto initial = evaluation_initial_conditions(domain, n_runs, seed);
  const auto full = kernels::integrate_batch(truth, solver, initial, samples);

  const SystemSpec reduced = make_homogenized_system();
  std::vector<Vec> slow_initial;
  for (const auto& x0 : initial) slow_initial.push_back(x0.head(3));
  const auto homogenized = kernels::integrate_batch(reduced, solver, slow_initial, samples);

  std::vector<Mat> references;
  std::vector<ErrorSeries> base_runs;
  for (std::size_t r = 0; r < full.size(); ++r) {
    references.push_back(full[r].topRows(3));
    RolloutResult as_prediction{solver.delta, homogenized[r], 0, std::nullopt};
    base_runs.push_back(error_series(as_prediction, references.back()));
  }
  const auto nn_runs = evaluate_model(model, references, solver.delta);
  return {mean_series(nn_runs), mean_series(base_runs)};
}

}  // namespace mzl
