#include "mzl/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "mzl/data.hpp"
#include "mzl/kernels.hpp"
#include "mzl/net.hpp"
#include "mzl/rollout.hpp"
#include "mzl/train.hpp"

namespace mzl::pipeline {

Paths Paths::in(const fs::path& dir) {
  return {dir / "trajectories.txt", dir / "dataset.txt",  dir / "model.txt",
          dir / "train_log.csv",    dir / "rollout.csv",  dir / "sweep.csv",
          dir / "compare_reduced.csv", dir / "config.json"};
}

namespace {

Paths prepare(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  auto paths = Paths::in(cfg.out_dir);
  save_config(cfg, paths.config);
  return paths;
}

}  // namespace

fs::path run_generate(const ExperimentConfig& cfg, std::ostream& log) {
  const auto paths = prepare(cfg);
  const auto spec = cfg.make_system_spec();
  const auto data = cfg.data_config();
  const auto seeds = StageSeeds::from_master(cfg.seed);
  const int length = data.length_for(cfg.n_mem);
  const auto trajs =
      generate_trajectories(spec, data.solver, data.domain, data.n_traj, length, seeds.data);
  save_trajectories(trajs, paths.trajectories);
  log << "generated N_T=" << trajs.trajectories.size() << " trajectories of K=" << length
      << " samples, delta=" << trajs.delta << " (" << spec.name << ", d=" << spec.d << ")\n";
  return paths.trajectories;
}

fs::path run_build_dataset(const ExperimentConfig& cfg, const fs::path& trajectories,
                           std::ostream& log) {
  const auto paths = prepare(cfg);
  const auto trajs = load_trajectories(trajectories);
  auto selection = cfg.data_config().selection;
  selection.seed = StageSeeds::from_master(cfg.seed).select;
  const auto ds = build_dataset(trajs, cfg.n_mem, selection);
  save_dataset(ds, paths.dataset);
  log << "dataset: J=" << ds.size() << " windows, n_mem=" << ds.n_mem
      << ", input width D=" << ds.input_width() << '\n';
  return paths.dataset;
}

fs::path run_train(const ExperimentConfig& cfg, const fs::path& dataset, std::ostream& log) {
  const auto paths = prepare(cfg);
  const auto ds = load_dataset(dataset);
  if (ds.n_mem != cfg.n_mem || ds.d != cfg.make_system_spec().d) {
    throw ContractError("dataset (d=" + std::to_string(ds.d) + ", n_mem=" +
                        std::to_string(ds.n_mem) + ") does not match the config");
  }
  const auto seeds = StageSeeds::from_master(cfg.seed);
  NetworkParams init = init_params(ds.d, ds.n_mem, cfg.hidden, seeds.init);
  const auto n_params = count_params(init);
  if (static_cast<std::size_t>(ds.size()) < 5 * n_params) {
    log << "warning: J=" << ds.size() << " is below 5x the parameter count (" << n_params
        << "); consider more trajectories\n";
  }
  TrainConfig train = cfg.train;
  train.seed = seeds.train;
  if (train.normalize) init = fold_standardization(init, Standardization::from_dataset(ds));
  const int every = std::max(1, train.epochs / 10);
  auto [model, report] = train_model(init, ds, train, [&](int epoch, double loss) {
    if (epoch % every == 0 || epoch + 1 == train.epochs) {
      log << "epoch " << epoch << " loss " << loss << '\n';
    }
  });
  save_model(model, paths.model);
  save_training_log(report, paths.training_log);
  log << "trained " << n_params << " parameters, final loss " << report.final_loss << " in "
      << report.wall_time << " s\n";
  return paths.model;
}

fs::path run_predict(const ExperimentConfig& cfg, const fs::path& model_path, int steps,
                     const std::optional<Vec>& x0, std::ostream& log) {
  const auto paths = prepare(cfg);
  const auto model = load_model(model_path);
  const auto spec = cfg.make_system_spec();
  if (model.d != spec.d) throw ContractError("model dimension does not match the system");
  const int window = model.n_mem + 1;
  if (steps < 0) throw ContractError("steps must be >= 0");

  Vec start;
  if (x0) {
    start = *x0;
  } else {
    start = evaluation_initial_conditions(cfg.resolved_domain(), 1,
                                          StageSeeds::from_master(cfg.seed).eval)
                .front();
  }
  if (start.size() != spec.n) {
    throw ContractError("initial state has dimension " + std::to_string(start.size()) +
                        ", system needs " + std::to_string(spec.n));
  }
  const Mat reference = integrate(spec, cfg.solver(), start, window - 1 + steps).topRows(spec.d);
  const auto pred = rollout(model, reference.leftCols(window), steps, cfg.delta);
  save_rollout_csv(pred, reference, paths.rollout);
  const auto errors = error_series(pred, reference);
  log << "rollout: " << steps << " steps to t=" << (window - 1 + steps) * cfg.delta
      << ", final error " << errors.errors.back() << ", mean error "
      << errors.time_average(static_cast<std::size_t>(window)) << '\n';
  if (pred.diverged_at) log << "warning: rollout diverged at index " << *pred.diverged_at << '\n';
  return paths.rollout;
}

fs::path run_sweep(const ExperimentConfig& cfg, const std::vector<int>& n_mem_list,
                   std::ostream& log) {
  const auto paths = prepare(cfg);
  const auto rows = memory_sweep(
      cfg.make_system_spec(), cfg.data_config(), n_mem_list, cfg.model_config(),
      EvalConfig{cfg.eval_horizon, cfg.n_eval_runs}, cfg.seed, [&](const SweepRow& row) {
        log << "n_mem=" << row.n_mem << " T_M=" << row.memory_length
            << " mean_error=" << row.mean_error << std::endl;
      });
  save_sweep_csv(rows, paths.sweep);
  return paths.sweep;
}

fs::path run_compare_reduced(const ExperimentConfig& cfg, const fs::path& model_path,
                             std::ostream& log) {
  const auto paths = prepare(cfg);
  if (cfg.system != "example3") throw ContractError("compare-reduced needs system example3");
  const auto model = load_model(model_path);
  const auto cmp =
      compare_reduced_example3(model, cfg.make_system_spec(), cfg.solver(), cfg.resolved_domain(),
                               cfg.eval_horizon, cfg.n_eval_runs,
                               StageSeeds::from_master(cfg.seed).eval);
  std::ofstream out(paths.comparison);
  if (!out) throw std::runtime_error("cannot write " + paths.comparison.string());
  out << "t,nn_err,reduced_err\n";
  for (std::size_t k = 0; k < cmp.network.errors.size(); ++k) {
    out << format_double(cmp.network.times[k]) << ',' << format_double(cmp.network.errors[k])
        << ',' << format_double(cmp.homogenized.errors[k]) << '\n';
  }
  log << "mean error over [0," << cfg.eval_horizon << "]: network "
      << cmp.network.time_average() << ", homogenized " << cmp.homogenized.time_average()
      << '\n';
  return paths.comparison;
}

bool run_oracle_check(std::uint64_t seed, std::ostream& log) {
  struct Case {
    const char* name;
    LinearMZOracle oracle;
    double box;
  };
  const Case cases[] = {{"example1(alpha=2)", example1_oracle(2.0), 2.0},
                        {"example4", example4_oracle(), 2.0}};
  bool ok = true;
  auto rng = make_stream(seed, "oracle-check");
  for (const auto& c : cases) {
    double worst = 0.0;
    const Mat a = c.oracle.assemble();
    for (int trial = 0; trial < 20; ++trial) {
      Vec x0(a.rows());
      for (Index i = 0; i < x0.size(); ++i) x0(i) = uniform(rng, -c.box, c.box);
      const double t = uniform(rng, 0.1, 2.0);
      const auto parts = mz_decomposition(c.oracle, x0, t);
      const double h = 1e-4;
      const Vec fd = (exact_linear_solution(c.oracle, x0, t + h) -
                      exact_linear_solution(c.oracle, x0, t - h))
                         .head(c.oracle.d()) /
                     (2.0 * h);
      worst = std::max(worst, (parts.sum() - fd).cwiseAbs().maxCoeff());
    }
    const bool pass = worst <= 1e-4;
    ok = ok && pass;
    log << c.name << ": max |markov + memory + noise - dz/dt| = " << worst
        << (pass ? "  ok" : "  FAIL") << '\n';
  }
  return ok;
}

void run_all(const ExperimentConfig& cfg, int predict_steps, std::ostream& log) {
  const auto trajs = run_generate(cfg, log);
  const auto ds = run_build_dataset(cfg, trajs, log);
  const auto model = run_train(cfg, ds, log);
  run_predict(cfg, model, predict_steps, std::nullopt, log);
}

}  // namespace mzl::pipeline
