// mzl: learn memory-dependent models of partially observed dynamical systems.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mzl/config.hpp"
#include "mzl/pipeline.hpp"

namespace {

struct Options {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  int steps = 1000;
  std::vector<int> n_mem;
  std::string input;
  std::string model;
  std::vector<double> x0;
};

mzl::ExperimentConfig resolve(const Options& opt) {
  mzl::ExperimentConfig cfg;
  if (!opt.config_path.empty()) {
    cfg = mzl::load_config(opt.config_path);
  } else if (!opt.preset.empty()) {
    cfg = mzl::preset(opt.preset);
  } else {
    throw mzl::ContractError("pass --config <path> or --preset <name>");
  }
  if (opt.seed) cfg.seed = *opt.seed;
  if (!opt.out.empty()) cfg.out_dir = opt.out;
  return cfg;
}

void add_common(CLI::App* cmd, Options& opt) {
  auto* config = cmd->add_option("--config", opt.config_path, "experiment config (JSON)");
  auto* preset = cmd->add_option("--preset", opt.preset, "built-in preset name");
  config->excludes(preset);
  cmd->add_option("--seed", opt.seed, "master seed (overrides the config)");
  cmd->add_option("--out", opt.out, "output directory (overrides the config)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memory-window flow-map learning for partially observed systems"};
  app.require_subcommand(1);
  Options opt;

  auto* generate = app.add_subcommand("generate", "integrate the truth system and save trajectories");
  add_common(generate, opt);

  auto* build = app.add_subcommand("build-dataset", "cut trajectories into memory windows");
  add_common(build, opt);
  build->add_option("--input", opt.input, "trajectory file (default <out>/trajectories.txt)");
  build->add_option("--n-mem", opt.n_mem, "memory steps")->delimiter(',');

  auto* train = app.add_subcommand("train", "train the memory-residual network");
  add_common(train, opt);
  train->add_option("--input", opt.input, "dataset file (default <out>/dataset.txt)");
  train->add_option("--n-mem", opt.n_mem, "memory steps")->delimiter(',');

  auto* predict = app.add_subcommand("predict", "roll a trained model forward");
  add_common(predict, opt);
  predict->add_option("--model", opt.model, "checkpoint (default <out>/model.txt)");
  predict->add_option("--steps", opt.steps, "prediction steps")->check(CLI::NonNegativeNumber);
  predict->add_option("--x0", opt.x0, "full initial state for the reference run")->delimiter(',');

  auto* sweep = app.add_subcommand("sweep", "train and score one model per memory length");
  add_common(sweep, opt);
  sweep->add_option("--n-mem", opt.n_mem, "comma-separated memory steps")->delimiter(',');

  auto* compare = app.add_subcommand("compare-reduced", "network vs homogenized system (example3)");
  add_common(compare, opt);
  compare->add_option("--model", opt.model, "checkpoint (default <out>/model.txt)");

  auto* run = app.add_subcommand("run", "generate, build-dataset, train and predict in one go");
  add_common(run, opt);
  run->add_option("--steps", opt.steps, "prediction steps")->check(CLI::NonNegativeNumber);
  run->add_option("--n-mem", opt.n_mem, "memory steps")->delimiter(',');

  std::uint64_t oracle_seed = 7;
  auto* oracle = app.add_subcommand("oracle-check", "verify the linear Mori-Zwanzig identity");
  oracle->add_option("--seed", oracle_seed, "seed for the random test states");

  auto* presets = app.add_subcommand("presets", "list presets or print one as JSON");
  presets->add_option("--preset", opt.preset, "preset to print");

  CLI11_PARSE(app, argc, argv);

  try {
    if (oracle->parsed()) return mzl::pipeline::run_oracle_check(oracle_seed, std::cout) ? 0 : 1;
    if (presets->parsed()) {
      if (opt.preset.empty()) {
        for (const auto& name : mzl::preset_names()) std::cout << name << '\n';
      } else {
        std::cout << mzl::config_to_json_text(mzl::preset(opt.preset));
      }
      return 0;
    }

    auto cfg = resolve(opt);
    const bool is_sweep = sweep->parsed();
    if (!is_sweep && !opt.n_mem.empty()) {
      if (opt.n_mem.size() != 1) throw mzl::ContractError("--n-mem takes one value here");
      cfg.n_mem = opt.n_mem.front();
    }
    const auto paths = mzl::pipeline::Paths::in(cfg.out_dir);

    if (generate->parsed()) {
      mzl::pipeline::run_generate(cfg, std::cout);
    } else if (build->parsed()) {
      mzl::pipeline::run_build_dataset(cfg, opt.input.empty() ? paths.trajectories : std::filesystem::path(opt.input),
                                       std::cout);
    } else if (train->parsed()) {
      mzl::pipeline::run_train(cfg, opt.input.empty() ? paths.dataset : std::filesystem::path(opt.input), std::cout);
    } else if (predict->parsed()) {
      std::optional<mzl::Vec> x0;
      if (!opt.x0.empty()) {
        x0 = Eigen::Map<const mzl::Vec>(opt.x0.data(), static_cast<mzl::Index>(opt.x0.size()));
      }
      mzl::pipeline::run_predict(cfg, opt.model.empty() ? paths.model : std::filesystem::path(opt.model), opt.steps, x0,
                                 std::cout);
    } else if (is_sweep) {
      const auto list = opt.n_mem.empty() ? cfg.sweep_n_mem : opt.n_mem;
      mzl::pipeline::run_sweep(cfg, list, std::cout);
    } else if (compare->parsed()) {
      mzl::pipeline::run_compare_reduced(cfg, opt.model.empty() ? paths.model : std::filesystem::path(opt.model),
                                         std::cout);
    } else if (run->parsed()) {
      mzl::pipeline::run_all(cfg, opt.steps, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
