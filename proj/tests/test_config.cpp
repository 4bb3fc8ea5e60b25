#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mzl/config.hpp"
#include "mzl/pipeline.hpp"

using namespace mzl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig tiny(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.system = "example1";
  cfg.n_traj = 60;
  cfg.traj_len = 12;
  cfg.selection = SelectionKind::random;
  cfg.per_trajectory = 3;
  cfg.n_mem = 4;
  cfg.hidden = {8, 8};
  cfg.train.epochs = 5;
  cfg.train.batch_size = 16;
  cfg.train.normalize = true;
  cfg.train.final_learning_rate = 1e-4;
  cfg.eval_horizon = 1.0;
  cfg.n_eval_runs = 2;
  cfg.sweep_n_mem = {2, 4};
  cfg.seed = 5;
  cfg.out_dir = out.string();
  return cfg;
}

}  // namespace

TEST_CASE("presets validate and survive a JSON round trip") {
  REQUIRE_FALSE(preset_names().empty());
  for (const auto& name : preset_names()) {
    const auto cfg = preset(name);
    CHECK_NOTHROW(cfg.validate());
    const auto text = config_to_json_text(cfg);
    const auto back = config_from_json_text(text);
    CHECK(config_to_json_text(back) == text);
    CHECK(back.system == cfg.system);
    CHECK(back.hidden == cfg.hidden);
    CHECK(back.train.learning_rate == cfg.train.learning_rate);
  }
  CHECK_THROWS_AS(preset("nope"), ContractError);
}

TEST_CASE("preset shapes") {
  const auto e1 = preset("example1-fast");
  CHECK(e1.make_system_spec().d == 1);
  CHECK(e1.n_mem == 30);
  const auto e3 = preset("example3");
  CHECK(e3.make_system_spec().d == 3);
  CHECK(e3.n_mem == 60);
  const auto full = preset("linear2d-full");
  CHECK(full.make_system_spec().d == 2);
  CHECK(full.n_mem == 0);
}

TEST_CASE("JSON parsing rejects bad input") {
  CHECK_THROWS(config_from_json_text("{\"sytem\": \"example1\"}"));
  CHECK_THROWS(config_from_json_text("{\"train\": {\"learning_rat\": 0.1}}"));
  CHECK_THROWS(config_from_json_text("{\"domain\": {\"lower\": [0], \"upper\": [1], \"x\": 1}}"));
  CHECK_THROWS(config_from_json_text("{\"n_mem\": \"ten\"}"));
  CHECK_THROWS(config_from_json_text("not json"));
  CHECK_THROWS(config_from_json_text("{\"system\": \"example9\"}"));
  CHECK_THROWS(config_from_json_text("{\"n_mem\": -1}"));
  const auto cfg = config_from_json_text("{\"system\": \"example2\", \"n_mem\": 7}");
  CHECK(cfg.system == "example2");
  CHECK(cfg.n_mem == 7);
}

TEST_CASE("linear-generic systems from a matrix") {
  auto cfg = config_from_json_text(
      "{\"system\": \"linear-generic\", \"linear_matrix\": [[0, 1], [-1, 0]],"
      " \"observed_dim\": 1, \"domain\": {\"lower\": [-1, -1], \"upper\": [1, 1]}}");
  const auto spec = cfg.make_system_spec();
  CHECK(spec.n == 2);
  CHECK(spec.d == 1);
  CHECK(eval_rhs(spec, Vec{{1.0, 0.0}})(1) == -1.0);
}

TEST_CASE("pipeline stages are reproducible bit for bit") {
  const auto root = fs::temp_directory_path() / "mzl_test_pipeline";
  fs::remove_all(root);
  std::ostringstream log;
  for (const char* run : {"a", "b"}) {
    auto cfg = tiny(root / run);
    pipeline::run_all(cfg, 20, log);
  }
  for (const char* file : {"trajectories.txt", "dataset.txt", "model.txt", "train_log.csv", "rollout.csv"}) {
    const auto a = slurp(root / "a" / file);
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(root / "b" / file));
  }
  CHECK(log.str().find("warning") != std::string::npos);

  // a different seed changes the data
  auto other = tiny(root / "c");
  other.seed = 6;
  pipeline::run_generate(other, log);
  CHECK(slurp(root / "a" / "trajectories.txt") != slurp(root / "c" / "trajectories.txt"));

  // saved config reloads to the same experiment
  const auto saved = load_config(root / "a" / "config.json");
  CHECK(config_to_json_text(saved) == config_to_json_text(tiny(root / "a")));
}

TEST_CASE("sweep writes one row per memory length") {
  const auto root = fs::temp_directory_path() / "mzl_test_sweep";
  fs::remove_all(root);
  std::ostringstream log;
  const auto cfg = tiny(root);
  const auto path = pipeline::run_sweep(cfg, cfg.sweep_n_mem, log);
  std::ifstream in(path);
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2);
  CHECK_THROWS_AS(pipeline::run_sweep(cfg, {4, 2}, log), ContractError);
}

TEST_CASE("oracle check passes") {
  std::ostringstream log;
  CHECK(pipeline::run_oracle_check(3, log));
}
