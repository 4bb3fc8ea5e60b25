#include <doctest.h>

#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mzl/kernels.hpp"
#include "oracles.hpp"

using namespace mzl;

namespace {

struct Problem {
  NetworkParams params;
  Mat inputs;
  Mat targets;
};

Problem make_problem(Index samples, std::uint64_t seed) {
  Problem pr;
  pr.params = init_params(2, 5, {24, 24}, seed);
  auto rng = make_stream(seed, "kernel-data");
  for (auto& layer : pr.params.layers) layer.bias = testing::random_vector(rng, layer.bias.size(), -0.3, 0.3);
  pr.inputs = testing::random_matrix(rng, pr.params.input_width(), samples, -2.0, 2.0);
  pr.targets = testing::random_matrix(rng, 2, samples, -2.0, 2.0);
  return pr;
}

double max_diff(const GradientSet& a, const GradientSet& b) {
  double worst = 0.0;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    worst = std::max(worst, (a.layers[l].weight - b.layers[l].weight).cwiseAbs().maxCoeff());
    worst = std::max(worst, (a.layers[l].bias - b.layers[l].bias).cwiseAbs().maxCoeff());
  }
  return worst;
}

bool identical(const GradientSet& a, const GradientSet& b) {
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (a.layers[l].weight != b.layers[l].weight || a.layers[l].bias != b.layers[l].bias) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("batched forward agrees with the per-sample map") {
  const auto pr = make_problem(77, 1);
  const Mat out = kernels::forward_batch(pr.params, pr.inputs);
  const Mat raw = kernels::forward_batch(pr.params, pr.inputs, false);
  for (Index j = 0; j < pr.inputs.cols(); ++j) {
    CHECK((out.col(j) - forward(pr.params, pr.inputs.col(j))).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((raw.col(j) - network_output(pr.params, pr.inputs.col(j))).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("parallel gradient agrees with the serial reference") {
  const auto pr = make_problem(301, 2);
  std::vector<Index> rows(301);
  std::iota(rows.begin(), rows.end(), 0);
  for (const bool skip : {true, false}) {
    auto gp = GradientSet::zeros_like(pr.params);
    auto gs = GradientSet::zeros_like(pr.params);
    const double lp = kernels::loss_gradient(pr.params, pr.inputs, pr.targets, rows, skip, gp);
    const double ls = kernels::loss_gradient(pr.params, pr.inputs, pr.targets, rows, skip, gs,
                                             kernels::Exec::serial);
    CHECK(lp == doctest::Approx(ls).epsilon(1e-12));
    CHECK(max_diff(gp, gs) < 1e-10);
  }
  const double sse = kernels::sum_squared_error(pr.params, pr.inputs, pr.targets);
  const double sse_serial =
      kernels::sum_squared_error(pr.params, pr.inputs, pr.targets, true, kernels::Exec::serial);
  CHECK(sse == doctest::Approx(sse_serial).epsilon(1e-12));
}

TEST_CASE("gradient over a subset only sees those rows") {
  const auto pr = make_problem(50, 3);
  const std::vector<Index> rows = {4, 17, 17, 49};
  auto g = GradientSet::zeros_like(pr.params);
  const double loss = kernels::loss_gradient(pr.params, pr.inputs, pr.targets, rows, true, g);
  double expected = 0.0;
  auto sum = GradientSet::zeros_like(pr.params);
  for (const Index j : rows) {
    const Vec r = forward(pr.params, pr.inputs.col(j)) - pr.targets.col(j);
    expected += r.squaredNorm();
    sum += backward(pr.params, pr.inputs.col(j), 2.0 * r).first;
  }
  CHECK(loss == doctest::Approx(expected).epsilon(1e-12));
  CHECK(max_diff(g, sum) < 1e-10);
}

TEST_CASE("results do not depend on the thread count") {
  const auto pr = make_problem(517, 4);
  std::vector<Index> rows(517);
  std::iota(rows.rbegin(), rows.rend(), 0);
#ifdef _OPENMP
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
#endif
  auto g1 = GradientSet::zeros_like(pr.params);
  const double l1 = kernels::loss_gradient(pr.params, pr.inputs, pr.targets, rows, true, g1);
  const double s1 = kernels::sum_squared_error(pr.params, pr.inputs, pr.targets);
#ifdef _OPENMP
  omp_set_num_threads(4);
#endif
  auto g4 = GradientSet::zeros_like(pr.params);
  const double l4 = kernels::loss_gradient(pr.params, pr.inputs, pr.targets, rows, true, g4);
  const double s4 = kernels::sum_squared_error(pr.params, pr.inputs, pr.targets);
#ifdef _OPENMP
  omp_set_num_threads(saved);
#endif
  CHECK(l1 == l4);
  CHECK(s1 == s4);
  CHECK(identical(g1, g4));
}

TEST_CASE("batched integration matches one-at-a-time integration") {
  const auto spec = make_system("example2");
  const SolverConfig solver{0.02, 10};
  std::vector<Vec> starts;
  auto rng = make_stream(5, "starts");
  for (int i = 0; i < 9; ++i) starts.push_back(testing::random_vector(rng, spec.n, -1.0, 1.0));
#ifdef _OPENMP
  omp_set_num_threads(3);
#endif
  const auto batch = kernels::integrate_batch(spec, solver, starts, 25);
  const auto serial = kernels::integrate_batch(spec, solver, starts, 25, kernels::Exec::serial);
  REQUIRE(batch.size() == starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    CHECK(batch[i] == integrate(spec, solver, starts[i], 25));
    CHECK(serial[i] == batch[i]);
  }
}

TEST_CASE("batched integration reports the failing sample") {
  const auto blowup = make_custom_system("blowup", 1, 1, [](const Vec& x, Vec& out) { out = x.array().square(); });
  std::vector<Vec> starts = {Vec::Constant(1, 0.1), Vec::Constant(1, 100.0), Vec::Constant(1, 0.2)};
  try {
    kernels::integrate_batch(blowup, {0.1, 10}, starts, 50);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK(std::string(e.what()).find("initial condition 1") != std::string::npos);
    CHECK(e.sample_index() > 0);
  }
}
