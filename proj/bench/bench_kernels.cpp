// Wall-clock comparison of the OpenMP kernels against their serial references.
//   bench_kernels [samples] [repeats]

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mzl/kernels.hpp"

using namespace mzl;

namespace {

template <class F>
double best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double parallel, double serial) {
  std::cout << name << ": parallel " << parallel * 1e3 << " ms, serial " << serial * 1e3
            << " ms, speedup " << serial / parallel << "x\n";
}

}  // namespace

int main(int argc, char** argv) {
  const Index samples = argc > 1 ? std::atol(argv[1]) : 20000;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;
#ifdef _OPENMP
  std::cout << "threads: " << omp_get_max_threads() << '\n';
#else
  std::cout << "threads: 1 (built without OpenMP)\n";
#endif

  const auto params = init_params(1, 30, {30, 30, 30}, 1);
  auto rng = make_stream(1, "bench");
  Mat inputs(params.input_width(), samples), targets(1, samples);
  for (Index i = 0; i < inputs.size(); ++i) inputs.data()[i] = uniform(rng, -2.0, 2.0);
  for (Index i = 0; i < targets.size(); ++i) targets.data()[i] = uniform(rng, -2.0, 2.0);
  std::vector<Index> rows(static_cast<std::size_t>(samples));
  std::iota(rows.begin(), rows.end(), 0);
  auto grad = GradientSet::zeros_like(params);

  const double lp = best_of(repeats, [&] {
    kernels::loss_gradient(params, inputs, targets, rows, true, grad, kernels::Exec::parallel);
  });
  const double ls = best_of(repeats, [&] {
    kernels::loss_gradient(params, inputs, targets, rows, true, grad, kernels::Exec::serial);
  });
  report("loss_gradient (d=1, n_mem=30, 30x3)", lp, ls);

  const auto spec = make_system("example3");
  const auto domain = default_domain("example3");
  std::vector<Vec> initial;
  for (int i = 0; i < 200; ++i) {
    Vec x(spec.n);
    for (Index k = 0; k < spec.n; ++k) x(k) = uniform(rng, domain.lower(k), domain.upper(k));
    initial.push_back(x);
  }
  const SolverConfig solver;
  const double ip = best_of(repeats, [&] { kernels::integrate_batch(spec, solver, initial, 100); });
  const double is = best_of(repeats, [&] {
    kernels::integrate_batch(spec, solver, initial, 100, kernels::Exec::serial);
  });
  report("integrate_batch (example3, 200 x 100 samples)", ip, is);
}
