#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "mzl/dynamics.hpp"
#include "mzl/linalg.hpp"
#include "oracles.hpp"

using namespace mzl;

namespace {

Vec vec(std::initializer_list<double> values) {
  Vec v(static_cast<Index>(values.size()));
  Index i = 0;
  for (const double x : values) v(i++) = x;
  return v;
}

Mat example1_matrix(double alpha) {
  Mat a(2, 2);
  a << 1.0, -4.0, 4.0, -alpha;
  return a;
}

}  // namespace

TEST_CASE("eval_rhs by direct substitution") {
  SUBCASE("example1") {
    const auto spec = make_system("example1", {{"alpha", 2.0}});
    CHECK(eval_rhs(spec, vec({1, 0})).isApprox(vec({1, 4}), 0.0));
  }
  SUBCASE("example2 equilibrium") {
    const auto spec = make_system("example2", {{"alpha", 0.1}, {"beta", 8.91}});
    CHECK(eval_rhs(spec, vec({0, 0})).isZero(0.0));
  }
  SUBCASE("example3 with the x1*x2 fast coupling") {
    const auto spec = make_system("example3", {{"eps", 0.01}, {"coupling", 2}});
    const Vec f = eval_rhs(spec, vec({1, 1, 0, 0}));
    CHECK(f(0) == doctest::Approx(-1.0));
    CHECK(f(1) == doctest::Approx(1.2));
    CHECK(f(2) == doctest::Approx(0.2));
    CHECK(f(3) == doctest::Approx(100.0));
  }
  SUBCASE("example3 default coupling relaxes y towards x1*x3") {
    const auto spec = make_system("example3", {{"eps", 0.01}});
    CHECK(eval_rhs(spec, vec({1, 1, 0, 0}))(3) == 0.0);
    CHECK(eval_rhs(spec, vec({2, 0, 3, 1}))(3) == doctest::Approx((6.0 - 1.0) / 0.01));
  }
  SUBCASE("dimension mismatch") {
    const auto spec = make_system("example1");
    CHECK_THROWS_AS(eval_rhs(spec, vec({1, 2, 3})), ContractError);
  }
}

TEST_CASE("built-in systems have consistent dimensions") {
  for (const auto& name : builtin_system_names()) {
    if (name == "linear-generic") {
      CHECK_THROWS_AS(make_system(name), ContractError);
      continue;
    }
    const auto spec = make_system(name);
    CAPTURE(name);
    CHECK(spec.d >= 1);
    CHECK(spec.d <= spec.n);
    CHECK(eval_rhs(spec, Vec::Ones(spec.n)).size() == spec.n);
    default_domain(name).validate(spec.n);
  }
  CHECK(make_system("example4").n == 20);
  CHECK(make_system("example4").d == 10);
  CHECK(make_system("example3").d == 3);
  CHECK_THROWS_AS(make_system("example1", {{"beta", 1.0}}), ContractError);
  CHECK_THROWS_AS(make_system("nope"), ContractError);
}

TEST_CASE("homogenized right-hand side") {
  CHECK(homogenized_rhs(vec({0, 0, 0})).isApprox(vec({0, 0, 0.2}), 0.0));
  CHECK(homogenized_rhs(vec({5, 0, 1})).isApprox(vec({-1, 5, 0.2}), 1e-15));
  CHECK(homogenized_rhs(vec({1, 1, 1})).isApprox(vec({-2, 1.2, -3.8}), 1e-15));
  CHECK_THROWS_AS(homogenized_rhs(vec({1, 1})), ContractError);
}

TEST_CASE("integrate against the matrix exponential") {
  const auto spec = make_system("example1", {{"alpha", 2.0}});
  const Vec x0 = vec({0.7, -1.3});
  const Mat states = integrate(spec, {0.02, 20}, x0, 1);
  CHECK(states.col(0) == x0);
  const Vec exact = matrix_exponential(0.02 * example1_matrix(2.0)) * x0;
  CHECK((states.col(1) - exact).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("RK4 observed order on example1") {
  const auto spec = make_system("example1", {{"alpha", 2.0}});
  const Vec x0 = vec({1.0, 0.5});
  const Vec exact = matrix_exponential(example1_matrix(2.0)) * x0;
  std::vector<double> log_h, log_err;
  for (const int substeps : {16, 32, 64, 128}) {
    const Mat s = integrate(spec, {1.0, substeps}, x0, 1);
    log_h.push_back(std::log(1.0 / substeps));
    log_err.push_back(std::log((s.col(1) - exact).norm()));
  }
  // least-squares slope
  const double n = static_cast<double>(log_h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < log_h.size(); ++i) {
    sx += log_h[i];
    sy += log_err[i];
    sxx += log_h[i] * log_h[i];
    sxy += log_h[i] * log_err[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CAPTURE(slope);
  CHECK(slope >= 3.8);
  CHECK(slope <= 4.2);
}

TEST_CASE("Richardson refinement on the pendulum") {
  const auto spec = make_system("example2");
  const Vec x0 = vec({1.0, 0.5});
  const double delta = 0.2;
  const Vec reference = integrate(spec, {delta, 256}, x0, 1).col(1);
  const double coarse = (integrate(spec, {delta, 1}, x0, 1).col(1) - reference).norm();
  const double fine = (integrate(spec, {delta, 16}, x0, 1).col(1) - reference).norm();
  const double ratio = coarse / fine;
  CAPTURE(ratio);
  // fourth order: ~16^4 = 65536
  CHECK(ratio > 65536.0 / 3.0);
  CHECK(ratio < 65536.0 * 3.0);
}

TEST_CASE("zero vector field stays put") {
  const auto spec = make_custom_system("still", 2, 1, [](const Vec&, Vec& out) { out.setZero(); });
  const Mat s = integrate(spec, {0.02, 20}, vec({3, 7}), 25);
  for (Index k = 0; k < s.cols(); ++k) CHECK(s.col(k) == vec({3, 7}));
}

TEST_CASE("flow map composition") {
  const auto spec = make_system("example2");
  const SolverConfig cfg{0.02, 20};
  const Vec x0 = vec({-1.2, 2.5});
  const Mat whole = integrate(spec, cfg, x0, 40);
  const Mat first = integrate(spec, cfg, x0, 20);
  const Mat second = integrate(spec, cfg, first.col(20), 20);
  CHECK((whole.col(40) - second.col(20)).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("integration failures carry the sample index") {
  const auto blowup = make_custom_system("blowup", 1, 1, [](const Vec& x, Vec& out) {
    out(0) = x(0) * x(0);
  });
  try {
    integrate(blowup, {0.1, 4}, vec({1.0}), 50);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK(e.sample_index() >= 1);
    CHECK(e.sample_index() <= 11);
  }
  const auto spec = make_system("example1");
  CHECK_THROWS_AS(integrate(spec, {0.02, 0}, vec({1, 1}), 1), ContractError);
  CHECK_THROWS_AS(integrate(spec, {0.02, 1}, vec({1, 1}), 0), ContractError);
  CHECK_THROWS_AS(integrate(spec, {0.02, 1}, vec({1}), 1), ContractError);
}

// ---------------------------------------------------------------------------

TEST_CASE("example4 tables transcription checksum") {
  const auto sigma = example4_sigma();
  // Sums of the printed entries (before the 1e-3 scaling).
  const double sums[] = {-14.025, -18.382, 173.9747, 9389.0};
  const double abs_sums[] = {936.331, 917.288, 716.7487, 49164.2};
  for (int i = 0; i < 4; ++i) {
    CAPTURE(i);
    CHECK(sigma[i].sum() * 1e3 == doctest::Approx(sums[i]).epsilon(1e-12));
    CHECK(sigma[i].cwiseAbs().sum() * 1e3 == doctest::Approx(abs_sums[i]).epsilon(1e-12));
  }
  CHECK(sigma[0](0, 0) == -0.00609);
  CHECK(sigma[2](1, 6) == 0.0000957);
  CHECK(sigma[3](9, 9) == 1.09);
  CHECK(sigma[3].isApprox(sigma[3].transpose(), 0.0));
}

TEST_CASE("example4 assembly reproduces the p/q equations") {
  const auto sigma = example4_sigma();
  const Mat ident = Mat::Identity(10, 10);
  const auto spec = make_system("example4");
  auto rng = make_stream(5, "example4-assembly");
  for (int trial = 0; trial < 10; ++trial) {
    const Vec x = testing::random_vector(rng, 20, -2, 2);
    const Vec p = x.head(10), q = x.tail(10);
    Vec expected(20);
    expected << sigma[0] * p + (ident + sigma[1]) * q, -(ident + sigma[2]) * p - sigma[3] * q;
    CHECK((eval_rhs(spec, x) - expected).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((example4_oracle().assemble() * x - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("labelled matrix parser errors") {
  CHECK_THROWS_AS(parse_labeled_matrices("1 2\n"), FormatError);
  CHECK_THROWS_AS(parse_labeled_matrices("A\n1 2\n3\n"), FormatError);
  CHECK_THROWS_AS(parse_labeled_matrices("A\n1 x\n"), FormatError);
  CHECK_THROWS_AS(parse_labeled_matrices("A\n1\nA\n2\n"), FormatError);
  const auto ok = parse_labeled_matrices("# c\nA\n1 2\n3 4\nB\n5\n");
  CHECK(ok.at("A")(1, 0) == 3.0);
  CHECK(ok.at("B")(0, 0) == 5.0);
}

TEST_CASE("oracle block layout") {
  const auto o = example1_oracle(2.0);
  CHECK(o.a11(0, 0) == 1.0);
  CHECK(o.a12(0, 0) == -4.0);
  CHECK(o.a21(0, 0) == 4.0);
  CHECK(o.a22(0, 0) == -2.0);
  CHECK(o.assemble().isApprox(example1_matrix(2.0), 0.0));
  LinearMZOracle broken = o;
  broken.a12 = Mat::Zero(2, 1);
  CHECK_THROWS_AS(broken.validate(), ContractError);
}

TEST_CASE("exact linear solution") {
  const auto o = example1_oracle(2.0);
  const Vec x0 = vec({0.4, -1.1});
  CHECK(exact_linear_solution(o, x0, 0.0) == x0);
  const Vec fine = integrate(make_system("example1", {{"alpha", 2.0}}), {1.0, 200}, x0, 1).col(1);
  CHECK((exact_linear_solution(o, x0, 1.0) - fine).cwiseAbs().maxCoeff() <= 1e-8);

  auto rng = make_stream(9, "example4-exact");
  const Vec y0 = testing::random_vector(rng, 20, -2, 2);
  const Vec step = integrate(make_system("example4"), {0.02, 20}, y0, 1).col(1);
  CHECK((exact_linear_solution(example4_oracle(), y0, 0.02) - step).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK_THROWS_AS(exact_linear_solution(o, x0, -1.0), ContractError);
}

TEST_CASE("memory integral and noise term edge cases") {
  const auto o = example1_oracle(2.0);
  CHECK(mz_memory_integral(o, Mat::Zero(1, 50), 0.01).isZero(0.0));
  CHECK(mz_memory_integral(o, Mat::Ones(1, 1), 0.01).isZero(0.0));  // T = 0
  CHECK_THROWS_AS(mz_memory_integral(o, Mat(1, 0), 0.01), ContractError);
  CHECK_THROWS_AS(mz_memory_integral(o, Mat::Ones(2, 5), 0.01), ContractError);

  CHECK(mz_noise_term(o, Vec::Zero(1), 0.7).isZero(0.0));
  CHECK(mz_noise_term(o, vec({0.5}), 0.0).isApprox(o.a12 * vec({0.5}), 1e-15));
}

TEST_CASE("memory integral converges at second order") {
  // z(s) = cos(s) on [0, 1]: A12 int_0^1 e^{A22 u} A21 cos(1 - u) du has a closed form.
  const auto o = example1_oracle(2.0);
  const double lambda = -2.0;  // A22
  // int_0^1 e^{lambda u} cos(1-u) du
  const double exact_scalar = [&] {
    // Re( int_0^1 e^{lambda u} e^{i(1-u)} du ) = Re( e^{i} (e^{(lambda - i)} - 1)/(lambda - i) )
    const std::complex<double> c(lambda, -1.0);
    const std::complex<double> val = std::exp(std::complex<double>(0, 1)) * (std::exp(c) - 1.0) / c;
    return val.real();
  }();
  const double exact = o.a12(0, 0) * exact_scalar * o.a21(0, 0);
  auto error_at = [&](int intervals) {
    const double h = 1.0 / intervals;
    Mat history(1, intervals + 1);
    for (int k = 0; k <= intervals; ++k) history(0, k) = std::cos(k * h);
    return std::abs(mz_memory_integral(o, history, h)(0) - exact);
  };
  const double e1 = error_at(50), e2 = error_at(100), e3 = error_at(200);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
  CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("linear MZ identity closes with the A12 noise coefficient") {
  struct Case {
    LinearMZOracle oracle;
    const char* name;
  };
  for (const auto& c : {Case{example1_oracle(2.0), "example1"}, Case{example4_oracle(), "example4"}}) {
    auto rng = make_stream(21, c.name);
    const Mat a = c.oracle.assemble();
    const int d = c.oracle.d();
    double worst = 0.0;
    double worst_printed = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const Vec x0 = testing::random_vector(rng, a.rows(), -2, 2);
      const double t = uniform(rng, 0.1, 2.0);
      const auto parts = mz_decomposition(c.oracle, x0, t);
      const double h = 1e-4;
      const Vec fd = (exact_linear_solution(c.oracle, x0, t + h) -
                      exact_linear_solution(c.oracle, x0, t - h)).head(d) / (2.0 * h);
      worst = std::max(worst, (parts.sum() - fd).cwiseAbs().maxCoeff());
      CHECK((parts.derivative - fd).cwiseAbs().maxCoeff() < 1e-6);
      if (c.oracle.a12.rows() == c.oracle.a21.rows()) {
        // The coefficient as printed, A21 e^{A22 t} w0, only type-checks when the blocks are square.
        const Vec printed = c.oracle.a21 * (matrix_exponential(c.oracle.a22 * t) * x0.tail(a.rows() - d));
        worst_printed = std::max(worst_printed,
                                 (parts.markov + parts.memory + printed - fd).cwiseAbs().maxCoeff());
      }
    }
    CAPTURE(c.name);
    CHECK(worst <= 1e-4);
    if (worst_printed > 0.0) CHECK(worst_printed > 1e-2);
  }
}
