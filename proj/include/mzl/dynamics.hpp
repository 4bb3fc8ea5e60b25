#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mzl/common.hpp"

namespace mzl {

/// Right-hand side f(x) of an autonomous system dx/dt = f(x). Writes into `out`
/// (already sized to n).
using VectorField = std::function<void(const Vec& state, Vec& out)>;

/// A full dynamical system whose first `d` state components are observed.
struct SystemSpec {
  std::string name;
  int n = 0;
  int d = 0;
  std::map<std::string, double> params;
  VectorField rhs;

  /// Leading d components of a full state.
  Vec observe(const Vec& state) const { return state.head(d); }
};

/// Axis-aligned box used to draw initial conditions.
struct Domain {
  Vec lower;
  Vec upper;

  void validate(int n) const;
};

/// Fixed-step classical RK4 sampled every `delta` with `substeps` steps in between.
struct SolverConfig {
  double delta = 0.02;
  int substeps = 20;

  void validate() const;
};

/// Raised when a trajectory produces a non-finite state.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, int sample_index)
      : std::runtime_error(what), sample_index_(sample_index) {}
  int sample_index() const { return sample_index_; }

 private:
  int sample_index_;
};

/// Names accepted by make_system.
const std::vector<std::string>& builtin_system_names();

/// Builds a named system. Recognised parameters:
///   example1: alpha (default 2)
///   example2: alpha (0.1), beta (8.91)
///   example3: eps (0.01), coupling (3; the fast variable relaxes to x1*x_coupling)
/// `linear-generic` requires make_linear_system instead.
SystemSpec make_system(std::string_view name, const std::map<std::string, double>& params = {});

/// dx/dt = A x with the first d components observed.
SystemSpec make_linear_system(std::string name, const Mat& a, int d);

/// User-supplied vector field.
SystemSpec make_custom_system(std::string name, int n, int d, VectorField rhs);

/// Default sampling box for a built-in system.
Domain default_domain(std::string_view name);

Vec eval_rhs(const SystemSpec& spec, const Vec& state);

/// One RK4 step of size h (no validation; used in hot loops).
void rk4_step(const SystemSpec& spec, Vec& state, double h, Vec& k1, Vec& k2, Vec& k3, Vec& k4,
              Vec& scratch);

/// States at t = 0, delta, ..., num_samples*delta as the columns of an n x (num_samples+1)
/// matrix. Column 0 is x0 exactly.
Mat integrate(const SystemSpec& spec, const SolverConfig& config, const Vec& x0, int num_samples);

/// Right-hand side of the homogenized slow system for the three-variable reduction of example3.
Vec homogenized_rhs(const Vec& state);
SystemSpec make_homogenized_system();

/// Block form of a linear system dz/dt = A11 z + A12 w, dw/dt = A21 z + A22 w, together
/// with the exact Mori-Zwanzig decomposition of the observed dynamics.
struct LinearMZOracle {
  Mat a11;
  Mat a12;
  Mat a21;
  Mat a22;
  int quad_points = 1000;  ///< trapezoid nodes per unit time for the full-history integral

  static LinearMZOracle from_matrix(const Mat& a, int d);

  int d() const { return static_cast<int>(a11.rows()); }
  int n() const { return static_cast<int>(a11.rows() + a22.rows()); }
  Mat assemble() const;
  void validate() const;
};

/// Oracle for example1 (alpha) or example4 (coupling tables).
LinearMZOracle example1_oracle(double alpha);
LinearMZOracle example4_oracle();

/// Example 4 coupling tables SIGMA11, SIGMA12, SIGMA21, SIGMA22 in that order.
std::vector<Mat> example4_sigma();
/// Parses the plain-text labelled-block matrix format.
std::map<std::string, Mat> parse_labeled_matrices(std::string_view text);

/// e^{A t} x0 for the assembled block matrix.
Vec exact_linear_solution(const LinearMZOracle& oracle, const Vec& x0, double t);

/// Composite-trapezoid value of A12 * int_0^T e^{A22 s} A21 z(t - s) ds.
/// `history` holds z at t-T, t-T+h, ..., t as columns (oldest first), T = h*(cols-1).
Vec mz_memory_integral(const LinearMZOracle& oracle, const Mat& history, double spacing);

/// Orthogonal-dynamics term A12 e^{A22 t} w0.
Vec mz_noise_term(const LinearMZOracle& oracle, const Vec& w0, double t);

/// Markov term A11 z.
Vec mz_markov_term(const LinearMZOracle& oracle, const Vec& z);

}  // namespace mzl

namespace mzl {

/// Terms of the exact linear MZ identity evaluated at (x0, t). The memory integral uses
/// the exact solution sampled on a uniform grid of ceil(t * quad_points) intervals.
struct MZDecomposition {
  Vec markov;
  Vec memory;
  Vec noise;
  Vec derivative;  ///< observed block of A e^{At} x0

  Vec sum() const { return markov + memory + noise; }
};

MZDecomposition mz_decomposition(const LinearMZOracle& oracle, const Vec& x0, double t);

}  // namespace mzl
