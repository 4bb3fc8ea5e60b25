#include "mzl/dynamics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "mzl/linalg.hpp"

namespace mzl {

namespace detail {
std::string_view example4_sigma_text();
}

namespace {

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown(const std::map<std::string, double>& params,
                    std::initializer_list<std::string_view> allowed, std::string_view system) {
  for (const auto& [key, value] : params) {
    bool ok = false;
    for (const auto a : allowed) ok = ok || key == a;
    if (!ok) {
      throw ContractError("system '" + std::string(system) + "' has no parameter '" + key + "'");
    }
  }
}

Vec box(std::initializer_list<double> values) {
  Vec v(static_cast<Index>(values.size()));
  Index i = 0;
  for (const double x : values) v(i++) = x;
  return v;
}

}  // namespace

void Domain::validate(int n) const {
  if (lower.size() != n || upper.size() != n) {
    throw ContractError("domain dimension " + std::to_string(lower.size()) + "/" +
                        std::to_string(upper.size()) + " does not match state dimension " +
                        std::to_string(n));
  }
  for (Index i = 0; i < n; ++i) {
    if (!(lower(i) < upper(i))) {
      throw ContractError("domain bound " + std::to_string(i) + ": lower must be < upper");
    }
  }
}

void SolverConfig::validate() const {
  if (!(delta > 0.0)) throw ContractError("solver delta must be positive");
  if (substeps < 1) throw ContractError("solver substeps must be >= 1");
}

const std::vector<std::string>& builtin_system_names() {
  static const std::vector<std::string> names = {"example1", "example2", "example3",
                                                 "example3-reduced", "example4", "linear-generic"};
  return names;
}

SystemSpec make_linear_system(std::string name, const Mat& a, int d) {
  if (a.rows() != a.cols()) throw ContractError("linear system matrix must be square");
  if (d < 1 || d > a.rows()) throw ContractError("observed dimension must be in [1, n]");
  SystemSpec spec;
  spec.name = std::move(name);
  spec.n = static_cast<int>(a.rows());
  spec.d = d;
  spec.rhs = [a](const Vec& x, Vec& out) { out.noalias() = a * x; };
  return spec;
}

SystemSpec make_custom_system(std::string name, int n, int d, VectorField rhs) {
  if (n < 1 || d < 1 || d > n) throw ContractError("custom system requires 1 <= d <= n");
  SystemSpec spec;
  spec.name = std::move(name);
  spec.n = n;
  spec.d = d;
  spec.rhs = std::move(rhs);
  return spec;
}

SystemSpec make_system(std::string_view name, const std::map<std::string, double>& params) {
  if (name == "example1") {
    reject_unknown(params, {"alpha"}, name);
    const double alpha = param_or(params, "alpha", 2.0);
    auto spec = make_custom_system("example1", 2, 1, [alpha](const Vec& x, Vec& out) {
      out(0) = x(0) - 4.0 * x(1);
      out(1) = 4.0 * x(0) - alpha * x(1);
    });
    spec.params = {{"alpha", alpha}};
    return spec;
  }
  if (name == "example2") {
    reject_unknown(params, {"alpha", "beta"}, name);
    const double alpha = param_or(params, "alpha", 0.1);
    const double beta = param_or(params, "beta", 8.91);
    auto spec = make_custom_system("example2", 2, 1, [alpha, beta](const Vec& x, Vec& out) {
      out(0) = x(1);
      out(1) = -alpha * x(1) - beta * std::sin(x(0));
    });
    spec.params = {{"alpha", alpha}, {"beta", beta}};
    return spec;
  }
  if (name == "example3") {
    reject_unknown(params, {"eps", "coupling"}, name);
    const double eps = param_or(params, "eps", 0.01);
    const double coupling = param_or(params, "coupling", 3.0);
    if (!(eps > 0.0)) throw ContractError("example3: eps must be positive");
    if (coupling != 2.0 && coupling != 3.0) {
      throw ContractError("example3: coupling must be 2 (x1*x2) or 3 (x1*x3)");
    }
    const Index partner = coupling == 2.0 ? 1 : 2;
    auto spec = make_custom_system("example3", 4, 3, [eps, partner](const Vec& x, Vec& out) {
      out(0) = -x(1) - x(2);
      out(1) = x(0) + x(1) / 5.0;
      out(2) = 1.0 / 5.0 + x(3) - 5.0 * x(2);
      out(3) = (-x(3) + x(0) * x(partner)) / eps;
    });
    spec.params = {{"eps", eps}, {"coupling", coupling}};
    return spec;
  }
  if (name == "example3-reduced") {
    reject_unknown(params, {}, name);
    return make_homogenized_system();
  }
  if (name == "example4") {
    reject_unknown(params, {}, name);
    const auto oracle = example4_oracle();
    return make_linear_system("example4", oracle.assemble(), oracle.d());
  }
  if (name == "linear-generic") {
    throw ContractError("linear-generic needs an explicit matrix (make_linear_system)");
  }
  throw ContractError("unknown system '" + std::string(name) + "'");
}

Domain default_domain(std::string_view name) {
  if (name == "example1") return {box({-2, -2}), box({2, 2})};
  if (name == "example2") return {box({-2, -4}), box({2, 4})};
  if (name == "example3") return {box({-7.5, -10, 0, -1}), box({10, 7.5, 18, 100})};
  if (name == "example3-reduced") return {box({-7.5, -10, 0}), box({10, 7.5, 18})};
  if (name == "example4") return {Vec::Constant(20, -2.0), Vec::Constant(20, 2.0)};
  throw ContractError("no default domain for system '" + std::string(name) + "'");
}

Vec eval_rhs(const SystemSpec& spec, const Vec& state) {
  if (state.size() != spec.n) {
    throw ContractError("eval_rhs(" + spec.name + "): state has dimension " +
                        std::to_string(state.size()) + ", expected " + std::to_string(spec.n));
  }
  Vec out(spec.n);
  spec.rhs(state, out);
  return out;
}

void rk4_step(const SystemSpec& spec, Vec& state, double h, Vec& k1, Vec& k2, Vec& k3, Vec& k4,
              Vec& scratch) {
  spec.rhs(state, k1);
  scratch = state + (0.5 * h) * k1;
  spec.rhs(scratch, k2);
  scratch = state + (0.5 * h) * k2;
  spec.rhs(scratch, k3);
  scratch = state + h * k3;
  spec.rhs(scratch, k4);
  state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Mat integrate(const SystemSpec& spec, const SolverConfig& config, const Vec& x0, int num_samples) {
  config.validate();
  if (x0.size() != spec.n) {
    throw ContractError("integrate(" + spec.name + "): x0 has dimension " +
                        std::to_string(x0.size()) + ", expected " + std::to_string(spec.n));
  }
  if (num_samples < 1) throw ContractError("integrate: num_samples must be >= 1");

  Mat out(spec.n, num_samples + 1);
  out.col(0) = x0;
  Vec state = x0;
  Vec k1(spec.n), k2(spec.n), k3(spec.n), k4(spec.n), scratch(spec.n);
  const double h = config.delta / config.substeps;
  for (int k = 1; k <= num_samples; ++k) {
    for (int s = 0; s < config.substeps; ++s) rk4_step(spec, state, h, k1, k2, k3, k4, scratch);
    if (!state.allFinite()) {
      throw IntegrationError("integrate(" + spec.name + "): non-finite state at sample " +
                                 std::to_string(k),
                             k);
    }
    out.col(k) = state;
  }
  return out;
}

Vec homogenized_rhs(const Vec& state) {
  if (state.size() != 3) throw ContractError("homogenized_rhs expects a 3-vector");
  Vec out(3);
  out(0) = -state(1) - state(2);
  out(1) = state(0) + state(1) / 5.0;
  out(2) = 1.0 / 5.0 + state(2) * (state(0) - 5.0);
  return out;
}

SystemSpec make_homogenized_system() {
  return make_custom_system("example3-reduced", 3, 3,
                            [](const Vec& x, Vec& out) { out = homogenized_rhs(x); });
}

// ---------------------------------------------------------------------------
// Linear Mori-Zwanzig oracle

LinearMZOracle LinearMZOracle::from_matrix(const Mat& a, int d) {
  if (a.rows() != a.cols()) throw ContractError("oracle matrix must be square");
  const Index n = a.rows();
  if (d < 1 || d >= n) throw ContractError("oracle requires 1 <= d < n");
  LinearMZOracle o;
  o.a11 = a.topLeftCorner(d, d);
  o.a12 = a.topRightCorner(d, n - d);
  o.a21 = a.bottomLeftCorner(n - d, d);
  o.a22 = a.bottomRightCorner(n - d, n - d);
  return o;
}

void LinearMZOracle::validate() const {
  const Index dz = a11.rows();
  const Index dw = a22.rows();
  const bool ok = a11.cols() == dz && a12.rows() == dz && a12.cols() == dw && a21.rows() == dw &&
                  a21.cols() == dz && a22.cols() == dw && dz >= 1 && dw >= 1;
  if (!ok) throw ContractError("LinearMZOracle: inconsistent block dimensions");
  if (quad_points < 1) throw ContractError("LinearMZOracle: quad_points must be >= 1");
}

Mat LinearMZOracle::assemble() const {
  validate();
  const Index dz = a11.rows();
  const Index dw = a22.rows();
  Mat a(dz + dw, dz + dw);
  a << a11, a12, a21, a22;
  return a;
}

LinearMZOracle example1_oracle(double alpha) {
  Mat a(2, 2);
  a << 1.0, -4.0, 4.0, -alpha;
  return LinearMZOracle::from_matrix(a, 1);
}

std::map<std::string, Mat> parse_labeled_matrices(std::string_view text) {
  std::map<std::string, Mat> result;
  std::string current;
  std::vector<std::vector<double>> rows;
  auto flush = [&](int line_no) {
    if (current.empty()) return;
    if (rows.empty()) {
      throw FormatError("matrix block " + current + " has no rows (line " +
                        std::to_string(line_no) + ")");
    }
    Mat m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows.front().size()) {
        throw FormatError("matrix block " + current + ": ragged row " + std::to_string(r + 1));
      }
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
      }
    }
    result[current] = std::move(m);
    rows.clear();
  };

  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (std::isalpha(static_cast<unsigned char>(line[first]))) {
      flush(line_no);
      std::istringstream label(line);
      label >> current;
      if (result.count(current)) throw FormatError("duplicate matrix block " + current);
      continue;
    }
    if (current.empty()) {
      throw FormatError("line " + std::to_string(line_no) + ": values before any block label");
    }
    auto row = parse_doubles(line, "line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  flush(line_no);
  return result;
}

std::vector<Mat> example4_sigma() {
  const auto blocks = parse_labeled_matrices(detail::example4_sigma_text());
  std::vector<Mat> out;
  for (const char* label : {"SIGMA11", "SIGMA12", "SIGMA21", "SIGMA22"}) {
    const auto it = blocks.find(label);
    if (it == blocks.end()) throw FormatError(std::string("missing block ") + label);
    if (it->second.rows() != 10 || it->second.cols() != 10) {
      throw FormatError(std::string(label) + " must be 10x10");
    }
    out.push_back(it->second);
  }
  return out;
}

LinearMZOracle example4_oracle() {
  const auto sigma = example4_sigma();
  const Mat ident = Mat::Identity(10, 10);
  LinearMZOracle o;
  o.a11 = sigma[0];
  o.a12 = ident + sigma[1];
  o.a21 = -(ident + sigma[2]);
  o.a22 = -sigma[3];
  return o;
}

Vec exact_linear_solution(const LinearMZOracle& oracle, const Vec& x0, double t) {
  const Mat a = oracle.assemble();
  if (x0.size() != a.rows()) throw ContractError("exact_linear_solution: x0 dimension mismatch");
  if (t < 0.0) throw ContractError("exact_linear_solution: t must be >= 0");
  return matrix_exponential(a * t) * x0;
}

Vec mz_memory_integral(const LinearMZOracle& oracle, const Mat& history, double spacing) {
  oracle.validate();
  if (history.cols() < 1) throw ContractError("mz_memory_integral: empty history");
  if (history.rows() != oracle.d()) {
    throw ContractError("mz_memory_integral: history rows " + std::to_string(history.rows()) +
                        " != observed dimension " + std::to_string(oracle.d()));
  }
  const Index m = history.cols() - 1;  // number of intervals
  if (m == 0) return Vec::Zero(oracle.d());
  if (!(spacing > 0.0)) throw ContractError("mz_memory_integral: spacing must be positive");

  // Horner accumulation of sum_k w_k e^{A22 k h} A21 z(t - k h); node k sits at column m-k.
  const Mat step = matrix_exponential(oracle.a22 * spacing);
  Vec acc = 0.5 * (oracle.a21 * history.col(0));
  for (Index k = m - 1; k >= 0; --k) {
    const double w = k == 0 ? 0.5 : 1.0;
    acc = step * acc + w * (oracle.a21 * history.col(m - k));
  }
  return spacing * (oracle.a12 * acc);
}

Vec mz_noise_term(const LinearMZOracle& oracle, const Vec& w0, double t) {
  oracle.validate();
  if (w0.size() != oracle.a22.rows()) throw ContractError("mz_noise_term: w0 dimension mismatch");
  if (t < 0.0) throw ContractError("mz_noise_term: t must be >= 0");
  return oracle.a12 * (matrix_exponential(oracle.a22 * t) * w0);
}

Vec mz_markov_term(const LinearMZOracle& oracle, const Vec& z) {
  oracle.validate();
  if (z.size() != oracle.d()) throw ContractError("mz_markov_term: z dimension mismatch");
  return oracle.a11 * z;
}

MZDecomposition mz_decomposition(const LinearMZOracle& oracle, const Vec& x0, double t) {
  const Mat a = oracle.assemble();
  if (x0.size() != a.rows()) throw ContractError("mz_decomposition: x0 dimension mismatch");
  if (t < 0.0) throw ContractError("mz_decomposition: t must be >= 0");
  const int d = oracle.d();
  const Index intervals = std::max<Index>(1, static_cast<Index>(std::ceil(t * oracle.quad_points)));
  const double h = t / static_cast<double>(intervals);

  Mat history(d, intervals + 1);
  const Mat step = matrix_exponential(a * h);
  Vec x = x0;
  history.col(0) = x.head(d);
  for (Index k = 1; k <= intervals; ++k) {
    x = step * x;
    history.col(k) = x.head(d);
  }

  MZDecomposition out;
  const Vec xt = exact_linear_solution(oracle, x0, t);
  out.markov = mz_markov_term(oracle, xt.head(d));
  out.memory = t > 0.0 ? mz_memory_integral(oracle, history, h) : Vec::Zero(d);
  out.noise = mz_noise_term(oracle, x0.tail(a.rows() - d), t);
  out.derivative = (a * xt).head(d);
  return out;
}

}  // namespace mzl
