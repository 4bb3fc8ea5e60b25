#include "mzl/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "mzl/kernels.hpp"

namespace mzl {

void TrajectorySet::validate() const {
  if (d < 1) throw ContractError("trajectory set: d must be >= 1");
  if (!(delta > 0.0)) throw ContractError("trajectory set: delta must be positive");
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto& t = trajectories[i];
    if (t.rows() != d || t.cols() < 1) {
      throw ContractError("trajectory " + std::to_string(i) + " has shape " +
                          std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
    }
    if (!t.allFinite()) throw ContractError("trajectory " + std::to_string(i) + " is not finite");
  }
}

void MemoryWindowDataset::validate() const {
  if (d < 1 || n_mem < 0) throw ContractError("dataset: need d >= 1 and n_mem >= 0");
  if (inputs.rows() != input_width() || targets.rows() != d || inputs.cols() != targets.cols()) {
    throw ContractError("dataset: inputs " + std::to_string(inputs.rows()) + "x" +
                        std::to_string(inputs.cols()) + " / targets " +
                        std::to_string(targets.rows()) + "x" + std::to_string(targets.cols()) +
                        " inconsistent with d=" + std::to_string(d) +
                        " n_mem=" + std::to_string(n_mem));
  }
}

void SelectionStrategy::validate() const {
  if (kind == SelectionKind::random && per_trajectory < 1) {
    throw ContractError("random selection requires per_trajectory >= 1");
  }
}

std::vector<Vec> sample_initial_conditions(const Domain& domain, int count, std::uint64_t seed) {
  const int n = static_cast<int>(domain.lower.size());
  domain.validate(n);
  if (count < 1) throw ContractError("sample_initial_conditions: count must be >= 1");
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    auto rng = make_stream(seed, "initial-condition", static_cast<std::uint64_t>(i));
    Vec x(n);
    for (int k = 0; k < n; ++k) x(k) = uniform(rng, domain.lower(k), domain.upper(k));
    out.push_back(std::move(x));
  }
  return out;
}

TrajectorySet generate_trajectories(const SystemSpec& spec, const SolverConfig& config,
                                    const Domain& domain, int n_traj, int traj_len,
                                    std::uint64_t seed) {
  domain.validate(spec.n);
  config.validate();
  if (traj_len < 1) throw ContractError("generate_trajectories: trajectory length must be >= 1");
  const auto initial = sample_initial_conditions(domain, n_traj, seed);

  TrajectorySet set;
  set.d = spec.d;
  set.delta = config.delta;
  set.trajectories.reserve(initial.size());
  if (traj_len == 1) {
    for (const auto& x0 : initial) set.trajectories.push_back(spec.observe(x0));
    return set;
  }
  auto full = kernels::integrate_batch(spec, config, initial, traj_len - 1);
  for (auto& states : full) set.trajectories.push_back(states.topRows(spec.d));
  return set;
}

std::vector<int> window_starts(int length, int n_mem, const SelectionStrategy& strategy,
                               std::size_t index) {
  strategy.validate();
  const int available = length - n_mem - 1;
  if (strategy.kind == SelectionKind::deterministic) {
    if (available < 1) return {};
    std::vector<int> starts(static_cast<std::size_t>(available));
    std::iota(starts.begin(), starts.end(), 0);
    return starts;
  }
  if (strategy.per_trajectory > available) {
    throw ContractError("random selection wants " + std::to_string(strategy.per_trajectory) +
                        " windows from trajectory " + std::to_string(index) + " but only " +
                        std::to_string(std::max(available, 0)) + " start positions exist (K=" +
                        std::to_string(length) + ", n_mem=" + std::to_string(n_mem) + ")");
  }
  // Partial Fisher-Yates: distinct draws without replacement.
  std::vector<int> pool(static_cast<std::size_t>(available));
  std::iota(pool.begin(), pool.end(), 0);
  auto rng = make_stream(strategy.seed, "window-select", index);
  const auto take = static_cast<std::size_t>(strategy.per_trajectory);
  for (std::size_t i = 0; i < take; ++i) {
    const auto remaining = pool.size() - i;
    const auto pick = i + static_cast<std::size_t>(rng() % remaining);
    std::swap(pool[i], pool[pick]);
  }
  pool.resize(take);
  std::sort(pool.begin(), pool.end());
  return pool;
}

MemoryWindowDataset build_dataset(const TrajectorySet& trajs, int n_mem,
                                  const SelectionStrategy& strategy) {
  trajs.validate();
  if (n_mem < 0) throw ContractError("build_dataset: n_mem must be >= 0");

  std::vector<std::vector<int>> starts;
  Index total = 0;
  for (std::size_t i = 0; i < trajs.trajectories.size(); ++i) {
    starts.push_back(window_starts(static_cast<int>(trajs.trajectories[i].cols()), n_mem,
                                   strategy, i));
    total += static_cast<Index>(starts.back().size());
  }

  MemoryWindowDataset ds;
  ds.d = trajs.d;
  ds.n_mem = n_mem;
  ds.inputs.resize(ds.input_width(), total);
  ds.targets.resize(trajs.d, total);
  const int d = trajs.d;
  Index j = 0;
  for (std::size_t i = 0; i < trajs.trajectories.size(); ++i) {
    const auto& traj = trajs.trajectories[i];
    for (const int s : starts[i]) {
      // newest first: block k holds z_{s + n_mem - k}
      for (int k = 0; k <= n_mem; ++k) {
        ds.inputs.col(j).segment(static_cast<Index>(k) * d, d) = traj.col(s + n_mem - k);
      }
      ds.targets.col(j) = traj.col(s + n_mem + 1);
      ++j;
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Text formats

namespace {

void write_row(std::ostream& out, const auto& values) {
  for (Index k = 0; k < values.size(); ++k) out << (k ? " " : "") << format_double(values(k));
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

}  // namespace

void save_dataset(const MemoryWindowDataset& ds, const std::filesystem::path& path) {
  ds.validate();
  auto out = open_out(path);
  out << "d=" << ds.d << " n_mem=" << ds.n_mem << " J=" << ds.size() << '\n';
  for (Index j = 0; j < ds.size(); ++j) {
    write_row(out, ds.inputs.col(j));
    out << " ; ";
    write_row(out, ds.targets.col(j));
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

MemoryWindowDataset load_dataset(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ":1: empty dataset file");
  int d = 0, n_mem = -1;
  long long count = -1;
  char tail = 0;
  if (std::sscanf(line.c_str(), "d=%d n_mem=%d J=%lld%c", &d, &n_mem, &count, &tail) != 3 ||
      d < 1 || n_mem < 0 || count < 0) {
    throw FormatError(path.string() + ":1: expected header 'd=<d> n_mem=<n> J=<J>'");
  }
  MemoryWindowDataset ds;
  ds.d = d;
  ds.n_mem = n_mem;
  ds.inputs.resize(ds.input_width(), count);
  ds.targets.resize(d, count);
  for (Index j = 0; j < count; ++j) {
    const std::string where = path.string() + ":" + std::to_string(j + 2);
    if (!std::getline(in, line)) throw FormatError(where + ": expected " + std::to_string(count) +
                                                   " rows, file ends early");
    const auto split = line.find(';');
    if (split == std::string::npos || line.find(';', split + 1) != std::string::npos) {
      throw FormatError(where + ": row must have exactly one ';' separator");
    }
    const auto input = parse_doubles(std::string_view(line).substr(0, split), where);
    const auto target = parse_doubles(std::string_view(line).substr(split + 1), where);
    if (static_cast<int>(input.size()) != ds.input_width()) {
      throw FormatError(where + ": input has " + std::to_string(input.size()) +
                        " values, header implies d*(n_mem+1) = " +
                        std::to_string(ds.input_width()));
    }
    if (static_cast<int>(target.size()) != d) {
      throw FormatError(where + ": target has " + std::to_string(target.size()) +
                        " values, header says d = " + std::to_string(d));
    }
    ds.inputs.col(j) = Eigen::Map<const Vec>(input.data(), ds.input_width());
    ds.targets.col(j) = Eigen::Map<const Vec>(target.data(), d);
  }
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      throw FormatError(path.string() + ": more rows than J=" + std::to_string(count));
    }
  }
  return ds;
}

void save_trajectories(const TrajectorySet& trajs, const std::filesystem::path& path) {
  trajs.validate();
  auto out = open_out(path);
  out << "d=" << trajs.d << " delta=" << format_double(trajs.delta)
      << " n_traj=" << trajs.trajectories.size() << '\n';
  for (const auto& t : trajs.trajectories) {
    out << "K=" << t.cols() << '\n';
    for (Index k = 0; k < t.cols(); ++k) {
      write_row(out, t.col(k));
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

TrajectorySet load_trajectories(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  int line_no = 1;
  auto where = [&] { return path.string() + ":" + std::to_string(line_no); };
  if (!std::getline(in, line)) throw FormatError(where() + ": empty trajectory file");
  int d = 0;
  long long n_traj = -1;
  char delta_buf[64] = {0};
  if (std::sscanf(line.c_str(), "d=%d delta=%63s n_traj=%lld", &d, delta_buf, &n_traj) != 3 ||
      d < 1 || n_traj < 0) {
    throw FormatError(where() + ": expected header 'd=<d> delta=<delta> n_traj=<N>'");
  }
  TrajectorySet set;
  set.d = d;
  if (!parse_double(delta_buf, set.delta)) throw FormatError(where() + ": bad delta");
  for (long long i = 0; i < n_traj; ++i) {
    ++line_no;
    long long k = 0;
    if (!std::getline(in, line) || std::sscanf(line.c_str(), "K=%lld", &k) != 1 || k < 1) {
      throw FormatError(where() + ": expected 'K=<K>' for trajectory " + std::to_string(i));
    }
    Mat t(d, k);
    for (long long s = 0; s < k; ++s) {
      ++line_no;
      if (!std::getline(in, line)) throw FormatError(where() + ": truncated trajectory");
      const auto row = parse_doubles(line, where());
      if (static_cast<int>(row.size()) != d) {
        throw FormatError(where() + ": expected " + std::to_string(d) + " values");
      }
      t.col(s) = Eigen::Map<const Vec>(row.data(), d);
    }
    set.trajectories.push_back(std::move(t));
  }
  try {
    set.validate();
  } catch (const ContractError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return set;
}

}  // namespace mzl
