#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace mzl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Thrown when an input violates a documented shape or value contract.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a text artifact (dataset, trajectory file, checkpoint, config) is malformed.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Derives an independent 64-bit seed from a master seed, a stage label and an index.
/// Every random stream in the library goes through this, so a single master seed
/// pins all artifacts.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index = 0);

inline std::mt19937_64 make_stream(std::uint64_t master, std::string_view label,
                                   std::uint64_t index = 0) {
  return std::mt19937_64(derive_seed(master, label, index));
}

/// Uniform draw on [lo, hi) from the top 53 bits, independent of libstdc++'s
/// distribution implementation.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

/// Standard normal draw (Box-Muller, one value per call).
double standard_normal(std::mt19937_64& rng);

/// Parses a whole token as a double (accepts what format_double writes, including
/// subnormals). Returns false on any leftover characters.
bool parse_double(std::string_view token, double& out);

/// Splits on whitespace and parses each token; throws FormatError naming `where`.
std::vector<double> parse_doubles(std::string_view text, const std::string& where);

/// Formats a double with enough digits to round-trip exactly.
std::string format_double(double value);

}  // namespace mzl
