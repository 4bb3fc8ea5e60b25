#pragma once

#include "mzl/common.hpp"

namespace mzl {

/// e^a by scaling-and-squaring around a degree-13 diagonal Pade approximant.
/// Throws ContractError for non-square or non-finite input.
Mat matrix_exponential(const Mat& a);

}  // namespace mzl
