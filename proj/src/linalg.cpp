#include "mzl/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace mzl {

namespace {

// Pade(13,13) numerator coefficients; the denominator uses the same values with
// alternating signs on odd powers.
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

// Largest 1-norm for which the unscaled degree-13 approximant meets double precision.
constexpr double kTheta13 = 5.371920351148152;

}  // namespace

Mat matrix_exponential(const Mat& a) {
  if (a.rows() != a.cols()) {
    throw ContractError("matrix_exponential: matrix is " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + ", expected square");
  }
  if (!a.allFinite()) throw ContractError("matrix_exponential: non-finite entry");
  const Index m = a.rows();
  if (m == 0) return Mat(0, 0);

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  if (norm1 == 0.0) return Mat::Identity(m, m);
  int squarings = 0;
  if (norm1 > kTheta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
  const Mat scaled = a * std::ldexp(1.0, -squarings);

  const Mat ident = Mat::Identity(m, m);
  const Mat a2 = scaled * scaled;
  const Mat a4 = a2 * a2;
  const Mat a6 = a4 * a2;
  const auto& b = kPade13;

  const Mat u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                      b[3] * a2 + b[1] * ident;
  const Mat u = scaled * u_inner;
  const Mat v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 +
                b[0] * ident;

  Mat result = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) result = result * result;
  return result;
}

}  // namespace mzl
