#include "goodweights/numerics.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>

namespace goodweights {

// tanh(v) = sgn(v) (1 - e) / (1 + e) with e = exp(-2|v|). The exponential is
// a Cody-Waite reduction plus a degree-12 Taylor polynomial; arguments are
// clamped at |v| = 20, where tanh is 1 to double precision. Branch-free so the
// loop vectorizes (this file is built with -fno-trapping-math).
void tanh_inplace(std::span<double> x) {
  constexpr double kLog2e = 1.4426950408889634;
  constexpr double kLn2Hi = 0.6931471803691238;
  constexpr double kLn2Lo = 1.9082149292705877e-10;
  constexpr double kShift = 0x1.8p52;
  double* __restrict p_x = x.data();
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = p_x[i];
    const double av = std::fabs(v);
    const double y = -2.0 * (av > 20.0 ? 20.0 : av);  // NaN passes through
    const double kd = y * kLog2e + kShift;
    const double k = kd - kShift;
    const double r = (y - k * kLn2Hi) - k * kLn2Lo;
    double p = 1.0 / 479001600.0;
    p = p * r + 1.0 / 39916800.0;
    p = p * r + 1.0 / 3628800.0;
    p = p * r + 1.0 / 362880.0;
    p = p * r + 1.0 / 40320.0;
    p = p * r + 1.0 / 5040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    // The low mantissa bits of kd hold k; shifting them into the exponent
    // field gives 2^k.
    std::uint64_t kb;
    std::memcpy(&kb, &kd, sizeof kb);
    const std::uint64_t bits = (kb + 1023) << 52;
    double scale;
    std::memcpy(&scale, &bits, sizeof scale);
    const double e = p * scale;
    const double t = (1.0 - e) / (1.0 + e);
    p_x[i] = v < 0.0 ? -t : t;
  }
}

}  // namespace goodweights
