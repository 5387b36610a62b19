#include <cmath>

#include <doctest.h>

#include "wng/errors.hpp"
#include "wng/kernel.hpp"

using namespace wng;

namespace {

KernelConfig fixed(double bandwidth) {
  KernelConfig k;
  k.mode = BandwidthMode::Fixed;
  k.bandwidth = bandwidth;
  return k;
}

Vec v(std::initializer_list<double> xs) {
  Vec out(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("kernel_eval examples") {
  const KernelConfig k = fixed(1.3);
  CHECK(kernel_eval(v({0.4, -2.0}), v({0.4, -2.0}), k) == 1.0);
  CHECK(kernel_eval(v({0.0}), v({1.3}), k) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(kernel_eval(v({1, 2}), v({4, 6}), fixed(5.0)) == doctest::Approx(0.3678794).epsilon(1e-7));
  CHECK_THROWS_AS(kernel_eval(v({1, 2}), v({1}), k), std::invalid_argument);
}

TEST_CASE("kernel_partial examples") {
  const double s = 0.7;
  const KernelConfig k = fixed(s);
  CHECK(kernel_partial(v({0.2, 0.3}), v({0.2, 0.3}), 1, k) == 0.0);
  CHECK(kernel_partial(v({0.0}), v({s}), 0, k) == doctest::Approx(-2.0 * std::exp(-1.0) / s));
  CHECK_THROWS_AS(kernel_partial(v({0.0}), v({0.0}), 1, k), std::invalid_argument);
}

TEST_CASE("kernel_mixed_second at the centre") {
  const double s = 0.8;
  const KernelConfig k = fixed(s);
  const Vec x = v({1.0, -1.0});
  // d^2/dx_i dx_im of exp(-|y - x|^2 / s^2) at x = y
  CHECK(kernel_mixed_second(x, x, 0, 0, k) == doctest::Approx(-2.0 / (s * s)));
  CHECK(kernel_mixed_second(x, x, 0, 1, k) == 0.0);
  CHECK_THROWS_AS(kernel_mixed_second(x, x, 2, 0, k), std::invalid_argument);
}

TEST_CASE("median_bandwidth") {
  Mat p(2, 1);
  p << 0, 1;
  CHECK(median_bandwidth(p) == 1.0);
  CHECK(median_bandwidth(Mat::Zero(3, 1)) == kMinBandwidthSq);
  Mat q(3, 1);
  q << 0, 1, 3;
  CHECK(median_bandwidth(q) == 4.0);
  CHECK_THROWS_AS(median_bandwidth(Mat::Zero(1, 2)), std::invalid_argument);
}

TEST_CASE("solve_psd") {
  CHECK(solve_psd(SymmetricMatrix::identity(3), v({1, 2, 3})) == v({1, 2, 3}));
  Mat a = Mat::Zero(2, 2);
  a(0, 0) = 2.0;
  const Vec x = solve_psd(SymmetricMatrix(a), v({4, 5}));
  CHECK(x(0) == doctest::Approx(2.0));
  CHECK(x(1) == 0.0);
  Mat bad = Mat::Identity(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(solve_psd(SymmetricMatrix(bad), v({1, 1})), NumericalError);
}

TEST_CASE("SymmetricMatrix mirrors exactly") {
  Mat a(2, 2);
  a << 1.0, 0.1, 0.3, 2.0;
  const SymmetricMatrix s(a);
  CHECK(s(0, 1) == s(1, 0));
  CHECK(s(0, 1) == doctest::Approx(0.2));
}
