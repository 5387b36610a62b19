#include <set>

#include <doctest.h>

#include "wng/errors.hpp"
#include "wng/estimator.hpp"

using namespace wng;

namespace {

KernelConfig fixed(double bandwidth) {
  KernelConfig k;
  k.mode = BandwidthMode::Fixed;
  k.bandwidth = bandwidth;
  return k;
}

WngWorkspace workspace(const Mat& j, double epsilon, const Mat& l) {
  WngWorkspace ws;
  ws.J = j;
  ws.L = SymmetricMatrix(l);
  ws.epsilon = epsilon;
  return ws;
}

}  // namespace

TEST_CASE("build_basis clamps and is deterministic") {
  BehaviorBatch one{Mat::Zero(1, 2)};
  CHECK(build_basis(one, 5, 3).size() == 1);

  BehaviorBatch batch{Mat::Random(100, 3)};
  const BasisSpec a = build_basis(batch, 5, 42), b = build_basis(batch, 5, 42);
  CHECK(a.points == b.points);
  CHECK(a.dims == b.dims);
  REQUIRE(a.size() == 5);
  std::set<std::vector<double>> rows;
  for (Index m = 0; m < 5; ++m) {
    rows.insert({a.points(m, 0), a.points(m, 1), a.points(m, 2)});
    CHECK(a.dims[static_cast<std::size_t>(m)] < 3);
  }
  CHECK(rows.size() == 5);
}

TEST_CASE("build_gram for one sample at the basis point") {
  const double s = 1.5;
  BasisSpec basis{Mat::Constant(1, 1, 0.3), {0}};
  const GramMatrices g = build_gram(Mat::Constant(1, 1, 0.3), basis, fixed(s));
  CHECK(g.C(0, 0) == doctest::Approx(-2.0 / (s * s)));
  CHECK(g.L(0, 0) == doctest::Approx(4.0 / (s * s * s * s)));
}

TEST_CASE("jacobian forms") {
  BehaviorBatch batch{Mat::Random(4, 2)};
  const BasisSpec basis = build_basis(batch, 3, 1);
  const KernelConfig k = fixed(1.0);
  std::vector<Mat> zero(4, Mat::Zero(2, 5));
  CHECK(jacobian_reparam(batch, basis, k, zero).isZero(0.0));

  batch.scores = Mat::Zero(4, 6);
  CHECK(jacobian_score(batch, basis, k).isZero(0.0));
  batch.scores.reset();
  CHECK_THROWS_AS(jacobian_score(batch, basis, k), PreconditionError);

  CHECK(jacobian_es(Mat::Zero(3, 4), Mat::Random(4, 6), 0.1).isZero(0.0));
  Mat e1 = Mat::Zero(1, 3);
  e1(0, 0) = 1.0;
  const Mat j = jacobian_es(Mat::Constant(1, 1, 3.0), e1, 1.0);
  CHECK(j(0, 0) == 3.0);
  CHECK(j.row(0).tail(2).isZero(0.0));
  CHECK_THROWS_AS(jacobian_es(Mat::Ones(1, 1), e1, 0.0), std::invalid_argument);
}

TEST_CASE("jacobian_score single sample") {
  // h = 2 at the one sample, score (1, -1) -> row (2, -2).
  BehaviorBatch batch{Mat::Zero(1, 1)};
  batch.scores = Mat(1, 2);
  *batch.scores << 1.0, -1.0;
  BasisSpec basis{Mat::Zero(1, 1), {0}};
  const Mat h = basis_values(batch.samples, basis, fixed(1.0));
  const Mat j = jacobian_score(batch, basis, fixed(1.0));
  CHECK(j(0, 0) == doctest::Approx(h(0, 0)));
  CHECK(j(0, 1) == doctest::Approx(-h(0, 0)));
}

TEST_CASE("estimate_wng with J = 0 scales by 1 / epsilon") {
  const WngWorkspace ws = workspace(Mat::Zero(2, 3), 0.25, Mat::Identity(2, 2));
  Vec g(3);
  g << 1.0, -2.0, 0.5;
  CHECK(estimate_wng(g, ws).isApprox(4.0 * g));
}

TEST_CASE("adapt_epsilon band") {
  WngWorkspace ws = workspace(Mat::Zero(1, 2), 1.0, Mat::Identity(1, 1));
  Vec g(2), gw(2);
  g << 1.0, 0.0;
  gw << 0.5, 0.0;  // r = 0.5
  CHECK(adapt_epsilon(ws, g, gw) == 1.0);
  gw << 0.1, 0.0;  // r = 0.9
  CHECK(reduction_factor(ws, g, gw) == doctest::Approx(0.9));
  CHECK(adapt_epsilon(ws, g, gw) == 2.0);
  ws.epsilon = 1e5;
  gw << 0.1 / 1e5, 0.0;
  CHECK(adapt_epsilon(ws, g, gw) == 1e5);
}

TEST_CASE("WngConfig validation") {
  WngConfig c;
  c.num_basis = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = WngConfig{};
  c.reduction_low = 0.8;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
