#include <doctest.h>

#include "wng/errors.hpp"
#include "wng/es.hpp"

using namespace wng;

TEST_CASE("es_gradient examples") {
  const Mat eps = Mat::Random(4, 3);
  CHECK(es_gradient(Vec::Constant(4, 1.5), 1.5, eps, 0.2).isZero(0.0));
  Mat e1 = Mat::Zero(1, 3);
  e1(0, 0) = 1.0;
  const Vec g = es_gradient(Vec::Constant(1, 2.0), 0.0, e1, 1.0);
  CHECK(g(0) == 2.0);
  CHECK(g.tail(2).isZero(0.0));
  CHECK_THROWS_AS(es_gradient(Vec::Zero(1), 0.0, e1, -1.0), std::invalid_argument);
}

TEST_CASE("wnes_update endpoints") {
  const Vec theta = Vec::Zero(2);
  const Vec ge = Vec::Unit(2, 0), gw = Vec::Unit(2, 1);
  CHECK(wnes_update(theta, ge, gw, 0.0, 0.3) == Vec(0.3 * ge));
  CHECK(wnes_update(theta, ge, gw, 1.0, 0.3) == Vec(0.3 * gw));
  const Vec rep = wnes_update(theta, ge, gw, -0.5, 1.0);
  CHECK(rep(0) == doctest::Approx(1.5));
  CHECK(rep(1) == doctest::Approx(-0.5));
}

TEST_CASE("clip_to_norm") {
  Vec v(2);
  v << 3.0, 4.0;
  CHECK(clip_to_norm(v, 1.0).norm() == doctest::Approx(1.0));
  CHECK(clip_to_norm(v, 10.0) == v);
}

TEST_CASE("sinkhorn_w2 examples") {
  const Mat a = Mat::Random(6, 2);
  CHECK(sinkhorn_w2(a, a, 0.1, 200) <= 1e-8);
  Mat p = Mat::Zero(1, 2), q(1, 2);
  q << 3.0, 0.0;
  CHECK(sinkhorn_w2(p, q, 0.1, 200) == doctest::Approx(9.0).epsilon(1e-6));
}

TEST_CASE("antithetic perturbations come in pairs") {
  const Mat eps = sample_perturbations(6, 3, true, 11);
  for (Index i = 0; i < 6; i += 2) CHECK(eps.row(i) == -eps.row(i + 1));
  CHECK_THROWS_AS(sample_perturbations(5, 3, true, 11), std::invalid_argument);
}

TEST_CASE("es config validation") {
  EsConfig c;
  c.delta = 0.5;  // needs a WNG configuration
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.wng = WngConfig{};
  CHECK_NOTHROW(c.validate());
  c.delta = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = EsConfig{};
  c.population = 7;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(parse_es_method("nes"), ConfigError);
}

TEST_CASE("run_es is reproducible and logs every iteration") {
  EsConfig c = es_preset(EsMethod::Vanilla);
  c.iterations = 5;
  c.seed = 2;
  const RunLog a = run_es(c, PointWorld{}, GaussianPolicy());
  const RunLog b = run_es(c, PointWorld{}, GaussianPolicy());
  CHECK(format_log(a, false) == format_log(b, false));
  CHECK(a.series("final_x", 2).size() == 6);
  CHECK_FALSE(a.last("epsilon", 2));
}
