#include <cmath>

#include <doctest.h>

#include "wng/errors.hpp"
#include "wng/pg.hpp"

using namespace wng;

namespace {

Trajectory flat(std::vector<double> rewards) {
  Trajectory t;
  t.states.assign(rewards.size() + 1, Point(0.0, 0.0));
  t.actions.assign(rewards.size(), Point(0.1, -0.1));
  t.rewards = std::move(rewards);
  return t;
}

}  // namespace

TEST_CASE("advantages examples") {
  const AdvantageBatch a = advantages({flat({1.0, 1.0, 1.0})}, 0.5, false, false);
  CHECK(a.returns_to_go(0) == 1.75);
  CHECK(a.returns_to_go(1) == 1.5);
  CHECK(a.returns_to_go(2) == 1.0);
  const AdvantageBatch z = advantages({flat({0.0, 0.0})}, 0.9, true, false);
  CHECK(z.advantages.isZero(0.0));
  const AdvantageBatch g0 = advantages({flat({2.0, -1.0})}, 0.0, false, false);
  CHECK(g0.advantages(0) == 2.0);
  CHECK(g0.advantages(1) == -1.0);
}

TEST_CASE("surrogates") {
  const GaussianPolicy pi;
  const std::vector<Trajectory> batch = {flat({0.0, 0.0})};
  const SurrogateValue zero = surrogate_onpolicy(batch, Vec::Zero(2), pi);
  CHECK(zero.value == 0.0);
  CHECK(zero.grad.isZero(0.0));

  Vec adv(2);
  adv << 0.5, -1.5;
  CHECK(surrogate_ratio(batch, adv, pi, pi, RatioMode::Plain).value == doctest::Approx(-0.5));
  CHECK_THROWS_AS(surrogate_onpolicy(batch, Vec::Zero(3), pi), std::invalid_argument);
}

TEST_CASE("clipped ratio term") {
  // Choose a policy whose ratio at the sampled action is exactly 1.5.
  const GaussianPolicy old;
  Trajectory t = flat({0.0});
  t.actions = {Point(0.0, 0.0)};
  Vec p = old.params();
  p(6) = -std::log(1.5);  // density at the mean scales by 1 / sigma
  const GaussianPolicy cur(p);
  const double rho = std::exp(cur.log_prob(Point(0, 0), Point(0, 0)) - old.log_prob(Point(0, 0), Point(0, 0)));
  REQUIRE(rho == doctest::Approx(1.5));
  CHECK(surrogate_ratio({t}, Vec::Ones(1), cur, old, RatioMode::Clip, 0.2).value == doctest::Approx(1.2));
}

TEST_CASE("KL penalty examples") {
  const GaussianPolicy old;
  const std::vector<Point> states = {Point(1.0, 2.0)};
  const SurrogateValue same = kl_penalty_term(old, old, states);
  CHECK(same.value == 0.0);
  CHECK(same.grad.isZero(0.0));
  Vec p = old.params();
  p(4) = 1.0;
  CHECK(kl_penalty_term(GaussianPolicy(p), old, states).value == doctest::Approx(0.5));
}

TEST_CASE("pg config validation") {
  PgConfig c;
  c.gamma = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = PgConfig{};
  c.beta = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = PgConfig{};
  c.trust = TrustRegion::Clip;  // needs the ratio surrogate
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(parse_pg_method("trpo"), ConfigError);
}

TEST_CASE("run_pg rows") {
  PgConfig c = pg_preset(PgMethod::Wnpg);
  c.iterations = 2;
  c.trajectories = 4;
  c.seed = 1;
  const RunLog log = run_pg(c, PointWorld{});
  CHECK(log.series("return", 1).size() == 3);
  CHECK(log.series("epsilon", 1).size() == 3);
  CHECK(*log.last("grad_norm", 1) == 0.0);
  CHECK(*log.at("log_std_mean", 0, 1) == doctest::Approx(c.initial_log_std));
}
