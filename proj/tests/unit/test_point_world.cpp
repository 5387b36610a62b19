#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>

#include "wng/errors.hpp"
#include "wng/point_world.hpp"

using namespace wng;

TEST_CASE("step examples") {
  const PointWorld w;
  StepResult r = step(Point(0, 0), Point(0.5, 0), w);
  CHECK(r.state == Point(0.5, 0));
  CHECK(r.reward == doctest::Approx(-9.5));
  r = step(Point(4.9, 0), Point(0.5, 0), w);
  CHECK(r.state.x() == doctest::Approx(4.95));
  CHECK(r.reward == doctest::Approx(-5.05));
  CHECK(step(Point(0, 0), Point(10, 0), w).state.x() == doctest::Approx(0.5));
  CHECK_FALSE(inside_wall(r.state, w));
}

TEST_CASE("the wall can be disabled") {
  PointWorld w;
  w.wall_enabled = false;
  CHECK(step(Point(4.9, 0), Point(0.5, 0), w).state.x() == doctest::Approx(5.4));
}

TEST_CASE("rollout of the zero policy") {
  const PointWorld w;
  const Trajectory t = rollout(GaussianPolicy(), w, false, 0);
  CHECK(t.total_return == doctest::Approx(-500.0));
  CHECK(embed(t, EmbeddingKind::FinalState) == Vec::Zero(2));
  const Trajectory a = rollout(GaussianPolicy(), w, true, 5), b = rollout(GaussianPolicy(), w, true, 5);
  CHECK(a.states == b.states);
  CHECK(a.actions == b.actions);
}

TEST_CASE("reward-to-go embedding") {
  Trajectory t;
  t.states.assign(4, Point(0, 0));
  t.actions.assign(3, Point(0, 0));
  t.rewards = {-1.0, -1.0, -1.0};
  Vec want(3);
  want << -3.0, -2.0, -1.0;
  CHECK(embed(t, EmbeddingKind::RewardToGo) == want);
  CHECK(embedding_dim(EmbeddingKind::ActionConcat, 3) == 6);
  CHECK_THROWS_AS(parse_embedding("final"), ConfigError);
}

TEST_CASE("policy score at the mean") {
  Vec p(8);
  p << 0.1, -0.2, 0.3, 0.4, 0.5, -0.6, -0.3, 0.2;
  const GaussianPolicy pi(p);
  const Point s(1.0, 2.0);
  const Vec score = policy_score(pi, s, pi.mean(s));
  CHECK(score.head(6).isZero(1e-15));
  CHECK(score(6) == doctest::Approx(-1.0));
  CHECK(score(7) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(GaussianPolicy(Vec::Zero(3)), std::invalid_argument);
}

TEST_CASE("trajectory CSV") {
  const Trajectory t = rollout(GaussianPolicy(), PointWorld{}, false, 0);
  const auto path = std::filesystem::temp_directory_path() / "wng_unit_traj.csv";
  write_trajectory(t, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,x,y,ax,ay,r");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 51);
  std::filesystem::remove(path);
}

TEST_CASE("world validation") {
  PointWorld w;
  w.horizon = 0;
  CHECK_THROWS_AS(w.validate(), ConfigError);
}
