// Point world, ES, PG and run-log properties.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include <unistd.h>

#include "verify/checks.hpp"
#include "verify/oracles.hpp"
#include "wng/errors.hpp"
#include "wng/es.hpp"
#include "wng/pg.hpp"
#include "wng/point_world.hpp"
#include "wng/random.hpp"
#include "wng/run_log.hpp"
#include "wng/sinkhorn.hpp"

namespace wng::verify {
namespace {

Mat random_matrix(Rng& rng, Index r, Index c, double scale = 1.0) {
  Mat m(r, c);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

GaussianPolicy random_policy(Rng& rng, double log_std = -0.5) {
  Vec p = 0.3 * rng.normal_vector(GaussianPolicy::kNumParams);
  p.tail<2>().array() += log_std;
  return GaussianPolicy(p);
}

/// True if the move from a to b passes through the wall band.
bool crosses_wall(const Point& a, const Point& b, const PointWorld& w) {
  const double lo = w.wall_x - w.margin, hi = w.wall_x + w.margin;
  const double ylim = w.wall_half_length + w.margin;
  if (inside_wall(b, w)) return true;
  const bool left_to_right = a.x() <= lo && b.x() >= hi;
  const bool right_to_left = a.x() >= hi && b.x() <= lo;
  if (!left_to_right && !right_to_left) return false;
  // Any crossing of the band must pass above or below it.
  for (double xe : {lo, hi}) {
    const double s = (xe - a.x()) / (b.x() - a.x());
    if (std::abs(a.y() + s * (b.y() - a.y())) <= ylim) return true;
  }
  return false;
}

CheckResult env_step() {
  Tally t;
  const PointWorld w;
  StepResult r = step(Point(0, 0), Point(0.5, 0), w);
  t.near(r.state.x(), 0.5, 0.0, "free move x");
  t.near(r.reward, -9.5, 1e-15, "free move reward");
  r = step(Point(4.9, 0), Point(0.5, 0), w);
  t.near(r.state.x(), 4.95, 1e-15, "blocked x");
  t.near(r.reward, -5.05, 1e-14, "blocked reward");
  r = step(Point(0, 0), Point(10, 0), w);
  t.near(r.state.x(), 0.5, 1e-15, "clipped action");
  r = step(Point(4.8, 3.2), Point(0.4, 0), w);
  t.near(r.state.x(), 5.2, 1e-15, "move passing above the wall");

  Rng rng(3001);
  int crossings = 0;
  double worst_reward = 0.0;
  const double bound = -w.reward_scale * ((w.start - w.goal).norm() + w.horizon * w.max_step);
  for (int i = 0; i < 100000; ++i) {
    Point s(rng.uniform(3.0, 7.0), rng.uniform(-4.0, 4.0));
    if (inside_wall(s, w)) continue;
    const Point a(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    const StepResult n = step(s, a, w);
    if (crosses_wall(s, n.state, w)) ++crossings;
    t.expect((n.state - s).norm() <= w.max_step + 1e-12, "step longer than max_step");
    worst_reward = std::min(worst_reward, n.reward);
    t.expect(n.reward <= 0.0, "positive reward");
  }
  t.expect(crossings == 0, format("%d wall crossings", crossings));
  t.expect(worst_reward >= bound, "reward below the reachable bound");
  return t.result(format("1e5 random steps, %d crossings", crossings));
}

CheckResult env_rollout() {
  Tally t;
  const PointWorld w;
  const Trajectory still = rollout(GaussianPolicy(), w, false, 0);
  t.near(still.total_return, -500.0, 1e-12, "stationary return");
  t.expect(still.states.size() == 51 && still.actions.size() == 50 && still.rewards.size() == 50, "trajectory shape");
  t.expect(embed(still, EmbeddingKind::FinalState).isZero(0.0), "stationary final state");

  Rng rng(3101);
  for (int trial = 0; trial < 200; ++trial) {
    const GaussianPolicy pi = random_policy(rng, 0.5);
    Vec p = pi.params();
    p(4) += 0.5;  // drift towards the wall
    const GaussianPolicy drift(p);
    const Trajectory a = rollout(drift, w, true, 77 + static_cast<std::uint64_t>(trial));
    const Trajectory b = rollout(drift, w, true, 77 + static_cast<std::uint64_t>(trial));
    t.expect(a.states == b.states && a.rewards == b.rewards, "rollout not reproducible");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.rewards.size(); ++i) {
      sum += a.rewards[i];
      t.expect(!crosses_wall(a.states[i], a.states[i + 1], w), "trajectory crosses the wall");
    }
    t.near(a.total_return, sum, 1e-9, "total_return != sum of rewards");
  }

  Trajectory r3;
  r3.states.assign(4, Point(0, 0));
  r3.actions.assign(3, Point(0, 0));
  r3.rewards = {-1.0, -1.0, -1.0};
  const Vec rtg = embed(r3, EmbeddingKind::RewardToGo);
  t.expect(rtg.size() == 3 && rtg(0) == -3.0 && rtg(1) == -2.0 && rtg(2) == -1.0, "reward-to-go partial sums");
  t.expect(embed(still, EmbeddingKind::ActionConcat).size() == 100, "action-concat length");
  t.expect(embed(still, EmbeddingKind::RewardToGo).size() == 50, "reward-to-go length");
  for (EmbeddingKind k : {EmbeddingKind::FinalState, EmbeddingKind::ActionConcat, EmbeddingKind::RewardToGo}) {
    t.expect(embed(still, k).size() == embedding_dim(k, w.horizon), "embedding_dim mismatch");
    t.expect(parse_embedding(to_string(k)) == k, "embedding name roundtrip");
  }
  return t.result();
}

CheckResult env_score() {
  Tally t;
  Rng rng(3201);
  const GaussianPolicy pi = random_policy(rng);
  const Point s(0.7, -1.1);
  const Vec at_mean = policy_score(pi, s, pi.mean(s));
  t.expect(at_mean.head<6>().isZero(1e-15), "mean/weight score nonzero at the mean");
  t.near(at_mean(6), -1.0, 1e-15, "log_std score 0");
  t.near(at_mean(7), -1.0, 1e-15, "log_std score 1");

  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const GaussianPolicy q = random_policy(rng);
    const Point st(rng.normal(), rng.normal());
    const Point a = q.sample(st, rng);
    auto f = [&](const Vec& th) { return GaussianPolicy(th).log_prob(st, a); };
    const Vec fd = oracle::fd_gradient(f, q.params(), 1e-6);
    worst = std::max(worst, relative_error(policy_score(q, st, a), fd));
  }
  t.expect(worst < 1e-6, format("score rel err %.2e", worst));

  // E[score] = 0 at a fixed state.
  const int n = 10000;
  Mat scores(n, GaussianPolicy::kNumParams);
  for (int i = 0; i < n; ++i) scores.row(i) = policy_score(pi, s, pi.sample(s, rng)).transpose();
  double worst_z = 0.0;
  for (Index j = 0; j < scores.cols(); ++j) {
    const Vec c = scores.col(j);
    const double se = std::sqrt((c.array() - c.mean()).square().sum() / (n - 1.0) / n);
    worst_z = std::max(worst_z, std::abs(c.mean()) / se);
  }
  t.expect(worst_z < 3.0, format("score mean %.2f SE from 0", worst_z));
  return t.result(format("fd rel err %.1e, score mean within %.2f SE", worst, worst_z));
}

CheckResult es_gradient_examples() {
  Tally t;
  Rng rng(4001);
  const Mat eps = random_matrix(rng, 6, 3);
  t.expect(es_gradient(Vec::Constant(6, 2.5), 2.5, eps, 0.1).isZero(0.0), "equal fitnesses give nonzero gradient");
  Mat e1 = Mat::Zero(1, 3);
  e1(0, 0) = 1.0;
  const Vec g = es_gradient(Vec::Constant(1, 3.0), 1.0, e1, 1.0);
  t.expect(g == Vec(2.0 * e1.row(0).transpose()), "N = 1 example");
  t.expect(throws_as<std::invalid_argument>([&] { es_gradient(Vec::Zero(1), 0.0, e1, 0.0); }), "sigma = 0 accepted");

  Vec th = Vec::Zero(2), ge(2), gw(2);
  ge << 1.0, 0.0;
  gw << 0.0, 1.0;
  const Vec rep = wnes_update(th, ge, gw, -0.5, 1.0);
  t.expect(rep(0) == 1.5 && rep(1) == -0.5, "delta = -0.5 example");
  t.expect(wnes_update(th, ge, gw, 0.0, 0.1) == Vec(0.1 * ge), "delta = 0 is the ES step");
  t.expect(wnes_update(th, ge, gw, 1.0, 0.1) == Vec(0.1 * gw), "delta = 1 is the WNG step");

  const Mat anti = sample_perturbations(6, 4, true, 9);
  for (Index i = 0; i < 6; i += 2) t.expect(anti.row(i) == -anti.row(i + 1), "antithetic pair");
  return t.result();
}

CheckResult es_unbiased() {
  Tally t;
  Vec theta(3);
  theta << 0.5, -1.0, 0.25;
  const double sigma = 0.1;
  const int seeds = 200, n = 20;
  Mat gs(seeds, 3);
  for (int s = 0; s < seeds; ++s) {
    const Mat eps = sample_perturbations(n, 3, true, derive_seed(4101, static_cast<std::uint64_t>(s)));
    Vec f(n);
    for (int i = 0; i < n; ++i) f(i) = -(theta + sigma * eps.row(i).transpose()).squaredNorm();
    gs.row(s) = es_gradient(f, -theta.squaredNorm(), eps, sigma).transpose();
  }
  double worst = 0.0;
  for (Index j = 0; j < 3; ++j) {
    const Vec c = gs.col(j);
    const double se = std::sqrt((c.array() - c.mean()).square().sum() / (seeds - 1.0) / seeds);
    worst = std::max(worst, std::abs(c.mean() + 2.0 * theta(j)) / se);
  }
  t.expect(worst < 3.0, format("%.2f standard errors", worst));
  return t.result(format("worst deviation %.2f SE over 200 seeds", worst));
}

// Linear fitness with an offset and no baseline subtraction: antithetic pairs
// cancel the offset exactly, independent draws do not.
CheckResult es_antithetic() {
  Tally t;
  Vec c(4);
  c << 1.0, -2.0, 0.5, 0.0;
  const double offset = 5.0, sigma = 0.05;
  const int seeds = 300, n = 10;
  Mat ga(seeds, 4), gi(seeds, 4);
  for (int s = 0; s < seeds; ++s) {
    for (bool anti : {true, false}) {
      const Mat eps = sample_perturbations(n, 4, anti, derive_seed(4201, static_cast<std::uint64_t>(s), anti));
      Vec f(n);
      for (int i = 0; i < n; ++i) f(i) = offset + c.dot(sigma * eps.row(i).transpose());
      (anti ? ga : gi).row(s) = es_gradient(f, 0.0, eps, sigma).transpose();
    }
  }
  auto var = [](const Mat& m) { return (m.rowwise() - m.colwise().mean()).squaredNorm() / (m.rows() - 1.0); };
  for (Index j = 0; j < 4; ++j) {
    for (const Mat* m : {&ga, &gi}) {
      const Vec col = m->col(j);
      const double se = std::sqrt((col.array() - col.mean()).square().sum() / (seeds - 1.0) / seeds);
      t.expect(std::abs(col.mean() - c(j)) <= 3.0 * se + 1e-12, "estimate biased on linear fitness");
    }
  }
  t.expect(var(ga) < var(gi), format("antithetic variance %.3g >= %.3g", var(ga), var(gi)));
  return t.result(format("variance %.3g (antithetic) vs %.3g", var(ga), var(gi)));
}

CheckResult es_sinkhorn() {
  Tally t;
  Rng rng(4301);
  const Mat a = random_matrix(rng, 12, 2);
  const Mat b = random_matrix(rng, 9, 2, 1.5).rowwise() + Eigen::RowVector2d(1.0, 0.0);
  t.expect(sinkhorn_divergence(a, a).value <= 1e-8, "self divergence");
  t.near(sinkhorn_w2(Mat::Zero(1, 2), Mat(Eigen::RowVector2d(3.0, 0.0)), 0.1, 200), 9.0, 1e-6, "point masses");
  SinkhornOptions opts;
  opts.max_iters = 2000;
  const SinkhornDivergence ab = sinkhorn_divergence(a, b, opts), ba = sinkhorn_divergence(b, a, opts);
  t.expect(std::abs(ab.value - ba.value) < 1e-9, format("asymmetry %.2e", std::abs(ab.value - ba.value)));
  t.expect(ab.converged && ba.converged, "Sinkhorn did not converge");
  for (int trial = 0; trial < 20; ++trial) {
    const Mat x = random_matrix(rng, 8, 3), y = random_matrix(rng, 11, 3);
    t.expect(sinkhorn_divergence(x, y).value >= -1e-8, "negative divergence");
  }
  return t.result();
}

CheckResult es_sinkhorn_exact() {
  Tally t;
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    Rng rng(derive_seed(4401, static_cast<std::uint64_t>(trial)));
    const Mat a = random_matrix(rng, 10, 2);
    const Mat b = random_matrix(rng, 10, 2).rowwise() + Eigen::RowVector2d(0.5, -0.3);
    const double exact = oracle::exact_assignment_ot(a, b);
    const double approx = sinkhorn_w2(a, b, 0.01, 5000);
    worst = std::max(worst, relative_error(approx, exact));
  }
  t.expect(worst < 0.02, format("rel err %.3f", worst));
  return t.result(format("worst rel err %.4f over 5 pairs", worst));
}

EsConfig short_es(EsMethod m, int iterations, std::uint64_t seed) {
  EsConfig c = es_preset(m);
  c.iterations = iterations;
  c.seed = seed;
  return c;
}

CheckResult es_runs() {
  Tally t;
  const PointWorld w;
  const RunLog clipped = run_es(short_es(EsMethod::Clipped, 30, 1), w, GaussianPolicy());
  for (double u : clipped.series("update_norm", 1)) t.expect(u <= 1.0 + 1e-12, format("update norm %.6f", u));

  const RunLog a = run_es(short_es(EsMethod::Wnes, 15, 2), w, GaussianPolicy());
  const RunLog b = run_es(short_es(EsMethod::Wnes, 15, 2), w, GaussianPolicy());
  t.expect(format_log(a, false) == format_log(b, false), "WNES run not reproducible");
  const RunLog g1 = run_es(short_es(EsMethod::BgWnes, 8, 3), w, GaussianPolicy());
  const RunLog g2 = run_es(short_es(EsMethod::BgWnes, 8, 3), w, GaussianPolicy());
  t.expect(format_log(g1, false) == format_log(g2, false), "BG-WNES run not reproducible");

  // A WNG configuration with delta = 0 must not change the trajectory.
  EsConfig plain = short_es(EsMethod::Vanilla, 20, 4);
  EsConfig with_wng = plain;
  with_wng.wng = WngConfig{};
  const RunLog p = run_es(plain, w, GaussianPolicy());
  const RunLog q = run_es(with_wng, w, GaussianPolicy());
  for (const char* m : {"return", "final_x", "final_y", "update_norm"}) {
    t.expect(p.series(m, 4) == q.series(m, 4), format("%s differs with an unused WNG estimate", m));
  }
  EsConfig bad = plain;
  bad.delta = 1.5;
  t.expect(throws_as<ConfigError>([&] { bad.validate(); }), "delta > 1 accepted");
  return t.result();
}

std::vector<Trajectory> collect(const GaussianPolicy& pi, const PointWorld& w, int n, std::uint64_t seed) {
  std::vector<Trajectory> out;
  for (int i = 0; i < n; ++i) out.push_back(rollout(pi, w, true, derive_seed(seed, static_cast<std::uint64_t>(i))));
  return out;
}

CheckResult pg_advantages() {
  Tally t;
  Trajectory tr;
  tr.states.assign(4, Point(0.0, 0.0));
  tr.actions.assign(3, Point(0.0, 0.0));
  tr.rewards = {1.0, 1.0, 1.0};
  const AdvantageBatch g = advantages({tr}, 0.5, false, false);
  t.expect(g.returns_to_go(0) == 1.75 && g.returns_to_go(1) == 1.5 && g.returns_to_go(2) == 1.0, "discounted sums");
  const AdvantageBatch g0 = advantages({tr}, 0.0, false, false);
  t.expect(g0.advantages == Vec::Ones(3), "gamma = 0 gives immediate rewards");
  tr.rewards = {0.0, 0.0, 0.0};
  t.expect(advantages({tr}, 0.9, true, false).advantages.isZero(0.0), "zero rewards give nonzero advantages");

  Rng rng(5001);
  const PointWorld w;
  const auto trajs = collect(random_policy(rng, 0.0), w, 8, 11);
  const AdvantageBatch n = advantages(trajs, 0.99, true, true);
  t.near(n.advantages.mean(), 0.0, 1e-9, "normalized mean");
  t.expect(throws_as<std::invalid_argument>([&] { advantages(trajs, 1.0, true); }), "gamma = 1 accepted");
  return t.result();
}

CheckResult pg_finite_differences() {
  Tally t;
  Rng rng(5101);
  PointWorld w;
  w.horizon = 10;
  const GaussianPolicy old = random_policy(rng);
  const auto trajs = collect(old, w, 6, 21);
  const Vec adv = advantages(trajs, 0.9, true, true).advantages;
  const GaussianPolicy cur(old.params() + 0.05 * rng.normal_vector(8));
  std::vector<Point> states;
  for (const Trajectory& tr : trajs) states.insert(states.end(), tr.states.begin(), tr.states.end() - 1);

  using Fn = std::function<SurrogateValue(const Vec&)>;
  const std::vector<std::pair<const char*, Fn>> terms = {
      {"on-policy", [&](const Vec& th) { return surrogate_onpolicy(trajs, adv, GaussianPolicy(th)); }},
      {"ratio", [&](const Vec& th) { return surrogate_ratio(trajs, adv, GaussianPolicy(th), old, RatioMode::Plain); }},
      {"kl", [&](const Vec& th) { return kl_penalty_term(GaussianPolicy(th), old, states); }},
  };
  double worst = 0.0;
  for (const auto& [name, fn] : terms) {
    const Vec g = fn(cur.params()).grad;
    for (int d = 0; d < 8; ++d) {
      const Vec u = rng.normal_vector(8).normalized();
      auto f = [&](double s) { return fn(cur.params() + s * u).value; };
      const double fd = oracle::central_difference(f, 0.0, 1e-5);
      const double err = std::abs(g.dot(u) - fd) / std::max(std::abs(fd), 1e-8);
      worst = std::max(worst, err);
      t.expect(err < (std::string(name) == "kl" ? 1e-6 : 1e-4), format("%s directional rel err %.2e", name, err));
    }
  }
  const SurrogateValue z = surrogate_onpolicy(trajs, Vec::Zero(adv.size()), old);
  t.expect(z.value == 0.0 && z.grad.isZero(0.0), "zero advantages give nonzero surrogate");

  // One step with A = 1: the gradient is the score of the sampled action.
  Trajectory one;
  one.states = {Point(0.3, 0.2), Point(0.3, 0.2)};
  one.actions = {Point(0.1, -0.4)};
  one.rewards = {0.0};
  const Vec g1 = surrogate_onpolicy({one}, Vec::Ones(1), old).grad;
  t.expect(relative_error(g1, policy_score(old, one.states[0], one.actions[0])) < 1e-15, "single-term surrogate");
  return t.result(format("worst directional rel err %.1e", worst));
}

CheckResult pg_ratio_identity() {
  Tally t;
  Rng rng(5201);
  const PointWorld w;
  const GaussianPolicy pi = random_policy(rng);
  const auto trajs = collect(pi, w, 5, 31);
  const Vec adv = advantages(trajs, 0.99, true, true).advantages;
  const SurrogateValue on = surrogate_onpolicy(trajs, adv, pi);
  const SurrogateValue ratio = surrogate_ratio(trajs, adv, pi, pi, RatioMode::Plain);
  t.expect(relative_error(ratio.grad, on.grad) < 1e-10, format("gradient rel err %.2e", relative_error(ratio.grad, on.grad)));
  t.near(ratio.value, adv.mean(), 1e-12, "ratio value at theta_old");
  return t.result(format("gradient rel err %.1e", relative_error(ratio.grad, on.grad)));
}

CheckResult pg_clip_and_kl() {
  Tally t;
  // rho > 1 + eps with A = 1 contributes 1 + eps.
  GaussianPolicy old;
  Vec shifted = old.params();
  shifted(4) = 1.0;
  const GaussianPolicy cur(shifted);
  Trajectory one;
  one.states = {Point(0, 0), Point(0, 0)};
  one.actions = {Point(2.0, 0.0)};
  one.rewards = {0.0};
  const double rho = std::exp(cur.log_prob(Point(0, 0), one.actions[0]) - old.log_prob(Point(0, 0), one.actions[0]));
  t.expect(rho > 1.2, "test action does not push rho above the clip");
  t.near(surrogate_ratio({one}, Vec::Ones(1), cur, old, RatioMode::Clip, 0.2).value, 1.2, 1e-15, "clipped term");

  Rng rng(5301);
  const PointWorld w;
  for (int trial = 0; trial < 50; ++trial) {
    const GaussianPolicy o = random_policy(rng);
    const GaussianPolicy n(o.params() + 0.3 * rng.normal_vector(8));
    const auto trajs = collect(o, w, 1, 41 + static_cast<std::uint64_t>(trial));
    const Vec adv = (rng.normal_vector(trajs[0].horizon())).cwiseAbs();
    for (int step = 0; step < trajs[0].horizon(); ++step) {
      Trajectory s;
      s.states = {trajs[0].states[static_cast<std::size_t>(step)], trajs[0].states[static_cast<std::size_t>(step) + 1]};
      s.actions = {trajs[0].actions[static_cast<std::size_t>(step)]};
      s.rewards = {0.0};
      const Vec a = Vec::Constant(1, adv(step));
      const double clip = surrogate_ratio({s}, a, n, o, RatioMode::Clip).value;
      const double plain = surrogate_ratio({s}, a, n, o, RatioMode::Plain).value;
      t.expect(clip <= plain + 1e-15, "clip above plain with A >= 0");
    }
  }

  const std::vector<Point> states = {Point(0.5, 1.0), Point(-2.0, 0.3)};
  const SurrogateValue same = kl_penalty_term(old, old, states);
  t.expect(same.value == 0.0 && same.grad.isZero(0.0), "KL nonzero at the anchor");
  Vec both = old.params();
  both(4) = 1.0;
  both(5) = 1.0;
  t.near(kl_penalty_term(GaussianPolicy(both), old, states).value, 1.0, 1e-15, "KL of a unit shift in 2 dims");
  return t.result();
}

CheckResult pg_large_damping() {
  Tally t;
  Rng rng(5401);
  const Mat x = random_matrix(rng, 20, 6);
  const Mat scores = 1e-12 * random_matrix(rng, 20, 8);
  const Vec g = rng.normal_vector(8);
  WngConfig cfg;
  cfg.epsilon_init = cfg.epsilon_min = cfg.epsilon_max = 1e5;
  const WnpgStep s = wnpg_update(x, scores, Vec::Zero(8), g, cfg, 1e5, 0.1, 3);
  t.expect(cosine(s.direction, g) > 0.999, format("cosine %.6f", cosine(s.direction, g)));
  t.expect(s.epsilon == 1e5, "pinned epsilon moved");
  return t.result();
}

}  // namespace

/// WNPG on a one-step bandit: a ~ N(b, diag(exp(2 log_std))), reward
/// -|a - target|^2, action embedding. Returns |b - target| after
/// `iterations` updates.
double bandit_error(std::uint64_t seed, int iterations) {
  const Point target(1.0, -0.5);
  const int n = 64;
  const double step_size = 0.03;
  WngConfig cfg;
  cfg.epsilon_init = 1.0;
  double eps = cfg.epsilon_init;
  GaussianPolicy pi;
  const Point s0(0.0, 0.0);
  for (int k = 0; k < iterations; ++k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    std::vector<Trajectory> trajs;
    trajs.reserve(n);
    for (int i = 0; i < n; ++i) {
      Trajectory tr;
      tr.states = {s0, s0};
      const Point a = pi.sample(s0, rng);
      tr.actions = {a};
      tr.rewards = {-(a - target).squaredNorm()};
      tr.total_return = tr.rewards[0];
      trajs.push_back(std::move(tr));
    }
    const AdvantageBatch adv = advantages(trajs, 0.0, false, false);
    const Vec g = surrogate_onpolicy(trajs, adv.advantages, pi).grad;
    const WnpgStep st = wnpg_update(embed_batch(trajs, EmbeddingKind::ActionConcat), batch_scores(pi, trajs), pi.params(),
                                    g, cfg, eps, step_size, derive_seed(seed, static_cast<std::uint64_t>(k), 7));
    eps = st.epsilon;
    pi = GaussianPolicy(st.theta);
  }
  return (pi.bias() - target).norm();
}

namespace {

CheckResult pg_bandit() {
  Tally t;
  std::string errs;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const double e = bandit_error(seed, 500);
    errs += format(" %.1e", e);
    t.expect(e < 1e-2, format("seed %d error %.3g", static_cast<int>(seed), e));
  }
  return t.result("errors" + errs);
}

CheckResult pg_runs() {
  Tally t;
  PointWorld w;
  w.wall_enabled = false;
  for (PgMethod m : {PgMethod::Vanilla, PgMethod::PpoClip, PgMethod::KlPenalty, PgMethod::Bgpg, PgMethod::Wnpg,
                     PgMethod::BgWnpg}) {
    PgConfig c = pg_preset(m);
    c.iterations = 3;
    c.seed = 8;
    const RunLog a = run_pg(c, w);
    const RunLog b = run_pg(c, w);
    t.expect(format_log(a, false) == format_log(b, false), format("%s run not reproducible", to_string(m)));
    t.expect(parse_pg_method(to_string(m)) == m, "method name roundtrip");
  }
  return t.result();
}

CheckResult harness_csv() {
  Tally t;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / format("wng_check_%d", static_cast<int>(::getpid()));
  fs::create_directories(dir);
  RunLog empty;
  write_log(empty, dir / "empty.csv");
  std::ifstream in(dir / "empty.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  t.expect(ss.str() == std::string(kLogHeader) + "\n", "empty log is not header-only");

  RunLog log;
  log.add(2, "loss", 0.1, 1, 3.0);
  log.add(0, "loss", 1.0 / 3.0, 0, 1.0);
  log.add(1, "loss", 2.0, 1, 2.0);
  log.add(1, "loss", std::nextafter(1.0, 2.0), 0, 1.5);
  write_log(log, dir / "log.csv");
  const RunLog back = read_log(dir / "log.csv");
  const auto& rows = back.rows();
  t.expect(rows.size() == 4, "row count");
  if (rows.size() == 4) {
    t.expect(rows[0].seed == 0 && rows[0].iteration == 0 && rows[1].seed == 0 && rows[1].iteration == 1, "ordering seed 0");
    t.expect(rows[2].seed == 1 && rows[2].iteration == 1 && rows[3].iteration == 2, "ordering seed 1");
    t.expect(rows[3].value == 0.1 && rows[0].value == 1.0 / 3.0 && rows[1].value == std::nextafter(1.0, 2.0),
             "values do not roundtrip exactly");
  }
  RunLog bad;
  bad.add(0, "loss", std::nan(""), 0);
  t.expect(throws([&] { write_log(bad, dir / "bad.csv"); }), "non-finite value written");
  t.expect(throws_as<std::runtime_error>([&] { write_log(log, dir / "missing" / "x.csv"); }), "unwritable path accepted");
  fs::remove_all(dir);
  return t.result();
}

}  // namespace

void register_rl_checks(std::vector<PropertyCheck>& out) {
  out.push_back({"env.step", env_step});
  out.push_back({"env.rollout", env_rollout});
  out.push_back({"env.score", env_score});
  out.push_back({"es.gradient_examples", es_gradient_examples});
  out.push_back({"es.unbiased", es_unbiased});
  out.push_back({"es.antithetic", es_antithetic});
  out.push_back({"es.sinkhorn", es_sinkhorn});
  out.push_back({"es.sinkhorn_exact", es_sinkhorn_exact});
  out.push_back({"es.runs", es_runs});
  out.push_back({"pg.advantages", pg_advantages});
  out.push_back({"pg.finite_differences", pg_finite_differences});
  out.push_back({"pg.ratio_identity", pg_ratio_identity});
  out.push_back({"pg.clip_and_kl", pg_clip_and_kl});
  out.push_back({"pg.large_damping", pg_large_damping});
  out.push_back({"pg.bandit", pg_bandit});
  out.push_back({"pg.runs", pg_runs});
  out.push_back({"harness.csv", harness_csv});
}

}  // namespace wng::verify
