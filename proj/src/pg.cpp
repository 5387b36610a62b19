#include "wng/pg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>

#include "wng/errors.hpp"
#include "wng/random.hpp"

namespace wng {

void PgConfig::validate() const {
  if (trajectories < 2) throw ConfigError("pg: need at least 2 trajectories per batch");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("pg: gamma must lie in [0, 1)");
  if (epochs < 1) throw ConfigError("pg: epochs must be positive");
  if (!(step_size > 0.0)) throw ConfigError("pg: step_size must be positive");
  if (beta < 0.0) throw ConfigError("pg: beta must be nonnegative");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw ConfigError("pg: clip_epsilon must lie in (0, 1)");
  if (trust == TrustRegion::Clip && surrogate != SurrogateKind::Ratio) {
    throw ConfigError("pg: the clipped trust region needs the ratio surrogate");
  }
  if (history < 1) throw ConfigError("pg: history must be positive");
  if (iterations < 0) throw ConfigError("pg: iterations must be nonnegative");
  if (wng) wng->validate();
}

PgMethod parse_pg_method(std::string_view name) {
  if (name == "vanilla") return PgMethod::Vanilla;
  if (name == "ppo-clip") return PgMethod::PpoClip;
  if (name == "kl") return PgMethod::KlPenalty;
  if (name == "bgpg") return PgMethod::Bgpg;
  if (name == "wnpg") return PgMethod::Wnpg;
  if (name == "bg-wnpg") return PgMethod::BgWnpg;
  throw ConfigError("unknown pg method '" + std::string(name) + "'");
}

const char* to_string(PgMethod m) {
  switch (m) {
    case PgMethod::Vanilla: return "vanilla";
    case PgMethod::PpoClip: return "ppo-clip";
    case PgMethod::KlPenalty: return "kl";
    case PgMethod::Bgpg: return "bgpg";
    case PgMethod::Wnpg: return "wnpg";
    case PgMethod::BgWnpg: return "bg-wnpg";
  }
  return "?";
}

PgConfig pg_preset(PgMethod method) {
  PgConfig c;
  switch (method) {
    case PgMethod::Vanilla:
      break;
    case PgMethod::PpoClip:
      c.surrogate = SurrogateKind::Ratio;
      c.trust = TrustRegion::Clip;
      break;
    case PgMethod::KlPenalty:
      c.surrogate = SurrogateKind::Ratio;
      c.trust = TrustRegion::KlPenalty;
      break;
    case PgMethod::Bgpg:
      c.trust = TrustRegion::W2Penalty;
      break;
    case PgMethod::Wnpg:
      c.wng = WngConfig{.epsilon_init = 100.0};
      c.step_size = 10.0;
      break;
    case PgMethod::BgWnpg:
      c.trust = TrustRegion::W2Penalty;
      c.wng = WngConfig{.epsilon_init = 100.0};
      c.step_size = 10.0;
      break;
  }
  return c;
}

AdvantageBatch advantages(const std::vector<Trajectory>& trajs, double gamma, bool fit_baseline, bool normalize) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("advantages: gamma must lie in [0, 1)");
  Index total = 0;
  for (const Trajectory& t : trajs) total += t.horizon();
  AdvantageBatch out;
  out.returns_to_go.resize(total);
  out.baseline = Vec::Zero(3);
  Mat design(total, 3);
  Index row = 0;
  for (const Trajectory& traj : trajs) {
    const int h = traj.horizon();
    double acc = 0.0;
    for (int t = h - 1; t >= 0; --t) {
      acc = traj.rewards[static_cast<std::size_t>(t)] + gamma * acc;
      out.returns_to_go(row + t) = acc;
    }
    for (int t = 0; t < h; ++t) {
      const Point& s = traj.states[static_cast<std::size_t>(t)];
      design.row(row + t) << s.x(), s.y(), 1.0;
    }
    row += h;
  }
  if (fit_baseline && total >= 3) {
    const Eigen::ColPivHouseholderQR<Mat> qr(design);
    if (qr.rank() == 3) out.baseline = qr.solve(out.returns_to_go);
  }
  out.advantages = out.returns_to_go - design * out.baseline;
  if (normalize && total > 0) {
    out.advantages.array() -= out.advantages.mean();
    const double sd = std::sqrt(out.advantages.squaredNorm() / static_cast<double>(total));
    if (sd > 0.0) out.advantages /= sd;
  }
  return out;
}

namespace {

Index total_steps(const std::vector<Trajectory>& trajs) {
  Index total = 0;
  for (const Trajectory& t : trajs) total += t.horizon();
  return total;
}

template <typename Fn>
void for_each_step(const std::vector<Trajectory>& trajs, Fn&& fn) {
  Index row = 0;
  for (const Trajectory& traj : trajs) {
    for (int t = 0; t < traj.horizon(); ++t, ++row) {
      fn(row, traj.states[static_cast<std::size_t>(t)], traj.actions[static_cast<std::size_t>(t)]);
    }
  }
}

}  // namespace

SurrogateValue surrogate_onpolicy(const std::vector<Trajectory>& trajs, const Vec& adv, const GaussianPolicy& policy) {
  const Index total = total_steps(trajs);
  if (adv.size() != total || total == 0) throw std::invalid_argument("surrogate: one advantage per step required");
  SurrogateValue out{0.0, Vec::Zero(GaussianPolicy::kNumParams)};
  for_each_step(trajs, [&](Index i, const Point& s, const Point& a) {
    out.value += policy.log_prob(s, a) * adv(i);
    out.grad += adv(i) * policy_score(policy, s, a);
  });
  out.value /= static_cast<double>(total);
  out.grad /= static_cast<double>(total);
  return out;
}

SurrogateValue surrogate_ratio(const std::vector<Trajectory>& trajs, const Vec& adv, const GaussianPolicy& policy,
                               const GaussianPolicy& old_policy, RatioMode mode, double clip_epsilon) {
  const Index total = total_steps(trajs);
  if (adv.size() != total || total == 0) throw std::invalid_argument("surrogate: one advantage per step required");
  SurrogateValue out{0.0, Vec::Zero(GaussianPolicy::kNumParams)};
  for_each_step(trajs, [&](Index i, const Point& s, const Point& a) {
    const double rho = std::exp(policy.log_prob(s, a) - old_policy.log_prob(s, a));
    const double unclipped = rho * adv(i);
    if (mode == RatioMode::Clip) {
      const double clipped = std::clamp(rho, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * adv(i);
      if (clipped < unclipped) {
        out.value += clipped;
        return;
      }
    }
    out.value += unclipped;
    out.grad += unclipped * policy_score(policy, s, a);
  });
  out.value /= static_cast<double>(total);
  out.grad /= static_cast<double>(total);
  return out;
}

SurrogateValue kl_penalty_term(const GaussianPolicy& policy, const GaussianPolicy& old_policy,
                               const std::vector<Point>& states) {
  SurrogateValue out{0.0, Vec::Zero(GaussianPolicy::kNumParams)};
  if (states.empty()) return out;
  const Point var = policy.stddev().array().square().matrix();
  const Point var_old = old_policy.stddev().array().square().matrix();
  const Point log_ratio = policy.log_std() - old_policy.log_std();
  for (const Point& s : states) {
    const Point dm = policy.mean(s) - old_policy.mean(s);
    for (int i = 0; i < 2; ++i) {
      const double spread = var_old(i) + dm(i) * dm(i);
      out.value += log_ratio(i) + spread / (2.0 * var(i)) - 0.5;
      const double gm = dm(i) / var(i);
      out.grad(2 * i) += gm * s.x();
      out.grad(2 * i + 1) += gm * s.y();
      out.grad(4 + i) += gm;
      out.grad(6 + i) += 1.0 - spread / var(i);
    }
  }
  const double n = static_cast<double>(states.size());
  out.value /= n;
  out.grad /= n;
  return out;
}

SurrogateValue w2_penalty_term(const Mat& embeddings, const Mat& scores, const Mat& history, double beta,
                               const SinkhornOptions& options) {
  if (scores.rows() != embeddings.rows()) throw std::invalid_argument("w2_penalty_term: one score per embedding");
  const SinkhornDivergence div = sinkhorn_divergence(embeddings, history, options);
  const Vec phi = div.potential_a.array() - div.potential_a.mean();
  SurrogateValue out;
  out.value = -0.5 * beta * div.value;
  out.grad = -0.5 * beta * scores.transpose() * phi / static_cast<double>(embeddings.rows());
  return out;
}

Mat batch_scores(const GaussianPolicy& policy, const std::vector<Trajectory>& trajs) {
  Mat out(static_cast<Index>(trajs.size()), GaussianPolicy::kNumParams);
  for (std::size_t n = 0; n < trajs.size(); ++n) {
    out.row(static_cast<Index>(n)) = trajectory_score(policy, trajs[n]).transpose();
  }
  return out;
}

WnpgStep wnpg_update(const Mat& embeddings, const Mat& scores, const Vec& theta, const Vec& g,
                     const WngConfig& wng, double epsilon, double step_size, std::uint64_t basis_seed) {
  WngWorkspace ws = prepare_workspace(embeddings, wng, epsilon, basis_seed);
  BehaviorBatch batch{embeddings, scores, basis_seed};
  ws.J = jacobian_score(batch, ws.basis, ws.kernel);
  WnpgStep out;
  out.direction = estimate_wng(g, ws);
  out.epsilon = adapt_epsilon(ws, g, out.direction);
  out.theta = theta + step_size * out.direction;
  return out;
}

RunLog run_pg(const PgConfig& config, const PointWorld& world, const GaussianPolicy& policy0,
              GaussianPolicy* final_policy) {
  config.validate();
  world.validate();
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const auto elapsed_ms = [&] { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); };

  const std::uint64_t seed = config.seed;
  GaussianPolicy policy = policy0;
  double epsilon = config.wng ? config.wng->epsilon_init : 0.0;
  std::deque<Mat> history;
  RunLog log;

  // Row k describes the policy theta_k that collected batch k.
  auto record = [&](std::int64_t k, const GaussianPolicy& pi, double batch_return, double grad_norm, double eps) {
    const double ms = elapsed_ms();
    const Trajectory eval = rollout(pi, world, false, 0);
    log.add(k, "return", batch_return, seed, ms);
    log.add(k, "eval_return", eval.total_return, seed, ms);
    log.add(k, "distance_to_goal", (eval.states.back() - world.goal).norm(), seed, ms);
    log.add(k, "grad_norm", grad_norm, seed, ms);
    log.add(k, "log_std_mean", pi.log_std().mean(), seed, ms);
    if (config.wng) log.add(k, "epsilon", eps, seed, ms);
  };

  for (int k = 0; k <= config.iterations; ++k) {
    const auto uk = static_cast<std::uint64_t>(k);
    std::vector<Trajectory> trajs;
    trajs.reserve(static_cast<std::size_t>(config.trajectories));
    double batch_return = 0.0;
    for (int n = 0; n < config.trajectories; ++n) {
      trajs.push_back(rollout(policy, world, true, derive_seed(seed, uk, static_cast<std::uint64_t>(n))));
      batch_return += trajs.back().total_return;
    }
    batch_return /= static_cast<double>(config.trajectories);
    if (k == config.iterations) {
      record(k, policy, batch_return, 0.0, epsilon);
      break;
    }

    const AdvantageBatch adv = advantages(trajs, config.gamma, config.fit_baseline, config.normalize_advantages);
    const GaussianPolicy old_policy = policy;
    const bool needs_embedding = config.wng || config.trust == TrustRegion::W2Penalty;
    Mat x;
    Mat scores;
    if (needs_embedding) {
      x = embed_batch(trajs, config.embedding);
      scores = batch_scores(old_policy, trajs);
    }

    Vec penalty_grad = Vec::Zero(GaussianPolicy::kNumParams);
    if (config.trust == TrustRegion::W2Penalty && !history.empty()) {
      Index rows = 0;
      for (const Mat& h : history) rows += h.rows();
      Mat hist(rows, x.cols());
      Index r = 0;
      for (const Mat& h : history) {
        hist.middleRows(r, h.rows()) = h;
        r += h.rows();
      }
      penalty_grad = w2_penalty_term(x, scores, hist, config.beta, config.sinkhorn).grad;
    }

    std::vector<Point> states;
    if (config.trust == TrustRegion::KlPenalty) {
      for (const Trajectory& t : trajs) states.insert(states.end(), t.states.begin(), t.states.end() - 1);
    }

    const int epochs = config.surrogate == SurrogateKind::Ratio ? config.epochs : 1;
    double first_grad_norm = 0.0;
    double next_epsilon = epsilon;
    for (int e = 0; e < epochs; ++e) {
      Vec g;
      if (config.surrogate == SurrogateKind::OnPolicy) {
        g = surrogate_onpolicy(trajs, adv.advantages, policy).grad;
      } else {
        const RatioMode mode = config.trust == TrustRegion::Clip ? RatioMode::Clip : RatioMode::Plain;
        g = surrogate_ratio(trajs, adv.advantages, policy, old_policy, mode, config.clip_epsilon).grad;
      }
      if (config.trust == TrustRegion::KlPenalty) g -= config.beta * kl_penalty_term(policy, old_policy, states).grad;
      g += penalty_grad;
      if (!g.allFinite()) throw NumericalError("pg_gradient", "non-finite gradient at iteration " + std::to_string(k));
      if (e == 0) first_grad_norm = g.norm();

      Vec theta = policy.params();
      if (config.wng) {
        const WnpgStep step = wnpg_update(x, scores, theta, g, *config.wng, epsilon, config.step_size,
                                          derive_seed(seed, uk, 0xB0));
        theta = step.theta;
        if (e == 0) next_epsilon = step.epsilon;
      } else {
        theta += config.step_size * g;
      }
      if (!theta.allFinite()) throw NumericalError("pg_update", "non-finite parameters at iteration " + std::to_string(k));
      policy = GaussianPolicy(theta);
    }
    record(k, old_policy, batch_return, first_grad_norm, epsilon);
    epsilon = next_epsilon;

    if (config.trust == TrustRegion::W2Penalty) {
      history.push_back(x);
      while (static_cast<int>(history.size()) > config.history) history.pop_front();
    }
  }
  if (final_policy) *final_policy = policy;
  return log;
}

RunLog run_pg(const PgConfig& config, const PointWorld& world, GaussianPolicy* final_policy) {
  Vec theta = Vec::Zero(GaussianPolicy::kNumParams);
  theta.tail<2>().setConstant(config.initial_log_std);
  return run_pg(config, world, GaussianPolicy(theta), final_policy);
}

}  // namespace wng
