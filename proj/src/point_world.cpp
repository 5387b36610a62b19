#include "wng/point_world.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "wng/errors.hpp"

namespace wng {

void PointWorld::validate() const {
  if (horizon < 1) throw ConfigError("point world: horizon must be positive");
  if (!(max_step > 0.0)) throw ConfigError("point world: max_step must be positive");
  if (!(reward_scale > 0.0)) throw ConfigError("point world: reward_scale must be positive");
  if (margin < 0.0 || wall_half_length < 0.0) throw ConfigError("point world: wall extent must be nonnegative");
  if (wall_enabled && !((start.x() - wall_x) * (goal.x() - wall_x) < 0.0)) {
    throw ConfigError("point world: start and goal must lie on opposite sides of the wall");
  }
}

bool inside_wall(const Point& p, const PointWorld& world) {
  // Same bounds as the padded box in step(), so resting contact points are outside.
  return world.wall_enabled && p.x() > world.wall_x - world.margin && p.x() < world.wall_x + world.margin &&
         std::abs(p.y()) <= world.wall_half_length;
}

StepResult step(const Point& state, const Point& action, const PointWorld& world) {
  Point a = action;
  const double norm = a.norm();
  if (norm > world.max_step) a *= world.max_step / norm;

  Point next = state + a;
  if (world.wall_enabled) {
    // Liang-Barsky clip of the move against the wall padded by the margin.
    const double lo[2] = {world.wall_x - world.margin, -world.wall_half_length - world.margin};
    const double hi[2] = {world.wall_x + world.margin, world.wall_half_length + world.margin};
    double t_enter = -std::numeric_limits<double>::infinity();
    double t_exit = std::numeric_limits<double>::infinity();
    int face = -1;
    bool parallel_outside = false;
    for (int axis = 0; axis < 2 && !parallel_outside; ++axis) {
      const double s = state(axis);
      const double d = a(axis);
      if (d == 0.0) {
        parallel_outside = !(s > lo[axis] && s < hi[axis]);
        continue;
      }
      const double t_lo = (lo[axis] - s) / d;
      const double t_hi = (hi[axis] - s) / d;
      const double t_in = d > 0.0 ? t_lo : t_hi;
      const double t_out = d > 0.0 ? t_hi : t_lo;
      if (t_in > t_enter) {
        t_enter = t_in;
        face = 2 * axis + (d > 0.0 ? 0 : 1);
      }
      t_exit = std::min(t_exit, t_out);
    }
    if (!parallel_outside && std::max(t_enter, 0.0) < std::min(t_exit, 1.0)) {
      if (t_enter <= 0.0) {
        next = state;
      } else {
        next = state + t_enter * a;
        const int axis = face / 2;
        next(axis) = face % 2 == 0 ? lo[axis] : hi[axis];
      }
    }
  }
  return {next, -world.reward_scale * (next - world.goal).norm()};
}

GaussianPolicy::GaussianPolicy(Vec params) : params_(std::move(params)) {
  if (params_.size() != kNumParams) throw std::invalid_argument("GaussianPolicy: expected 8 parameters");
}

Eigen::Matrix2d GaussianPolicy::weights() const {
  Eigen::Matrix2d w;
  w << params_(0), params_(1), params_(2), params_(3);
  return w;
}

Point GaussianPolicy::mean(const Point& state) const { return weights() * state + bias(); }

Point GaussianPolicy::sample(const Point& state, Rng& rng) const {
  const Point sd = stddev();
  const Point m = mean(state);
  const double z0 = rng.normal();
  const double z1 = rng.normal();
  return {m(0) + sd(0) * z0, m(1) + sd(1) * z1};
}

double GaussianPolicy::log_prob(const Point& state, const Point& action) const {
  const Point z = (action - mean(state)).cwiseQuotient(stddev());
  return -0.5 * z.squaredNorm() - log_std().sum() - std::log(2.0 * std::numbers::pi);
}

Vec policy_score(const GaussianPolicy& policy, const Point& state, const Point& action) {
  const Point var = policy.stddev().array().square().matrix();
  const Point diff = action - policy.mean(state);
  const Point dm = diff.cwiseQuotient(var);
  Vec score(GaussianPolicy::kNumParams);
  score << dm(0) * state(0), dm(0) * state(1), dm(1) * state(0), dm(1) * state(1), dm(0), dm(1),
      diff(0) * diff(0) / var(0) - 1.0, diff(1) * diff(1) / var(1) - 1.0;
  return score;
}

Vec trajectory_score(const GaussianPolicy& policy, const Trajectory& traj) {
  Vec total = Vec::Zero(GaussianPolicy::kNumParams);
  for (int t = 0; t < traj.horizon(); ++t) {
    total += policy_score(policy, traj.states[static_cast<std::size_t>(t)], traj.actions[static_cast<std::size_t>(t)]);
  }
  return total;
}

Trajectory rollout(const GaussianPolicy& policy, const PointWorld& world, bool stochastic, std::uint64_t seed) {
  Rng rng(seed);
  const auto h = static_cast<std::size_t>(world.horizon);
  Trajectory traj;
  traj.states.reserve(h + 1);
  traj.actions.reserve(h);
  traj.rewards.reserve(h);
  traj.states.push_back(world.start);
  for (std::size_t t = 0; t < h; ++t) {
    const Point& s = traj.states.back();
    const Point a = stochastic ? policy.sample(s, rng) : policy.mean(s);
    const StepResult r = step(s, a, world);
    traj.actions.push_back(a);
    traj.rewards.push_back(r.reward);
    traj.total_return += r.reward;
    traj.states.push_back(r.state);
  }
  return traj;
}

Index embedding_dim(EmbeddingKind kind, int horizon) {
  switch (kind) {
    case EmbeddingKind::FinalState: return 2;
    case EmbeddingKind::ActionConcat: return 2 * horizon;
    case EmbeddingKind::RewardToGo: return horizon;
  }
  return 0;
}

Vec embed(const Trajectory& traj, EmbeddingKind kind) {
  const int h = traj.horizon();
  Vec x(embedding_dim(kind, h));
  switch (kind) {
    case EmbeddingKind::FinalState:
      x = traj.states.back();
      break;
    case EmbeddingKind::ActionConcat:
      for (int t = 0; t < h; ++t) x.segment<2>(2 * t) = traj.actions[static_cast<std::size_t>(t)];
      break;
    case EmbeddingKind::RewardToGo: {
      double acc = 0.0;
      for (int t = h - 1; t >= 0; --t) {
        acc += traj.rewards[static_cast<std::size_t>(t)];
        x(t) = acc;
      }
      break;
    }
  }
  return x;
}

Mat embed_batch(const std::vector<Trajectory>& trajs, EmbeddingKind kind) {
  if (trajs.empty()) throw std::invalid_argument("embed_batch: no trajectories");
  Mat out(static_cast<Index>(trajs.size()), embedding_dim(kind, trajs.front().horizon()));
  for (std::size_t n = 0; n < trajs.size(); ++n) out.row(static_cast<Index>(n)) = embed(trajs[n], kind).transpose();
  return out;
}

EmbeddingKind parse_embedding(std::string_view name) {
  if (name == "final-state") return EmbeddingKind::FinalState;
  if (name == "action-concat") return EmbeddingKind::ActionConcat;
  if (name == "reward-to-go") return EmbeddingKind::RewardToGo;
  throw ConfigError("unknown embedding '" + std::string(name) + "'");
}

const char* to_string(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::FinalState: return "final-state";
    case EmbeddingKind::ActionConcat: return "action-concat";
    case EmbeddingKind::RewardToGo: return "reward-to-go";
  }
  return "?";
}

void write_trajectory(const Trajectory& traj, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  std::fprintf(f, "t,x,y,ax,ay,r\n");
  for (int t = 0; t < traj.horizon(); ++t) {
    const auto i = static_cast<std::size_t>(t);
    std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", t, traj.states[i].x(), traj.states[i].y(),
                 traj.actions[i].x(), traj.actions[i].y(), traj.rewards[i]);
  }
  const Point& last = traj.states.back();
  std::fprintf(f, "%d,%.17g,%.17g,,,\n", traj.horizon(), last.x(), last.y());
  if (std::fclose(f) != 0) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace wng
