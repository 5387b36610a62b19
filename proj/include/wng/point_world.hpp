#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "wng/kernel.hpp"
#include "wng/random.hpp"

namespace wng {

using Point = Eigen::Vector2d;

/// 2-D point mass that must reach `goal` from `start`. A vertical wall at
/// x = wall_x, |y| <= wall_half_length blocks the straight path; agents that
/// run into it stop `margin` short of it.
struct PointWorld {
  Point start{0.0, 0.0};
  Point goal{10.0, 0.0};
  double wall_x = 5.0;
  double wall_half_length = 3.0;
  double margin = 0.05;
  bool wall_enabled = true;
  int horizon = 50;
  double max_step = 0.5;
  double reward_scale = 1.0;

  void validate() const;
};

struct StepResult {
  Point state;
  double reward = 0.0;
};

/// Clips the action to |a| <= max_step, moves, and resolves wall contact.
StepResult step(const Point& state, const Point& action, const PointWorld& world);

/// True if `p` lies strictly inside the wall band |x - wall_x| < margin, |y| <= wall_half_length.
bool inside_wall(const Point& p, const PointWorld& world);

struct Trajectory {
  std::vector<Point> states;   // H + 1
  std::vector<Point> actions;  // H, as emitted by the policy (before clipping)
  std::vector<double> rewards; // H
  double total_return = 0.0;

  int horizon() const { return static_cast<int>(rewards.size()); }
};

/// a ~ N(W s + b, diag(exp(2 log_std))). Parameters are packed as
/// [W00, W01, W10, W11, b0, b1, log_std0, log_std1].
class GaussianPolicy {
 public:
  static constexpr Index kNumParams = 8;

  GaussianPolicy() : params_(Vec::Zero(kNumParams)) {}
  explicit GaussianPolicy(Vec params);

  const Vec& params() const { return params_; }
  Eigen::Matrix2d weights() const;
  Point bias() const { return params_.segment<2>(4); }
  Point log_std() const { return params_.segment<2>(6); }
  Point stddev() const { return log_std().array().exp().matrix(); }

  Point mean(const Point& state) const;
  Point sample(const Point& state, Rng& rng) const;
  double log_prob(const Point& state, const Point& action) const;

 private:
  Vec params_;
};

/// grad_theta log pi(a | s), analytic.
Vec policy_score(const GaussianPolicy& policy, const Point& state, const Point& action);

/// Sum of per-step scores along the trajectory: the score of any
/// deterministic function of the trajectory's actions.
Vec trajectory_score(const GaussianPolicy& policy, const Trajectory& traj);

/// Runs `world.horizon` steps from the start. The deterministic mode follows the
/// mean action and ignores log_std; the stochastic mode draws from `seed`.
Trajectory rollout(const GaussianPolicy& policy, const PointWorld& world, bool stochastic,
                   std::uint64_t seed);

enum class EmbeddingKind { FinalState, ActionConcat, RewardToGo };

Index embedding_dim(EmbeddingKind kind, int horizon);
Vec embed(const Trajectory& traj, EmbeddingKind kind);

/// Stacks one embedding per trajectory as rows.
Mat embed_batch(const std::vector<Trajectory>& trajs, EmbeddingKind kind);

EmbeddingKind parse_embedding(std::string_view name);
const char* to_string(EmbeddingKind kind);

/// CSV with columns t,x,y,ax,ay,r. Row t holds s_t, a_t, r_t; the final row
/// t = H carries only the terminal state.
void write_trajectory(const Trajectory& traj, const std::filesystem::path& path);

}  // namespace wng
