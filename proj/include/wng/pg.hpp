#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "wng/estimator.hpp"
#include "wng/point_world.hpp"
#include "wng/run_log.hpp"
#include "wng/sinkhorn.hpp"

namespace wng {

enum class SurrogateKind { OnPolicy, Ratio };
enum class TrustRegion { None, KlPenalty, Clip, W2Penalty };

struct PgConfig {
  int trajectories = 32;
  double gamma = 0.99;
  int epochs = 4;  // surrogate steps per batch in ratio mode
  double step_size = 0.02;
  SurrogateKind surrogate = SurrogateKind::OnPolicy;
  TrustRegion trust = TrustRegion::None;
  double beta = 1.0;          // KL or W2 penalty weight
  double clip_epsilon = 0.2;
  bool normalize_advantages = true;
  bool fit_baseline = true;
  std::optional<WngConfig> wng;
  EmbeddingKind embedding = EmbeddingKind::ActionConcat;
  int history = 2;  // batches kept for the W2 penalty
  SinkhornOptions sinkhorn{};
  int iterations = 100;
  double initial_log_std = -1.0;  // used by run_pg(config, world)
  std::uint64_t seed = 0;

  void validate() const;
};

enum class PgMethod { Vanilla, PpoClip, KlPenalty, Bgpg, Wnpg, BgWnpg };

PgMethod parse_pg_method(std::string_view name);
const char* to_string(PgMethod m);
PgConfig pg_preset(PgMethod method);

struct AdvantageBatch {
  Vec advantages;       // flattened, trajectory-major (n * H + t)
  Vec returns_to_go;    // discounted, same layout
  Vec baseline;         // V(s) = c0 x + c1 y + c2
};

/// Discounted reward-to-go minus a least-squares linear state baseline,
/// optionally normalized to zero mean and unit variance. A rank-deficient
/// regression falls back to a zero baseline.
AdvantageBatch advantages(const std::vector<Trajectory>& trajs, double gamma, bool fit_baseline,
                          bool normalize = true);

struct SurrogateValue {
  double value = 0.0;
  Vec grad;
};

/// mean_t log pi(a_t | s_t) A_t and its gradient.
SurrogateValue surrogate_onpolicy(const std::vector<Trajectory>& trajs, const Vec& adv,
                                  const GaussianPolicy& policy);

enum class RatioMode { Plain, Clip };

/// mean_t rho_t A_t (plain) or mean_t min(rho_t A_t, clip(rho_t, 1 - e, 1 + e) A_t),
/// with rho_t = pi(a_t | s_t) / pi_old(a_t | s_t).
SurrogateValue surrogate_ratio(const std::vector<Trajectory>& trajs, const Vec& adv, const GaussianPolicy& policy,
                               const GaussianPolicy& old_policy, RatioMode mode, double clip_epsilon = 0.2);

/// Mean over `states` of KL(pi_old(. | s) || pi(. | s)) and its gradient in
/// the parameters of `policy`.
SurrogateValue kl_penalty_term(const GaussianPolicy& policy, const GaussianPolicy& old_policy,
                               const std::vector<Point>& states);

/// -(beta / 2) S(X, history) and its likelihood-ratio gradient
/// -(beta / 2) (1 / N) sum_n (phi(X_n) - mean phi) score_n, where phi is the
/// Sinkhorn potential on the current cloud.
SurrogateValue w2_penalty_term(const Mat& embeddings, const Mat& scores, const Mat& history, double beta,
                               const SinkhornOptions& options);

struct WnpgStep {
  Vec theta;
  Vec direction;  // g_w
  double epsilon = 0.0;
};

/// One WNG ascent step theta + step_size * g_w, with J from the score form
/// over the batch embeddings, followed by the damping update.
WnpgStep wnpg_update(const Mat& embeddings, const Mat& scores, const Vec& theta, const Vec& g,
                     const WngConfig& wng, double epsilon, double step_size, std::uint64_t basis_seed);

/// Policy-gradient ascent on the expected return. Logged metrics: return (mean
/// over the batch), eval_return and distance_to_goal of the mean-action
/// policy, grad_norm, log_std_mean, and epsilon when WNG is on. The last
/// iterate is stored in `final_policy` if given.
RunLog run_pg(const PgConfig& config, const PointWorld& world, const GaussianPolicy& policy0,
              GaussianPolicy* final_policy = nullptr);

/// Starts from the zero-mean policy with log_std = config.initial_log_std.
RunLog run_pg(const PgConfig& config, const PointWorld& world, GaussianPolicy* final_policy = nullptr);

/// Trajectory-level scores as rows (N x 8).
Mat batch_scores(const GaussianPolicy& policy, const std::vector<Trajectory>& trajs);

}  // namespace wng
