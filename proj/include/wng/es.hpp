#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "wng/estimator.hpp"
#include "wng/point_world.hpp"
#include "wng/run_log.hpp"
#include "wng/sinkhorn.hpp"

namespace wng {

/// Behaviour penalty -(beta / 2) S(X, history) added to each fitness, where
/// the history holds the embeddings of the last `history` populations.
struct EsPenalty {
  double beta = 0.0;
  int history = 2;
  SinkhornOptions sinkhorn{};
};

/// Transform applied to the population fitnesses (and the base fitness)
/// before the gradient estimate.
enum class FitnessShaping { None, Standardize, CenteredRank };

struct EsConfig {
  int population = 20;
  double sigma = 0.01;
  double eta = 0.1;
  double delta = 0.0;  // 0: plain ES step, 1: full WNG step, < 0: repulsion
  bool antithetic = true;
  FitnessShaping shaping = FitnessShaping::None;
  std::optional<double> clip_norm;
  std::optional<EsPenalty> penalty;
  std::optional<WngConfig> wng;
  EmbeddingKind embedding = EmbeddingKind::FinalState;
  int iterations = 300;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class EsMethod { Vanilla, Clipped, Wnes, Bges, BgWnes };

EsMethod parse_es_method(std::string_view name);
const char* to_string(EsMethod m);

/// Default configuration for a method.
EsConfig es_preset(EsMethod method);

/// (1 / (N sigma)) sum_n (L_n - L_base) eps_n, with eps_n the rows of
/// `perturbations` (standard-normal draws; the perturbed parameters are
/// theta + sigma eps_n).
Vec es_gradient(const Vec& fitnesses, double base_fitness, const Mat& perturbations, double sigma);

/// N standard-normal rows of length p. Antithetic mode draws N / 2 rows and
/// stores each followed by its negation.
Mat sample_perturbations(int n, Index p, bool antithetic, std::uint64_t seed);

/// Shaped copy of `fitnesses`; `base` is mapped consistently (to the
/// population mean for the rank transform).
Vec shape_fitness(const Vec& fitnesses, double& base, FitnessShaping shaping);

/// theta + eta ((1 - delta) es_grad + delta wng_grad).
Vec wnes_update(const Vec& theta, const Vec& es_grad, const Vec& wng_grad, double delta, double eta);

/// Rescales `v` onto the ball of radius max_norm if it lies outside.
Vec clip_to_norm(Vec v, double max_norm);

/// ES ascent on the return of the deterministic (mean-action) policy.
/// Logged metrics: return, distance_to_goal, final_x, final_y, update_norm,
/// and epsilon when a WNG configuration is present. The last iterate is
/// stored in `final_policy` if given.
RunLog run_es(const EsConfig& config, const PointWorld& world, const GaussianPolicy& policy0,
              GaussianPolicy* final_policy = nullptr);

}  // namespace wng
