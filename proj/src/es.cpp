#include "wng/es.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <deque>
#include <stdexcept>
#include <string>

#include "wng/errors.hpp"
#include "wng/random.hpp"

namespace wng {

void EsConfig::validate() const {
  if (population < 2) throw ConfigError("es: population must be at least 2");
  if (antithetic && population % 2 != 0) throw ConfigError("es: antithetic sampling needs an even population");
  if (!(sigma > 0.0)) throw ConfigError("es: sigma must be positive");
  if (!(eta > 0.0)) throw ConfigError("es: eta must be positive");
  if (delta > 1.0) throw ConfigError("es: delta must be at most 1");
  if (delta != 0.0 && !wng) throw ConfigError("es: delta != 0 needs a wng configuration");
  if (clip_norm && !(*clip_norm > 0.0)) throw ConfigError("es: clip_norm must be positive");
  if (penalty) {
    if (penalty->history < 1) throw ConfigError("es: penalty history must be positive");
  }
  if (wng) wng->validate();
  if (iterations < 0) throw ConfigError("es: iterations must be nonnegative");
}

EsMethod parse_es_method(std::string_view name) {
  if (name == "es") return EsMethod::Vanilla;
  if (name == "clipped-es") return EsMethod::Clipped;
  if (name == "wnes") return EsMethod::Wnes;
  if (name == "bges") return EsMethod::Bges;
  if (name == "bg-wnes") return EsMethod::BgWnes;
  throw ConfigError("unknown es method '" + std::string(name) + "'");
}

const char* to_string(EsMethod m) {
  switch (m) {
    case EsMethod::Vanilla: return "es";
    case EsMethod::Clipped: return "clipped-es";
    case EsMethod::Wnes: return "wnes";
    case EsMethod::Bges: return "bges";
    case EsMethod::BgWnes: return "bg-wnes";
  }
  return "?";
}

EsConfig es_preset(EsMethod method) {
  EsConfig c;
  switch (method) {
    case EsMethod::Vanilla:
      break;
    case EsMethod::Clipped:
      c.clip_norm = 1.0;
      break;
    case EsMethod::Wnes:
      c.delta = 1.0;
      c.wng = WngConfig{};
      break;
    case EsMethod::Bges:
      c.penalty = EsPenalty{.beta = -0.5};
      break;
    case EsMethod::BgWnes:
      c.delta = 0.5;
      c.wng = WngConfig{};
      c.penalty = EsPenalty{.beta = -0.5};
      break;
  }
  return c;
}

Vec es_gradient(const Vec& fitnesses, double base_fitness, const Mat& perturbations, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("es_gradient: sigma must be positive");
  if (fitnesses.size() != perturbations.rows() || fitnesses.size() == 0) {
    throw std::invalid_argument("es_gradient: one fitness per perturbation row required");
  }
  const Vec diff = fitnesses.array() - base_fitness;
  return perturbations.transpose() * diff / (static_cast<double>(fitnesses.size()) * sigma);
}

Mat sample_perturbations(int n, Index p, bool antithetic, std::uint64_t seed) {
  if (n < 1 || (antithetic && n % 2 != 0)) throw std::invalid_argument("sample_perturbations: bad population size");
  Mat eps(n, p);
  Rng rng(seed);
  if (antithetic) {
    for (int k = 0; k < n / 2; ++k) {
      const Vec z = rng.normal_vector(p);
      eps.row(2 * k) = z.transpose();
      eps.row(2 * k + 1) = -z.transpose();
    }
  } else {
    for (int k = 0; k < n; ++k) eps.row(k) = rng.normal_vector(p).transpose();
  }
  return eps;
}

Vec shape_fitness(const Vec& fitnesses, double& base, FitnessShaping shaping) {
  const Index n = fitnesses.size();
  switch (shaping) {
    case FitnessShaping::None:
      return fitnesses;
    case FitnessShaping::Standardize: {
      const double mean = fitnesses.mean();
      const double sd = std::sqrt((fitnesses.array() - mean).square().sum() / static_cast<double>(n));
      if (!(sd > 0.0)) {
        base = 0.0;
        return Vec::Zero(n);
      }
      base = (base - mean) / sd;
      return ((fitnesses.array() - mean) / sd).matrix();
    }
    case FitnessShaping::CenteredRank: {
      std::vector<Index> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), Index{0});
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return fitnesses(a) < fitnesses(b); });
      Vec ranks(n);
      for (Index r = 0; r < n; ++r) {
        ranks(order[static_cast<std::size_t>(r)]) = n > 1 ? static_cast<double>(r) / static_cast<double>(n - 1) - 0.5 : 0.0;
      }
      base = 0.0;
      return ranks;
    }
  }
  return fitnesses;
}

Vec wnes_update(const Vec& theta, const Vec& es_grad, const Vec& wng_grad, double delta, double eta) {
  if (theta.size() != es_grad.size() || theta.size() != wng_grad.size()) {
    throw std::invalid_argument("wnes_update: size mismatch");
  }
  return theta + eta * ((1.0 - delta) * es_grad + delta * wng_grad);
}

Vec clip_to_norm(Vec v, double max_norm) {
  const double n = v.norm();
  if (n > max_norm) v *= max_norm / n;
  return v;
}

RunLog run_es(const EsConfig& config, const PointWorld& world, const GaussianPolicy& policy0,
              GaussianPolicy* final_policy) {
  config.validate();
  world.validate();
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const auto elapsed_ms = [&] { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); };

  const std::uint64_t seed = config.seed;
  const Index p = GaussianPolicy::kNumParams;
  Vec theta = policy0.params();
  double epsilon = config.wng ? config.wng->epsilon_init : 0.0;
  std::deque<Mat> history;
  RunLog log;

  // Each perturbed policy is deterministic, so its behaviour distribution is
  // a point mass and only the history's self-transport term needs Sinkhorn.
  double hist_self_cost = 0.0;
  auto penalized = [&](double ret, const Vec& x, const Mat* hist) {
    if (!hist) return ret;
    return ret - 0.5 * config.penalty->beta * point_divergence(x, *hist, hist_self_cost);
  };
  auto record = [&](std::int64_t k, const Trajectory& traj, double update_norm) {
    const double ms = elapsed_ms();
    const Point& last = traj.states.back();
    log.add(k, "return", traj.total_return, seed, ms);
    log.add(k, "distance_to_goal", (last - world.goal).norm(), seed, ms);
    log.add(k, "final_x", last.x(), seed, ms);
    log.add(k, "final_y", last.y(), seed, ms);
    log.add(k, "update_norm", update_norm, seed, ms);
    if (config.wng) log.add(k, "epsilon", epsilon, seed, ms);
  };

  Trajectory base = rollout(GaussianPolicy(theta), world, false, 0);
  record(0, base, 0.0);

  for (int k = 1; k <= config.iterations; ++k) {
    const auto uk = static_cast<std::uint64_t>(k);
    const Mat eps = sample_perturbations(config.population, p, config.antithetic, derive_seed(seed, uk, 0));

    Mat hist;
    const Mat* hist_ptr = nullptr;
    if (config.penalty && !history.empty()) {
      Index rows = 0;
      for (const Mat& h : history) rows += h.rows();
      hist.resize(rows, history.front().cols());
      Index r = 0;
      for (const Mat& h : history) {
        hist.middleRows(r, h.rows()) = h;
        r += h.rows();
      }
      hist_ptr = &hist;
      const SinkhornOptions& so = config.penalty->sinkhorn;
      const double reg = so.reg > 0.0 ? so.reg : so.reg_scale * median_bandwidth(hist);
      hist_self_cost = entropic_ot_self(hist, reg, so.max_iters, so.tolerance).cost;
    }

    std::vector<Trajectory> trajs;
    trajs.reserve(static_cast<std::size_t>(config.population));
    for (int n = 0; n < config.population; ++n) {
      const Vec theta_n = theta + config.sigma * eps.row(n).transpose();
      trajs.push_back(rollout(GaussianPolicy(theta_n), world, false, derive_seed(seed, uk, 1 + static_cast<std::uint64_t>(n))));
    }
    const Mat x = embed_batch(trajs, config.embedding);
    Vec fitness(config.population);
    for (int n = 0; n < config.population; ++n) {
      fitness(n) = penalized(trajs[static_cast<std::size_t>(n)].total_return, x.row(n).transpose(), hist_ptr);
    }
    double base_fitness = penalized(base.total_return, embed(base, config.embedding), hist_ptr);
    fitness = shape_fitness(fitness, base_fitness, config.shaping);
    const Vec g = es_gradient(fitness, base_fitness, eps, config.sigma);
    if (!g.allFinite()) throw NumericalError("es_gradient", "non-finite gradient at iteration " + std::to_string(k));

    Vec g_w = Vec::Zero(p);
    if (config.wng) {
      WngWorkspace ws = prepare_workspace(x, *config.wng, epsilon, derive_seed(seed, uk, 0xB0));
      ws.J = jacobian_es(basis_values(x, ws.basis, ws.kernel), eps, config.sigma);
      g_w = estimate_wng(g, ws);
      epsilon = adapt_epsilon(ws, g, g_w);
    }

    Vec update = wnes_update(Vec::Zero(p), g, g_w, config.delta, config.eta);
    if (config.clip_norm) update = clip_to_norm(update, *config.clip_norm);
    theta += update;

    if (config.penalty) {
      history.push_back(x);
      while (static_cast<int>(history.size()) > config.penalty->history) history.pop_front();
    }
    base = rollout(GaussianPolicy(theta), world, false, 0);
    record(k, base, update.norm());
  }
  if (final_policy) *final_policy = GaussianPolicy(theta);
  return log;
}

}  // namespace wng
