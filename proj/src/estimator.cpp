#include "wng/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "wng/errors.hpp"
#include "wng/random.hpp"

namespace wng {

void BehaviorBatch::validate() const {
  if (samples.rows() < 1 || samples.cols() < 1) {
    throw std::invalid_argument("BehaviorBatch: need N >= 1 samples of dimension d >= 1");
  }
  if (scores && scores->rows() != samples.rows()) {
    throw std::invalid_argument("BehaviorBatch: score rows must match sample rows");
  }
}

void WngConfig::validate() const {
  if (num_basis < 1) throw ConfigError("wng: num_basis must be >= 1");
  if (!(epsilon_min > 0.0 && epsilon_min <= epsilon_max)) {
    throw ConfigError("wng: epsilon bounds must satisfy 0 < min <= max");
  }
  if (!(epsilon_init > 0.0)) throw ConfigError("wng: epsilon_init must be positive");
  if (!(reduction_low > 0.0 && reduction_low < reduction_high && reduction_high < 1.0)) {
    throw ConfigError("wng: reduction band must satisfy 0 < low < high < 1");
  }
}

BasisSpec build_basis(const BehaviorBatch& batch, int num_basis, std::uint64_t seed) {
  batch.validate();
  const Index n = batch.size();
  const Index d = batch.dim();
  const Index m = std::min<Index>(std::max(num_basis, 1), n);

  Rng rng(seed);
  // Partial Fisher-Yates for sampling rows without replacement.
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  for (Index k = 0; k < m; ++k) {
    const auto j = k + static_cast<Index>(rng.index(static_cast<std::uint64_t>(n - k)));
    std::swap(rows[static_cast<std::size_t>(k)], rows[static_cast<std::size_t>(j)]);
  }

  BasisSpec basis;
  basis.points.resize(m, d);
  basis.dims.resize(static_cast<std::size_t>(m));
  for (Index k = 0; k < m; ++k) {
    basis.points.row(k) = batch.samples.row(rows[static_cast<std::size_t>(k)]);
    basis.dims[static_cast<std::size_t>(k)] = static_cast<Index>(rng.index(static_cast<std::uint64_t>(d)));
  }
  return basis;
}

GramMatrices build_gram(const Mat& samples, const BasisSpec& basis, const KernelConfig& cfg) {
  const Index n = samples.rows();
  const Index d = samples.cols();
  const Index m = basis.size();
  if (basis.points.cols() != d) throw std::invalid_argument("build_gram: basis dimension mismatch");

  const double s2 = cfg.bandwidth_sq();
  Mat c(m, n * d);
  for (Index k = 0; k < m; ++k) {
    const Index im = basis.dims[static_cast<std::size_t>(k)];
    for (Index s = 0; s < n; ++s) {
      const Vec diff = samples.row(s) - basis.points.row(k);
      const double kv = std::exp(-diff.squaredNorm() / s2);
      for (Index i = 0; i < d; ++i) {
        const double delta = (i == im) ? 1.0 : 0.0;
        c(k, s * d + i) = (-2.0 * delta / s2 + 4.0 * diff(i) * diff(im) / (s2 * s2)) * kv;
      }
    }
  }
  if (!c.allFinite()) throw NumericalError("build_gram", "non-finite kernel derivatives");
  SymmetricMatrix l(c * c.transpose() / static_cast<double>(n));
  return {std::move(c), std::move(l)};
}

Mat basis_values(const Mat& samples, const BasisSpec& basis, const KernelConfig& cfg) {
  const double s2 = cfg.bandwidth_sq();
  Mat h(basis.size(), samples.rows());
  for (Index k = 0; k < basis.size(); ++k) {
    const Index im = basis.dims[static_cast<std::size_t>(k)];
    for (Index s = 0; s < samples.rows(); ++s) {
      const Vec diff = samples.row(s) - basis.points.row(k);
      h(k, s) = -2.0 * diff(im) / s2 * std::exp(-diff.squaredNorm() / s2);
    }
  }
  return h;
}

Mat jacobian_reparam(const Mat& C, Index dim, std::span<const Mat> pushforward) {
  const auto n = static_cast<Index>(pushforward.size());
  if (n == 0 || C.cols() != n * dim) throw std::invalid_argument("jacobian_reparam: sample count mismatch");
  const Index p = pushforward.front().cols();
  Mat j = Mat::Zero(C.rows(), p);
  for (Index s = 0; s < n; ++s) {
    const Mat& jac = pushforward[static_cast<std::size_t>(s)];
    if (jac.rows() != dim || jac.cols() != p) {
      throw std::invalid_argument("jacobian_reparam: pushforward Jacobian must be d x p");
    }
    j.noalias() += C.middleCols(s * dim, dim) * jac;
  }
  return j / static_cast<double>(n);
}

Mat jacobian_reparam(const BehaviorBatch& batch, const BasisSpec& basis, const KernelConfig& cfg,
                     std::span<const Mat> pushforward) {
  if (static_cast<Index>(pushforward.size()) != batch.size()) {
    throw std::invalid_argument("jacobian_reparam: one pushforward Jacobian per sample required");
  }
  return jacobian_reparam(build_gram(batch.samples, basis, cfg).C, batch.dim(), pushforward);
}

Mat jacobian_score(const BehaviorBatch& batch, const BasisSpec& basis, const KernelConfig& cfg) {
  if (!batch.scores) throw PreconditionError("jacobian_score: batch carries no scores");
  batch.validate();
  const Mat h = basis_values(batch.samples, basis, cfg);
  return h * (*batch.scores) / static_cast<double>(batch.size());
}

Mat jacobian_es(const Mat& h_values, const Mat& perturbations, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("jacobian_es: sigma must be positive");
  if (h_values.cols() != perturbations.rows()) {
    throw std::invalid_argument("jacobian_es: h_values columns must match perturbation rows");
  }
  const auto n = static_cast<double>(perturbations.rows());
  return h_values * perturbations / (n * sigma);
}

WngWorkspace prepare_workspace(const Mat& samples, const WngConfig& config, double epsilon,
                               std::uint64_t basis_seed) {
  config.validate();
  if (!samples.allFinite()) throw NumericalError("samples", "non-finite behaviour embeddings");
  BehaviorBatch batch{samples, std::nullopt, basis_seed};
  WngWorkspace ws;
  ws.config = config;
  ws.kernel = resolve_bandwidth(config.kernel, samples);
  ws.basis = build_basis(batch, config.num_basis, basis_seed);
  auto gram = build_gram(samples, ws.basis, ws.kernel);
  ws.C = std::move(gram.C);
  ws.L = std::move(gram.L);
  ws.epsilon = std::clamp(epsilon, config.epsilon_min, config.epsilon_max);
  return ws;
}

WngEstimate estimate_wng_full(const Vec& g, const WngWorkspace& ws) {
  const Mat& j = ws.J;
  if (j.cols() != g.size()) throw std::invalid_argument("estimate_wng: J has wrong column count");
  if (j.rows() != ws.L.dim()) throw std::invalid_argument("estimate_wng: J and L disagree on M");
  if (!(ws.epsilon > 0.0)) throw std::invalid_argument("estimate_wng: epsilon must be positive");
  if (!g.allFinite()) throw NumericalError("gradient", "non-finite input gradient");
  if (!j.allFinite()) throw NumericalError("jacobian", "non-finite Jacobian");

  const SymmetricMatrix d(j * j.transpose() + ws.epsilon * ws.L.matrix());
  if (!d.matrix().allFinite()) throw NumericalError("damped_system", "non-finite D = JJ^T + eps L");
  const Vec jg = j * g;
  const Vec b = solve_psd(d, jg);
  if (!b.allFinite()) throw NumericalError("solve", "non-finite solution of the M x M system");

  WngEstimate out;
  out.correction = j.transpose() * b;
  out.direction = (g - out.correction) / ws.epsilon;
  if (!out.direction.allFinite()) throw NumericalError("output", "non-finite natural gradient");
  return out;
}

Vec estimate_wng(const Vec& g, const WngWorkspace& ws) { return estimate_wng_full(g, ws).direction; }

double reduction_factor(const WngWorkspace& ws, const Vec& g, const Vec& g_w) {
  const double gn = g.norm();
  if (gn == 0.0) return 0.0;
  // J^T b = g - eps * g_w
  return (g - ws.epsilon * g_w).norm() / gn;
}

double adapt_epsilon(const WngWorkspace& ws, const Vec& g, const Vec& g_w) {
  const WngConfig& cfg = ws.config;
  const double r = reduction_factor(ws, g, g_w);
  double eps = ws.epsilon;
  if (r > cfg.reduction_high) {
    eps *= 2.0;
  } else if (r < cfg.reduction_low) {
    eps *= 0.5;
  }
  if (g.dot(g_w) < 0.0) eps *= 10.0;
  return std::clamp(eps, cfg.epsilon_min, cfg.epsilon_max);
}

}  // namespace wng
