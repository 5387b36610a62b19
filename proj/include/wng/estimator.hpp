#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wng/kernel.hpp"

namespace wng {

/// N embedded behaviours X_n (rows of `samples`, dimension d) drawn from the
/// behaviour distribution q_theta, with optional per-sample scores
/// grad_theta log q_theta(X_n) as the rows of `scores` (N x p).
struct BehaviorBatch {
  Mat samples;
  std::optional<Mat> scores;
  std::uint64_t seed = 0;

  Index size() const { return samples.rows(); }
  Index dim() const { return samples.cols(); }
  void validate() const;
};

/// Basis functions h_m(x) = d_{dims[m]} K(points.row(m), x).
struct BasisSpec {
  Mat points;
  std::vector<Index> dims;

  Index size() const { return points.rows(); }
};

struct WngConfig {
  int num_basis = 5;
  double epsilon_init = 1e-5;
  double epsilon_min = 1e-10;
  double epsilon_max = 1e5;
  double reduction_low = 0.25;
  double reduction_high = 0.75;
  KernelConfig kernel{};
  std::uint64_t seed = 0;

  void validate() const;
};

struct GramMatrices {
  Mat C;              // M x (N * d), column n * d + i
  SymmetricMatrix L;  // (1 / N) C C^T
};

/// Everything one estimate touches. Immutable once built.
struct WngWorkspace {
  BasisSpec basis;
  KernelConfig kernel;  // resolved (fixed) bandwidth
  Mat C;
  SymmetricMatrix L;
  Mat J;  // M x p
  double epsilon = 1e-5;
  WngConfig config;
};

/// Draws min(M, N) distinct batch rows and M dimension indices (with
/// replacement). Deterministic in `seed`.
BasisSpec build_basis(const BehaviorBatch& batch, int num_basis, std::uint64_t seed);

GramMatrices build_gram(const Mat& samples, const BasisSpec& basis, const KernelConfig& cfg);

/// h_m(X_n) for every basis function and sample (M x N).
Mat basis_values(const Mat& samples, const BasisSpec& basis, const KernelConfig& cfg);

/// Reparameterization form: J_m = (1/N) sum_n grad_x h_m(X_n)^T dX_n/dtheta.
/// `pushforward[n]` is the d x p Jacobian of the sample map at Z_n, and
/// grad_x h_m(X_n) is read from C.
Mat jacobian_reparam(const Mat& C, Index dim, std::span<const Mat> pushforward);

Mat jacobian_reparam(const BehaviorBatch& batch, const BasisSpec& basis, const KernelConfig& cfg,
                     std::span<const Mat> pushforward);

/// Score form: J_m = (1/N) sum_n h_m(X_n) score_n.
Mat jacobian_score(const BehaviorBatch& batch, const BasisSpec& basis, const KernelConfig& cfg);

/// Evolution-strategies form: J_m = (1/(N sigma)) sum_n h_m(X_n) eps_n, where
/// `perturbations` holds the standardized noise eps_n = (theta_n - theta) / sigma.
Mat jacobian_es(const Mat& h_values, const Mat& perturbations, double sigma);

/// Assembles the workspace for a batch: resolves the bandwidth, draws the
/// basis, and builds C and L. J is left for the caller to fill in.
WngWorkspace prepare_workspace(const Mat& samples, const WngConfig& config, double epsilon,
                               std::uint64_t basis_seed);

struct WngEstimate {
  Vec direction;   // g_w
  Vec correction;  // J^T b, the part of g removed before scaling by 1/epsilon
};

/// (g - J^T (J J^T + eps L)^+ J g) / eps, i.e. (J^T L^+ J + eps I)^{-1} g,
/// without forming any p x p matrix.
WngEstimate estimate_wng_full(const Vec& g, const WngWorkspace& ws);

Vec estimate_wng(const Vec& g, const WngWorkspace& ws);

/// Damping update driven by the reduction factor r = |J^T b| / |g|.
double adapt_epsilon(const WngWorkspace& ws, const Vec& g, const Vec& g_w);

/// Reduction factor used by adapt_epsilon.
double reduction_factor(const WngWorkspace& ws, const Vec& g, const Vec& g_w);

}  // namespace wng
