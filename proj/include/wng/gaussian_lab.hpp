#pragma once

#include <cstdint>
#include <functional>

#include "wng/kernel.hpp"
#include "wng/run_log.hpp"

namespace wng {

/// Covariance parameterization: Sigma_ii = v_i (Diagonal) or exp(2 v_i)
/// (LogDiagonal).
enum class CovarianceParam { Diagonal, LogDiagonal };

/// Diagonal Gaussian q_theta with theta = (mu, v). Packed parameter vectors
/// are laid out as [mu_0 .. mu_{D-1}, v_0 .. v_{D-1}].
struct GaussianModel {
  Vec mu;
  Vec v;
  CovarianceParam param = CovarianceParam::LogDiagonal;

  Index dim() const { return mu.size(); }
  Vec variance() const;
  Vec stddev() const;
  /// d sigma_i / d v_i
  Vec dstddev_dv() const;
  /// d Sigma_ii / d v_i
  Vec dvariance_dv() const;

  Vec packed() const;
  static GaussianModel from_packed(const Vec& theta, CovarianceParam param);

  /// Throws InvalidStateError unless the parameters are admissible.
  void validate() const;
};

/// Smallest admissible v in diagonal mode and in log-diagonal mode. Updates
/// are projected onto v >= floor so that iterates stay representable as the
/// covariance collapses towards a point mass.
inline constexpr double kMinDiagonalVariance = 1e-300;
inline constexpr double kMinLogStd = -150.0;

GaussianModel project(GaussianModel model);

/// Per-coordinate loss 1 - sin(x)/x (0 at x = 0) and its derivative.
double sinc_term(double x);
double sinc_term_derivative(double x);
double sinc_term_second_derivative(double x);

/// Sum over coordinates of 1 - sin(x_i)/x_i. Nonnegative, zero only at x = 0.
double sinc_loss(const Vec& x);

struct ObjectiveEstimate {
  double loss = 0.0;
  Vec grad;                 // packed (d/dmu, d/dv)
  double loss_stderr = 0.0;  // Monte-Carlo standard error of `loss`
};

/// Reparameterized Monte-Carlo estimate of E_q[sinc_loss(x)] and its gradient:
/// E[f'(x)] for mu and (1/2) E[f''(x)] dSigma/dv for v (Price's theorem). The
/// first-order pathwise form E[f'(x) z] / (2 sigma) has variance growing like
/// 1 / Sigma, which blows up as the diagonal variance collapses.
ObjectiveEstimate objective_mc(const GaussianModel& model, int n_samples, std::uint64_t seed);

/// Exact E_q[sinc_loss(x)] through E[sin X / X] = int_0^1 exp(-Sigma t^2 / 2) cos(mu t) dt,
/// with 128-node Gauss-Legendre quadrature per coordinate.
double objective_quadrature(const GaussianModel& model);

/// One coordinate of objective_quadrature.
double quadrature_term(double mu, double variance);

/// Gradient of objective_quadrature, by the same quadrature rule.
Vec objective_quadrature_gradient(const GaussianModel& model);

/// Squared 2-Wasserstein distance between diagonal Gaussians.
double closed_form_w2(const GaussianModel& a, const GaussianModel& b);

/// KL(a || b) between diagonal Gaussians. Throws DivergenceError if b is
/// degenerate.
double closed_form_kl(const GaussianModel& a, const GaussianModel& b);

enum class NaturalGradientKind { Wasserstein, Fisher };

/// Closed-form inverse-metric maps applied to a packed Euclidean gradient.
Vec analytic_natural_gradient(const GaussianModel& model, const Vec& grad, NaturalGradientKind kind);

/// Metric matrix (W2 information or Fisher) for the packed parameters.
Mat analytic_metric(const GaussianModel& model, NaturalGradientKind kind);

enum class PenaltyKind { W2, KL };

/// Gradient in the parameters of `model` of W2^2(anchor, model) or
/// KL(anchor || model), with the anchor held fixed.
Vec penalty_gradient(const GaussianModel& model, const GaussianModel& anchor, PenaltyKind kind);

using ModelGradientFn = std::function<Vec(const GaussianModel&, int inner_step)>;

/// Gradient steps of size lambda on loss + (beta / 2) D(anchor, .), starting
/// from `model`. With anchor == model and one inner step this is a plain
/// gradient step: the penalty gradient vanishes at its anchor.
GaussianModel penalized_step(const GaussianModel& model, const GaussianModel& anchor,
                             const ModelGradientFn& grad_fn, PenaltyKind kind, double beta, double lambda,
                             int inner_steps = 1);

/// Quadratic loss 0.5 theta^T A theta + c^T theta over packed parameters.
struct QuadraticLoss {
  Mat A;
  Vec c;

  double value(const Vec& theta) const { return 0.5 * theta.dot(A * theta) + c.dot(theta); }
  Vec gradient(const Vec& theta) const { return A * theta + c; }
};

/// beta * argmin_delta [loss(theta + delta) + (beta / 2) D(theta, theta + delta)],
/// solved by Newton iterations. As beta grows its direction approaches minus the
/// natural gradient of `loss` for the metric induced by D.
Vec proximal_direction(const GaussianModel& model, const QuadraticLoss& loss, PenaltyKind kind, double beta);

enum class ToyMethod { GradientDescent, Wng, Fng, W2Penalty, KlPenalty };
enum class ToyGradient { MonteCarlo, Quadrature };

struct ToyRunConfig {
  ToyMethod method = ToyMethod::Wng;
  CovarianceParam param = CovarianceParam::LogDiagonal;
  double step_size = 0.9;
  double beta = 0.1;
  int iterations = 4000;
  int mc_samples = 256;
  int dim = 100;
  int penalty_inner_steps = 1;
  int log_every = 1;
  int spectrum_k = 0;  // > 0 logs Hessian eigenvalue ratios at the end
  ToyGradient gradient = ToyGradient::MonteCarlo;
  std::uint64_t seed = 0;

  void validate() const;
};

/// mu ~ U[2, 4]^D and Sigma = I, drawn from `seed`.
GaussianModel initial_toy_model(int dim, CovarianceParam param, std::uint64_t seed);

/// Runs the configured method from `model0`. Logged metrics: loss (summed
/// over coordinates), loss_per_dim, mu_norm, sigma_min, sigma_max, step_norm.
RunLog run_toy(const ToyRunConfig& config, const GaussianModel& model0);
RunLog run_toy(const ToyRunConfig& config);

/// Central-difference Hessian of `f` at `theta`.
Mat finite_difference_hessian(const std::function<double(const Vec&)>& f, const Vec& theta);

/// lambda_1 / lambda_j for the k largest eigenvalues of `hessian`, sorted
/// descending. Nonpositive eigenvalues give +infinity.
Vec eigenvalue_ratios(const Mat& hessian, int k);

Vec hessian_spectrum(const std::function<double(const Vec&)>& f, const Vec& theta, int k);

/// Hessian of objective_quadrature at the model. The objective is a sum of
/// per-coordinate terms, so the Hessian is assembled from 2 x 2 blocks.
Vec hessian_spectrum(const GaussianModel& model, int k);

const char* to_string(ToyMethod m);
const char* to_string(CovarianceParam p);

}  // namespace wng
