#include "wng/gaussian_lab.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "wng/errors.hpp"
#include "wng/random.hpp"

namespace wng {

namespace {

constexpr int kQuadratureNodes = 128;

struct GaussLegendre {
  std::array<double, kQuadratureNodes> t{};  // nodes mapped to [0, 1]
  std::array<double, kQuadratureNodes> w{};
};

// Newton iteration on P_n from the Chebyshev-like initial guesses.
GaussLegendre make_gauss_legendre() {
  GaussLegendre gl;
  constexpr int n = kQuadratureNodes;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double weight = 2.0 / ((1.0 - x * x) * dp * dp);
    gl.t[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
    gl.t[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (1.0 + x);
    gl.w[static_cast<std::size_t>(i)] = 0.5 * weight;
    gl.w[static_cast<std::size_t>(n - 1 - i)] = 0.5 * weight;
  }
  return gl;
}

const GaussLegendre& gauss_legendre() {
  static const GaussLegendre gl = make_gauss_legendre();
  return gl;
}

void require_same_dim(const GaussianModel& a, const GaussianModel& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("gaussian_lab: dimension mismatch");
}

}  // namespace

Vec GaussianModel::variance() const {
  if (param == CovarianceParam::Diagonal) return v;
  return (2.0 * v.array()).exp().matrix();
}

Vec GaussianModel::stddev() const {
  if (param == CovarianceParam::Diagonal) return v.array().max(0.0).sqrt().matrix();
  return v.array().exp().matrix();
}

Vec GaussianModel::dstddev_dv() const {
  if (param == CovarianceParam::Diagonal) return (0.5 / v.array().sqrt()).matrix();
  return v.array().exp().matrix();
}

Vec GaussianModel::dvariance_dv() const {
  if (param == CovarianceParam::Diagonal) return Vec::Ones(v.size());
  return (2.0 * (2.0 * v.array()).exp()).matrix();
}

Vec GaussianModel::packed() const {
  Vec theta(2 * dim());
  theta << mu, v;
  return theta;
}

GaussianModel GaussianModel::from_packed(const Vec& theta, CovarianceParam param) {
  if (theta.size() % 2 != 0) throw std::invalid_argument("GaussianModel: packed size must be even");
  const Index d = theta.size() / 2;
  return {theta.head(d), theta.tail(d), param};
}

void GaussianModel::validate() const {
  if (mu.size() != v.size()) throw InvalidStateError("GaussianModel: mu and v differ in length");
  if (!mu.allFinite() || !v.allFinite()) throw InvalidStateError("GaussianModel: non-finite parameters");
  if (param == CovarianceParam::Diagonal && (v.array() <= 0.0).any()) {
    throw InvalidStateError("GaussianModel: diagonal parameterization needs v > 0");
  }
}

GaussianModel project(GaussianModel model) {
  const double floor = model.param == CovarianceParam::Diagonal ? kMinDiagonalVariance : kMinLogStd;
  model.v = model.v.array().max(floor).matrix();
  return model;
}

double sinc_term(double x) {
  const double ax = std::abs(x);
  if (ax < 1e-2) {
    const double x2 = x * x;
    return x2 * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 5040.0 - x2 / 362880.0)));
  }
  return 1.0 - std::sin(x) / x;
}

double sinc_term_derivative(double x) {
  if (std::abs(x) < 1e-2) {
    const double x2 = x * x;
    return x * (1.0 / 3.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 840.0 - x2 / 45360.0)));
  }
  return (std::sin(x) - x * std::cos(x)) / (x * x);
}

double sinc_term_second_derivative(double x) {
  // The closed form cancels to ~1e-16 / |x|^3; switch to the series early.
  if (std::abs(x) < 1e-1) {
    const double x2 = x * x;
    return 1.0 / 3.0 - x2 * (1.0 / 10.0 - x2 * (1.0 / 168.0 - x2 * (1.0 / 6480.0 - x2 / 443520.0)));
  }
  const double s = std::sin(x), c = std::cos(x);
  return s / x + 2.0 * c / (x * x) - 2.0 * s / (x * x * x);
}

double sinc_loss(const Vec& x) {
  double s = 0.0;
  for (Index i = 0; i < x.size(); ++i) s += sinc_term(x(i));
  return s;
}

ObjectiveEstimate objective_mc(const GaussianModel& model, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("objective_mc: need at least one sample");
  const Index d = model.dim();
  const Vec sigma = model.stddev();
  const Vec dvar = model.dvariance_dv();
  Rng rng(seed);

  Vec g_mu = Vec::Zero(d);
  Vec g_v = Vec::Zero(d);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    double loss = 0.0;
    for (Index i = 0; i < d; ++i) {
      const double z = rng.normal();
      const double x = model.mu(i) + sigma(i) * z;
      loss += sinc_term(x);
      g_mu(i) += sinc_term_derivative(x);
      g_v(i) += sinc_term_second_derivative(x);
    }
    sum += loss;
    sum_sq += loss * loss;
  }
  const double n = n_samples;
  ObjectiveEstimate out;
  out.loss = sum / n;
  out.grad.resize(2 * d);
  out.grad.head(d) = g_mu / n;
  out.grad.tail(d) = (0.5 / n) * g_v.cwiseProduct(dvar);
  const double var = n > 1 ? std::max(0.0, (sum_sq - n * out.loss * out.loss) / (n - 1.0)) : 0.0;
  out.loss_stderr = std::sqrt(var / n);
  return out;
}

double quadrature_term(double mu, double variance) {
  const auto& gl = gauss_legendre();
  double integral = 0.0;
  for (int k = 0; k < kQuadratureNodes; ++k) {
    const double t = gl.t[static_cast<std::size_t>(k)];
    integral += gl.w[static_cast<std::size_t>(k)] * std::exp(-0.5 * variance * t * t) * std::cos(mu * t);
  }
  return 1.0 - integral;
}

double objective_quadrature(const GaussianModel& model) {
  const Vec var = model.variance();
  double total = 0.0;
  for (Index i = 0; i < model.dim(); ++i) total += quadrature_term(model.mu(i), var(i));
  return total;
}

Vec objective_quadrature_gradient(const GaussianModel& model) {
  const auto& gl = gauss_legendre();
  const Index d = model.dim();
  const Vec var = model.variance();
  const Vec dvar = model.dvariance_dv();
  Vec grad(2 * d);
  for (Index i = 0; i < d; ++i) {
    double g_mu = 0.0;
    double g_var = 0.0;
    for (int k = 0; k < kQuadratureNodes; ++k) {
      const double t = gl.t[static_cast<std::size_t>(k)];
      const double e = gl.w[static_cast<std::size_t>(k)] * std::exp(-0.5 * var(i) * t * t);
      g_mu += e * t * std::sin(model.mu(i) * t);
      g_var += e * 0.5 * t * t * std::cos(model.mu(i) * t);
    }
    grad(i) = g_mu;
    grad(d + i) = g_var * dvar(i);
  }
  return grad;
}

double closed_form_w2(const GaussianModel& a, const GaussianModel& b) {
  require_same_dim(a, b);
  return (a.mu - b.mu).squaredNorm() + (a.stddev() - b.stddev()).squaredNorm();
}

double closed_form_kl(const GaussianModel& a, const GaussianModel& b) {
  require_same_dim(a, b);
  const Vec va = a.variance();
  const Vec vb = b.variance();
  if ((vb.array() <= 0.0).any()) throw DivergenceError("closed_form_kl: reference distribution is degenerate");
  if ((va.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
  double kl = 0.0;
  for (Index i = 0; i < a.dim(); ++i) {
    const double dm = b.mu(i) - a.mu(i);
    kl += va(i) / vb(i) + dm * dm / vb(i) - 1.0 + std::log(vb(i) / va(i));
  }
  return 0.5 * kl;
}

Vec analytic_natural_gradient(const GaussianModel& model, const Vec& grad, NaturalGradientKind kind) {
  const Index d = model.dim();
  if (grad.size() != 2 * d) throw std::invalid_argument("analytic_natural_gradient: gradient size mismatch");
  if (model.param == CovarianceParam::Diagonal && (model.v.array() <= 0.0).any()) {
    throw InvalidStateError("analytic_natural_gradient: diagonal parameterization needs v > 0");
  }
  const Vec metric = analytic_metric(model, kind).diagonal();
  return grad.cwiseQuotient(metric);
}

Mat analytic_metric(const GaussianModel& model, NaturalGradientKind kind) {
  const Index d = model.dim();
  const Vec var = model.variance();
  const bool diagonal = model.param == CovarianceParam::Diagonal;
  Vec diag(2 * d);
  for (Index i = 0; i < d; ++i) {
    if (kind == NaturalGradientKind::Wasserstein) {
      diag(i) = 1.0;
      diag(d + i) = diagonal ? 0.25 / var(i) : var(i);
    } else {
      diag(i) = 1.0 / var(i);
      diag(d + i) = diagonal ? 0.5 / (var(i) * var(i)) : 2.0;
    }
  }
  return diag.asDiagonal();
}

Vec penalty_gradient(const GaussianModel& model, const GaussianModel& anchor, PenaltyKind kind) {
  require_same_dim(model, anchor);
  const Index d = model.dim();
  Vec grad(2 * d);
  if (kind == PenaltyKind::W2) {
    grad.head(d) = 2.0 * (model.mu - anchor.mu);
    grad.tail(d) = (2.0 * (model.stddev() - anchor.stddev()).array() * model.dstddev_dv().array()).matrix();
    return grad;
  }
  const Vec va = anchor.variance();
  if ((va.array() <= 0.0).any()) throw DivergenceError("penalty_gradient: KL anchor is degenerate");
  const Vec var = model.variance();
  const Vec dvar = model.dvariance_dv();
  for (Index i = 0; i < d; ++i) {
    const double dm = model.mu(i) - anchor.mu(i);
    grad(i) = dm / var(i);
    const double dkl_dvar = 0.5 * (1.0 / var(i) - (va(i) + dm * dm) / (var(i) * var(i)));
    grad(d + i) = dkl_dvar * dvar(i);
  }
  return grad;
}

GaussianModel penalized_step(const GaussianModel& model, const GaussianModel& anchor,
                             const ModelGradientFn& grad_fn, PenaltyKind kind, double beta, double lambda,
                             int inner_steps) {
  if (beta < 0.0) throw std::invalid_argument("penalized_step: beta must be nonnegative");
  if (kind == PenaltyKind::KL && (anchor.variance().array() <= 0.0).any()) {
    throw DivergenceError("penalized_step: KL anchor is degenerate");
  }
  GaussianModel current = model;
  for (int j = 0; j < std::max(inner_steps, 1); ++j) {
    Vec g = grad_fn(current, j);
    if (beta > 0.0) g += 0.5 * beta * penalty_gradient(current, anchor, kind);
    current = project(GaussianModel::from_packed(current.packed() - lambda * g, current.param));
  }
  return current;
}

Vec proximal_direction(const GaussianModel& model, const QuadraticLoss& loss, PenaltyKind kind, double beta) {
  const Vec theta0 = model.packed();
  const Index p = theta0.size();
  auto residual = [&](const Vec& delta) {
    const GaussianModel m = GaussianModel::from_packed(theta0 + delta, model.param);
    return Vec(loss.gradient(theta0 + delta) + 0.5 * beta * penalty_gradient(m, model, kind));
  };
  Vec delta = Vec::Zero(p);
  for (int iter = 0; iter < 100; ++iter) {
    const Vec r = residual(delta);
    Mat jac(p, p);
    for (Index j = 0; j < p; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(theta0(j))) / std::max(1.0, std::sqrt(beta));
      Vec e = Vec::Zero(p);
      e(j) = h;
      jac.col(j) = (residual(delta + e) - residual(delta - e)) / (2.0 * h);
    }
    const Vec step = jac.fullPivLu().solve(r);
    delta -= step;
    if (step.norm() <= 1e-14 * std::max(1.0, delta.norm())) break;
  }
  return beta * delta;
}

void ToyRunConfig::validate() const {
  if (!(step_size > 0.0)) throw ConfigError("toy: step_size must be positive");
  if (beta < 0.0) throw ConfigError("toy: beta must be nonnegative");
  if (iterations < 1) throw ConfigError("toy: iterations must be positive");
  if (mc_samples < 1) throw ConfigError("toy: mc_samples must be positive");
  if (dim < 1) throw ConfigError("toy: dim must be positive");
  if (penalty_inner_steps < 1) throw ConfigError("toy: penalty_inner_steps must be positive");
  if (log_every < 1) throw ConfigError("toy: log_every must be positive");
  if (spectrum_k < 0 || spectrum_k > 2 * dim) throw ConfigError("toy: spectrum_k must lie in [0, 2 * dim]");
}

GaussianModel initial_toy_model(int dim, CovarianceParam param, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x1417));
  GaussianModel m;
  m.param = param;
  m.mu.resize(dim);
  for (int i = 0; i < dim; ++i) m.mu(i) = rng.uniform(2.0, 4.0);
  m.v = param == CovarianceParam::Diagonal ? Vec::Ones(dim) : Vec::Zero(dim);
  return m;
}

RunLog run_toy(const ToyRunConfig& config, const GaussianModel& model0) {
  config.validate();
  model0.validate();
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const auto elapsed_ms = [&] { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); };

  RunLog log;
  const std::uint64_t seed = config.seed;
  const double inv_dim = 1.0 / static_cast<double>(model0.dim());
  auto record = [&](std::int64_t k, const GaussianModel& m, double step_norm) {
    const double ms = elapsed_ms();
    const double loss = objective_quadrature(m);
    const Vec sd = m.stddev();
    log.add(k, "loss", loss, seed, ms);
    log.add(k, "loss_per_dim", loss * inv_dim, seed, ms);
    log.add(k, "mu_norm", m.mu.norm(), seed, ms);
    log.add(k, "sigma_min", sd.minCoeff(), seed, ms);
    log.add(k, "sigma_max", sd.maxCoeff(), seed, ms);
    log.add(k, "step_norm", step_norm, seed, ms);
  };

  GaussianModel model = project(model0);
  record(0, model, 0.0);

  for (int k = 1; k <= config.iterations; ++k) {
    const ModelGradientFn grad_fn = [&](const GaussianModel& m, int inner) -> Vec {
      if (config.gradient == ToyGradient::Quadrature) return objective_quadrature_gradient(m);
      return objective_mc(m, config.mc_samples, derive_seed(seed, static_cast<std::uint64_t>(k),
                                                            static_cast<std::uint64_t>(inner)))
          .grad;
    };

    GaussianModel next;
    switch (config.method) {
      case ToyMethod::GradientDescent:
        next = GaussianModel::from_packed(model.packed() - config.step_size * grad_fn(model, 0), model.param);
        break;
      case ToyMethod::Wng:
      case ToyMethod::Fng: {
        const auto kind =
            config.method == ToyMethod::Wng ? NaturalGradientKind::Wasserstein : NaturalGradientKind::Fisher;
        const Vec nat = analytic_natural_gradient(model, grad_fn(model, 0), kind);
        next = GaussianModel::from_packed(model.packed() - config.step_size * nat, model.param);
        break;
      }
      case ToyMethod::W2Penalty:
      case ToyMethod::KlPenalty: {
        const auto kind = config.method == ToyMethod::W2Penalty ? PenaltyKind::W2 : PenaltyKind::KL;
        next = penalized_step(model, model, grad_fn, kind, config.beta, config.step_size,
                              config.penalty_inner_steps);
        break;
      }
    }
    next = project(std::move(next));
    if (!next.mu.allFinite() || !next.v.allFinite()) {
      log.add(k, "diverged", 1.0, seed, elapsed_ms());
      break;
    }
    const double step_norm = (next.packed() - model.packed()).norm();
    model = std::move(next);
    if (k % config.log_every == 0 || k == config.iterations) record(k, model, step_norm);
  }

  if (config.spectrum_k > 0) {
    const Vec ratios = hessian_spectrum(model, config.spectrum_k);
    const auto last = log.rows().back().iteration;
    for (Index j = 0; j < ratios.size(); ++j) {
      if (std::isfinite(ratios(j))) {
        log.add(last, "hessian_ratio_" + std::to_string(j + 1), ratios(j), seed, elapsed_ms());
      }
    }
  }
  return log;
}

RunLog run_toy(const ToyRunConfig& config) {
  return run_toy(config, initial_toy_model(config.dim, config.param, config.seed));
}

Mat finite_difference_hessian(const std::function<double(const Vec&)>& f, const Vec& theta) {
  const Index p = theta.size();
  Mat h(p, p);
  Vec step(p);
  for (Index i = 0; i < p; ++i) step(i) = 1e-4 * std::max(1.0, std::abs(theta(i)));
  const double f0 = f(theta);
  for (Index i = 0; i < p; ++i) {
    Vec tp = theta;
    Vec tm = theta;
    tp(i) += step(i);
    tm(i) -= step(i);
    h(i, i) = (f(tp) - 2.0 * f0 + f(tm)) / (step(i) * step(i));
    for (Index j = i + 1; j < p; ++j) {
      Vec pp = theta, pm = theta, mp = theta, mm = theta;
      pp(i) += step(i), pp(j) += step(j);
      pm(i) += step(i), pm(j) -= step(j);
      mp(i) -= step(i), mp(j) += step(j);
      mm(i) -= step(i), mm(j) -= step(j);
      h(i, j) = h(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * step(i) * step(j));
    }
  }
  if (!h.allFinite()) throw NumericalError("hessian", "non-finite Hessian entries");
  return h;
}

Vec eigenvalue_ratios(const Mat& hessian, int k) {
  if (k < 1 || k > hessian.rows()) throw std::invalid_argument("hessian_spectrum: k out of range");
  if (!hessian.allFinite()) throw NumericalError("hessian", "non-finite Hessian entries");
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (hessian + hessian.transpose()), Eigen::EigenvaluesOnly);
  const Vec& lambda = eig.eigenvalues();  // ascending
  const Index p = lambda.size();
  const double top = lambda(p - 1);
  Vec ratios(k);
  for (int j = 0; j < k; ++j) {
    const double lj = lambda(p - 1 - j);
    ratios(j) = (lj > 0.0 && top > 0.0) ? top / lj : std::numeric_limits<double>::infinity();
  }
  return ratios;
}

Vec hessian_spectrum(const std::function<double(const Vec&)>& f, const Vec& theta, int k) {
  return eigenvalue_ratios(finite_difference_hessian(f, theta), k);
}

Vec hessian_spectrum(const GaussianModel& model, int k) {
  const Index d = model.dim();
  Mat h = Mat::Zero(2 * d, 2 * d);
  for (Index i = 0; i < d; ++i) {
    const auto term = [&](const Vec& t) {
      GaussianModel one{t.head(1), t.tail(1), model.param};
      return quadrature_term(one.mu(0), one.variance()(0));
    };
    Vec t(2);
    t << model.mu(i), model.v(i);
    const Mat block = finite_difference_hessian(term, t);
    h(i, i) = block(0, 0);
    h(i, d + i) = h(d + i, i) = block(0, 1);
    h(d + i, d + i) = block(1, 1);
  }
  return eigenvalue_ratios(h, k);
}

const char* to_string(ToyMethod m) {
  switch (m) {
    case ToyMethod::GradientDescent: return "gd";
    case ToyMethod::Wng: return "wng";
    case ToyMethod::Fng: return "fng";
    case ToyMethod::W2Penalty: return "w2-penalty";
    case ToyMethod::KlPenalty: return "kl-penalty";
  }
  return "?";
}

const char* to_string(CovarianceParam p) {
  return p == CovarianceParam::Diagonal ? "diag" : "log-diag";
}

}  // namespace wng
