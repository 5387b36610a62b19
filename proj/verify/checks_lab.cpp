// Gaussian lab properties.

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "verify/checks.hpp"
#include "verify/oracles.hpp"
#include "wng/errors.hpp"
#include "wng/gaussian_lab.hpp"
#include "wng/random.hpp"

namespace wng::verify {
namespace {

GaussianModel model1d(double mu, double v, CovarianceParam p) {
  return {Vec::Constant(1, mu), Vec::Constant(1, v), p};
}

GaussianModel random_model(Rng& rng, Index d, CovarianceParam p) {
  GaussianModel m{Vec(d), Vec(d), p};
  for (Index i = 0; i < d; ++i) {
    m.mu(i) = rng.uniform(-2.0, 2.0);
    m.v(i) = p == CovarianceParam::Diagonal ? rng.uniform(0.3, 2.0) : rng.uniform(-0.6, 0.4);
  }
  return m;
}

CheckResult lab_sinc() {
  Tally t;
  t.near(sinc_loss(Vec::Zero(4)), 0.0, 0.0, "loss at 0");
  t.near(sinc_loss(Vec::Constant(1, std::numbers::pi)), 1.0, 1e-15, "loss at pi");
  const double xstar = oracle::golden_section_max(sinc_term, 3.5, 5.5);
  t.near(xstar, 4.493409, 1e-6, "argmax of 1 - sinc");
  t.near(sinc_term(xstar), 1.217234, 1e-6, "max of 1 - sinc");
  for (double x : {-0.3, -0.1, -0.09999, -1e-2, -9.999e-3, -1e-5, 0.0, 1e-7, 5e-3, 9.999e-3, 1e-2, 0.02, 1.5, 7.0}) {
    auto direct = [](double y) { return y == 0.0 ? 0.0 : 1.0 - std::sin(y) / y; };
    if (std::abs(x) > 1e-3) t.near(sinc_term(x), direct(x), 1e-15, "series vs direct");
    const double fd = oracle::central_difference(sinc_term, x, 1e-5);
    t.near(sinc_term_derivative(x), fd, 1e-9, "derivative vs finite difference");
    const double fd2 = oracle::central_difference(sinc_term_derivative, x, 1e-5);
    t.near(sinc_term_second_derivative(x), fd2, 1e-9, "second derivative vs finite difference");
    t.expect(sinc_term(x) >= 0.0, "negative loss term");
  }
  return t.result();
}

CheckResult lab_quadrature() {
  Tally t;
  t.near(quadrature_term(0.0, 0.0), 0.0, 1e-15, "mu = 0, Sigma = 0");
  const double ref = 1.0 - oracle::simpson([](double s) { return std::exp(-0.5 * s * s); }, 0.0, 1.0, 2000);
  t.near(quadrature_term(0.0, 1.0), ref, 1e-12, "mu = 0, Sigma = 1");
  t.near(quadrature_term(0.0, 1.0), 0.1443756, 1e-7, "mu = 0, Sigma = 1 (frozen)");

  const GaussianModel one = model1d(0.7, 0.3, CovarianceParam::LogDiagonal);
  const GaussianModel hundred{Vec::Constant(100, 0.7), Vec::Constant(100, 0.3), CovarianceParam::LogDiagonal};
  t.expect(relative_error(objective_quadrature(hundred), 100.0 * objective_quadrature(one)) < 1e-13, "not additive");

  // Against a direct Gaussian integral of the loss.
  for (auto [mu, var] : {std::pair{0.0, 1.0}, {2.5, 0.5}, {-3.0, 2.0}, {4.4, 0.01}}) {
    auto loss = [](double x) { return sinc_term(x); };
    const double want = oracle::gaussian_expectation(loss, mu, std::sqrt(var), 20000);
    t.near(quadrature_term(mu, var), want, 1e-10, "quadrature vs Gaussian integral");
  }

  Rng rng(2101);
  for (CovarianceParam p : {CovarianceParam::Diagonal, CovarianceParam::LogDiagonal}) {
    const GaussianModel m = random_model(rng, 3, p);
    const Vec g = objective_quadrature_gradient(m);
    auto f = [&](const Vec& th) { return objective_quadrature(GaussianModel::from_packed(th, p)); };
    const Vec fd = oracle::fd_gradient(f, m.packed(), 1e-6);
    t.expect(relative_error(g, fd) < 1e-7, format("quadrature gradient rel err %.2e", relative_error(g, fd)));
  }
  return t.result();
}

CheckResult lab_monte_carlo() {
  Tally t;
  const GaussianModel point{Vec::Zero(5), Vec::Constant(5, 1e-12), CovarianceParam::Diagonal};
  t.near(objective_mc(point, 256, 1).loss, 0.0, 1e-6, "degenerate Gaussian at the optimum");

  Rng rng(2201);
  for (CovarianceParam p : {CovarianceParam::Diagonal, CovarianceParam::LogDiagonal}) {
    const GaussianModel m = random_model(rng, 3, p);
    const ObjectiveEstimate e = objective_mc(m, 4096, 17);
    const double q = objective_quadrature(m);
    t.expect(std::abs(e.loss - q) < 3.0 * e.loss_stderr,
             format("MC %.6f vs quadrature %.6f (se %.1e)", e.loss, q, e.loss_stderr));

    // Common random numbers make the loss estimate a smooth function of mu,
    // and the mu gradient is its exact derivative.
    const Index d = m.dim();
    auto f = [&](const Vec& th) { return objective_mc(GaussianModel::from_packed(th, p), 512, 23).loss; };
    const Vec fd = oracle::fd_gradient(f, m.packed(), 1e-6);
    const Vec g = objective_mc(m, 512, 23).grad;
    const double mu_err = relative_error(Vec(g.head(d)), Vec(fd.head(d)));
    t.expect(mu_err < 1e-4, format("mu gradient rel err %.2e", mu_err));

    // The v gradient is unbiased: mean over seeds against d/dv of the
    // Simpson expectation.
    const int seeds = 40;
    Mat gv(seeds, d);
    for (int s = 0; s < seeds; ++s) gv.row(s) = objective_mc(m, 1024, derive_seed(29, static_cast<std::uint64_t>(s))).grad.tail(d).transpose();
    for (Index i = 0; i < d; ++i) {
      auto expect_at = [&](double v) {
        GaussianModel mi = m;
        mi.v(i) = v;
        return oracle::gaussian_expectation(sinc_term, mi.mu(i), mi.stddev()(i));
      };
      const double want = oracle::central_difference(expect_at, m.v(i), 1e-5);
      const Vec c = gv.col(i);
      const double se = std::sqrt((c.array() - c.mean()).square().sum() / (seeds - 1.0) / seeds);
      t.expect(std::abs(c.mean() - want) < 3.0 * se + 1e-9, format("v gradient %.6f vs %.6f (se %.1e)", c.mean(), want, se));
    }
  }
  return t.result();
}

CheckResult lab_closed_forms() {
  Tally t;
  const auto diag = CovarianceParam::Diagonal;
  const GaussianModel a = model1d(0.0, 1.0, diag);
  t.near(closed_form_w2(a, a), 0.0, 0.0, "W2(a, a)");
  t.near(closed_form_w2(a, model1d(1.0, 1.0, diag)), 1.0, 1e-15, "mean shift");
  t.near(closed_form_w2(a, model1d(0.0, 4.0, diag)), 1.0, 1e-15, "sigma 1 vs 2");
  t.near(closed_form_kl(a, a), 0.0, 0.0, "KL(a, a)");
  t.near(closed_form_kl(a, model1d(1.0, 1.0, diag)), 0.5, 1e-15, "KL mean shift");
  const double e2 = std::exp(2.0);
  t.near(closed_form_kl(a, model1d(0.0, e2, diag)), 0.5676676, 1e-7, "KL variance ratio (frozen)");
  // Direct integral of log(p / q) under p.
  auto log_ratio = [&](double x) { return -0.5 * x * x + 0.5 * x * x / e2 + 0.5 * std::log(e2); };
  t.near(closed_form_kl(a, model1d(0.0, e2, diag)), oracle::gaussian_expectation(log_ratio, 0.0, 1.0), 1e-10,
         "KL vs integral");
  const GaussianModel degenerate = model1d(0.0, 0.0, diag);
  t.expect(throws_as<DivergenceError>([&] { closed_form_kl(a, degenerate); }), "degenerate reference accepted");

  // Same distributions under both parameterizations give the same distances.
  const GaussianModel b = model1d(0.3, 2.0, diag);
  const GaussianModel bl = model1d(0.3, 0.5 * std::log(2.0), CovarianceParam::LogDiagonal);
  const GaussianModel al = model1d(0.0, 0.0, CovarianceParam::LogDiagonal);
  t.near(closed_form_w2(al, bl), closed_form_w2(a, b), 1e-14, "W2 across parameterizations");
  t.near(closed_form_kl(al, bl), closed_form_kl(a, b), 1e-14, "KL across parameterizations");
  return t.result();
}

CheckResult lab_natural_gradient() {
  Tally t;
  const GaussianModel d = model1d(0.0, 0.25, CovarianceParam::Diagonal);
  Vec g(2);
  g << 2.0, 1.0;  // (grad_mu, grad_v)
  const Vec w = analytic_natural_gradient(d, g, NaturalGradientKind::Wasserstein);
  t.near(w(0), 2.0, 1e-15, "diag wng mu");
  t.near(w(1), 1.0, 1e-15, "diag wng v");
  const GaussianModel l = model1d(0.0, 0.5 * std::log(4.0), CovarianceParam::LogDiagonal);
  Vec gl(2);
  gl << 0.0, 8.0;
  t.near(analytic_natural_gradient(l, gl, NaturalGradientKind::Wasserstein)(1), 2.0, 1e-14, "log-diag wng v");
  t.near(analytic_natural_gradient(l, gl, NaturalGradientKind::Fisher)(1), 4.0, 1e-14, "log-diag fng v");
  // G_vv = 1 / (4 v) at v = 0.25 from the W2 metric oracle.
  t.near(oracle::fd_wasserstein_metric(d)(1, 1), 1.0, 1e-6, "finite-difference W2 metric");

  Rng rng(2301);
  for (CovarianceParam p : {CovarianceParam::Diagonal, CovarianceParam::LogDiagonal}) {
    for (int trial = 0; trial < 5; ++trial) {
      const GaussianModel m = random_model(rng, 2, p);
      const Vec grad = rng.normal_vector(4);
      for (NaturalGradientKind kind : {NaturalGradientKind::Wasserstein, NaturalGradientKind::Fisher}) {
        const Mat ref = kind == NaturalGradientKind::Wasserstein ? oracle::fd_wasserstein_metric(m)
                                                                  : oracle::fd_fisher_metric(m);
        const Mat got = analytic_metric(m, kind);
        t.expect((got - ref).norm() <= 1e-5 * ref.norm(), "metric differs from the finite-difference oracle");
        const Vec want = ref.fullPivLu().solve(grad);
        t.expect(relative_error(analytic_natural_gradient(m, grad, kind), want) < 1e-5, "map differs from metric inverse");
      }
    }
  }
  GaussianModel bad = d;
  bad.v(0) = -1.0;
  t.expect(throws_as<InvalidStateError>([&] { analytic_natural_gradient(bad, g, NaturalGradientKind::Wasserstein); }),
           "diag v <= 0 accepted");
  return t.result();
}

/// |W2^2(theta, theta + u) - u^T G u| / |u|^2 at |u| = 1e-1, 1e-2, 1e-3.
Vec expansion_ratios(const GaussianModel& m, const Vec& dir) {
  const Mat G = analytic_metric(m, NaturalGradientKind::Wasserstein);
  Vec out(3);
  int k = 0;
  for (double r : {1e-1, 1e-2, 1e-3}) {
    const Vec u = r * dir.normalized();
    const double w2 = closed_form_w2(m, GaussianModel::from_packed(m.packed() + u, m.param));
    out(k++) = std::abs(w2 - u.dot(G * u)) / u.squaredNorm();
  }
  return out;
}

CheckResult lab_prop1() {
  Tally t;
  Rng rng(2401);
  for (CovarianceParam p : {CovarianceParam::Diagonal, CovarianceParam::LogDiagonal}) {
    for (int trial = 0; trial < 5; ++trial) {
      const GaussianModel m = random_model(rng, 1, p);
      Vec dir = rng.normal_vector(2);
      const Vec r = expansion_ratios(m, dir);
      t.expect(r(0) > r(1) && r(1) > r(2), format("ratios %.2e %.2e %.2e not decreasing", r(0), r(1), r(2)));
    }
  }
  return t.result();
}

CheckResult lab_prop2() {
  Tally t;
  Rng rng(2501);
  double worst = 1.0;
  for (CovarianceParam p : {CovarianceParam::Diagonal, CovarianceParam::LogDiagonal}) {
    const GaussianModel m = random_model(rng, 2, p);
    Mat b(4, 4);
    for (Index i = 0; i < 4; ++i) {
      for (Index j = 0; j < 4; ++j) b(i, j) = rng.normal();
    }
    QuadraticLoss loss{b * b.transpose() + Mat::Identity(4, 4), rng.normal_vector(4)};
    const Vec g = loss.gradient(m.packed());
    for (auto [kind, nat] : {std::pair{PenaltyKind::W2, NaturalGradientKind::Wasserstein},
                             std::pair{PenaltyKind::KL, NaturalGradientKind::Fisher}}) {
      const Vec dir = proximal_direction(m, loss, kind, 1e4);
      const double c = cosine(dir, Vec(-analytic_natural_gradient(m, g, nat)));
      worst = std::min(worst, c);
      t.expect(c >= 0.99, format("cosine %.5f", c));
    }
  }
  return t.result(format("lowest cosine %.6f", worst));
}

CheckResult lab_penalized_step() {
  Tally t;
  Rng rng(2601);
  const GaussianModel m = random_model(rng, 3, CovarianceParam::LogDiagonal);
  const ModelGradientFn grad = [](const GaussianModel& x, int) { return objective_quadrature_gradient(x); };
  const GaussianModel plain = GaussianModel::from_packed(m.packed() - 0.3 * grad(m, 0), m.param);
  const GaussianModel pen = penalized_step(m, m, grad, PenaltyKind::W2, 0.0, 0.3);
  t.expect(pen.packed() == plain.packed(), "beta = 0 differs from a gradient step");
  t.expect(penalty_gradient(m, m, PenaltyKind::W2).isZero(0.0), "W2 penalty gradient nonzero at the anchor");
  t.expect(penalty_gradient(m, m, PenaltyKind::KL).norm() < 1e-15, "KL penalty gradient nonzero at the anchor");

  // Penalty gradients against finite differences with the anchor held.
  const GaussianModel anchor = random_model(rng, 3, CovarianceParam::LogDiagonal);
  for (PenaltyKind kind : {PenaltyKind::W2, PenaltyKind::KL}) {
    auto f = [&](const Vec& th) {
      const GaussianModel x = GaussianModel::from_packed(th, m.param);
      return kind == PenaltyKind::W2 ? closed_form_w2(anchor, x) : closed_form_kl(anchor, x);
    };
    const Vec fd = oracle::fd_gradient(f, m.packed(), 1e-6);
    t.expect(relative_error(penalty_gradient(m, anchor, kind), fd) < 1e-7, "penalty gradient vs finite difference");
  }
  const GaussianModel degenerate{Vec::Zero(3), Vec::Zero(3), CovarianceParam::Diagonal};
  const GaussianModel md = random_model(rng, 3, CovarianceParam::Diagonal);
  t.expect(throws_as<DivergenceError>([&] { penalized_step(md, degenerate, grad, PenaltyKind::KL, 1.0, 0.1); }),
           "degenerate KL anchor accepted");
  return t.result();
}

CheckResult lab_hessian() {
  Tally t;
  Vec theta(2);
  theta << 0.3, -0.7;
  const Vec r = hessian_spectrum([](const Vec& x) { return 2.0 * x(0) * x(0) + 0.5 * x(1) * x(1); }, theta, 2);
  t.near(r(0), 1.0, 1e-3, "ratio 1");
  t.near(r(1), 4.0, 1e-3, "ratio 2");
  const Vec iso = hessian_spectrum([](const Vec& x) { return 1.5 * x.squaredNorm(); }, Vec::Ones(4), 4);
  t.expect((iso.array() - 1.0).abs().maxCoeff() < 1e-3, "isotropic ratios differ from 1");

  const GaussianModel m = initial_toy_model(10, CovarianceParam::LogDiagonal, 3);
  const Vec spec = hessian_spectrum(m, 6);
  t.near(spec(0), 1.0, 0.0, "leading ratio");
  for (Index j = 1; j < spec.size(); ++j) {
    t.expect(spec(j) >= spec(j - 1), "ratios not nondecreasing");
    t.expect(spec(j) >= 1.0, "ratio below 1");
  }
  return t.result();
}

// WNG from matched initializations in both parameterizations. The two
// updates agree to first order in the step size, so the check uses small
// steps and the deterministic quadrature gradient.
// Worst relative gap in sigma_min, sigma_max and mu_norm between the diag and
// log-diag runs of `method` from the same distribution, integrated to time 2.
double parameterization_gap(ToyMethod method, double step_size) {
  ToyRunConfig cfg;
  cfg.method = method;
  cfg.gradient = ToyGradient::Quadrature;
  cfg.dim = 10;
  cfg.step_size = step_size;
  cfg.iterations = static_cast<int>(std::lround(2.0 / step_size));
  cfg.log_every = cfg.iterations;
  const GaussianModel logd = initial_toy_model(cfg.dim, CovarianceParam::LogDiagonal, 5);
  GaussianModel diag = logd;
  diag.param = CovarianceParam::Diagonal;
  diag.v = logd.variance();
  cfg.param = CovarianceParam::LogDiagonal;
  const RunLog a = run_toy(cfg, logd);
  cfg.param = CovarianceParam::Diagonal;
  const RunLog b = run_toy(cfg, diag);
  double worst = 0.0;
  for (const char* metric : {"sigma_min", "sigma_max", "mu_norm"}) {
    const auto x = a.at(metric, cfg.iterations, 0), y = b.at(metric, cfg.iterations, 0);
    if (!x || !y) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, relative_error(*x, *y));
  }
  return worst;
}

// Natural-gradient flows do not depend on the parameterization; discrete
// steps agree up to O(step size).
CheckResult lab_parameterization_invariance() {
  Tally t;
  const double coarse = parameterization_gap(ToyMethod::Wng, 0.02);
  const double fine = parameterization_gap(ToyMethod::Wng, 0.005);
  const double gd = parameterization_gap(ToyMethod::GradientDescent, 0.005);
  t.expect(fine < coarse / 3.0, format("gap %.2e at step 0.005 vs %.2e at 0.02", fine, coarse));
  t.expect(fine < 5e-3, format("gap %.2e at step 0.005", fine));
  t.expect(gd > 10.0 * fine, format("gradient descent gap %.2e not above %.2e", gd, 10.0 * fine));
  return t.result(format("wng gap %.1e -> %.1e, gd gap %.1e", coarse, fine, gd));
}

CheckResult lab_monotone_trend() {
  Tally t;
  ToyRunConfig cfg;
  cfg.method = ToyMethod::Wng;
  cfg.log_every = 4000;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = seed;
    const RunLog log = run_toy(cfg);
    const auto first = log.at("loss", 0, seed), last = log.at("loss", 4000, seed);
    t.expect(first && last && *last < *first, format("seed %d not decreasing", static_cast<int>(seed)));
  }
  return t.result();
}

}  // namespace

void register_lab_checks(std::vector<PropertyCheck>& out) {
  out.push_back({"lab.sinc", lab_sinc});
  out.push_back({"lab.quadrature", lab_quadrature});
  out.push_back({"lab.monte_carlo", lab_monte_carlo});
  out.push_back({"lab.closed_forms", lab_closed_forms});
  out.push_back({"lab.natural_gradient", lab_natural_gradient});
  out.push_back({"lab.wim_expansion", lab_prop1});
  out.push_back({"lab.prox_limit", lab_prop2});
  out.push_back({"lab.penalized_step", lab_penalized_step});
  out.push_back({"lab.hessian_spectrum", lab_hessian});
  out.push_back({"lab.parameterization_invariance", lab_parameterization_invariance});
  out.push_back({"lab.monotone_trend", lab_monotone_trend});
}

}  // namespace wng::verify
