// Kernel and estimator properties.

#include <algorithm>
#include <cmath>
#include <vector>

#include "verify/checks.hpp"
#include "verify/oracles.hpp"
#include "wng/errors.hpp"
#include "wng/estimator.hpp"
#include "wng/gaussian_lab.hpp"
#include "wng/random.hpp"

namespace wng::verify {
namespace {

KernelConfig fixed_kernel(double bandwidth) {
  KernelConfig k;
  k.mode = BandwidthMode::Fixed;
  k.bandwidth = bandwidth;
  return k;
}

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Mat random_matrix(Rng& rng, Index r, Index c) {
  Mat m(r, c);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  }
  return m;
}

CheckResult kernel_examples() {
  Tally t;
  const KernelConfig k17 = fixed_kernel(1.7);
  t.near(kernel_eval(vec({0.3, -1.2}), vec({0.3, -1.2}), k17), 1.0, 0.0, "K(x, x)");
  t.near(kernel_eval(vec({0.0}), vec({1.7}), k17), std::exp(-1.0), 1e-15, "K(0, sigma)");
  t.near(kernel_eval(vec({1.0, 2.0}), vec({4.0, 6.0}), fixed_kernel(5.0)), std::exp(-1.0), 1e-15, "K((1,2),(4,6))");
  t.near(kernel_partial(vec({0.4}), vec({0.4}), 0, k17), 0.0, 0.0, "partial at center");
  t.near(kernel_partial(vec({0.0}), vec({1.7}), 0, k17), -2.0 * std::exp(-1.0) / 1.7, 1e-15, "partial at sigma");
  // The Hessian of exp(-r^2 / sigma^2) at its center is -2 / sigma^2 I.
  t.near(kernel_mixed_second(vec({1.0, 2.0}), vec({1.0, 2.0}), 1, 1, k17), -2.0 / (1.7 * 1.7), 1e-15, "mixed, i = i_m");
  t.near(kernel_mixed_second(vec({1.0, 2.0}), vec({1.0, 2.0}), 0, 1, k17), 0.0, 0.0, "mixed, i != i_m");

  Mat pts(2, 1);
  pts << 0.0, 1.0;
  t.near(median_bandwidth(pts), 1.0, 0.0, "median {0, 1}");
  t.near(median_bandwidth(Mat::Zero(3, 1)), 1e-6, 0.0, "median {0, 0, 0}");
  Mat three(3, 1);
  three << 0.0, 1.0, 3.0;
  t.near(median_bandwidth(three), 4.0, 0.0, "median {0, 1, 3}");

  const Vec x = solve_psd(SymmetricMatrix::identity(3), vec({1, 2, 3}));
  t.expect(x == vec({1, 2, 3}), "solve_psd(I, b) != b");
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 2.0;
  const Vec y = solve_psd(SymmetricMatrix(d), vec({4, 5}));
  t.near(y(0), 2.0, 1e-15, "pinv diag(2, 0), first");
  t.near(y(1), 0.0, 1e-15, "pinv diag(2, 0), second");

  t.expect(throws_as<std::invalid_argument>([&] { kernel_eval(vec({1}), vec({1, 2}), k17); }), "dimension mismatch accepted");
  t.expect(throws_as<std::invalid_argument>([&] { kernel_partial(vec({1}), vec({1}), 1, k17); }), "index out of range accepted");
  t.expect(throws_as<std::invalid_argument>([&] { kernel_mixed_second(vec({1}), vec({1}), 0, 2, k17); }),
           "mixed index out of range accepted");
  t.expect(throws_as<std::invalid_argument>([&] { median_bandwidth(Mat::Zero(1, 2)); }), "median with N = 1 accepted");
  Mat bad = Mat::Identity(2, 2);
  bad(0, 1) = bad(1, 0) = std::nan("");
  t.expect(throws_as<NumericalError>([&] { solve_psd(SymmetricMatrix(bad), vec({1, 1})); }), "non-finite solve accepted");
  return t.result();
}

CheckResult kernel_finite_differences() {
  Tally t;
  Rng rng(101);
  double worst_first = 0.0, worst_second = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double sigma = rng.uniform(0.5, 2.0);
    const KernelConfig k = fixed_kernel(sigma);
    const Vec y = rng.normal_vector(3);
    const Vec x = y + 0.6 * sigma * rng.normal_vector(3);
    const auto i = static_cast<Index>(rng.index(3));
    const auto j = static_cast<Index>(rng.index(3));
    auto f = [&](const Vec& z) { return kernel_eval(y, z, k); };
    const double fd1 = oracle::fd_gradient(f, x, 1e-6)(i);
    const double fd2 = oracle::fd_mixed(f, x, i, j, 1e-4);
    const double e1 = std::abs(kernel_partial(y, x, i, k) - fd1) / (std::abs(fd1) + 1e-6);
    const double e2 = std::abs(kernel_mixed_second(y, x, j, i, k) - fd2) / (std::abs(fd2) + 1e-4);
    worst_first = std::max(worst_first, e1);
    worst_second = std::max(worst_second, e2);
    t.expect(kernel_mixed_second(y, x, i, j, k) == kernel_mixed_second(y, x, j, i, k), "mixed partial not symmetric");
  }
  t.expect(worst_first < 1e-5, format("first derivative rel err %.2e", worst_first));
  t.expect(worst_second < 1e-5, format("mixed derivative rel err %.2e", worst_second));
  return t.result(format("worst rel err %.1e / %.1e", worst_first, worst_second));
}

CheckResult kernel_gram_psd() {
  Tally t;
  Rng rng(202);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat pts = random_matrix(rng, 25, 1 + static_cast<Index>(rng.index(4)));
    KernelConfig k;
    const Mat g = gram_matrix(pts, resolve_bandwidth(k, pts));
    const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(g).eigenvalues();
    t.expect(ev.minCoeff() >= -1e-8 * ev.maxCoeff(), format("min eigenvalue %.3e", ev.minCoeff()));
  }
  return t.result();
}

CheckResult kernel_solve_psd() {
  Tally t;
  Rng rng(303);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat m = random_matrix(rng, 5, 5);
    const Mat a = m * m.transpose();
    const Vec b = rng.normal_vector(5);
    const Vec x = solve_psd(SymmetricMatrix(a), b);
    t.expect(relative_error(Vec(a * x), b) < 1e-8, format("full rank residual %.2e", relative_error(Vec(a * x), b)));

    // Rank 3: the solution of A x = A x0 is the range component of x0.
    const Mat r = random_matrix(rng, 5, 3);
    const Mat a3 = r * r.transpose();
    const Vec x0 = rng.normal_vector(5);
    const Vec got = solve_psd(SymmetricMatrix(a3), a3 * x0);
    Eigen::JacobiSVD<Mat> svd(r, Eigen::ComputeThinU);
    const Vec want = svd.matrixU() * (svd.matrixU().transpose() * x0);
    t.expect(relative_error(got, want) < 1e-8, format("rank-deficient roundtrip %.2e", relative_error(got, want)));
  }
  return t.result();
}

WngWorkspace manual_workspace(const Mat& J, const Mat& L, double eps) {
  WngWorkspace ws;
  ws.J = J;
  ws.L = SymmetricMatrix(L);
  ws.epsilon = eps;
  return ws;
}

CheckResult estimator_woodbury() {
  Tally t;
  Rng rng(404);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = static_cast<Index>(1 + rng.index(20));
    const auto m = static_cast<Index>(1 + rng.index(10));
    const Mat J = random_matrix(rng, m, p);
    const Mat B = random_matrix(rng, m, m + 2);
    const Mat L = B * B.transpose() / static_cast<double>(m + 2);
    const double eps = std::pow(10.0, rng.uniform(-3.0, 0.0));
    const Vec g = rng.normal_vector(p);
    const Vec got = estimate_wng(g, manual_workspace(J, L, eps));
    const Vec want = oracle::dense_natural_gradient(J, L, g, eps);
    worst = std::max(worst, relative_error(got, want));
  }
  t.expect(worst < 1e-8, format("worst rel err %.2e", worst));
  return t.result(format("100 instances, worst rel err %.1e", worst));
}

CheckResult estimator_quadratic_form() {
  Tally t;
  Rng rng(505);
  double lowest = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = static_cast<Index>(1 + rng.index(20));
    const auto m = static_cast<Index>(1 + rng.index(10));
    const Mat J = random_matrix(rng, m, p);
    const Mat B = random_matrix(rng, m, 1 + static_cast<Index>(rng.index(static_cast<std::uint64_t>(m))));
    const SymmetricMatrix L(B * B.transpose());
    const Vec u = rng.normal_vector(p);
    const Vec ju = J * u;
    const double q = ju.dot(solve_psd(L, ju));
    lowest = std::min(lowest, q);
  }
  t.expect(lowest >= -1e-10, format("u^T G u = %.3e", lowest));
  return t.result();
}

CheckResult estimator_large_damping() {
  Tally t;
  Rng rng(606);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat J = random_matrix(rng, 5, 8);
    const Mat B = random_matrix(rng, 5, 5);
    const Vec g = rng.normal_vector(8);
    const Vec gw = estimate_wng(g, manual_workspace(J, B * B.transpose(), 1e6));
    t.expect(cosine(gw, g) > 0.999, format("cosine %.6f", cosine(gw, g)));
  }
  const Vec g = vec({1.0, -2.0, 0.5});
  const Vec gw = estimate_wng(g, manual_workspace(Mat::Zero(2, 3), Mat::Identity(2, 2), 0.1));
  t.expect(relative_error(gw, Vec(g / 0.1)) < 1e-15, "J = 0 does not give g / eps");
  return t.result();
}

CheckResult estimator_basis_and_determinism() {
  Tally t;
  Rng rng(707);
  BehaviorBatch one{random_matrix(rng, 1, 3), std::nullopt, 0};
  t.expect(build_basis(one, 5, 1).size() == 1, "M not clamped to N");

  BehaviorBatch batch{random_matrix(rng, 100, 3), std::nullopt, 0};
  const BasisSpec a = build_basis(batch, 5, 42);
  const BasisSpec b = build_basis(batch, 5, 42);
  t.expect(a.points == b.points && a.dims == b.dims, "basis not reproducible");
  t.expect(a.size() == 5, "wrong basis size");
  for (Index m = 0; m < a.size(); ++m) {
    bool found = false;
    for (Index n = 0; n < batch.size(); ++n) found = found || batch.samples.row(n) == a.points.row(m);
    t.expect(found, "basis point is not a batch row");
    t.expect(a.dims[static_cast<std::size_t>(m)] >= 0 && a.dims[static_cast<std::size_t>(m)] < 3, "basis index out of range");
  }
  bool distinct = true;
  for (Index i = 0; i < a.size(); ++i) {
    for (Index j = i + 1; j < a.size(); ++j) distinct = distinct && a.points.row(i) != a.points.row(j);
  }
  t.expect(distinct, "basis rows repeat");

  WngConfig cfg;
  const Mat x = random_matrix(rng, 40, 2);
  const Mat scores = random_matrix(rng, 40, 6);
  const Vec g = rng.normal_vector(6);
  auto estimate = [&] {
    WngWorkspace ws = prepare_workspace(x, cfg, 1e-3, 9);
    BehaviorBatch sb{x, scores, 9};
    ws.J = jacobian_score(sb, ws.basis, ws.kernel);
    return estimate_wng(g, ws);
  };
  const Vec g1 = estimate();
  const Vec g2 = estimate();
  t.expect(g1 == g2, "estimate not bit-identical");
  return t.result();
}

CheckResult estimator_gram() {
  Tally t;
  const double sigma = 1.3;
  const KernelConfig k = fixed_kernel(sigma);
  BasisSpec basis{Mat::Constant(1, 1, 0.7), {0}};
  const GramMatrices one = build_gram(Mat::Constant(1, 1, 0.7), basis, k);
  t.near(one.C(0, 0), -2.0 / (sigma * sigma), 1e-15, "C at the basis point");
  t.near(one.L(0, 0), 4.0 / std::pow(sigma, 4), 1e-14, "L at the basis point");

  Rng rng(808);
  const Mat x = random_matrix(rng, 2, 2);
  BasisSpec b2{random_matrix(rng, 2, 2), {1, 0}};
  const GramMatrices g = build_gram(x, b2, k);
  Mat c_ref(2, 4);
  for (Index m = 0; m < 2; ++m) {
    const Vec y = b2.points.row(m).transpose();
    auto f = [&](const Vec& z) { return kernel_eval(y, z, k); };
    for (Index n = 0; n < 2; ++n) {
      for (Index i = 0; i < 2; ++i) c_ref(m, n * 2 + i) = oracle::fd_mixed(f, x.row(n).transpose(), i, b2.dims[static_cast<std::size_t>(m)], 1e-4);
    }
  }
  const Mat l_ref = c_ref * c_ref.transpose() / 2.0;
  t.expect((g.C - c_ref).norm() <= 1e-6 * c_ref.norm(), "C differs from the dense oracle");
  t.expect((g.L.matrix() - l_ref).norm() <= 1e-6 * l_ref.norm(), "L differs from the dense oracle");
  t.expect(g.L.matrix() == g.L.matrix().transpose(), "L not symmetric");
  const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(g.L.matrix()).eigenvalues();
  t.expect(ev.minCoeff() >= -1e-8 * ev.maxCoeff(), "L not PSD");
  return t.result();
}

CheckResult estimator_jacobian_examples() {
  Tally t;
  Rng rng(909);
  const KernelConfig k = fixed_kernel(1.0);
  const Mat x = random_matrix(rng, 6, 2);
  BasisSpec basis{x.topRows(3), {0, 1, 1}};
  BehaviorBatch zero{x, Mat::Zero(6, 4), 0};
  t.expect(jacobian_score(zero, basis, k).isZero(0.0), "zero scores give nonzero J");

  BasisSpec single{Mat::Constant(1, 1, 0.0), {0}};
  BehaviorBatch one{Mat::Constant(1, 1, 0.5), Mat(1, 2), 0};
  (*one.scores) << 1.0, -1.0;
  const double h = kernel_partial(Vec::Constant(1, 0.0), Vec::Constant(1, 0.5), 0, k);
  const Mat j1 = jacobian_score(one, single, k);
  t.near(j1(0, 0), h, 1e-15, "single-sample J, first");
  t.near(j1(0, 1), -h, 1e-15, "single-sample J, second");

  t.expect(jacobian_es(Mat::Zero(3, 5), random_matrix(rng, 5, 4), 0.1).isZero(0.0), "zero h gives nonzero J");
  Mat e1 = Mat::Zero(1, 3);
  e1(0, 0) = 1.0;
  const Mat je = jacobian_es(Mat::Constant(1, 1, 3.0), e1, 1.0);
  t.expect(je == Mat(3.0 * e1), "J = 3 e1 expected");
  t.expect(throws_as<std::invalid_argument>([&] { jacobian_es(Mat::Zero(1, 1), e1, 0.0); }), "sigma = 0 accepted");

  const GramMatrices g = build_gram(x, basis, k);
  std::vector<Mat> zeros(6, Mat::Zero(2, 4));
  t.expect(jacobian_reparam(g.C, 2, zeros).isZero(0.0), "zero pushforward gives nonzero J");

  // Mean-shift model X = theta + Z in 1-D: dX/dtheta = 1.
  const Mat x1 = random_matrix(rng, 50, 1);
  BasisSpec b1{x1.topRows(2), {0, 0}};
  const GramMatrices g1 = build_gram(x1, b1, k);
  std::vector<Mat> ones(50, Mat::Ones(1, 1));
  const Mat jr = jacobian_reparam(g1.C, 1, ones);
  for (Index m = 0; m < 2; ++m) {
    double acc = 0.0;
    for (Index n = 0; n < 50; ++n) acc += kernel_mixed_second(b1.points.row(m).transpose(), x1.row(n).transpose(), 0, 0, k);
    t.near(jr(m, 0), acc / 50.0, 1e-14, "mean-shift J");
  }

  BehaviorBatch no_scores{x, std::nullopt, 0};
  t.expect(throws_as<PreconditionError>([&] { jacobian_score(no_scores, basis, k); }), "missing scores accepted");
  return t.result();
}

CheckResult estimator_epsilon_rule() {
  Tally t;
  WngWorkspace ws;
  ws.epsilon = 1.0;
  const Vec g = vec({1.0, 0.0});
  // r = |g - eps g_w| / |g|
  t.near(adapt_epsilon(ws, g, vec({0.5, 0.0})), 1.0, 0.0, "r = 0.5");
  t.near(adapt_epsilon(ws, g, vec({0.1, 0.0})), 2.0, 0.0, "r = 0.9");
  t.near(adapt_epsilon(ws, g, vec({0.9, 0.0})), 0.5, 0.0, "r = 0.1");
  t.near(adapt_epsilon(ws, g, vec({-0.5, 0.0})), 20.0, 0.0, "negative cosine");
  ws.epsilon = 1e5;
  t.near(adapt_epsilon(ws, g, vec({0.1e-5, 0.0})), 1e5, 0.0, "clamp at the top");
  ws.epsilon = 1e-10;
  t.near(adapt_epsilon(ws, g, vec({0.9e10, 0.0})), 1e-10, 0.0, "clamp at the bottom");
  return t.result();
}

// 1-D N(theta, 1): the score-form J against d/dtheta E[h_m(X)] from a
// Simpson integral, differenced in theta.
CheckResult estimator_score_vs_quadrature() {
  Tally t;
  const double theta = 0.3;
  const int n = 2000;
  Rng rng(1001);
  Mat x(n, 1);
  Mat score(n, 1);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = theta + rng.normal();
    score(i, 0) = x(i, 0) - theta;
  }
  WngConfig cfg;
  const WngWorkspace ws = prepare_workspace(x, cfg, 1e-3, 3);
  BehaviorBatch batch{x, score, 3};
  const Mat J = jacobian_score(batch, ws.basis, ws.kernel);
  const Mat h = basis_values(x, ws.basis, ws.kernel);
  double worst = 0.0;
  for (Index m = 0; m < ws.basis.size(); ++m) {
    const Vec contrib = h.row(m).transpose().cwiseProduct(score.col(0));
    const double se = std::sqrt((contrib.array() - contrib.mean()).square().sum() / (n - 1.0) / n);
    const Vec y = ws.basis.points.row(m).transpose();
    const Index dim = ws.basis.dims[static_cast<std::size_t>(m)];
    auto expectation = [&](double th) {
      return oracle::gaussian_expectation([&](double v) { return kernel_partial(y, Vec::Constant(1, v), dim, ws.kernel); }, th, 1.0);
    };
    const double want = oracle::central_difference(expectation, theta, 1e-4);
    const double z = std::abs(J(m, 0) - want) / se;
    worst = std::max(worst, z);
  }
  t.expect(worst < 3.0, format("%.2f standard errors", worst));
  return t.result(format("worst deviation %.2f SE", worst));
}

struct GaussianSamples {
  Mat x;                     // N x d
  std::vector<Mat> push;     // d x 2d per sample
  Mat scores;                // N x 2d
};

GaussianSamples sample_model(const GaussianModel& model, int n, Rng& rng) {
  const Index d = model.dim();
  const Vec sd = model.stddev(), dsd = model.dstddev_dv(), var = model.variance(), dvar = model.dvariance_dv();
  GaussianSamples s{Mat(n, d), {}, Mat(n, 2 * d)};
  s.push.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Vec z = rng.normal_vector(d);
    const Vec xi = model.mu + sd.cwiseProduct(z);
    s.x.row(i) = xi.transpose();
    Mat p = Mat::Zero(d, 2 * d);
    for (Index k = 0; k < d; ++k) {
      p(k, k) = 1.0;
      p(k, d + k) = z(k) * dsd(k);
      const double r = xi(k) - model.mu(k);
      s.scores(i, k) = r / var(k);
      s.scores(i, d + k) = 0.5 * (r * r / (var(k) * var(k)) - 1.0 / var(k)) * dvar(k);
    }
    s.push.push_back(std::move(p));
  }
  return s;
}

CheckResult estimator_backends_agree() {
  Tally t;
  Rng rng(1101);
  GaussianModel model{vec({0.4, -0.2}), vec({0.1, -0.3}), CovarianceParam::LogDiagonal};
  const int n = 2000;
  const GaussianSamples s = sample_model(model, n, rng);
  WngConfig cfg;
  const WngWorkspace ws = prepare_workspace(s.x, cfg, 1e-3, 5);
  const Mat h = basis_values(s.x, ws.basis, ws.kernel);
  const Index d = 2, p = 4, m_count = ws.basis.size();
  // Per-sample difference between the two integrands, so the test uses the
  // paired standard error.
  double worst = 0.0;
  for (Index m = 0; m < m_count; ++m) {
    for (Index j = 0; j < p; ++j) {
      Vec diff(n);
      for (int i = 0; i < n; ++i) {
        const double reparam = ws.C.row(m).segment(i * d, d).dot(s.push[static_cast<std::size_t>(i)].col(j));
        diff(i) = reparam - h(m, i) * s.scores(i, j);
      }
      const double se = std::sqrt((diff.array() - diff.mean()).square().sum() / (n - 1.0) / n);
      worst = std::max(worst, std::abs(diff.mean()) / se);
    }
  }
  const Mat jr = jacobian_reparam(ws.C, d, s.push);
  BehaviorBatch batch{s.x, s.scores, 5};
  const Mat js = jacobian_score(batch, ws.basis, ws.kernel);
  t.expect(jr.allFinite() && js.allFinite(), "non-finite Jacobian");
  t.expect(worst < 3.0, format("%.2f standard errors", worst));
  return t.result(format("worst deviation %.2f SE", worst));
}

// X = a^T theta_n + s nu with theta_n = theta + sigma eps: E[J] against
// a E[h'(X)], X ~ N(a^T theta, sigma^2 |a|^2 + s^2).
CheckResult estimator_es_jacobian_linear() {
  Tally t;
  const Vec a = vec({1.0, -0.5, 2.0});
  const Vec theta = vec({0.2, 0.1, -0.3});
  const double sigma = 0.1, s = 0.5;
  const KernelConfig k = fixed_kernel(1.0);
  const Vec y = Vec::Constant(1, 0.1);
  const int seeds = 50, n = 100;
  Mat js(seeds, 3);
  for (int seed = 0; seed < seeds; ++seed) {
    Rng rng(derive_seed(1201, static_cast<std::uint64_t>(seed)));
    Mat eps(n, 3);
    Mat h(1, n);
    for (int i = 0; i < n; ++i) {
      const Vec e = rng.normal_vector(3);
      eps.row(i) = e.transpose();
      const double xi = a.dot(theta + sigma * e) + s * rng.normal();
      h(0, i) = kernel_partial(y, Vec::Constant(1, xi), 0, k);
    }
    js.row(seed) = jacobian_es(h, eps, sigma);
  }
  const double tau = std::sqrt(sigma * sigma * a.squaredNorm() + s * s);
  const double dh = oracle::gaussian_expectation(
      [&](double v) { return kernel_mixed_second(y, Vec::Constant(1, v), 0, 0, k); }, a.dot(theta), tau);
  double worst = 0.0;
  for (Index j = 0; j < 3; ++j) {
    const Vec col = js.col(j);
    const double se = std::sqrt((col.array() - col.mean()).square().sum() / (seeds - 1.0) / seeds);
    worst = std::max(worst, std::abs(col.mean() - a(j) * dh) / se);
  }
  t.expect(worst < 3.0, format("%.2f standard errors", worst));
  return t.result(format("worst deviation %.2f SE", worst));
}

CheckResult estimator_location_wim() {
  Tally t;
  Rng rng(1301);
  const int n = 4000;
  Mat x(n, 1);
  std::vector<Mat> push(static_cast<std::size_t>(n), Mat::Ones(1, 1));
  for (int i = 0; i < n; ++i) x(i, 0) = 0.7 + rng.normal();
  WngConfig cfg;
  cfg.kernel = fixed_kernel(5.0);
  WngWorkspace ws = prepare_workspace(x, cfg, 1e-6, 11);
  ws.J = jacobian_reparam(ws.C, 1, push);
  const Vec g = Vec::Constant(1, 1.3);
  const Vec gw = estimate_wng(g, ws);
  t.expect(relative_error(gw, g) < 0.1, format("rel err %.3f", relative_error(gw, g)));
  return t.result(format("rel err %.3f", relative_error(gw, g)));
}

}  // namespace

/// Estimated natural gradient of a 1-D log-diagonal Gaussian against the
/// closed-form Wasserstein map; returns the number of trials within 10%.
int analytic_wim_trials(int trials, int samples, double epsilon, double bandwidth, double* median_error) {
  std::vector<double> errs;
  int ok = 0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(1401, static_cast<std::uint64_t>(trial)));
    GaussianModel model{Vec::Constant(1, rng.uniform(-1.0, 1.0)), Vec::Constant(1, rng.uniform(-0.3, 0.3)),
                        CovarianceParam::LogDiagonal};
    const Vec g = rng.normal_vector(2);
    const GaussianSamples s = sample_model(model, samples, rng);
    WngConfig cfg;
    cfg.kernel = fixed_kernel(bandwidth);
    WngWorkspace ws = prepare_workspace(s.x, cfg, epsilon, derive_seed(1402, static_cast<std::uint64_t>(trial)));
    ws.J = jacobian_reparam(ws.C, 1, s.push);
    const Vec want = analytic_natural_gradient(model, g, NaturalGradientKind::Wasserstein);
    const double err = relative_error(estimate_wng(g, ws), want);
    errs.push_back(err);
    if (err < 0.1) ++ok;
  }
  if (median_error) {
    std::nth_element(errs.begin(), errs.begin() + static_cast<std::ptrdiff_t>(errs.size() / 2), errs.end());
    *median_error = errs[errs.size() / 2];
  }
  return ok;
}

namespace {

CheckResult estimator_analytic_wim() {
  Tally t;
  double median = 0.0;
  const int ok = analytic_wim_trials(50, 2000, 1e-6, 5.0, &median);
  t.expect(ok >= 45, format("%d/50 within 10%%", ok));
  return t.result(format("%d/50 trials within 10%%, median rel err %.3f", ok, median));
}

}  // namespace

void register_core_checks(std::vector<PropertyCheck>& out) {
  out.push_back({"kernel.examples", kernel_examples});
  out.push_back({"kernel.finite_differences", kernel_finite_differences});
  out.push_back({"kernel.gram_psd", kernel_gram_psd});
  out.push_back({"kernel.solve_psd", kernel_solve_psd});
  out.push_back({"estimator.woodbury", estimator_woodbury});
  out.push_back({"estimator.quadratic_form", estimator_quadratic_form});
  out.push_back({"estimator.large_damping", estimator_large_damping});
  out.push_back({"estimator.basis_determinism", estimator_basis_and_determinism});
  out.push_back({"estimator.gram", estimator_gram});
  out.push_back({"estimator.jacobian_examples", estimator_jacobian_examples});
  out.push_back({"estimator.epsilon_rule", estimator_epsilon_rule});
  out.push_back({"estimator.score_vs_quadrature", estimator_score_vs_quadrature});
  out.push_back({"estimator.backends_agree", estimator_backends_agree});
  out.push_back({"estimator.es_jacobian_linear", estimator_es_jacobian_linear});
  out.push_back({"estimator.location_wim", estimator_location_wim});
  out.push_back({"estimator.analytic_wim", estimator_analytic_wim});
}

}  // namespace wng::verify
