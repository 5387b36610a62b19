#include <cmath>
#include <numbers>

#include <doctest.h>

#include "wng/errors.hpp"
#include "wng/gaussian_lab.hpp"

using namespace wng;

namespace {

GaussianModel one_d(double mu, double v, CovarianceParam p) {
  return {Vec::Constant(1, mu), Vec::Constant(1, v), p};
}

}  // namespace

TEST_CASE("sinc loss") {
  CHECK(sinc_loss(Vec::Zero(3)) == 0.0);
  CHECK(sinc_loss(Vec::Constant(1, std::numbers::pi)) == doctest::Approx(1.0));
}

TEST_CASE("objective at the optimum") {
  const GaussianModel point{Vec::Zero(4), Vec::Constant(4, 1e-12), CovarianceParam::Diagonal};
  CHECK(std::abs(objective_mc(point, 256, 0).loss) < 1e-6);
  CHECK(std::abs(objective_quadrature(one_d(0.0, 0.0, CovarianceParam::Diagonal))) < 1e-15);
}

TEST_CASE("objective_quadrature values") {
  CHECK(objective_quadrature(one_d(0.0, 1.0, CovarianceParam::Diagonal)) == doctest::Approx(0.1443756).epsilon(1e-6));
  const GaussianModel d100{Vec::Zero(100), Vec::Ones(100), CovarianceParam::Diagonal};
  CHECK(objective_quadrature(d100) == doctest::Approx(100.0 * quadrature_term(0.0, 1.0)).epsilon(1e-13));
}

TEST_CASE("closed-form divergences") {
  const auto diag = CovarianceParam::Diagonal;
  const GaussianModel a = one_d(0.0, 1.0, diag);
  CHECK(closed_form_w2(a, a) == 0.0);
  CHECK(closed_form_w2(a, one_d(1.0, 1.0, diag)) == doctest::Approx(1.0));
  CHECK(closed_form_w2(a, one_d(0.0, 4.0, diag)) == doctest::Approx(1.0));
  CHECK(closed_form_kl(a, a) == 0.0);
  CHECK(closed_form_kl(a, one_d(1.0, 1.0, diag)) == doctest::Approx(0.5));
  CHECK(closed_form_kl(a, one_d(0.0, std::exp(2.0), diag)) == doctest::Approx(0.5676676).epsilon(1e-7));
  CHECK_THROWS_AS(closed_form_kl(a, one_d(0.0, 0.0, diag)), DivergenceError);
}

TEST_CASE("analytic natural gradient examples") {
  Vec g(2);
  g << 2.0, 1.0;
  const Vec w = analytic_natural_gradient(one_d(0.0, 0.25, CovarianceParam::Diagonal), g, NaturalGradientKind::Wasserstein);
  CHECK(w(0) == doctest::Approx(2.0));
  CHECK(w(1) == doctest::Approx(1.0));

  const GaussianModel ld = one_d(0.0, std::log(2.0), CovarianceParam::LogDiagonal);  // Sigma = 4
  g << 0.0, 8.0;
  CHECK(analytic_natural_gradient(ld, g, NaturalGradientKind::Wasserstein)(1) == doctest::Approx(2.0));
  CHECK(analytic_natural_gradient(ld, g, NaturalGradientKind::Fisher)(1) == doctest::Approx(4.0));

  CHECK_THROWS_AS(analytic_natural_gradient(one_d(0.0, -1.0, CovarianceParam::Diagonal), g, NaturalGradientKind::Wasserstein),
                  InvalidStateError);
}

TEST_CASE("penalized_step with beta = 0 is a gradient step") {
  const GaussianModel m{Vec::Constant(2, 0.5), Vec::Constant(2, -0.2), CovarianceParam::LogDiagonal};
  const ModelGradientFn grad = [](const GaussianModel& x, int) { return objective_quadrature_gradient(x); };
  const GaussianModel anchor{Vec::Zero(2), Vec::Zero(2), CovarianceParam::LogDiagonal};
  for (PenaltyKind kind : {PenaltyKind::W2, PenaltyKind::KL}) {
    const GaussianModel next = penalized_step(m, anchor, grad, kind, 0.0, 0.1);
    CHECK(next.packed().isApprox(m.packed() - 0.1 * objective_quadrature_gradient(m), 1e-14));
  }
}

TEST_CASE("hessian spectrum") {
  auto iso = [](const Vec& x) { return 1.5 * x.squaredNorm(); };
  const Vec r = hessian_spectrum(iso, Vec::Ones(3), 3);
  for (Index i = 0; i < 3; ++i) CHECK(r(i) == doctest::Approx(1.0).epsilon(1e-6));

  auto quad = [](const Vec& x) { return 2.0 * x(0) * x(0) + 0.5 * x(1) * x(1); };
  const Vec q = hessian_spectrum(quad, Vec::Zero(2), 2);
  CHECK(q(0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(q(1) == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("toy config validation") {
  ToyRunConfig c;
  c.step_size = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ToyRunConfig{};
  c.spectrum_k = 1000;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("short toy run logs every metric") {
  ToyRunConfig c;
  c.dim = 4;
  c.iterations = 10;
  c.seed = 7;
  const RunLog log = run_toy(c);
  for (const char* m : {"loss", "loss_per_dim", "mu_norm", "sigma_min", "sigma_max", "step_norm"}) {
    CHECK(log.series(m, 7).size() == 11);
  }
  CHECK(*log.last("loss", 7) < *log.at("loss", 0, 7));
}
