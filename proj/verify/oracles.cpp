#include "verify/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace wng::oracle {

Mat dense_metric(const Mat& J, const Mat& L) {
  Eigen::JacobiSVD<Mat> svd(L, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? 1e-10 * s(0) : 0.0;
  Vec inv = Vec::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) inv(i) = 1.0 / s(i);
  }
  const Mat l_pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  return J.transpose() * l_pinv * J;
}

Vec dense_natural_gradient(const Mat& J, const Mat& L, const Vec& g, double eps) {
  const Mat G = dense_metric(J, L);
  const Mat A = G + eps * Mat::Identity(G.rows(), G.cols());
  return A.fullPivLu().solve(g);
}

double exact_assignment_ot(const Mat& a, const Mat& b) {
  const Index n = a.rows();
  if (b.rows() != n || n > 10) throw std::invalid_argument("exact_assignment_ot: equal sizes up to 10 required");
  Mat cost(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) cost(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  }
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (Index i = 0; i < n && c < best; ++i) c += cost(i, perm[static_cast<std::size_t>(i)]);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

double fd_mixed(const std::function<double(const Vec&)>& f, const Vec& x, Index i, Index j, double h) {
  auto shifted = [&](double di, double dj) {
    Vec y = x;
    y(i) += di;
    y(j) += dj;
    return f(y);
  };
  return (shifted(h, h) - shifted(h, -h) - shifted(-h, h) + shifted(-h, -h)) / (4.0 * h * h);
}

double golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double simpson(const std::function<double(double)>& f, double lo, double hi, int intervals) {
  if (intervals % 2 != 0) ++intervals;
  const double h = (hi - lo) / intervals;
  double acc = f(lo) + f(hi);
  for (int k = 1; k < intervals; ++k) acc += (k % 2 == 1 ? 4.0 : 2.0) * f(lo + k * h);
  return acc * h / 3.0;
}

double gaussian_expectation(const std::function<double(double)>& f, double mean, double sd, int intervals) {
  const double norm = 1.0 / (sd * std::sqrt(2.0 * M_PI));
  auto integrand = [&](double x) {
    const double z = (x - mean) / sd;
    return f(x) * norm * std::exp(-0.5 * z * z);
  };
  return simpson(integrand, mean - 12.0 * sd, mean + 12.0 * sd, intervals);
}

Mat fd_metric(const std::function<double(const Vec&, const Vec&)>& divergence, const Vec& theta, double h) {
  const Index p = theta.size();
  auto f = [&](const Vec& u) { return divergence(theta, theta + u); };
  const Vec zero = Vec::Zero(p);
  Mat G(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) G(i, j) = 0.5 * fd_mixed(f, zero, i, j, h);
  }
  return G;
}

Mat fd_wasserstein_metric(const GaussianModel& model) {
  const CovarianceParam param = model.param;
  auto d = [param](const Vec& a, const Vec& b) {
    return closed_form_w2(GaussianModel::from_packed(a, param), GaussianModel::from_packed(b, param));
  };
  return fd_metric(d, model.packed(), 1e-4);
}

Mat fd_fisher_metric(const GaussianModel& model) {
  const CovarianceParam param = model.param;
  auto d = [param](const Vec& a, const Vec& b) {
    return closed_form_kl(GaussianModel::from_packed(a, param), GaussianModel::from_packed(b, param));
  };
  // KL(theta || theta + u) ~ u^T F u / 2, so F is the full Hessian.
  return 2.0 * fd_metric(d, model.packed(), 1e-4);
}

}  // namespace wng::oracle
