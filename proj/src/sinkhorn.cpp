#include "wng/sinkhorn.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "wng/errors.hpp"

namespace wng {

namespace {

Mat squared_distances(const Mat& a, const Mat& b) {
  const Vec na = a.rowwise().squaredNorm();
  const Vec nb = b.rowwise().squaredNorm();
  Mat c = -2.0 * a * b.transpose();
  c.colwise() += na;
  c.rowwise() += nb.transpose();
  return c.cwiseMax(0.0);
}

// -reg * log sum_j w_j exp((pot_j - cost_j) / reg), stabilized.
double soft_min(const Eigen::Ref<const Vec>& cost, const Vec& pot, double log_w, double reg) {
  double top = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < cost.size(); ++j) top = std::max(top, (pot(j) - cost(j)) / reg);
  double s = 0.0;
  for (Index j = 0; j < cost.size(); ++j) s += std::exp((pot(j) - cost(j)) / reg - top);
  return -reg * (log_w + top + std::log(s));
}

}  // namespace

OtResult entropic_ot(const Mat& a, const Mat& b, double reg, int max_iters, double tolerance) {
  if (!(reg > 0.0)) throw std::invalid_argument("sinkhorn: reg must be positive");
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("sinkhorn: empty cloud");
  if (a.cols() != b.cols()) throw std::invalid_argument("sinkhorn: clouds differ in dimension");
  if (max_iters < 1) throw std::invalid_argument("sinkhorn: max_iters must be positive");
  if (!a.allFinite() || !b.allFinite()) throw NumericalError("sinkhorn", "non-finite points");

  const Index n = a.rows();
  const Index m = b.rows();
  const Mat c = squared_distances(a, b);
  if (n == 1 || m == 1) {
    // A point mass leaves a single admissible plan; f_i + g_j = c_ij is optimal.
    OtResult out;
    out.f = n == 1 ? Vec::Zero(1) : Vec(c.col(0));
    out.g = n == 1 ? Vec(c.row(0).transpose()) : Vec::Zero(1);
    out.cost = c.mean();
    out.converged = true;
    return out;
  }
  const Mat ct = c.transpose();
  const double log_wa = -std::log(static_cast<double>(n));
  const double log_wb = -std::log(static_cast<double>(m));

  Vec f = Vec::Zero(n);
  Vec g = Vec::Zero(m);
  OtResult best;
  best.marginal_error = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iters; ++it) {
    for (Index i = 0; i < n; ++i) f(i) = soft_min(ct.col(i), g, log_wb, reg);
    for (Index j = 0; j < m; ++j) g(j) = soft_min(c.col(j), f, log_wa, reg);
    // After the g update the column marginals are exact; measure the rows.
    double err = 0.0;
    for (Index i = 0; i < n; ++i) {
      double row = 0.0;
      for (Index j = 0; j < m; ++j) row += std::exp((f(i) + g(j) - c(i, j)) / reg + log_wa + log_wb);
      err += std::abs(row - 1.0 / static_cast<double>(n));
    }
    if (err < best.marginal_error) {
      best.f = f;
      best.g = g;
      best.iterations = it;
      best.marginal_error = err;
    }
    if (err < tolerance) {
      best.converged = true;
      break;
    }
  }
  best.cost = best.f.mean() + best.g.mean();
  if (!std::isfinite(best.cost)) throw NumericalError("sinkhorn", "non-finite transport cost");
  return best;
}

OtResult entropic_ot_self(const Mat& a, double reg, int max_iters, double tolerance) {
  if (!(reg > 0.0)) throw std::invalid_argument("sinkhorn: reg must be positive");
  if (a.rows() == 0) throw std::invalid_argument("sinkhorn: empty cloud");
  if (max_iters < 1) throw std::invalid_argument("sinkhorn: max_iters must be positive");
  if (!a.allFinite()) throw NumericalError("sinkhorn", "non-finite points");

  const Index n = a.rows();
  const Mat c = squared_distances(a, a);
  const double log_w = -std::log(static_cast<double>(n));
  Vec f = Vec::Zero(n);
  Vec t(n);
  OtResult best;
  best.marginal_error = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iters; ++it) {
    for (Index i = 0; i < n; ++i) t(i) = soft_min(c.col(i), f, log_w, reg);
    f = 0.5 * (f + t);
    double err = 0.0;
    for (Index i = 0; i < n; ++i) {
      double row = 0.0;
      for (Index j = 0; j < n; ++j) row += std::exp((f(i) + f(j) - c(i, j)) / reg + 2.0 * log_w);
      err += std::abs(row - 1.0 / static_cast<double>(n));
    }
    if (err < best.marginal_error) {
      best.f = f;
      best.iterations = it;
      best.marginal_error = err;
    }
    if (err < tolerance) {
      best.converged = true;
      break;
    }
  }
  best.g = best.f;
  best.cost = 2.0 * best.f.mean();
  if (!std::isfinite(best.cost)) throw NumericalError("sinkhorn", "non-finite transport cost");
  return best;
}

double default_sinkhorn_reg(const Mat& a, const Mat& b, double reg_scale) {
  Mat both(a.rows() + b.rows(), a.cols());
  both << a, b;
  return reg_scale * median_bandwidth(both);
}

SinkhornDivergence sinkhorn_divergence(const Mat& a, const Mat& b, const SinkhornOptions& options) {
  const double reg = options.reg > 0.0 ? options.reg : default_sinkhorn_reg(a, b, options.reg_scale);
  const OtResult ab = entropic_ot(a, b, reg, options.max_iters, options.tolerance);
  const OtResult aa = entropic_ot_self(a, reg, options.max_iters, options.tolerance);
  const OtResult bb = entropic_ot_self(b, reg, options.max_iters, options.tolerance);
  SinkhornDivergence out;
  out.reg = reg;
  out.value = ab.cost - 0.5 * aa.cost - 0.5 * bb.cost;
  out.potential_a = ab.f - aa.f;
  out.converged = ab.converged && aa.converged && bb.converged;
  return out;
}

double point_divergence(const Vec& x, const Mat& cloud, double cloud_self_cost) {
  if (x.size() != cloud.cols() || cloud.rows() == 0) throw std::invalid_argument("point_divergence: shape mismatch");
  return (cloud.rowwise() - x.transpose()).rowwise().squaredNorm().mean() - 0.5 * cloud_self_cost;
}

double sinkhorn_w2(const Mat& a, const Mat& b, double reg, int iters) {
  if (!(reg > 0.0)) throw std::invalid_argument("sinkhorn: reg must be positive");
  return sinkhorn_divergence(a, b, {.reg = reg, .max_iters = iters}).value;
}

}  // namespace wng
