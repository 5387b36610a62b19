#include "wng/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "wng/errors.hpp"

namespace wng {

namespace {

void check_same_dim(const Vec& x, const Vec& y) {
  if (x.size() != y.size() || x.size() == 0) {
    throw std::invalid_argument("kernel: dimension mismatch (" + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()) + ")");
  }
}

void check_index(Index i, Index d) {
  if (i < 0 || i >= d) {
    throw std::invalid_argument("kernel: index " + std::to_string(i) + " out of range for dimension " +
                                std::to_string(d));
  }
}

// Single dispatch point for the kernel family.
double rbf(double dist_sq, double bw_sq) { return std::exp(-dist_sq / bw_sq); }

}  // namespace

SymmetricMatrix::SymmetricMatrix(const Mat& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("SymmetricMatrix: matrix is not square");
  data_ = 0.5 * (a + a.transpose());
  for (Index j = 0; j < data_.cols(); ++j) {
    for (Index i = j + 1; i < data_.rows(); ++i) data_(i, j) = data_(j, i);
  }
}

SymmetricMatrix SymmetricMatrix::identity(Index dim) { return SymmetricMatrix(Mat::Identity(dim, dim)); }

double kernel_eval(const Vec& x, const Vec& y, const KernelConfig& cfg) {
  check_same_dim(x, y);
  return rbf((x - y).squaredNorm(), cfg.bandwidth_sq());
}

double kernel_partial(const Vec& y, const Vec& x, Index i, const KernelConfig& cfg) {
  check_same_dim(x, y);
  check_index(i, x.size());
  const double s2 = cfg.bandwidth_sq();
  return -2.0 * (x(i) - y(i)) / s2 * rbf((x - y).squaredNorm(), s2);
}

double kernel_mixed_second(const Vec& y, const Vec& x, Index i_m, Index i, const KernelConfig& cfg) {
  check_same_dim(x, y);
  check_index(i_m, x.size());
  check_index(i, x.size());
  const double s2 = cfg.bandwidth_sq();
  const double k = rbf((x - y).squaredNorm(), s2);
  const double delta = (i == i_m) ? 1.0 : 0.0;
  return (-2.0 * delta / s2 + 4.0 * (x(i) - y(i)) * (x(i_m) - y(i_m)) / (s2 * s2)) * k;
}

double median_bandwidth(const Mat& points) {
  const Index n = points.rows();
  if (n < 2) throw std::invalid_argument("median_bandwidth: need at least 2 points");
  std::vector<double> d2;
  d2.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index a = 0; a < n; ++a) {
    for (Index b = a + 1; b < n; ++b) {
      const double v = (points.row(a) - points.row(b)).squaredNorm();
      if (v > 0.0) d2.push_back(v);
    }
  }
  if (d2.empty()) return kMinBandwidthSq;
  // Lower median for even counts keeps the result one of the observed distances.
  const auto mid = d2.begin() + static_cast<std::ptrdiff_t>((d2.size() - 1) / 2);
  std::nth_element(d2.begin(), mid, d2.end());
  return std::max(*mid, kMinBandwidthSq);
}

KernelConfig resolve_bandwidth(const KernelConfig& cfg, const Mat& points) {
  KernelConfig out = cfg;
  if (cfg.mode == BandwidthMode::MedianHeuristic) {
    out.bandwidth = points.rows() >= 2 ? std::sqrt(median_bandwidth(points)) : std::sqrt(kMinBandwidthSq);
    out.mode = BandwidthMode::Fixed;
  }
  if (!(out.bandwidth > 0.0) || !std::isfinite(out.bandwidth)) {
    throw std::invalid_argument("kernel: bandwidth must be positive and finite");
  }
  return out;
}

Vec solve_psd(const SymmetricMatrix& a, const Vec& b) {
  if (a.dim() != b.size()) throw std::invalid_argument("solve_psd: dimension mismatch");
  if (!a.matrix().allFinite() || !b.allFinite()) {
    throw NumericalError("solve_psd", "non-finite input");
  }
  if (a.dim() == 0) return Vec(0);
  Eigen::SelfAdjointEigenSolver<Mat> eig(a.matrix());
  const Vec& lambda = eig.eigenvalues();
  const double lmax = lambda.cwiseAbs().maxCoeff();
  if (lmax == 0.0) return Vec::Zero(b.size());
  const double cutoff = kPinvRelativeCutoff * lmax;
  Vec coeffs = eig.eigenvectors().transpose() * b;
  for (Index k = 0; k < coeffs.size(); ++k) {
    coeffs(k) = lambda(k) > cutoff ? coeffs(k) / lambda(k) : 0.0;
  }
  return eig.eigenvectors() * coeffs;
}

Mat gram_matrix(const Mat& points, const KernelConfig& cfg) {
  const Index n = points.rows();
  Mat g(n, n);
  for (Index a = 0; a < n; ++a) {
    g(a, a) = 1.0;
    for (Index b = a + 1; b < n; ++b) {
      g(a, b) = g(b, a) = rbf((points.row(a) - points.row(b)).squaredNorm(), cfg.bandwidth_sq());
    }
  }
  return g;
}

}  // namespace wng
