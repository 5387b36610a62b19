#pragma once

#include <Eigen/Dense>

namespace wng {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class KernelFamily { GaussianRbf };
enum class BandwidthMode { Fixed, MedianHeuristic };

/// K(x, y) = exp(-|x - y|^2 / bandwidth^2). `bandwidth` is in the length
/// units of the embedding space; in median-heuristic mode it is overwritten
/// by resolve_bandwidth() on every batch.
struct KernelConfig {
  KernelFamily family = KernelFamily::GaussianRbf;
  double bandwidth = 1.0;
  BandwidthMode mode = BandwidthMode::MedianHeuristic;

  double bandwidth_sq() const { return bandwidth * bandwidth; }
};

/// Symmetric matrix with exactly mirrored storage.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  /// Symmetrizes `a` as (a + a^T) / 2, then copies the upper triangle down so
  /// that entries(i, j) == entries(j, i) bit-for-bit.
  explicit SymmetricMatrix(const Mat& a);

  static SymmetricMatrix identity(Index dim);

  Index dim() const { return data_.rows(); }
  const Mat& matrix() const { return data_; }
  double operator()(Index i, Index j) const { return data_(i, j); }

 private:
  Mat data_;
};

inline constexpr double kMinBandwidthSq = 1e-6;
inline constexpr double kPinvRelativeCutoff = 1e-10;

double kernel_eval(const Vec& x, const Vec& y, const KernelConfig& cfg);

/// dK(y, x)/dx_i: derivative in the second argument. This is the basis
/// function h(x) = d_i K(Y, x) used by the estimator.
double kernel_partial(const Vec& y, const Vec& x, Index i, const KernelConfig& cfg);

/// d^2 K(y, x) / dx_i dx_im.
double kernel_mixed_second(const Vec& y, const Vec& x, Index i_m, Index i,
                           const KernelConfig& cfg);

/// Median of the nonzero pairwise squared distances between the rows of
/// `points` (the squared bandwidth), floored at kMinBandwidthSq.
double median_bandwidth(const Mat& points);

/// Returns a fixed-mode copy of `cfg` with the bandwidth resolved against
/// `points` when the mode is median-heuristic.
KernelConfig resolve_bandwidth(const KernelConfig& cfg, const Mat& points);

/// Least-squares solution of A x = b through the eigendecomposition
/// pseudo-inverse. Eigenvalues below kPinvRelativeCutoff * lambda_max are
/// treated as zero.
Vec solve_psd(const SymmetricMatrix& a, const Vec& b);

/// Gram matrix [K(x_a, x_b)] over the rows of `points`.
Mat gram_matrix(const Mat& points, const KernelConfig& cfg);

}  // namespace wng
