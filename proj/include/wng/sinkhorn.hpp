#pragma once

#include "wng/kernel.hpp"

namespace wng {

struct SinkhornOptions {
  double reg = 0.0;  // <= 0 selects reg_scale * median pairwise squared distance
  double reg_scale = 0.05;
  int max_iters = 200;
  double tolerance = 1e-9;  // L1 marginal violation
};

/// Entropic OT between uniform clouds with squared-Euclidean cost. `cost` is
/// the dual value <a, f> + <b, g>.
struct OtResult {
  double cost = 0.0;
  Vec f;  // potential on the rows of the first cloud
  Vec g;  // potential on the rows of the second cloud
  int iterations = 0;
  double marginal_error = 0.0;
  bool converged = false;
};

/// Log-domain Sinkhorn iterations. If the tolerance is not met within
/// `max_iters`, the iterate with the smallest marginal violation is returned
/// with converged = false.
OtResult entropic_ot(const Mat& a, const Mat& b, double reg, int max_iters, double tolerance);

/// OT(a, a) through the averaged symmetric update f <- (f + T(f)) / 2, which
/// avoids the slow oscillation of alternating updates on self-transport.
/// On return f == g.
OtResult entropic_ot_self(const Mat& a, double reg, int max_iters, double tolerance);

struct SinkhornDivergence {
  double value = 0.0;
  /// First variation of the divergence in the first cloud's measure,
  /// evaluated at its points.
  Vec potential_a;
  double reg = 0.0;
  bool converged = false;
};

/// S(a, b) = OT(a, b) - OT(a, a) / 2 - OT(b, b) / 2.
SinkhornDivergence sinkhorn_divergence(const Mat& a, const Mat& b, const SinkhornOptions& options = {});

/// S({x}, cloud) given OT(cloud, cloud). The point-mass terms are exact.
double point_divergence(const Vec& x, const Mat& cloud, double cloud_self_cost);

/// Value of sinkhorn_divergence for an explicit regularization.
double sinkhorn_w2(const Mat& a, const Mat& b, double reg, int iters);

/// reg_scale times the median pairwise squared distance over both clouds.
double default_sinkhorn_reg(const Mat& a, const Mat& b, double reg_scale = 0.05);

}  // namespace wng
