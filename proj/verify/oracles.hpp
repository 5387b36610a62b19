#pragma once

// Reference computations used only for checking. Each one takes a different
// route from the library code it is compared against (dense inverses instead
// of Woodbury, exhaustive search instead of Sinkhorn, Simpson instead of
// Gauss-Legendre, finite differences instead of analytic derivatives).

#include <functional>

#include "wng/gaussian_lab.hpp"
#include "wng/kernel.hpp"

namespace wng::oracle {

/// (J^T L^+ J + eps I)^{-1} g with L^+ from an SVD and a dense p x p solve.
Vec dense_natural_gradient(const Mat& J, const Mat& L, const Vec& g, double eps);

/// J^T L^+ J, dense.
Mat dense_metric(const Mat& J, const Mat& L);

/// Exact OT cost between two uniform clouds of equal size with squared
/// Euclidean ground cost, by enumerating every assignment. Size <= 10.
double exact_assignment_ot(const Mat& a, const Mat& b);

double central_difference(const std::function<double(double)>& f, double x, double h);

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h);

/// d^2 f / dx_i dx_j by nested central differences.
double fd_mixed(const std::function<double(const Vec&)>& f, const Vec& x, Index i, Index j, double h);

/// Golden-section search for a local maximum of f on [lo, hi].
double golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12);

/// E[f(X)] for X ~ N(mean, sd^2), composite Simpson on mean +- 12 sd.
double gaussian_expectation(const std::function<double(double)>& f, double mean, double sd, int intervals = 4000);

/// Composite Simpson rule on [lo, hi].
double simpson(const std::function<double(double)>& f, double lo, double hi, int intervals);

/// Half the finite-difference Hessian in u of `divergence(theta, theta + u)`
/// at u = 0.
Mat fd_metric(const std::function<double(const Vec&, const Vec&)>& divergence, const Vec& theta, double h);

/// Wasserstein and Fisher metrics of a diagonal Gaussian from finite
/// differences of the closed-form W2^2 and KL.
Mat fd_wasserstein_metric(const GaussianModel& model);
Mat fd_fisher_metric(const GaussianModel& model);

}  // namespace wng::oracle
