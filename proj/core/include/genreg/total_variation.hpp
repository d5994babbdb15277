#pragma once

#include "genreg/operators.hpp"
#include "genreg/tensor.hpp"

namespace genreg {

/// Forward differences of an (H, W) image with Neumann boundary, as (2, H, W):
/// channel 0 along rows (vertical), channel 1 along columns (horizontal).
Tensor image_gradient(const Tensor& x);
/// Negative adjoint of `image_gradient`.
Tensor divergence(const Tensor& p);
/// Isotropic total variation: sum over pixels of |grad x|.
double tv_norm(const Tensor& x);

struct TvProxResult {
  Tensor x;
  double gap = 0.0;  // duality gap of the prox problem at return
  std::size_t iterations = 0;
};

/// argmin_u t TV(u) + 1/2 ||u - v||^2 by accelerated primal-dual iterations.
/// Stops after `iterations` steps, or earlier once the duality gap is below
/// `gap_tolerance` (checked every 10 steps; 0 disables the check).
TvProxResult tv_prox(const Tensor& v, double t, std::size_t iterations,
                     double gap_tolerance = 0.0);

struct TvSolveConfig {
  std::size_t max_iterations = 2000;
  double tolerance = 1e-8;          // relative primal-dual iterate change
  double warning_threshold = 1e-4;  // residual above this at return sets `warning`
};

struct TvSolveResult {
  Tensor x;
  /// For denoising (identity operator) the duality gap of the objective;
  /// otherwise the final relative primal-dual iterate change.
  double gap = 0.0;
  std::size_t iterations = 0;
  bool warning = false;
  std::vector<double> objective;  // ||Ax - y||^2 + lambda TV(x), every 10 iterations
};

/// min_x ||Ax - y||^2 + lambda TV(x) by PDHG with K = [A; grad] and
/// sigma = tau = 1/||K||. The identity operator is handled as a denoising
/// problem with the accelerated prox iteration.
TvSolveResult tv_reconstruct(const LinearOperator& op, const Tensor& y, double lambda,
                             const TvSolveConfig& config = {});

}  // namespace genreg
