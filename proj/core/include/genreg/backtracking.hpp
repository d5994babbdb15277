#pragma once

#include <functional>
#include <string>
#include <vector>

#include "genreg/tensor.hpp"

namespace genreg {

struct BacktrackConfig {
  double initial_lipschitz = 1.0;  // L0
  double eta0 = 0.9;               // shrink after an accepted step
  double eta1 = 2.0;               // growth on a rejected trial
  double max_lipschitz = 1e30;
  std::size_t max_iterations = 2000;
  double tolerance = 1e-8;         // relative iterate change
};

void validate(const BacktrackConfig& config);

enum class StopReason { Tolerance, ZeroGradient, MaxIterations, Stalled };
std::string to_string(StopReason reason);

struct OptimizationTrace {
  /// Objective at the initial point followed by one entry per accepted iterate.
  std::vector<double> objective;
  std::size_t iterations = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  StopReason reason = StopReason::MaxIterations;

  /// Number of increases along `objective`.
  std::size_t descent_violations() const;
};

/// Smooth objective of a single block: value, and value with gradient.
struct SmoothObjective {
  std::function<double(const Tensor&)> value;
  std::function<double(const Tensor&, Tensor& gradient)> value_and_gradient;
};

struct MinimizeResult {
  Tensor point;
  double value = 0.0;
  OptimizationTrace trace;
};

/// Gradient descent with backtracking. A trial z - g/L is rejected while
/// f(trial) >= f(z) - ||g||^2 / (2L) (non-finite trials are rejected too),
/// with L <- eta1 L per rejection and L <- eta0 L after acceptance.
/// Stops on zero gradient, relative change below tolerance, iteration cap,
/// or when L exceeds max_lipschitz (Stalled).
/// Throws NumericalError if f is not finite at the start.
MinimizeResult gd_backtracking(const SmoothObjective& f, Tensor z0,
                               const BacktrackConfig& config = {});

/// Smooth objective of two blocks (a, b).
struct BlockObjective {
  std::function<double(const Tensor& a, const Tensor& b)> value;
  std::function<void(const Tensor& a, const Tensor& b, Tensor& grad_a)> gradient_a;
  std::function<void(const Tensor& a, const Tensor& b, Tensor& grad_b)> gradient_b;
};

struct BlockResult {
  Tensor a;
  Tensor b;
  double value = 0.0;
  OptimizationTrace trace;
};

/// Alternating gradient descent with backtracking: one backtracked step in
/// a, then one in b (evaluated at the new a), per outer iteration. Each block
/// keeps its own Lipschitz estimate. The trace holds f after each outer
/// iteration.
BlockResult alt_gd_backtracking(const BlockObjective& f, Tensor a0, Tensor b0,
                                const BacktrackConfig& config = {});

/// Nonsmooth term with its proximal map prox_{t h}(v).
struct ProxTerm {
  std::function<double(const Tensor&)> value;
  std::function<Tensor(const Tensor& v, double t)> prox;
};

/// A term that is identically zero (prox is the identity).
ProxTerm zero_term();

/// PALM with backtracking for f(a, b) + g1(a) + g2(b). A block trial
/// prox_{g/L}(a - grad/L) is rejected while
/// f(trial) > f(a) + <grad, trial - a> + L/2 ||trial - a||^2.
/// An accepted trial that would still raise f + g (possible only through an
/// inexact prox or rounding) leaves the block unchanged for that iteration.
/// The trace holds the full objective f + g1 + g2.
BlockResult palm_backtracking(const BlockObjective& f, const ProxTerm& g1, const ProxTerm& g2,
                              Tensor a0, Tensor b0, const BacktrackConfig& config = {});

}  // namespace genreg
