#include "genreg/backtracking.hpp"

#include <cmath>

#include "genreg/errors.hpp"

namespace genreg {

void validate(const BacktrackConfig& c) {
  if (!(c.initial_lipschitz > 0.0)) throw InvalidArgument("initial Lipschitz estimate must be positive");
  if (!(c.eta0 > 0.0 && c.eta0 < 1.0)) throw InvalidArgument("eta0 must lie in (0, 1)");
  if (!(c.eta1 > 1.0)) throw InvalidArgument("eta1 must exceed 1");
  if (!(c.max_lipschitz > c.initial_lipschitz)) {
    throw InvalidArgument("max_lipschitz must exceed the initial estimate");
  }
  if (c.tolerance < 0.0) throw InvalidArgument("tolerance must be nonnegative");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::Tolerance: return "tolerance";
    case StopReason::ZeroGradient: return "zero-gradient";
    case StopReason::MaxIterations: return "max-iterations";
    case StopReason::Stalled: return "stalled";
  }
  return "unknown";
}

std::size_t OptimizationTrace::descent_violations() const {
  std::size_t n = 0;
  for (std::size_t i = 1; i < objective.size(); ++i) {
    if (objective[i] > objective[i - 1]) ++n;
  }
  return n;
}

namespace {

enum class Step { Accepted, ZeroGradient, Stalled };

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string("non-finite ") + what);
}

// Backtracked gradient step on one block: x <- x - g/L.
// `value` evaluates the objective with the block replaced by a trial.
template <class Value>
Step gradient_step(Tensor& x, const Tensor& g, double& fx, double& L, const BacktrackConfig& c,
                   OptimizationTrace& trace, double& moved_sq, Value&& value) {
  const double gn2 = squared_norm(g);
  require_finite(gn2, "gradient");
  if (gn2 == 0.0) return Step::ZeroGradient;
  for (;;) {
    Tensor trial = x;
    axpy(-1.0 / L, g, trial);
    const double ft = value(trial);
    if (std::isfinite(ft) && !(ft >= fx - gn2 / (2.0 * L))) {
      moved_sq = gn2 / (L * L);
      x = std::move(trial);
      fx = ft;
      L *= c.eta0;
      ++trace.accepted;
      return Step::Accepted;
    }
    ++trace.rejected;
    L *= c.eta1;
    if (L > c.max_lipschitz) return Step::Stalled;
  }
}

// Backtracked proximal step on one block. `f` is the smooth part at x,
// `gx` the nonsmooth part at x.
template <class Value>
Step prox_step(Tensor& x, const Tensor& grad, double& f, double& gx, double& L,
               const BacktrackConfig& c, const ProxTerm& g, OptimizationTrace& trace,
               double& moved_sq, Value&& value) {
  require_finite(squared_norm(grad), "gradient");
  for (;;) {
    Tensor v = x;
    axpy(-1.0 / L, grad, v);
    Tensor trial = g.prox(v, 1.0 / L);
    const Tensor d = trial - x;
    const double ft = value(trial);
    const double bound = f + dot(grad, d) + 0.5 * L * squared_norm(d);
    if (std::isfinite(ft) && !(ft > bound)) {
      L *= c.eta0;
      ++trace.accepted;
      const double gt = g.value(trial);
      if (ft + gt > f + gx) {
        moved_sq = 0.0;
        return Step::Accepted;
      }
      moved_sq = squared_norm(d);
      x = std::move(trial);
      f = ft;
      gx = gt;
      return Step::Accepted;
    }
    ++trace.rejected;
    L *= c.eta1;
    if (L > c.max_lipschitz) return Step::Stalled;
  }
}

bool small_change(double moved_sq, double previous_sq, double tol) {
  return previous_sq > 0.0 && std::sqrt(moved_sq) <= tol * std::sqrt(previous_sq);
}

}  // namespace

MinimizeResult gd_backtracking(const SmoothObjective& f, Tensor z0, const BacktrackConfig& c) {
  validate(c);
  MinimizeResult r;
  r.point = std::move(z0);
  Tensor g;
  double fz = f.value_and_gradient(r.point, g);
  require_finite(fz, "objective at the initial point");
  r.trace.objective.push_back(fz);
  double L = c.initial_lipschitz;
  r.trace.reason = StopReason::MaxIterations;
  for (std::size_t it = 1; it <= c.max_iterations; ++it) {
    const double before_sq = squared_norm(r.point);
    double moved_sq = 0.0;
    const Step s = gradient_step(r.point, g, fz, L, c, r.trace, moved_sq,
                                 [&](const Tensor& t) { return f.value(t); });
    if (s == Step::ZeroGradient) {
      r.trace.reason = StopReason::ZeroGradient;
      break;
    }
    if (s == Step::Stalled) {
      r.trace.reason = StopReason::Stalled;
      break;
    }
    r.trace.iterations = it;
    r.trace.objective.push_back(fz);
    if (small_change(moved_sq, before_sq, c.tolerance)) {
      r.trace.reason = StopReason::Tolerance;
      break;
    }
    f.value_and_gradient(r.point, g);
  }
  r.value = fz;
  return r;
}

BlockResult alt_gd_backtracking(const BlockObjective& f, Tensor a0, Tensor b0,
                                const BacktrackConfig& c) {
  validate(c);
  BlockResult r;
  r.a = std::move(a0);
  r.b = std::move(b0);
  double fv = f.value(r.a, r.b);
  require_finite(fv, "objective at the initial point");
  r.trace.objective.push_back(fv);
  double La = c.initial_lipschitz, Lb = c.initial_lipschitz;
  r.trace.reason = StopReason::MaxIterations;
  Tensor ga, gb;
  for (std::size_t it = 1; it <= c.max_iterations; ++it) {
    const double before_sq = squared_norm(r.a) + squared_norm(r.b);
    double ma = 0.0, mb = 0.0;
    f.gradient_a(r.a, r.b, ga);
    const Step sa = gradient_step(r.a, ga, fv, La, c, r.trace, ma,
                                  [&](const Tensor& t) { return f.value(t, r.b); });
    f.gradient_b(r.a, r.b, gb);
    const Step sb = gradient_step(r.b, gb, fv, Lb, c, r.trace, mb,
                                  [&](const Tensor& t) { return f.value(r.a, t); });
    if (sa != Step::Accepted && sb != Step::Accepted) {
      r.trace.reason = (sa == Step::ZeroGradient && sb == Step::ZeroGradient)
                           ? StopReason::ZeroGradient
                           : StopReason::Stalled;
      break;
    }
    r.trace.iterations = it;
    r.trace.objective.push_back(fv);
    if (small_change(ma + mb, before_sq, c.tolerance)) {
      r.trace.reason = StopReason::Tolerance;
      break;
    }
  }
  r.value = fv;
  return r;
}

ProxTerm zero_term() {
  return ProxTerm{[](const Tensor&) { return 0.0; }, [](const Tensor& v, double) { return v; }};
}

BlockResult palm_backtracking(const BlockObjective& f, const ProxTerm& g1, const ProxTerm& g2,
                              Tensor a0, Tensor b0, const BacktrackConfig& c) {
  validate(c);
  BlockResult r;
  r.a = std::move(a0);
  r.b = std::move(b0);
  double fv = f.value(r.a, r.b);
  double g1v = g1.value(r.a), g2v = g2.value(r.b);
  require_finite(fv + g1v + g2v, "objective at the initial point");
  r.trace.objective.push_back(fv + g1v + g2v);
  double La = c.initial_lipschitz, Lb = c.initial_lipschitz;
  r.trace.reason = StopReason::MaxIterations;
  Tensor ga, gb;
  for (std::size_t it = 1; it <= c.max_iterations; ++it) {
    const double before_sq = squared_norm(r.a) + squared_norm(r.b);
    double ma = 0.0, mb = 0.0;
    f.gradient_a(r.a, r.b, ga);
    const Step sa = prox_step(r.a, ga, fv, g1v, La, c, g1, r.trace, ma,
                              [&](const Tensor& t) { return f.value(t, r.b); });
    f.gradient_b(r.a, r.b, gb);
    const Step sb = prox_step(r.b, gb, fv, g2v, Lb, c, g2, r.trace, mb,
                              [&](const Tensor& t) { return f.value(r.a, t); });
    if (sa == Step::Stalled && sb == Step::Stalled) {
      r.trace.reason = StopReason::Stalled;
      break;
    }
    r.trace.iterations = it;
    r.trace.objective.push_back(fv + g1v + g2v);
    if (ma + mb == 0.0 || small_change(ma + mb, before_sq, c.tolerance)) {
      r.trace.reason = StopReason::Tolerance;
      break;
    }
  }
  r.value = fv + g1v + g2v;
  return r;
}

}  // namespace genreg
