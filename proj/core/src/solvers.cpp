#include "genreg/solvers.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "genreg/errors.hpp"
#include "genreg/losses.hpp"
#include "genreg/prox.hpp"
#include "genreg/total_variation.hpp"

namespace genreg {

std::string to_string(Method m) {
  switch (m) {
    case Method::Hard: return "hard";
    case Method::Relaxed: return "relaxed";
    case Method::Sparse: return "sparse";
    case Method::SparseTv: return "sparse-tv";
    case Method::Pgd: return "pgd";
    case Method::Tikhonov: return "tikhonov";
    case Method::Tv: return "tv";
  }
  return "unknown";
}

Method parse_method(const std::string& text) {
  for (Method m : {Method::Hard, Method::Relaxed, Method::Sparse, Method::SparseTv, Method::Pgd,
                   Method::Tikhonov, Method::Tv}) {
    if (to_string(m) == text) return m;
  }
  throw InvalidArgument("unknown method '" + text + "'");
}

bool needs_generator(Method m) { return m != Method::Tikhonov && m != Method::Tv; }

std::size_t SolveResult::descent_violations() const {
  std::size_t n = 0;
  for (std::size_t i = 1; i < objective.size(); ++i) {
    if (objective[i] > objective[i - 1]) ++n;
  }
  return n;
}

void validate(const SolveSpec& s) {
  if (!s.op) throw InvalidArgument("solve needs a forward operator");
  if (s.data.shape() != s.op->output_shape()) {
    throw ShapeError("data shape " + shape_string(s.data.shape()) + " does not match operator output " +
                     shape_string(s.op->output_shape()));
  }
  if (s.op->input_shape().size() != 2) throw ShapeError("operator input must be an (H, W) image");
  if (!(s.lambda >= 0.0) || !(s.mu >= 0.0)) throw InvalidArgument("lambda and mu must be nonnegative");
  if ((s.method == Method::Tikhonov || s.method == Method::Tv) && !(s.lambda > 0.0)) {
    throw InvalidArgument(to_string(s.method) + " needs lambda > 0");
  }
  if (needs_generator(s.method)) {
    if (!s.generator) throw InvalidArgument(to_string(s.method) + " needs a generator");
    if (s.generator->image_shape() != s.op->input_shape()) {
      throw ShapeError("generator images " + shape_string(s.generator->image_shape()) +
                       " do not match operator input " + shape_string(s.op->input_shape()));
    }
    if (s.init.kind == InitKind::Encoder && !s.encoder) {
      throw InvalidArgument("encoder initialisation needs an encoder");
    }
    if (s.init.kind == InitKind::Given && !s.init.z0) {
      throw InvalidArgument("given initialisation needs z0");
    }
  }
  if (s.restarts == 0) throw InvalidArgument("restarts must be at least 1");
  if (s.stopping.max_iterations == 0) throw InvalidArgument("max_iterations must be positive");
  if (s.pgd_step < 0.0) throw InvalidArgument("pgd step must be nonnegative");
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

BacktrackConfig backtrack_of(const SolveSpec& s) {
  BacktrackConfig c = s.backtrack;
  c.max_iterations = s.stopping.max_iterations;
  c.tolerance = s.stopping.tolerance;
  return c;
}

// G(z) as an (H, W) image with J^T c, memoised on the last latent.
class GeneratorCache {
 public:
  explicit GeneratorCache(const GeneratorModel& g) : g_(g) {}

  const Tensor& image(const Tensor& z) {
    if (!lin_ || !(z == z_)) {
      lin_ = g_.linearize(z);
      z_ = z;
      image_ = lin_->image().reshaped(g_.image_shape());
    }
    return image_;
  }

  Tensor vjp(const Tensor& z, const Tensor& cotangent) {
    image(z);
    return lin_->vjp(cotangent).reshaped(z.shape());
  }

 private:
  const GeneratorModel& g_;
  std::optional<GeneratorModel::Linearization> lin_;
  Tensor z_;
  Tensor image_;
};

Tensor initial_latent(const SolveSpec& s, std::size_t restart) {
  const std::size_t d = s.generator->latent_dim();
  if (restart == 0 && s.init.kind == InitKind::Given) return s.init.z0->reshaped({d});
  if (restart == 0 && s.init.kind == InitKind::Encoder) {
    const double n = operator_norm(*s.op, 50);
    Tensor estimate = s.op->adjoint(s.data);
    for (double& v : estimate.values()) v = std::clamp(v / std::max(n * n, 1e-300), 0.0, 1.0);
    return s.encoder->encode(estimate).reshaped({d});
  }
  std::mt19937_64 rng(s.seed + restart);
  return standard_normal({d}, rng);
}

void finish(SolveResult& r, const SolveSpec& s, const OptimizationTrace& t) {
  r.method = s.method;
  r.objective = t.objective;
  r.final_objective = t.objective.back();
  r.iterations = t.iterations;
  r.accepted = t.accepted;
  r.rejected = t.rejected;
  r.stop_reason = to_string(t.reason);
  r.discrepancy = norm(s.op->apply(r.x) - s.data);
}

template <class Run>
SolveResult with_restarts(const SolveSpec& s, Run&& run) {
  validate(s);
  const auto start = Clock::now();
  SolveResult best;
  std::vector<double> finals;
  for (std::size_t k = 0; k < s.restarts; ++k) {
    SolveResult r = run(initial_latent(s, k), k);
    finals.push_back(r.final_objective);
    if (!std::isfinite(r.final_objective)) {
      throw NumericalError(to_string(s.method) + " diverged in restart " + std::to_string(k));
    }
    if (k == 0 || r.final_objective < best.final_objective) {
      best = std::move(r);
      best.restart = k;
    }
  }
  best.restart_objectives = std::move(finals);
  best.wall_ms = elapsed_ms(start);
  return best;
}

SolveResult run_hard(const SolveSpec& s, Tensor z0) {
  const LinearOperator& A = *s.op;
  GeneratorCache G(*s.generator);
  SmoothObjective f;
  f.value = [&](const Tensor& z) {
    return squared_norm(A.apply(G.image(z)) - s.data) + s.lambda * squared_norm(z);
  };
  f.value_and_gradient = [&](const Tensor& z, Tensor& g) {
    const Tensor r = A.apply(G.image(z)) - s.data;
    g = G.vjp(z, 2.0 * A.adjoint(r));
    axpy(2.0 * s.lambda, z, g);
    return squared_norm(r) + s.lambda * squared_norm(z);
  };
  MinimizeResult m = gd_backtracking(f, std::move(z0), backtrack_of(s));
  SolveResult r;
  r.z = std::move(m.point);
  r.x = s.generator->generate(r.z);
  finish(r, s, m.trace);
  return r;
}

SolveResult run_relaxed(const SolveSpec& s, Tensor z0) {
  const LinearOperator& A = *s.op;
  GeneratorCache G(*s.generator);
  const double lm = s.lambda * s.mu;
  BlockObjective f;
  f.value = [&](const Tensor& z, const Tensor& x) {
    return squared_norm(A.apply(x) - s.data) + s.lambda * squared_norm(G.image(z) - x) +
           lm * squared_norm(z);
  };
  f.gradient_a = [&](const Tensor& z, const Tensor& x, Tensor& g) {
    const Tensor d = G.image(z) - x;
    g = G.vjp(z, (2.0 * s.lambda) * d);
    axpy(2.0 * lm, z, g);
  };
  f.gradient_b = [&](const Tensor& z, const Tensor& x, Tensor& g) {
    g = 2.0 * A.adjoint(A.apply(x) - s.data);
    axpy(-2.0 * s.lambda, G.image(z) - x, g);
  };
  Tensor x0 = s.init.kind == InitKind::Given && s.init.x0 ? *s.init.x0 : G.image(z0);
  BlockResult b = alt_gd_backtracking(f, std::move(z0), std::move(x0), backtrack_of(s));
  SolveResult r;
  r.z = std::move(b.a);
  r.x = std::move(b.b);
  r.u = r.x - s.generator->generate(r.z);
  finish(r, s, b.trace);
  return r;
}

SolveResult run_palm(const SolveSpec& s, Tensor z0, bool tv) {
  const LinearOperator& A = *s.op;
  GeneratorCache G(*s.generator);
  const double lm = s.lambda * s.mu;
  BlockObjective f;
  f.value = [&](const Tensor& z, const Tensor& u) {
    return squared_norm(A.apply(G.image(z) + u) - s.data);
  };
  f.gradient_a = [&](const Tensor& z, const Tensor& u, Tensor& g) {
    g = G.vjp(z, 2.0 * A.adjoint(A.apply(G.image(z) + u) - s.data));
  };
  f.gradient_b = [&](const Tensor& z, const Tensor& u, Tensor& g) {
    g = 2.0 * A.adjoint(A.apply(G.image(z) + u) - s.data);
  };
  ProxTerm g1{[lm](const Tensor& z) { return lm * squared_norm(z); },
              [lm](const Tensor& v, double t) { return prox_scaled_sqnorm(v, t, lm); }};
  double worst_gap = 0.0;
  ProxTerm g2;
  if (tv) {
    g2.value = [&](const Tensor& u) { return s.lambda * tv_norm(u); };
    g2.prox = [&](const Tensor& v, double t) {
      TvProxResult p = tv_prox(v, s.lambda * t, s.tv_inner_iterations);
      worst_gap = std::max(worst_gap, p.gap);
      return p.x;
    };
  } else {
    g2.value = [&](const Tensor& u) { return s.lambda * l1_norm(u); };
    g2.prox = [&](const Tensor& v, double t) { return prox_l1(v, s.lambda * t); };
  }
  Tensor u0 = s.init.kind == InitKind::Given && s.init.u0 ? *s.init.u0 : Tensor(A.input_shape());
  BlockResult b = palm_backtracking(f, g1, g2, std::move(z0), std::move(u0), backtrack_of(s));
  SolveResult r;
  r.z = std::move(b.a);
  r.u = std::move(b.b);
  r.x = s.generator->generate(r.z) + r.u;
  finish(r, s, b.trace);
  r.gap = worst_gap;
  r.warning = tv && worst_gap > s.tv_gap_tolerance;
  return r;
}

SolveResult run_pgd(const SolveSpec& s, Tensor z) {
  const LinearOperator& A = *s.op;
  const double eta = s.pgd_step > 0.0 ? s.pgd_step : 1.0 / std::pow(operator_norm(A), 2);
  GeneratorCache G(*s.generator);
  BacktrackConfig inner = s.backtrack;
  inner.max_iterations = s.pgd_inner_iterations;
  inner.tolerance = s.stopping.tolerance;

  SolveResult r;
  Tensor x = G.image(z);
  OptimizationTrace trace;
  trace.objective.push_back(squared_norm(A.apply(x) - s.data));
  trace.reason = StopReason::MaxIterations;
  for (std::size_t it = 1; it <= s.stopping.max_iterations; ++it) {
    Tensor w = x;
    axpy(-eta, A.adjoint(A.apply(x) - s.data), w);
    SmoothObjective proj;
    proj.value = [&](const Tensor& zz) { return squared_norm(w - G.image(zz)); };
    proj.value_and_gradient = [&](const Tensor& zz, Tensor& g) {
      const Tensor d = G.image(zz) - w;
      g = G.vjp(zz, 2.0 * d);
      return squared_norm(d);
    };
    MinimizeResult m = gd_backtracking(proj, z, inner);
    trace.accepted += m.trace.accepted;
    trace.rejected += m.trace.rejected;
    z = std::move(m.point);
    Tensor next = G.image(z);
    const double change = norm(next - x), size = norm(x);
    x = std::move(next);
    trace.iterations = it;
    trace.objective.push_back(squared_norm(A.apply(x) - s.data));
    if (change <= s.stopping.tolerance * size) {
      trace.reason = StopReason::Tolerance;
      break;
    }
  }
  r.z = std::move(z);
  r.x = s.generator->generate(r.z);
  finish(r, s, trace);
  return r;
}

}  // namespace

double method_objective(const SolveSpec& s, const Tensor& z, const Tensor& x) {
  const LinearOperator& A = *s.op;
  switch (s.method) {
    case Method::Hard:
      return squared_norm(A.apply(s.generator->generate(z)) - s.data) + s.lambda * squared_norm(z);
    case Method::Relaxed:
      return squared_norm(A.apply(x) - s.data) +
             s.lambda * (squared_norm(s.generator->generate(z) - x) + s.mu * squared_norm(z));
    case Method::Sparse:
      return squared_norm(A.apply(s.generator->generate(z) + x) - s.data) +
             s.lambda * (l1_norm(x) + s.mu * squared_norm(z));
    case Method::SparseTv:
      return squared_norm(A.apply(s.generator->generate(z) + x) - s.data) +
             s.lambda * (tv_norm(x) + s.mu * squared_norm(z));
    case Method::Pgd:
      return squared_norm(A.apply(x) - s.data);
    case Method::Tikhonov:
      return squared_norm(A.apply(x) - s.data) + s.lambda * squared_norm(x);
    case Method::Tv:
      return squared_norm(A.apply(x) - s.data) + s.lambda * tv_norm(x);
  }
  return 0.0;
}

SolveResult solve_hard(const SolveSpec& s) {
  return with_restarts(s, [&](Tensor z0, std::size_t) { return run_hard(s, std::move(z0)); });
}

SolveResult solve_relaxed(const SolveSpec& s) {
  return with_restarts(s, [&](Tensor z0, std::size_t) { return run_relaxed(s, std::move(z0)); });
}

SolveResult solve_sparse(const SolveSpec& s) {
  return with_restarts(s, [&](Tensor z0, std::size_t) { return run_palm(s, std::move(z0), false); });
}

SolveResult solve_sparse_tv(const SolveSpec& s) {
  return with_restarts(s, [&](Tensor z0, std::size_t) { return run_palm(s, std::move(z0), true); });
}

SolveResult solve_pgd(const SolveSpec& s) {
  return with_restarts(s, [&](Tensor z0, std::size_t) { return run_pgd(s, std::move(z0)); });
}

SolveResult solve_tikhonov(const SolveSpec& s) {
  validate(s);
  const auto start = Clock::now();
  const LinearOperator& A = *s.op;
  SmoothObjective f;
  f.value = [&](const Tensor& x) {
    return squared_norm(A.apply(x) - s.data) + s.lambda * squared_norm(x);
  };
  f.value_and_gradient = [&](const Tensor& x, Tensor& g) {
    const Tensor r = A.apply(x) - s.data;
    g = 2.0 * A.adjoint(r);
    axpy(2.0 * s.lambda, x, g);
    return squared_norm(r) + s.lambda * squared_norm(x);
  };
  Tensor x0 = s.init.kind == InitKind::Given && s.init.x0 ? *s.init.x0 : Tensor(A.input_shape());
  MinimizeResult m = gd_backtracking(f, std::move(x0), backtrack_of(s));
  SolveResult r;
  r.x = std::move(m.point);
  finish(r, s, m.trace);
  r.restart_objectives = {r.final_objective};
  r.wall_ms = elapsed_ms(start);
  return r;
}

SolveResult solve_tv(const SolveSpec& s) {
  validate(s);
  const auto start = Clock::now();
  TvSolveConfig c;
  c.max_iterations = s.stopping.max_iterations;
  c.tolerance = s.stopping.tolerance;
  TvSolveResult t = tv_reconstruct(*s.op, s.data, s.lambda, c);
  SolveResult r;
  r.method = s.method;
  r.x = std::move(t.x);
  r.objective = std::move(t.objective);
  r.final_objective = method_objective(s, Tensor(), r.x);
  r.iterations = t.iterations;
  r.stop_reason = t.iterations >= c.max_iterations ? "max-iterations" : "tolerance";
  r.gap = t.gap;
  r.warning = t.warning;
  r.discrepancy = norm(s.op->apply(r.x) - s.data);
  r.restart_objectives = {r.final_objective};
  r.wall_ms = elapsed_ms(start);
  return r;
}

SolveResult solve(const SolveSpec& s) {
  switch (s.method) {
    case Method::Hard: return solve_hard(s);
    case Method::Relaxed: return solve_relaxed(s);
    case Method::Sparse: return solve_sparse(s);
    case Method::SparseTv: return solve_sparse_tv(s);
    case Method::Pgd: return solve_pgd(s);
    case Method::Tikhonov: return solve_tikhonov(s);
    case Method::Tv: return solve_tv(s);
  }
  throw InvalidArgument("unknown method");
}

}  // namespace genreg
