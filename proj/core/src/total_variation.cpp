#include "genreg/total_variation.hpp"

#include <cmath>
#include <random>

#include "genreg/errors.hpp"

namespace genreg {

namespace {

void check_image(const Tensor& x) {
  if (x.rank() != 2) throw ShapeError("expected an (H, W) image, got " + shape_string(x.shape()));
}

// Pointwise projection of (2, H, W) onto {|p_ij| <= radius}.
void project_ball(Tensor& p, double radius) {
  const std::size_t n = p.size() / 2;
  double* a = p.data();
  double* b = p.data() + n;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = std::hypot(a[i], b[i]);
    if (m > radius) {
      const double s = radius / m;
      a[i] *= s;
      b[i] *= s;
    }
  }
}

double prox_gap(const Tensor& u, const Tensor& v, const Tensor& p, double t) {
  const Tensor dual_point = v + divergence(p);
  const double primal = 0.5 * squared_norm(u - v) + t * tv_norm(u);
  const double dual = 0.5 * squared_norm(v) - 0.5 * squared_norm(dual_point);
  return primal - dual;
}

}  // namespace

Tensor image_gradient(const Tensor& x) {
  check_image(x);
  const std::size_t h = x.dim(0), w = x.dim(1), n = h * w;
  Tensor g({2, h, w});
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t k = i * w + j;
      g[k] = i + 1 < h ? x[k + w] - x[k] : 0.0;
      g[n + k] = j + 1 < w ? x[k + 1] - x[k] : 0.0;
    }
  }
  return g;
}

Tensor divergence(const Tensor& p) {
  if (p.rank() != 3 || p.dim(0) != 2) {
    throw ShapeError("divergence expects (2, H, W), got " + shape_string(p.shape()));
  }
  const std::size_t h = p.dim(1), w = p.dim(2), n = h * w;
  Tensor d({h, w});
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t k = i * w + j;
      double v = 0.0;
      if (i + 1 < h) v += p[k];
      if (i > 0) v -= p[k - w];
      if (j + 1 < w) v += p[n + k];
      if (j > 0) v -= p[n + k - 1];
      d[k] = v;
    }
  }
  return d;
}

double tv_norm(const Tensor& x) {
  const Tensor g = image_gradient(x);
  const std::size_t n = x.size();
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::hypot(g[k], g[n + k]);
  return s;
}

TvProxResult tv_prox(const Tensor& v, double t, std::size_t iterations, double gap_tolerance) {
  check_image(v);
  if (t < 0.0) throw InvalidArgument("TV prox weight must be nonnegative");
  TvProxResult r;
  r.x = v;
  if (t == 0.0) return r;
  Tensor ubar = v;
  Tensor p({2, v.dim(0), v.dim(1)});
  double tau = 1.0 / std::sqrt(8.0), sigma = tau;
  for (std::size_t k = 1; k <= iterations; ++k) {
    axpy(sigma, image_gradient(ubar), p);
    project_ball(p, t);
    Tensor u_old = r.x;
    Tensor w = r.x;
    axpy(tau, divergence(p), w);
    axpy(tau, v, w);
    r.x = (1.0 / (1.0 + tau)) * w;
    const double theta = 1.0 / std::sqrt(1.0 + 2.0 * tau);
    tau *= theta;
    sigma /= theta;
    ubar = r.x;
    axpy(theta, r.x - u_old, ubar);
    r.iterations = k;
    if (gap_tolerance > 0.0 && k % 10 == 0 && prox_gap(r.x, v, p, t) <= gap_tolerance) break;
  }
  r.gap = prox_gap(r.x, v, p, t);
  return r;
}

namespace {

double k_norm(const LinearOperator& op, std::size_t iterations) {
  std::mt19937_64 rng(0);
  std::normal_distribution<double> normal;
  Tensor x(op.input_shape());
  for (double& v : x.values()) v = normal(rng);
  x = (1.0 / norm(x)) * x;
  double estimate = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    Tensor next = op.adjoint(op.apply(x)) - divergence(image_gradient(x));
    const double nn = norm(next);
    if (nn == 0.0) break;
    const double previous = estimate;
    estimate = std::sqrt(nn);
    x = (1.0 / nn) * next;
    if (std::abs(estimate - previous) <= 1e-8 * estimate) break;
  }
  return estimate;
}

}  // namespace

TvSolveResult tv_reconstruct(const LinearOperator& op, const Tensor& y, double lambda,
                             const TvSolveConfig& config) {
  if (!(lambda > 0.0)) throw InvalidArgument("TV regularisation needs lambda > 0");
  if (op.input_shape().size() != 2) throw ShapeError("TV needs an operator on (H, W) images");
  if (y.shape() != op.output_shape()) {
    throw ShapeError("data shape " + shape_string(y.shape()) + " does not match operator output " +
                     shape_string(op.output_shape()));
  }
  TvSolveResult r;
  auto objective = [&](const Tensor& x) {
    return squared_norm(op.apply(x) - y) + lambda * tv_norm(x);
  };
  if (op.is_identity()) {
    // ||x - y||^2 + lambda TV = 2 (1/2 ||x - y||^2 + lambda/2 TV)
    TvProxResult p = tv_prox(y, 0.5 * lambda, config.max_iterations,
                             0.5 * config.tolerance * std::max(1.0, squared_norm(y)));
    r.x = std::move(p.x);
    r.gap = 2.0 * p.gap;
    r.iterations = p.iterations;
    r.objective.push_back(objective(r.x));
    r.warning = r.gap > config.warning_threshold * std::max(1.0, r.objective.back());
    return r;
  }

  const double L = 1.01 * k_norm(op, 200);
  const double sigma = 1.0 / L, tau = 1.0 / L;
  const Shape& shape = op.input_shape();
  Tensor x(shape), xbar(shape);
  Tensor p(op.output_shape());
  Tensor q({2, shape[0], shape[1]});
  double residual = 1.0;
  for (std::size_t k = 1; k <= config.max_iterations; ++k) {
    const Tensor p_old = p, q_old = q;
    axpy(sigma, op.apply(xbar) - y, p);
    p = (1.0 / (1.0 + 0.5 * sigma)) * p;
    axpy(sigma, image_gradient(xbar), q);
    project_ball(q, lambda);
    const Tensor x_old = x;
    axpy(-tau, op.adjoint(p) - divergence(q), x);
    xbar = x;
    axpy(1.0, x - x_old, xbar);
    r.iterations = k;
    const double dx = norm(x - x_old) / std::max(norm(x), 1e-300);
    const double dd = std::sqrt(squared_norm(p - p_old) + squared_norm(q - q_old)) /
                      std::max(std::sqrt(squared_norm(p) + squared_norm(q)), 1e-300);
    residual = dx + dd;
    if (k % 10 == 0) r.objective.push_back(objective(x));
    if (residual < config.tolerance) break;
  }
  r.x = std::move(x);
  r.gap = residual;
  r.warning = residual > config.warning_threshold;
  return r;
}

}  // namespace genreg
