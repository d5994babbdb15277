#include "genreg/diagnostics.hpp"

#include <cmath>
#include <random>

#include "genreg/errors.hpp"
#include "genreg/losses.hpp"
#include "genreg/metrics.hpp"
#include "genreg/solvers.hpp"

namespace genreg {

EncodeResult encode_by_optimization(const Tensor& x, const GeneratorModel& generator,
                                    const EncoderModel* encoder, std::size_t restarts,
                                    std::uint64_t seed, const BacktrackConfig& config) {
  const Tensor image = x.reshaped(generator.image_shape());
  SolveSpec spec;
  spec.op = std::make_shared<IdentityOperator>(generator.image_shape());
  spec.data = image;
  spec.method = Method::Hard;
  spec.lambda = 0.0;
  spec.generator = &generator;
  spec.seed = seed;
  spec.restarts = restarts;
  spec.backtrack = config;
  spec.stopping = {config.max_iterations, config.tolerance};
  if (encoder) {
    spec.init.kind = InitKind::Given;
    spec.init.z0 = encoder->encode(image);
  }
  SolveResult r = solve_hard(spec);
  EncodeResult e;
  e.z = std::move(r.z);
  e.image = std::move(r.x);
  e.nrmse = nrmse(e.image, image);
  e.initial_nrmse = std::sqrt(r.objective.front()) / norm(image);
  e.restart = r.restart;
  e.iterations = r.iterations;
  return e;
}

Projection2d latent_projection_2d(const Tensor& latents, const Tensor& reference,
                                  std::uint64_t seed, const std::optional<Tensor>& matrix) {
  if (latents.rank() != 2 || reference.rank() != 2 || latents.dim(1) != reference.dim(1)) {
    throw ShapeError("projection needs (N, d) and (M, d) sets, got " + shape_string(latents.shape()) +
                     " and " + shape_string(reference.shape()));
  }
  const std::size_t d = latents.dim(1);
  Projection2d p;
  if (matrix) {
    if (matrix->shape() != Shape{2, d}) throw ShapeError("projection matrix must be (2, d)");
    p.matrix = *matrix;
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
    p.matrix = Tensor({2, d});
    for (double& v : p.matrix.values()) v = normal(rng);
  }
  auto project = [&](const Tensor& pts) {
    Tensor out({pts.dim(0), 2});
    for (std::size_t i = 0; i < pts.dim(0); ++i) {
      for (std::size_t a = 0; a < 2; ++a) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += p.matrix[a * d + k] * pts[i * d + k];
        out[i * 2 + a] = s;
      }
    }
    return out;
  };
  p.latents = project(latents);
  p.reference = project(reference);
  return p;
}

Tensor interpolation_grid(const GeneratorModel& generator, const Tensor& z1, const Tensor& z2,
                          const Tensor& z3, const std::vector<double>& alphas) {
  const std::size_t d = generator.latent_dim();
  if (z1.size() != d || z2.size() != d || z3.size() != d) {
    throw ShapeError("interpolation latents must have " + std::to_string(d) + " entries");
  }
  const std::size_t n = alphas.size();
  const std::size_t pixels = generator.image_size();
  Shape s{n, n};
  s.insert(s.end(), generator.image_shape().begin(), generator.image_shape().end());
  Tensor grid(s);
  Tensor z({d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a1 = alphas[i], a2 = alphas[j], a0 = 1.0 - a1 - a2;
      for (std::size_t k = 0; k < d; ++k) z[k] = a0 * z1[k] + a1 * z2[k] + a2 * z3[k];
      const Tensor img = generator.generate(z);
      std::copy(img.data(), img.data() + pixels, grid.data() + (i * n + j) * pixels);
    }
  }
  return grid;
}

FarSamples sample_far_from_prior(const GeneratorModel& generator, double radius,
                                 std::size_t count, std::uint64_t seed) {
  if (!(radius > 0.0)) throw InvalidArgument("radius must be positive");
  const std::size_t d = generator.latent_dim();
  std::mt19937_64 rng(seed);
  FarSamples f;
  f.latents = standard_normal({count, d}, rng);
  for (std::size_t i = 0; i < count; ++i) {
    double n2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) n2 += f.latents[i * d + k] * f.latents[i * d + k];
    const double s = radius / std::sqrt(n2);
    for (std::size_t k = 0; k < d; ++k) f.latents[i * d + k] *= s;
  }
  f.images = count ? generator.generate_batch(f.latents) : Tensor();
  return f;
}

}  // namespace genreg
