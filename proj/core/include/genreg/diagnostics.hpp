#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "genreg/backtracking.hpp"
#include "genreg/models.hpp"

namespace genreg {

struct EncodeResult {
  Tensor z;
  Tensor image;          // G(z), (H, W)
  double nrmse = 0.0;    // ||G(z) - x|| / ||x||
  double initial_nrmse = 0.0;  // at the starting latent of the reported restart
  std::size_t restart = 0;
  std::size_t iterations = 0;
};

/// argmin_z ||G(z) - x||^2 by backtracking gradient descent. With an encoder
/// the first run starts at its (mean) code; every further restart k starts
/// from a standard-normal draw seeded with seed + k. The run with the lowest
/// final objective is returned.
EncodeResult encode_by_optimization(const Tensor& x, const GeneratorModel& generator,
                                    const EncoderModel* encoder, std::size_t restarts,
                                    std::uint64_t seed, const BacktrackConfig& config = {});

struct Projection2d {
  Tensor matrix;     // (2, d)
  Tensor latents;    // (N, 2)
  Tensor reference;  // (M, 2)
};

/// Projects both (N, d) and (M, d) point sets with one random (2, d) matrix
/// of N(0, 1/d) entries drawn from `seed`, or with `matrix` when given.
Projection2d latent_projection_2d(const Tensor& latents, const Tensor& reference,
                                  std::uint64_t seed, const std::optional<Tensor>& matrix = {});

/// Images G((1 - a1 - a2) z1 + a1 z2 + a2 z3) for a1, a2 over `alphas`,
/// shaped (n, n, H, W) with a1 indexing rows.
Tensor interpolation_grid(const GeneratorModel& generator, const Tensor& z1, const Tensor& z2,
                          const Tensor& z3,
                          const std::vector<double>& alphas = {0.0, 0.25, 0.5, 0.75, 1.0});

struct FarSamples {
  Tensor latents;  // (count, d), each of norm `radius`
  Tensor images;   // (count, H, W)
};

/// Latents radius * (uniform random unit direction) and their images.
FarSamples sample_far_from_prior(const GeneratorModel& generator, double radius,
                                 std::size_t count, std::uint64_t seed);

}  // namespace genreg
