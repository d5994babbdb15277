#pragma once

#include <random>

#include "genreg/models.hpp"

namespace genreg {

/// KL(N(mu, diag(var)) || N(0, I)) = 1/2 sum(mu^2 + var - 1 - log var).
/// Throws InvalidArgument on a nonpositive variance.
double kl_normal(const Tensor& mu, const Tensor& variance);
Var kl_normal(Var mu, Var variance);
/// Same divergence parameterised by log-variance, as the VAE encoder emits it.
Var kl_normal_log_variance(Var mu, Var log_variance);

/// Mean over the batch of ||x - G(E(x))||^2. `batch` is (N, 1, H, W).
Var ae_loss(Var batch, const EncoderModel& encoder, const ParamBinding& encoder_params,
            const GeneratorModel& generator, const ParamBinding& generator_params,
            const ForwardContext& ctx = {});
double ae_loss(const Tensor& batch, const EncoderModel& encoder, const GeneratorModel& generator);

struct VaeTerms {
  Var total;
  Var reconstruction;  // mean of ||x - G(z)||^2 / (2 rho^2)
  Var kl;              // mean KL of the encoder distribution to the prior
};

struct VaeOptions {
  double rho = 0.1;
  /// When false the latent is the encoder mean (variance forced to zero) and
  /// the KL term is evaluated at the encoder's own variance.
  bool sample = true;
};

/// Single-sample reparameterised VAE loss: z = mu + exp(logvar / 2) * eps.
VaeTerms vae_loss(Var batch, const EncoderModel& encoder, const ParamBinding& encoder_params,
                  const GeneratorModel& generator, const ParamBinding& generator_params,
                  const VaeOptions& options, std::mt19937_64& rng, const ForwardContext& ctx = {});

struct WganTerms {
  Var critic;            // -(E D(real) - E D(fake)) + gp_weight * penalty
  Var generator;         // -E D(fake)
  Var gradient_penalty;  // E (||grad D(xhat)|| - 1)^2
};

/// WGAN losses with gradient penalty on random interpolates between the
/// real batch and one generated sample per real image.
WganTerms wgan_losses(Var real, const GeneratorModel& generator,
                      const ParamBinding& generator_params, const DiscriminatorModel& critic,
                      const ParamBinding& critic_params, double gp_weight, std::mt19937_64& rng,
                      const ForwardContext& ctx = {});

/// Standard-normal (rows, cols) matrix.
Tensor standard_normal(Shape shape, std::mt19937_64& rng);

}  // namespace genreg
