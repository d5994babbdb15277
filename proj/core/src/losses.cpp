#include "genreg/losses.hpp"

#include <cmath>

#include "genreg/errors.hpp"

namespace genreg {

namespace {

void require_batch(Var batch) {
  if (batch.shape().size() != 4 || batch.shape()[0] == 0) {
    throw ShapeError("loss expects a non-empty (N, 1, H, W) batch, got " +
                     shape_string(batch.shape()));
  }
}

void require_image_match(Var batch, const GeneratorModel& generator) {
  const auto& s = batch.shape();
  if (s[1] != 1 || s[2] * s[3] != generator.image_size()) {
    throw ShapeError("batch " + shape_string(s) + " does not match generator images " +
                     shape_string(generator.image_shape()));
  }
}

}  // namespace

Tensor standard_normal(Shape shape, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : t.values()) v = normal(rng);
  return t;
}

double kl_normal(const Tensor& mu, const Tensor& variance) {
  require_same_shape(mu, variance, "kl_normal");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double v = variance[i];
    if (!(v > 0.0)) throw InvalidArgument("kl_normal: variance must be positive");
    s += mu[i] * mu[i] + v - 1.0 - std::log(v);
  }
  return 0.5 * s;
}

Var kl_normal(Var mu, Var variance) {
  for (double v : variance.value().values()) {
    if (!(v > 0.0)) throw InvalidArgument("kl_normal: variance must be positive");
  }
  Var terms = sub(add(square(mu), variance), log(variance));
  return scale(add_scalar(sum(terms), -static_cast<double>(mu.value().size())), 0.5);
}

Var kl_normal_log_variance(Var mu, Var log_variance) {
  Var terms = sub(add(square(mu), exp(log_variance)), log_variance);
  return scale(add_scalar(sum(terms), -static_cast<double>(mu.value().size())), 0.5);
}

Var ae_loss(Var batch, const EncoderModel& encoder, const ParamBinding& encoder_params,
            const GeneratorModel& generator, const ParamBinding& generator_params,
            const ForwardContext& ctx) {
  require_batch(batch);
  require_image_match(batch, generator);
  Var z = encoder.mean(batch, encoder_params, ctx);
  Var recon = generator.forward(z, generator_params, ctx);
  Var err = sub(recon, batch);
  return scale(sum(square(err)), 1.0 / static_cast<double>(batch.shape()[0]));
}

double ae_loss(const Tensor& batch, const EncoderModel& encoder, const GeneratorModel& generator) {
  Tape tape;
  ParamBinding ep(tape, encoder.params(), false);
  ParamBinding gp(tape, generator.params(), false);
  return ae_loss(tape.constant(batch), encoder, ep, generator, gp).value().item();
}

VaeTerms vae_loss(Var batch, const EncoderModel& encoder, const ParamBinding& encoder_params,
                  const GeneratorModel& generator, const ParamBinding& generator_params,
                  const VaeOptions& options, std::mt19937_64& rng, const ForwardContext& ctx) {
  require_batch(batch);
  require_image_match(batch, generator);
  if (!(options.rho > 0.0)) throw InvalidArgument("vae_loss: rho must be positive");
  Tape& tape = *batch.tape();
  const double n = static_cast<double>(batch.shape()[0]);
  auto [mu, logvar] = encoder.mean_and_log_variance(batch, encoder_params, ctx);
  Var z = mu;
  if (options.sample) {
    Var eps = tape.constant(standard_normal(mu.shape(), rng));
    z = add(mu, mul(exp(scale(logvar, 0.5)), eps));
  }
  Var recon = generator.forward(z, generator_params, ctx);
  Var sq = sum(square(sub(recon, batch)));
  VaeTerms t;
  t.reconstruction = scale(sq, 1.0 / (2.0 * options.rho * options.rho * n));
  t.kl = scale(kl_normal_log_variance(mu, logvar), 1.0 / n);
  t.total = add(t.reconstruction, t.kl);
  return t;
}

WganTerms wgan_losses(Var real, const GeneratorModel& generator,
                      const ParamBinding& generator_params, const DiscriminatorModel& critic,
                      const ParamBinding& critic_params, double gp_weight, std::mt19937_64& rng,
                      const ForwardContext& ctx) {
  require_batch(real);
  require_image_match(real, generator);
  Tape& tape = *real.tape();
  const std::size_t n = real.shape()[0];
  const Shape s = real.shape();

  Var z = tape.constant(standard_normal({n, generator.latent_dim()}, rng));
  Var fake = reshape(generator.forward(z, generator_params, ctx), s);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t per = real.value().size() / n;
  Tensor alpha(s);
  Tensor beta(s);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = unit(rng);
    for (std::size_t k = 0; k < per; ++k) {
      alpha[i * per + k] = a;
      beta[i * per + k] = 1.0 - a;
    }
  }
  Var xhat = add(mask_mul(real, alpha), mask_mul(fake, beta));

  Var d_real = critic.score(real, critic_params, ctx);
  Var d_fake = critic.score(fake, critic_params, ctx);
  auto [d_hat, grad_hat] = critic.network().forward_with_input_gradient(xhat, critic_params, ctx);
  (void)d_hat;
  Var gp = mean(square(add_scalar(row_norm(grad_hat), -1.0)));

  WganTerms t;
  t.gradient_penalty = gp;
  t.generator = scale(mean(d_fake), -1.0);
  t.critic = add(sub(mean(d_fake), mean(d_real)), scale(gp, gp_weight));
  return t;
}

}  // namespace genreg
