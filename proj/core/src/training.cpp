#include "genreg/training.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "genreg/errors.hpp"
#include "genreg/losses.hpp"

namespace genreg {

namespace {

void check_finite(double v, std::size_t epoch, std::size_t batch, const char* what) {
  if (!std::isfinite(v)) {
    throw NumericalError(std::string("non-finite ") + what + " at epoch " + std::to_string(epoch) +
                         ", batch " + std::to_string(batch));
  }
}

AdamConfig adam_of(const TrainConfig& c) {
  return AdamConfig{c.learning_rate, c.beta1, c.beta2, 1e-8};
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.batch_size == 0) throw InvalidArgument("batch_size must be positive");
  if (!(c.learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (!(c.rho > 0.0)) throw InvalidArgument("rho must be positive");
  if (!(c.gp_weight > 0.0)) throw InvalidArgument("gp_weight must be positive");
  if (c.critic_steps == 0) throw InvalidArgument("critic_steps must be positive");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0)) {
    throw InvalidArgument("Adam betas must lie in [0, 1)");
  }
}

std::string to_json(const TrainConfig& c) {
  nlohmann::json j{{"epochs", c.epochs},       {"batch_size", c.batch_size},
                   {"learning_rate", c.learning_rate}, {"beta1", c.beta1},
                   {"beta2", c.beta2},         {"seed", c.seed},
                   {"rho", c.rho},             {"gp_weight", c.gp_weight},
                   {"critic_steps", c.critic_steps}};
  return j.dump();
}

std::vector<EpochRecord> train(GenerativeModel& model, const Dataset& data,
                               const TrainConfig& config, const EpochCallback& on_epoch) {
  validate(config);
  if (data.size() == 0) throw InvalidArgument("cannot train on an empty dataset");
  std::mt19937_64 shuffle_rng(config.seed);
  std::mt19937_64 noise_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  const AdamConfig adam = adam_of(config);
  const ForwardContext train_ctx{Mode::Training, &noise_rng};
  std::vector<EpochRecord> history;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    const auto batches = shuffled_batches(data.size(), config.batch_size, shuffle_rng);
    std::size_t gen_updates = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Tensor x = stack_batch(data, batches[b]);
      switch (model.kind) {
        case ModelKind::Autoencoder: {
          Tape tape;
          ParamBinding ep(tape, model.encoder->params(), true);
          ParamBinding gp(tape, model.generator.params(), true);
          Var loss = ae_loss(tape.constant(x), *model.encoder, ep, model.generator, gp, train_ctx);
          check_finite(loss.value().item(), epoch, b, "autoencoder loss");
          tape.backward(loss);
          adam_step(model.encoder->params(), ep.gradients(), adam);
          adam_step(model.generator.params(), gp.gradients(), adam);
          rec.loss += loss.value().item();
          break;
        }
        case ModelKind::Variational: {
          Tape tape;
          ParamBinding ep(tape, model.encoder->params(), true);
          ParamBinding gp(tape, model.generator.params(), true);
          VaeTerms t = vae_loss(tape.constant(x), *model.encoder, ep, model.generator, gp,
                                VaeOptions{config.rho, true}, noise_rng, train_ctx);
          check_finite(t.total.value().item(), epoch, b, "VAE loss");
          tape.backward(t.total);
          adam_step(model.encoder->params(), ep.gradients(), adam);
          adam_step(model.generator.params(), gp.gradients(), adam);
          rec.loss += t.total.value().item();
          rec.reconstruction += t.reconstruction.value().item();
          rec.kl += t.kl.value().item();
          break;
        }
        case ModelKind::Wasserstein: {
          {
            Tape tape;
            ParamBinding gp(tape, model.generator.params(), false);
            ParamBinding dp(tape, model.discriminator->params(), true);
            WganTerms t = wgan_losses(tape.constant(x), model.generator, gp, *model.discriminator,
                                      dp, config.gp_weight, noise_rng, train_ctx);
            check_finite(t.critic.value().item(), epoch, b, "critic loss");
            tape.backward(t.critic);
            adam_step(model.discriminator->params(), dp.gradients(), adam);
            rec.loss += t.critic.value().item();
            rec.gradient_penalty += t.gradient_penalty.value().item();
          }
          if ((b + 1) % config.critic_steps == 0) {
            Tape tape;
            ParamBinding gp(tape, model.generator.params(), true);
            ParamBinding dp(tape, model.discriminator->params(), false);
            const std::size_t n = batches[b].size();
            Var z = tape.constant(standard_normal({n, model.generator.latent_dim()}, noise_rng));
            Var fake = model.generator.forward(z, gp, train_ctx);
            Var loss = scale(mean(model.discriminator->score(fake, dp, train_ctx)), -1.0);
            check_finite(loss.value().item(), epoch, b, "generator loss");
            tape.backward(loss);
            adam_step(model.generator.params(), gp.gradients(), adam);
            rec.generator += loss.value().item();
            ++gen_updates;
          }
          break;
        }
      }
    }
    const double nb = static_cast<double>(batches.size());
    rec.loss /= nb;
    rec.reconstruction /= nb;
    rec.kl /= nb;
    rec.gradient_penalty /= nb;
    if (gen_updates) rec.generator /= static_cast<double>(gen_updates);
    history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return history;
}

void init_output_bias(GeneratorModel& generator, const Dataset& data) {
  if (data.size() == 0) throw InvalidArgument("cannot initialise from an empty dataset");
  const auto& layers = generator.network().layers();
  std::size_t last = layers.size();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (has_parameters(layers[i])) last = i;
  }
  if (last == layers.size()) return;
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& im : data.images) {
    for (double v : im.values()) total += v;
    count += im.size();
  }
  const double m = std::clamp(total / static_cast<double>(count), 1e-3, 1.0 - 1e-3);
  const std::string name = generator.network().layer_prefix(last) + ".bias";
  generator.params().set(name, Tensor::full(generator.params().get(name).shape(), std::log(m / (1.0 - m))));
}

GenerativeModel train_new(ModelKind kind, const Dataset& data, std::size_t latent_dim,
                          const TrainConfig& config, std::vector<EpochRecord>* history) {
  if (data.size() == 0) throw InvalidArgument("cannot train on an empty dataset");
  if (data.height() != data.width()) throw InvalidArgument("training expects square images");
  GenerativeModel model = create_model(kind, desk_architecture(data.height(), latent_dim, kind),
                                       config.seed);
  init_output_bias(model.generator, data);
  auto h = train(model, data, config);
  if (history) *history = std::move(h);
  return model;
}

}  // namespace genreg
