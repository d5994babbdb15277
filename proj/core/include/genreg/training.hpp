#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "genreg/datasets.hpp"
#include "genreg/models.hpp"
#include "genreg/params.hpp"

namespace genreg {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::uint64_t seed = 0;
  double rho = 0.1;             // VAE decoder noise level
  double gp_weight = 10.0;      // WGAN gradient penalty weight
  std::size_t critic_steps = 5; // critic updates per generator update
};

void validate(const TrainConfig& config);
/// JSON object echoing every field.
std::string to_json(const TrainConfig& config);

/// Per-epoch means over batches. Unused fields stay zero for a model kind.
struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;            // AE loss, VAE total or critic loss
  double reconstruction = 0.0;  // VAE
  double kl = 0.0;              // VAE
  double generator = 0.0;       // GAN
  double gradient_penalty = 0.0;// GAN
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Train in place. Batches are reshuffled each epoch from a generator seeded
/// by config.seed, so results are a pure function of (model, data, config).
/// A GAN epoch is one pass of real batches through the critic, with one
/// generator update after every `critic_steps` critic updates.
/// Throws NumericalError naming epoch and batch on a non-finite loss.
std::vector<EpochRecord> train(GenerativeModel& model, const Dataset& data,
                               const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Sets the generator's final bias to logit(mean pixel of `data`) so the
/// untrained output starts at the data mean instead of 0.5.
void init_output_bias(GeneratorModel& generator, const Dataset& data);

/// create_model + init_output_bias + train.
GenerativeModel train_new(ModelKind kind, const Dataset& data, std::size_t latent_dim,
                          const TrainConfig& config, std::vector<EpochRecord>* history = nullptr);

}  // namespace genreg
