#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "genreg/layers.hpp"
#include "genreg/params.hpp"

namespace genreg {

enum class ModelKind { Autoencoder, Variational, Wasserstein };

std::string to_string(ModelKind kind);
/// Accepts "ae", "vae" and "gan".
ModelKind parse_model_kind(const std::string& text);

/// Layer stacks for one dataset. All three model kinds share `generator`.
/// The encoder emits `latent_dim` values for an autoencoder and
/// `2 * latent_dim` (mean, log-variance) for a VAE.
struct Architecture {
  Shape image_shape;  // (H, W)
  std::size_t latent_dim = 0;
  std::vector<Layer> generator;
  std::vector<Layer> encoder;
  std::vector<Layer> discriminator;
};

/// Small convolutional stacks: a dense stem followed by stride-2 transposed
/// convolutions for the generator, mirrored stride-2 convolutions for the
/// encoder and critic. `image_size` must halve down to a base of 4..7.
Architecture desk_architecture(std::size_t image_size, std::size_t latent_dim, ModelKind kind);

/// G: latent (N, latent_dim) -> images (N, 1, H, W) with a final sigmoid.
class GeneratorModel {
 public:
  GeneratorModel() = default;
  GeneratorModel(Network network, std::size_t latent_dim, Shape image_shape);

  const Network& network() const { return network_; }
  std::size_t latent_dim() const { return latent_dim_; }
  const Shape& image_shape() const { return image_shape_; }
  std::size_t image_size() const { return shape_size(image_shape_); }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  Var forward(Var z, const ParamBinding& params, const ForwardContext& ctx = {}) const;

  /// G(z) for a single latent with latent_dim entries, returned as (H, W).
  Tensor generate(const Tensor& z) const;
  /// Rows of an (N, latent_dim) matrix mapped to (N, H, W).
  Tensor generate_batch(const Tensor& z) const;

  /// G evaluated at z, kept on a tape so that vector-Jacobian products
  /// J_G(z)^T c can be taken afterwards.
  class Linearization {
   public:
    const Tensor& image() const { return out_.value(); }
    /// J_G(z)^T c for a cotangent with the image's element count; result has
    /// z's shape.
    Tensor vjp(const Tensor& cotangent);

   private:
    friend class GeneratorModel;
    std::unique_ptr<Tape> tape_;
    Var z_;
    Var out_;
  };
  Linearization linearize(const Tensor& z) const;

 private:
  void check_latent(const Tensor& z) const;

  Network network_;
  ParamSet params_;
  std::size_t latent_dim_ = 0;
  Shape image_shape_;
};

/// E: images (N, 1, H, W) -> latent codes.
class EncoderModel {
 public:
  EncoderModel() = default;
  EncoderModel(ModelKind kind, Network network, std::size_t latent_dim);

  ModelKind kind() const { return kind_; }
  const Network& network() const { return network_; }
  std::size_t latent_dim() const { return latent_dim_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  /// Autoencoder code, or the VAE mean.
  Var mean(Var x, const ParamBinding& params, const ForwardContext& ctx = {}) const;
  /// VAE mean and log-variance heads.
  std::pair<Var, Var> mean_and_log_variance(Var x, const ParamBinding& params,
                                            const ForwardContext& ctx = {}) const;
  /// Deterministic code of a single (H, W) image as a (latent_dim) vector.
  Tensor encode(const Tensor& image) const;

 private:
  ModelKind kind_ = ModelKind::Autoencoder;
  Network network_;
  ParamSet params_;
  std::size_t latent_dim_ = 0;
};

/// D: images (N, 1, H, W) -> scores (N, 1).
class DiscriminatorModel {
 public:
  DiscriminatorModel() = default;
  explicit DiscriminatorModel(Network network);

  const Network& network() const { return network_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  Var score(Var x, const ParamBinding& params, const ForwardContext& ctx = {}) const;

 private:
  Network network_;
  ParamSet params_;
};

/// A generator with the sibling networks its training needs.
struct GenerativeModel {
  ModelKind kind = ModelKind::Autoencoder;
  Architecture architecture;
  GeneratorModel generator;
  std::optional<EncoderModel> encoder;
  std::optional<DiscriminatorModel> discriminator;
};

/// Freshly initialised networks, deterministic in `seed`.
GenerativeModel create_model(ModelKind kind, const Architecture& architecture, std::uint64_t seed);

/// `<stem>.grt` holds every parameter; `<stem>.json` records kind, latent
/// dimension, image shape, layer stacks and `extra_json` (config echo,
/// final losses).
void save_model(const std::filesystem::path& stem, const GenerativeModel& model,
                const std::string& extra_json = "{}");
GenerativeModel load_model(const std::filesystem::path& stem);

}  // namespace genreg
