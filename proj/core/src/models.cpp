#include "genreg/models.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "genreg/checkpoint.hpp"
#include "genreg/errors.hpp"

namespace genreg {

namespace {

using json = nlohmann::json;

constexpr double kSlope = 0.2;

std::vector<std::string> describe_all(const std::vector<Layer>& layers) {
  std::vector<std::string> out;
  for (const auto& l : layers) out.push_back(describe(l));
  return out;
}

std::vector<Layer> parse_all(const json& j) {
  std::vector<Layer> out;
  for (const auto& s : j) out.push_back(parse_layer(s.get<std::string>()));
  return out;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Autoencoder:
      return "ae";
    case ModelKind::Variational:
      return "vae";
    case ModelKind::Wasserstein:
      return "gan";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "ae") return ModelKind::Autoencoder;
  if (text == "vae") return ModelKind::Variational;
  if (text == "gan") return ModelKind::Wasserstein;
  throw InvalidArgument("unknown model kind '" + text + "' (expected ae, vae or gan)");
}

Architecture desk_architecture(std::size_t image_size, std::size_t latent_dim, ModelKind kind) {
  if (latent_dim == 0) throw InvalidArgument("latent dimension must be positive");
  std::size_t base = image_size;
  std::size_t ups = 0;
  while (base > 7 && base % 2 == 0) {
    base /= 2;
    ++ups;
  }
  if (base < 4 || base > 7 || ups == 0) {
    throw InvalidArgument("image size " + std::to_string(image_size) +
                          " does not halve down to a 4..7 base");
  }
  Architecture a;
  a.image_shape = {image_size, image_size};
  a.latent_dim = latent_dim;

  // 32 channels at the base resolution, 16 before the final single-channel stage.
  const std::size_t stem = 32;
  a.generator = {DenseLayer{latent_dim, stem * base * base}, LeakyReluLayer{kSlope},
                 ReshapeLayer{{stem, base, base}}};
  std::size_t cin = stem;
  for (std::size_t i = 0; i < ups; ++i) {
    const bool last = i + 1 == ups;
    const std::size_t cout = last ? 1 : (i + 2 == ups ? 16 : 32);
    a.generator.push_back(ConvTranspose2dLayer{cin, cout, 4, 2, 1});
    if (last) {
      a.generator.push_back(SigmoidLayer{});
    } else {
      a.generator.push_back(LeakyReluLayer{kSlope});
    }
    cin = cout;
  }

  auto downsampler = [&](std::size_t head) {
    std::vector<Layer> layers;
    std::size_t cin = 1;
    std::size_t cout = 16;
    for (std::size_t i = 0; i < ups; ++i) {
      layers.push_back(Conv2dLayer{cin, cout, 3, 2});
      layers.push_back(LeakyReluLayer{kSlope});
      cin = cout;
      cout = 32;
    }
    layers.push_back(ReshapeLayer{{cin * base * base}});
    layers.push_back(DenseLayer{cin * base * base, head});
    return layers;
  };
  if (kind == ModelKind::Autoencoder) a.encoder = downsampler(latent_dim);
  if (kind == ModelKind::Variational) a.encoder = downsampler(2 * latent_dim);
  if (kind == ModelKind::Wasserstein) a.discriminator = downsampler(1);
  return a;
}

// ---------------------------------------------------------------------------

GeneratorModel::GeneratorModel(Network network, std::size_t latent_dim, Shape image_shape)
    : network_(std::move(network)), latent_dim_(latent_dim), image_shape_(std::move(image_shape)) {
  const Shape out = network_.output_shape({latent_dim_});
  if (shape_size(out) != shape_size(image_shape_)) {
    throw ShapeError("generator output " + shape_string(out) + " does not match image shape " +
                     shape_string(image_shape_));
  }
}

void GeneratorModel::check_latent(const Tensor& z) const {
  if (z.size() != latent_dim_) {
    throw ShapeError("latent has " + std::to_string(z.size()) + " entries, generator expects " +
                     std::to_string(latent_dim_));
  }
}

Var GeneratorModel::forward(Var z, const ParamBinding& params, const ForwardContext& ctx) const {
  return network_.forward(z, params, ctx);
}

Tensor GeneratorModel::generate(const Tensor& z) const {
  check_latent(z);
  Tape tape;
  ParamBinding binding(tape, params_, false);
  Var out = forward(tape.constant(z.reshaped({1, latent_dim_})), binding);
  return out.value().reshaped(image_shape_);
}

Tensor GeneratorModel::generate_batch(const Tensor& z) const {
  if (z.rank() != 2 || z.dim(1) != latent_dim_) {
    throw ShapeError("generate_batch expects (N, " + std::to_string(latent_dim_) + "), got " +
                     shape_string(z.shape()));
  }
  Tape tape;
  ParamBinding binding(tape, params_, false);
  Var out = forward(tape.constant(z), binding);
  Shape s{z.dim(0)};
  s.insert(s.end(), image_shape_.begin(), image_shape_.end());
  return out.value().reshaped(s);
}

GeneratorModel::Linearization GeneratorModel::linearize(const Tensor& z) const {
  check_latent(z);
  Linearization lin;
  lin.tape_ = std::make_unique<Tape>();
  ParamBinding binding(*lin.tape_, params_, false);
  lin.z_ = lin.tape_->leaf(z.reshaped({1, latent_dim_}));
  lin.out_ = forward(lin.z_, binding);
  return lin;
}

Tensor GeneratorModel::Linearization::vjp(const Tensor& cotangent) {
  Var loss = inner_const(out_, cotangent);
  tape_->backward(loss);
  Tensor g = tape_->grad(z_);
  return std::move(g).reshaped({g.size()});
}

// ---------------------------------------------------------------------------

EncoderModel::EncoderModel(ModelKind kind, Network network, std::size_t latent_dim)
    : kind_(kind), network_(std::move(network)), latent_dim_(latent_dim) {
  if (kind == ModelKind::Wasserstein) throw InvalidArgument("GAN models have no encoder");
}

Var EncoderModel::mean(Var x, const ParamBinding& params, const ForwardContext& ctx) const {
  Var h = network_.forward(x, params, ctx);
  if (kind_ == ModelKind::Variational) return slice_cols(h, 0, latent_dim_);
  return h;
}

std::pair<Var, Var> EncoderModel::mean_and_log_variance(Var x, const ParamBinding& params,
                                                        const ForwardContext& ctx) const {
  if (kind_ != ModelKind::Variational) throw InvalidArgument("only VAE encoders have a variance head");
  Var h = network_.forward(x, params, ctx);
  return {slice_cols(h, 0, latent_dim_), slice_cols(h, latent_dim_, 2 * latent_dim_)};
}

Tensor EncoderModel::encode(const Tensor& image) const {
  if (image.rank() != 2) throw ShapeError("encode expects an (H, W) image");
  Tape tape;
  ParamBinding binding(tape, params_, false);
  Var x = tape.constant(image.reshaped({1, 1, image.dim(0), image.dim(1)}));
  Tensor z = mean(x, binding).value();
  return std::move(z).reshaped({latent_dim_});
}

// ---------------------------------------------------------------------------

DiscriminatorModel::DiscriminatorModel(Network network) : network_(std::move(network)) {}

Var DiscriminatorModel::score(Var x, const ParamBinding& params, const ForwardContext& ctx) const {
  return network_.forward(x, params, ctx);
}

// ---------------------------------------------------------------------------

GenerativeModel create_model(ModelKind kind, const Architecture& architecture, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GenerativeModel m;
  m.kind = kind;
  m.architecture = architecture;
  m.generator = GeneratorModel(Network("generator", architecture.generator),
                               architecture.latent_dim, architecture.image_shape);
  m.generator.network().init_params(m.generator.params(), rng);
  if (kind != ModelKind::Wasserstein) {
    if (architecture.encoder.empty()) throw InvalidArgument("architecture lacks an encoder");
    m.encoder = EncoderModel(kind, Network("encoder", architecture.encoder), architecture.latent_dim);
    const std::size_t expected =
        kind == ModelKind::Variational ? 2 * architecture.latent_dim : architecture.latent_dim;
    const Shape out =
        m.encoder->network().output_shape({1, architecture.image_shape[0], architecture.image_shape[1]});
    if (shape_size(out) != expected) {
      throw ShapeError("encoder emits " + shape_string(out) + ", expected " +
                       std::to_string(expected) + " values");
    }
    m.encoder->network().init_params(m.encoder->params(), rng);
  } else {
    if (architecture.discriminator.empty()) throw InvalidArgument("architecture lacks a critic");
    m.discriminator = DiscriminatorModel(Network("critic", architecture.discriminator));
    const Shape out = m.discriminator->network().output_shape(
        {1, architecture.image_shape[0], architecture.image_shape[1]});
    if (shape_size(out) != 1) throw ShapeError("critic must emit one score per image");
    m.discriminator->network().init_params(m.discriminator->params(), rng);
  }
  return m;
}

void save_model(const std::filesystem::path& stem, const GenerativeModel& model,
                const std::string& extra_json) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  NamedTensors all = to_named(model.generator.params());
  if (model.encoder) {
    auto e = to_named(model.encoder->params());
    all.insert(all.end(), e.begin(), e.end());
  }
  if (model.discriminator) {
    auto d = to_named(model.discriminator->params());
    all.insert(all.end(), d.begin(), d.end());
  }
  auto grt = stem;
  grt += ".grt";
  save_tensors(grt, all);

  const auto& a = model.architecture;
  json side{{"kind", to_string(model.kind)},
            {"latent_dim", a.latent_dim},
            {"image_shape", a.image_shape},
            {"generator", describe_all(a.generator)},
            {"encoder", describe_all(a.encoder)},
            {"discriminator", describe_all(a.discriminator)},
            {"extra", json::parse(extra_json.empty() ? "{}" : extra_json)}};
  auto js = stem;
  js += ".json";
  std::ofstream os(js, std::ios::trunc);
  if (!os) throw IoError(js.string() + ": cannot open for writing");
  os << side.dump(2) << '\n';
}

GenerativeModel load_model(const std::filesystem::path& stem) {
  auto js = stem;
  js += ".json";
  std::ifstream is(js);
  if (!is) throw IoError(js.string() + ": cannot open model sidecar");
  json side;
  try {
    side = json::parse(is);
  } catch (const json::exception& e) {
    throw IoError(js.string() + ": " + e.what());
  }
  Architecture a;
  a.latent_dim = side.at("latent_dim").get<std::size_t>();
  a.image_shape = side.at("image_shape").get<Shape>();
  a.generator = parse_all(side.at("generator"));
  a.encoder = parse_all(side.at("encoder"));
  a.discriminator = parse_all(side.at("discriminator"));
  const ModelKind kind = parse_model_kind(side.at("kind").get<std::string>());
  GenerativeModel m = create_model(kind, a, 0);
  auto grt = stem;
  grt += ".grt";
  const NamedTensors tensors = load_tensors(grt);
  assign_from(m.generator.params(), tensors);
  if (m.encoder) assign_from(m.encoder->params(), tensors);
  if (m.discriminator) assign_from(m.discriminator->params(), tensors);
  return m;
}

}  // namespace genreg
