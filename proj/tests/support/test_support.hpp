#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <genreg/genreg.hpp>

namespace genreg::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = u(rng);
  return t;
}

/// Central differences of a scalar function, one coordinate at a time.
inline Tensor numeric_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                               double h = 1e-6) {
  Tensor g(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = f(probe);
    probe[i] = saved - h;
    const double down = f(probe);
    probe[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const Tensor& a, const Tensor& b) {
  const double scale = std::max({norm(a), norm(b), 1e-12});
  return norm(a - b) / scale;
}

/// Per-sample input shape that a layer accepts.
inline Shape sample_shape_for(const Layer& layer) {
  if (auto* d = std::get_if<DenseLayer>(&layer)) return {d->in_features};
  if (auto* c = std::get_if<Conv2dLayer>(&layer)) return {c->in_channels, 6, 6};
  if (auto* t = std::get_if<ConvTranspose2dLayer>(&layer)) return {t->in_channels, 3, 3};
  if (auto* r = std::get_if<ReshapeLayer>(&layer)) return {shape_size(r->shape)};
  return {2, 3, 3};
}

/// Largest relative error between tape gradients and central differences of
/// <layer(x), c> with respect to the input and to every parameter. Inputs
/// are kept away from activation kinks. Dropout runs in training mode with
/// a generator reseeded for every evaluation so the mask is fixed.
inline double layer_gradient_error(const Layer& layer, std::uint64_t seed, std::size_t batch = 2) {
  std::mt19937_64 rng(seed);
  Network net("probe", {layer});
  ParamSet params;
  net.init_params(params, rng);
  for (const auto& name : params.names()) {
    params.set(name, random_tensor(params.get(name).shape(), rng, -0.5, 0.5));
  }
  Shape shape{batch};
  const Shape sample = sample_shape_for(layer);
  shape.insert(shape.end(), sample.begin(), sample.end());
  Tensor x = random_tensor(shape, rng);
  for (double& v : x.values()) {
    if (std::abs(v) < 0.05) v = std::copysign(0.05 + std::abs(v), v == 0.0 ? 1.0 : v);
  }
  Shape out_shape{batch};
  const Shape os = net.output_shape(sample);
  out_shape.insert(out_shape.end(), os.begin(), os.end());
  const Tensor c = random_tensor(out_shape, rng);
  const bool dropout = std::holds_alternative<DropoutLayer>(layer);
  const std::uint64_t mask_seed = seed * 7919 + 1;

  auto evaluate = [&](const Tensor& input, const ParamSet& ps, Tensor* grad_x, GradMap* grads) {
    Tape tape;
    std::mt19937_64 mask_rng(mask_seed);
    ForwardContext ctx{dropout ? Mode::Training : Mode::Inference, &mask_rng};
    ParamBinding binding(tape, ps, grads != nullptr);
    Var xv = grad_x ? tape.leaf(input) : tape.constant(input);
    Var loss = inner_const(net.forward(xv, binding, ctx), c);
    if (grad_x || grads) {
      tape.backward(loss);
      if (grad_x) *grad_x = tape.grad(xv);
      if (grads) *grads = binding.gradients();
    }
    return loss.value().item();
  };

  Tensor gx;
  GradMap grads;
  evaluate(x, params, &gx, &grads);
  double worst = relative_error(
      gx, numeric_gradient([&](const Tensor& t) { return evaluate(t, params, nullptr, nullptr); }, x));
  for (const auto& name : params.names()) {
    ParamSet probe = params;
    auto f = [&](const Tensor& t) {
      probe.set(name, t);
      return evaluate(x, probe, nullptr, nullptr);
    };
    worst = std::max(worst, relative_error(grads.at(name), numeric_gradient(f, params.get(name))));
  }
  return worst;
}

/// One instance of every layer kind.
inline std::vector<Layer> all_layer_kinds() {
  return {DenseLayer{5, 4},
          Conv2dLayer{2, 3, 3, 1},
          Conv2dLayer{2, 3, 3, 2},
          ConvTranspose2dLayer{2, 3, 4, 2, 1},
          LeakyReluLayer{0.2},
          ReluLayer{},
          SigmoidLayer{},
          TanhLayer{},
          ReshapeLayer{{2, 2, 2}},
          DropoutLayer{0.3}};
}

/// Small untrained generator with the standard stem, for fast solver tests.
inline GeneratorModel tiny_generator(std::size_t image_size, std::size_t latent_dim,
                                     std::uint64_t seed) {
  const Architecture arch = desk_architecture(image_size, latent_dim, ModelKind::Autoencoder);
  return create_model(ModelKind::Autoencoder, arch, seed).generator;
}

}  // namespace genreg::testing
