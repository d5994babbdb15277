#include "genreg/layers.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "genreg/conv_kernels.hpp"
#include "genreg/errors.hpp"

namespace genreg {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<std::size_t>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(xs[i]);
  }
  return s;
}

[[noreturn]] void layer_error(const Layer& layer, const Shape& in, const std::string& why) {
  throw ShapeError("layer " + describe(layer) + ": input " + shape_string(in) + " " + why);
}

Tensor leaky_mask(const Tensor& pre, double slope) {
  Tensor m(pre.shape());
  for (std::size_t i = 0; i < pre.size(); ++i) m[i] = pre[i] > 0.0 ? 1.0 : slope;
  return m;
}

}  // namespace

std::string describe(const Layer& layer) {
  return std::visit(
      overloaded{
          [](const DenseLayer& l) {
            return "dense(" + std::to_string(l.in_features) + "," +
                   std::to_string(l.out_features) + ")";
          },
          [](const Conv2dLayer& l) {
            return "conv(" + join({l.in_channels, l.out_channels, l.kernel, l.stride}) + ")";
          },
          [](const ConvTranspose2dLayer& l) {
            return "convT(" + join({l.in_channels, l.out_channels, l.kernel, l.stride, l.padding}) +
                   ")";
          },
          [](const LeakyReluLayer& l) { return "lrelu(" + fmt_double(l.slope) + ")"; },
          [](const ReluLayer&) { return std::string("relu"); },
          [](const SigmoidLayer&) { return std::string("sigmoid"); },
          [](const TanhLayer&) { return std::string("tanh"); },
          [](const ReshapeLayer& l) { return "reshape(" + join(l.shape) + ")"; },
          [](const DropoutLayer& l) { return "dropout(" + fmt_double(l.rate) + ")"; },
      },
      layer);
}

Layer parse_layer(const std::string& text) {
  const auto open = text.find('(');
  const std::string kind = text.substr(0, open);
  std::vector<double> args;
  if (open != std::string::npos) {
    if (text.back() != ')') throw InvalidArgument("malformed layer '" + text + "'");
    std::stringstream ss(text.substr(open + 1, text.size() - open - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        args.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw InvalidArgument("malformed layer argument '" + item + "' in '" + text + "'");
      }
    }
  }
  auto need = [&](std::size_t n) {
    if (args.size() != n) {
      throw InvalidArgument("layer '" + text + "' expects " + std::to_string(n) + " arguments");
    }
  };
  auto u = [&](std::size_t i) { return static_cast<std::size_t>(args[i]); };
  if (kind == "dense") {
    need(2);
    return DenseLayer{u(0), u(1)};
  }
  if (kind == "conv") {
    need(4);
    return Conv2dLayer{u(0), u(1), u(2), u(3)};
  }
  if (kind == "convT") {
    need(5);
    return ConvTranspose2dLayer{u(0), u(1), u(2), u(3), u(4)};
  }
  if (kind == "lrelu") {
    need(1);
    return LeakyReluLayer{args[0]};
  }
  if (kind == "relu") return ReluLayer{};
  if (kind == "sigmoid") return SigmoidLayer{};
  if (kind == "tanh") return TanhLayer{};
  if (kind == "reshape") {
    Shape s;
    for (std::size_t i = 0; i < args.size(); ++i) s.push_back(u(i));
    return ReshapeLayer{s};
  }
  if (kind == "dropout") {
    need(1);
    return DropoutLayer{args[0]};
  }
  throw InvalidArgument("unknown layer kind '" + kind + "'");
}

bool has_parameters(const Layer& layer) {
  return std::holds_alternative<DenseLayer>(layer) || std::holds_alternative<Conv2dLayer>(layer) ||
         std::holds_alternative<ConvTranspose2dLayer>(layer);
}

Var apply_layer(Var input, const Layer& layer, const ParamBinding& params,
                const std::string& prefix, const ForwardContext& ctx) {
  const Shape in = input.shape();
  return std::visit(
      overloaded{
          [&](const DenseLayer& l) -> Var {
            if (in.size() != 2 || in[1] != l.in_features) layer_error(layer, in, "expects (N, in)");
            return linear(input, params[prefix + ".weight"], params[prefix + ".bias"]);
          },
          [&](const Conv2dLayer& l) -> Var {
            if (in.size() != 4 || in[1] != l.in_channels) {
              layer_error(layer, in, "expects (N, C, H, W)");
            }
            return conv2d(input, params[prefix + ".weight"], params[prefix + ".bias"], l.stride,
                          (l.kernel - 1) / 2);
          },
          [&](const ConvTranspose2dLayer& l) -> Var {
            if (in.size() != 4 || in[1] != l.in_channels) {
              layer_error(layer, in, "expects (N, C, H, W)");
            }
            const auto oh = conv_transpose_extent(in[2], l.kernel, l.stride, l.padding);
            const auto ow = conv_transpose_extent(in[3], l.kernel, l.stride, l.padding);
            return conv_transpose2d(input, params[prefix + ".weight"], params[prefix + ".bias"],
                                    l.stride, l.padding, oh, ow);
          },
          [&](const LeakyReluLayer& l) { return leaky_relu(input, l.slope); },
          [&](const ReluLayer&) { return relu(input); },
          [&](const SigmoidLayer&) { return sigmoid(input); },
          [&](const TanhLayer&) { return tanh(input); },
          [&](const ReshapeLayer& l) -> Var {
            if (in.empty() || shape_size(l.shape) * in[0] != input.value().size()) {
              layer_error(layer, in, "has the wrong element count");
            }
            Shape s{in[0]};
            s.insert(s.end(), l.shape.begin(), l.shape.end());
            return reshape(input, s);
          },
          [&](const DropoutLayer& l) -> Var {
            if (ctx.mode == Mode::Inference || l.rate <= 0.0) return input;
            if (!ctx.rng) throw InvalidArgument("dropout in training mode needs an RNG");
            if (l.rate >= 1.0) throw InvalidArgument("dropout rate must be below 1");
            std::bernoulli_distribution keep(1.0 - l.rate);
            Tensor mask(in);
            for (auto& m : mask.values()) m = keep(*ctx.rng) ? 1.0 / (1.0 - l.rate) : 0.0;
            return mask_mul(input, mask);
          },
      },
      layer);
}

Tensor apply_layer(const Tensor& input, const Layer& layer, const ParamSet& params,
                   const std::string& prefix) {
  Tape tape;
  ParamBinding binding(tape, params, false);
  return apply_layer(tape.constant(input), layer, binding, prefix).value();
}

Network::Network(std::string name, std::vector<Layer> layers)
    : name_(std::move(name)), layers_(std::move(layers)) {}

std::string Network::layer_prefix(std::size_t index) const {
  return name_ + "." + std::to_string(index);
}

Shape Network::output_shape(const Shape& sample_shape) const {
  Shape s = sample_shape;
  for (const auto& layer : layers_) {
    Shape batched{1};
    batched.insert(batched.end(), s.begin(), s.end());
    std::visit(overloaded{
                   [&](const DenseLayer& l) {
                     if (s.size() != 1 || s[0] != l.in_features) {
                       layer_error(layer, batched, "expects (N, in)");
                     }
                     s = {l.out_features};
                   },
                   [&](const Conv2dLayer& l) {
                     if (s.size() != 3 || s[0] != l.in_channels) {
                       layer_error(layer, batched, "expects (N, C, H, W)");
                     }
                     const auto pad = (l.kernel - 1) / 2;
                     s = {l.out_channels, detail::conv_output_extent(s[1], l.kernel, l.stride, pad),
                          detail::conv_output_extent(s[2], l.kernel, l.stride, pad)};
                   },
                   [&](const ConvTranspose2dLayer& l) {
                     if (s.size() != 3 || s[0] != l.in_channels) {
                       layer_error(layer, batched, "expects (N, C, H, W)");
                     }
                     s = {l.out_channels, conv_transpose_extent(s[1], l.kernel, l.stride, l.padding),
                          conv_transpose_extent(s[2], l.kernel, l.stride, l.padding)};
                   },
                   [&](const ReshapeLayer& l) {
                     if (shape_size(l.shape) != shape_size(s)) {
                       layer_error(layer, batched, "has the wrong element count");
                     }
                     s = l.shape;
                   },
                   [](const auto&) {},
               },
               layer);
  }
  return s;
}

void Network::init_params(ParamSet& params, std::mt19937_64& rng) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    if (!has_parameters(layer)) continue;
    Shape wshape;
    std::size_t bias_len = 0;
    double fans = 1.0;  // fan_in + fan_out
    if (auto* l = std::get_if<DenseLayer>(&layer)) {
      wshape = {l->out_features, l->in_features};
      bias_len = l->out_features;
      fans = static_cast<double>(l->in_features + l->out_features);
    } else if (auto* l = std::get_if<Conv2dLayer>(&layer)) {
      wshape = {l->out_channels, l->in_channels, l->kernel, l->kernel};
      bias_len = l->out_channels;
      fans = static_cast<double>((l->in_channels + l->out_channels) * l->kernel * l->kernel);
    } else if (auto* l = std::get_if<ConvTranspose2dLayer>(&layer)) {
      wshape = {l->in_channels, l->out_channels, l->kernel, l->kernel};
      bias_len = l->out_channels;
      fans = static_cast<double>((l->in_channels + l->out_channels) * l->kernel * l->kernel);
    }
    // Glorot uniform
    const double bound = std::sqrt(6.0 / fans);
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor w(wshape);
    for (auto& v : w.values()) v = dist(rng);
    params.add(layer_prefix(i) + ".weight", std::move(w));
    params.add(layer_prefix(i) + ".bias", Tensor({bias_len}));
  }
}

Var Network::forward(Var x, const ParamBinding& params, const ForwardContext& ctx) const {
  Var h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = apply_layer(h, layers_[i], params, layer_prefix(i), ctx);
  }
  return h;
}

std::pair<Var, Var> Network::forward_with_input_gradient(Var x, const ParamBinding& params,
                                                         const ForwardContext& ctx) const {
  std::vector<Var> inputs;
  std::vector<Var> outputs;
  std::vector<Tensor> dropout_masks(layers_.size());
  Var h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    inputs.push_back(h);
    const auto* drop = std::get_if<DropoutLayer>(&layers_[i]);
    if (drop && ctx.mode == Mode::Training && drop->rate > 0.0) {
      if (!ctx.rng) throw InvalidArgument("dropout in training mode needs an RNG");
      std::bernoulli_distribution keep(1.0 - drop->rate);
      Tensor mask(h.shape());
      for (auto& m : mask.values()) m = keep(*ctx.rng) ? 1.0 / (1.0 - drop->rate) : 0.0;
      h = mask_mul(h, mask);
      dropout_masks[i] = std::move(mask);
    } else {
      h = apply_layer(h, layers_[i], params, layer_prefix(i), ctx);
    }
    outputs.push_back(h);
  }
  Tape& tape = *x.tape();
  Var g = tape.constant(Tensor::full(h.shape(), 1.0));
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const Layer& layer = layers_[i];
    const Var in = inputs[i];
    const Var out = outputs[i];
    const std::string prefix = layer_prefix(i);
    g = std::visit(
        overloaded{
            [&](const DenseLayer&) { return matmul(g, params[prefix + ".weight"]); },
            [&](const Conv2dLayer& l) {
              return conv_transpose2d(g, params[prefix + ".weight"], std::nullopt, l.stride,
                                      (l.kernel - 1) / 2, in.shape()[2], in.shape()[3]);
            },
            [&](const ConvTranspose2dLayer& l) {
              return conv2d(g, params[prefix + ".weight"], std::nullopt, l.stride, l.padding);
            },
            [&](const LeakyReluLayer& l) { return mask_mul(g, leaky_mask(in.value(), l.slope)); },
            [&](const ReluLayer&) { return mask_mul(g, leaky_mask(in.value(), 0.0)); },
            [&](const SigmoidLayer&) {
              return mul(g, mul(out, add_scalar(scale(out, -1.0), 1.0)));
            },
            [&](const TanhLayer&) { return mul(g, add_scalar(scale(square(out), -1.0), 1.0)); },
            [&](const ReshapeLayer&) { return reshape(g, in.shape()); },
            [&](const DropoutLayer&) {
              if (dropout_masks[i].empty()) return g;
              return mask_mul(g, dropout_masks[i]);
            },
        },
        layer);
  }
  return {h, g};
}

}  // namespace genreg
