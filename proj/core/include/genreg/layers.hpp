#pragma once

#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "genreg/autodiff.hpp"
#include "genreg/params.hpp"

namespace genreg {

/// y = x W^T + b, input (N, in_features).
struct DenseLayer {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
};

/// Zero-padded convolution with padding (kernel - 1) / 2, so stride 1
/// with an odd kernel preserves the spatial size.
struct Conv2dLayer {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 3;
  std::size_t stride = 1;
};

/// Output extent (in - 1) * stride - 2 * padding + kernel.
struct ConvTranspose2dLayer {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 4;
  std::size_t stride = 2;
  std::size_t padding = 1;
};

struct LeakyReluLayer {
  double slope = 0.2;
};
struct ReluLayer {};
struct SigmoidLayer {};
struct TanhLayer {};

/// Per-sample reshape; the batch axis is kept.
struct ReshapeLayer {
  Shape shape;
};

/// Inverted dropout, active in training mode only.
struct DropoutLayer {
  double rate = 0.0;
};

using Layer = std::variant<DenseLayer, Conv2dLayer, ConvTranspose2dLayer, LeakyReluLayer, ReluLayer,
                           SigmoidLayer, TanhLayer, ReshapeLayer, DropoutLayer>;

/// Compact text form, e.g. "dense(10,512)" or "convT(32,16,4,2,1)".
std::string describe(const Layer& layer);
Layer parse_layer(const std::string& text);
bool has_parameters(const Layer& layer);

enum class Mode { Inference, Training };

struct ForwardContext {
  Mode mode = Mode::Inference;
  std::mt19937_64* rng = nullptr;  // required for dropout in training mode
};

/// Apply one layer; `prefix` locates its parameters ("<prefix>.weight",
/// "<prefix>.bias"). Throws ShapeError naming the layer on mismatch.
Var apply_layer(Var input, const Layer& layer, const ParamBinding& params,
                const std::string& prefix, const ForwardContext& ctx = {});

/// Tape-free convenience for single evaluations in inference mode.
Tensor apply_layer(const Tensor& input, const Layer& layer, const ParamSet& params,
                   const std::string& prefix);

/// Sequential stack of layers whose parameters live under "<name>.<index>".
class Network {
 public:
  Network() = default;
  Network(std::string name, std::vector<Layer> layers);

  const std::string& name() const { return name_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::string layer_prefix(std::size_t index) const;

  /// Per-sample output shape for a per-sample input shape; validates the stack.
  Shape output_shape(const Shape& sample_shape) const;

  /// Add freshly initialised parameters (Glorot-uniform weights, zero biases).
  void init_params(ParamSet& params, std::mt19937_64& rng) const;

  Var forward(Var x, const ParamBinding& params, const ForwardContext& ctx = {}) const;

  /// Forward pass together with a differentiable graph for the gradient of
  /// sum(output) with respect to `x`. The second Var has x's shape and can be
  /// differentiated again, e.g. for gradient penalties.
  std::pair<Var, Var> forward_with_input_gradient(Var x, const ParamBinding& params,
                                                  const ForwardContext& ctx = {}) const;

 private:
  std::string name_;
  std::vector<Layer> layers_;
};

}  // namespace genreg
