#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "test_support.hpp"

using namespace genreg;
using namespace genreg::testing;

namespace {

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

// Max relative error over all inputs of the gradient of <build(inputs), c>.
double op_gradient_error(const Builder& build, const std::vector<Tensor>& inputs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor c;
  auto value = [&](const std::vector<Tensor>& xs, std::vector<Tensor>* grads) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& x : xs) vars.push_back(grads ? tape.leaf(x) : tape.constant(x));
    Var out = build(tape, vars);
    if (c.empty()) c = random_tensor(out.shape(), rng);
    Var loss = inner_const(out, c);
    if (grads) {
      tape.backward(loss);
      for (const auto& v : vars) grads->push_back(tape.grad(v));
    }
    return loss.value().item();
  };
  std::vector<Tensor> grads;
  value(inputs, &grads);
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto f = [&](const Tensor& t) {
      auto xs = inputs;
      xs[k] = t;
      return value(xs, nullptr);
    };
    worst = std::max(worst, relative_error(grads[k], numeric_gradient(f, inputs[k])));
  }
  return worst;
}

Tensor away_from_zero(Tensor t) {
  for (double& v : t.values()) v = std::copysign(0.1 + std::abs(v), v);
  return t;
}

// Direct loops for a strided, zero-padded cross-correlation.
Tensor naive_conv2d(const Tensor& x, const Tensor& w, std::size_t stride, std::size_t pad) {
  const std::size_t n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t co = w.dim(0), k = w.dim(2);
  const std::size_t oh = (h + 2 * pad - k) / stride + 1, ow = (wd + 2 * pad - k) / stride + 1;
  Tensor out({n, co, oh, ow});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < ci; ++c)
            for (std::size_t a = 0; a < k; ++a)
              for (std::size_t bb = 0; bb < k; ++bb) {
                const long r = static_cast<long>(i * stride + a) - static_cast<long>(pad);
                const long q = static_cast<long>(j * stride + bb) - static_cast<long>(pad);
                if (r < 0 || q < 0 || r >= static_cast<long>(h) || q >= static_cast<long>(wd)) continue;
                s += w[((o * ci + c) * k + a) * k + bb] * x[((b * ci + c) * h + r) * wd + q];
              }
          out[((b * co + o) * oh + i) * ow + j] = s;
        }
  return out;
}

}  // namespace

TEST(Tensor, ShapeHelpers) {
  EXPECT_EQ(shape_size({2, 3, 4}), 24u);
  EXPECT_EQ(shape_size({}), 1u);
  Tensor t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_THROW(t.reshaped({4}), ShapeError);
  EXPECT_THROW(t.item(), ShapeError);
  EXPECT_EQ(t.reshaped({3, 2}).shape(), (Shape{3, 2}));
}

TEST(Tensor, ElementwiseHelpers) {
  Tensor a = Tensor::vector({1, 2, 3});
  Tensor b = Tensor::vector({4, 5, 6});
  EXPECT_DOUBLE_EQ(dot(a, b), 32.0);
  EXPECT_DOUBLE_EQ(squared_norm(a), 14.0);
  EXPECT_EQ(a + b, Tensor::vector({5, 7, 9}));
  EXPECT_EQ(b - a, Tensor::vector({3, 3, 3}));
  axpy(2.0, a, b);
  EXPECT_EQ(b, Tensor::vector({6, 9, 12}));
  EXPECT_THROW(dot(a, Tensor::vector({1})), ShapeError);
}

TEST(Autodiff, ElementwiseOpsMatchFiniteDifferences) {
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor({3, 4}, rng), b = random_tensor({3, 4}, rng);
  const Tensor pos = random_tensor({3, 4}, rng, 0.5, 2.0);
  const std::vector<std::pair<const char*, Builder>> unary = {
      {"scale", [](Tape&, const std::vector<Var>& v) { return scale(v[0], -1.7); }},
      {"add_scalar", [](Tape&, const std::vector<Var>& v) { return add_scalar(v[0], 0.3); }},
      {"square", [](Tape&, const std::vector<Var>& v) { return square(v[0]); }},
      {"exp", [](Tape&, const std::vector<Var>& v) { return exp(v[0]); }},
      {"sigmoid", [](Tape&, const std::vector<Var>& v) { return sigmoid(v[0]); }},
      {"tanh", [](Tape&, const std::vector<Var>& v) { return tanh(v[0]); }},
      {"sum", [](Tape&, const std::vector<Var>& v) { return sum(v[0]); }},
      {"mean", [](Tape&, const std::vector<Var>& v) { return mean(v[0]); }},
      {"sum_rows", [](Tape&, const std::vector<Var>& v) { return sum_rows(v[0]); }},
      {"row_norm", [](Tape&, const std::vector<Var>& v) { return row_norm(v[0]); }},
      {"slice_cols", [](Tape&, const std::vector<Var>& v) { return slice_cols(v[0], 1, 3); }},
      {"reshape", [](Tape&, const std::vector<Var>& v) { return reshape(v[0], {2, 6}); }},
  };
  for (const auto& [name, op] : unary) {
    EXPECT_LE(op_gradient_error(op, {a}, 2), 1e-7) << name;
  }
  EXPECT_LE(op_gradient_error([](Tape&, const std::vector<Var>& v) { return log(v[0]); }, {pos}, 3), 1e-7);
  const std::vector<std::pair<const char*, Builder>> binary = {
      {"add", [](Tape&, const std::vector<Var>& v) { return add(v[0], v[1]); }},
      {"sub", [](Tape&, const std::vector<Var>& v) { return sub(v[0], v[1]); }},
      {"mul", [](Tape&, const std::vector<Var>& v) { return mul(v[0], v[1]); }},
  };
  for (const auto& [name, op] : binary) {
    EXPECT_LE(op_gradient_error(op, {a, b}, 4), 1e-7) << name;
  }
  const Tensor kinked = away_from_zero(a);
  EXPECT_LE(op_gradient_error([](Tape&, const std::vector<Var>& v) { return relu(v[0]); }, {kinked}, 5), 1e-7);
  EXPECT_LE(op_gradient_error([](Tape&, const std::vector<Var>& v) { return leaky_relu(v[0], 0.2); },
                              {kinked}, 6),
            1e-7);
  const Tensor mask = random_tensor({3, 4}, rng);
  EXPECT_LE(op_gradient_error([&](Tape&, const std::vector<Var>& v) { return mask_mul(v[0], mask); }, {a}, 7),
            1e-7);
}

TEST(Autodiff, LinearAlgebraOpsMatchFiniteDifferences) {
  std::mt19937_64 rng(11);
  const Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 5}, rng);
  EXPECT_LE(op_gradient_error([](Tape&, const std::vector<Var>& v) { return matmul(v[0], v[1]); }, {a, b}, 1),
            1e-7);
  const Tensor w = random_tensor({5, 4}, rng), bias = random_tensor({5}, rng);
  EXPECT_LE(op_gradient_error([](Tape&, const std::vector<Var>& v) { return linear(v[0], v[1], v[2]); },
                              {a, w, bias}, 2),
            1e-7);
  const Tensor x = random_tensor({2, 2, 5, 5}, rng), k = random_tensor({3, 2, 3, 3}, rng);
  const Tensor kb = random_tensor({3}, rng);
  EXPECT_LE(op_gradient_error(
                [](Tape&, const std::vector<Var>& v) { return conv2d(v[0], v[1], v[2], 2, 1); }, {x, k, kb}, 3),
            1e-7);
  const Tensor y = random_tensor({2, 3, 3, 3}, rng), kt = random_tensor({3, 2, 4, 4}, rng);
  const Tensor ktb = random_tensor({2}, rng);
  EXPECT_LE(op_gradient_error(
                [](Tape&, const std::vector<Var>& v) {
                  return conv_transpose2d(v[0], v[1], v[2], 2, 1, 6, 6);
                },
                {y, kt, ktb}, 4),
            1e-7);
}

TEST(Autodiff, Conv2dMatchesDirectLoops) {
  std::mt19937_64 rng(21);
  for (std::size_t stride : {1, 2}) {
    const Tensor x = random_tensor({2, 3, 7, 7}, rng), w = random_tensor({4, 3, 3, 3}, rng);
    Tape tape;
    Var out = conv2d(tape.constant(x), tape.constant(w), std::nullopt, stride, 1);
    const Tensor expected = naive_conv2d(x, w, stride, 1);
    ASSERT_EQ(out.shape(), expected.shape());
    EXPECT_LE(relative_error(out.value(), expected), 1e-13);
  }
}

TEST(Autodiff, ConvTransposeIsAdjointOfConv) {
  std::mt19937_64 rng(22);
  const Tensor x = random_tensor({2, 3, 8, 8}, rng), w = random_tensor({4, 3, 4, 4}, rng);
  Tape tape;
  Var cx = conv2d(tape.constant(x), tape.constant(w), std::nullopt, 2, 1);
  const Tensor y = random_tensor(cx.shape(), rng);
  // conv_transpose2d weights are (Cin, Cout, k, k) with Cin the channels it consumes.
  Var ty = conv_transpose2d(tape.constant(y), tape.constant(w), std::nullopt, 2, 1, 8, 8);
  EXPECT_NEAR(dot(cx.value(), y), dot(x, ty.value()), 1e-10 * std::abs(dot(x, ty.value())));
}

TEST(Autodiff, BackwardContract) {
  Tape tape;
  Var a = tape.leaf(Tensor::vector({1.0, 2.0}));
  Var unused = tape.leaf(Tensor::vector({3.0}));
  EXPECT_THROW(tape.backward(a), ShapeError);
  Var loss = sum(square(a));
  tape.backward(loss);
  EXPECT_EQ(tape.grad(a), Tensor::vector({2.0, 4.0}));
  EXPECT_EQ(tape.grad(unused), Tensor::vector({0.0}));
  Var bad = exp(scale(sum(a), 1000.0));
  EXPECT_THROW(tape.backward(bad), NumericalError);
}

TEST(Autodiff, ConstantsDoNotRecordBackward) {
  Tape tape;
  Var c = tape.constant(Tensor::vector({1.0, 2.0}));
  Var y = square(c);
  EXPECT_FALSE(y.requires_grad());
  Var w = tape.leaf(Tensor::vector({1.0, 1.0}));
  EXPECT_TRUE(mul(y, w).requires_grad());
}

TEST(Layers, EveryKindMatchesFiniteDifferences) {
  for (const Layer& layer : all_layer_kinds()) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      EXPECT_LE(layer_gradient_error(layer, seed), 1e-4) << describe(layer) << " seed " << seed;
    }
  }
}

TEST(Layers, DescribeAndParseRoundTrip) {
  for (const Layer& layer : all_layer_kinds()) {
    EXPECT_EQ(describe(parse_layer(describe(layer))), describe(layer));
  }
  EXPECT_EQ(describe(parse_layer("convT(32,16,4,2,1)")), "convT(32,16,4,2,1)");
  EXPECT_THROW(parse_layer("bogus(1)"), InvalidArgument);
  EXPECT_THROW(parse_layer("dense(1)"), InvalidArgument);
}

TEST(Layers, OutputShapeAndErrors) {
  Network net("g", {DenseLayer{10, 512}, ReshapeLayer{{32, 4, 4}}, ConvTranspose2dLayer{32, 16, 4, 2, 1}});
  EXPECT_EQ(net.output_shape({10}), (Shape{16, 8, 8}));
  EXPECT_THROW(net.output_shape({11}), ShapeError);
  EXPECT_EQ(net.layer_prefix(2), "g.2");
}

TEST(Layers, InputGradientMatchesFiniteDifferencesAndDifferentiatesAgain) {
  std::mt19937_64 rng(31);
  Network net("d", {Conv2dLayer{1, 2, 3, 2}, LeakyReluLayer{0.2}, ReshapeLayer{{18}}, DenseLayer{18, 1}});
  ParamSet params;
  net.init_params(params, rng);
  const Tensor x = random_tensor({2, 1, 6, 6}, rng, 0.0, 1.0);
  auto output_sum = [&](const Tensor& t) {
    Tape tape;
    ParamBinding b(tape, params, false);
    return sum(net.forward(tape.constant(t), b)).value().item();
  };
  Tape tape;
  ParamBinding binding(tape, params, true);
  auto [out, gx] = net.forward_with_input_gradient(tape.constant(x), binding);
  EXPECT_LE(relative_error(gx.value(), numeric_gradient(output_sum, x)), 1e-6);

  // Second order: gradient of ||d sum(D)/dx||^2 with respect to the dense weight.
  tape.backward(sum(square(gx)));
  const std::string name = "d.3.weight";
  const Tensor analytic = binding.gradients().at(name);
  auto penalty = [&](const Tensor& wv) {
    ParamSet probe = params;
    probe.set(name, wv);
    Tape t2;
    ParamBinding b2(t2, probe, false);
    auto [o2, g2] = net.forward_with_input_gradient(t2.constant(x), b2);
    return squared_norm(g2.value());
  };
  EXPECT_LE(relative_error(analytic, numeric_gradient(penalty, params.get(name))), 1e-6);
}

TEST(Params, AdamStepMatchesClosedForm) {
  ParamSet ps;
  ps.add("w", Tensor::vector({1.0, -2.0}));
  AdamConfig c;
  c.learning_rate = 0.1;
  const Tensor g = Tensor::vector({0.5, -4.0});
  adam_step(ps, {{"w", g}}, c);
  // First step: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps).
  for (std::size_t i = 0; i < 2; ++i) {
    const double expected = (i == 0 ? 1.0 : -2.0) - 0.1 * g[i] / (std::abs(g[i]) + c.epsilon);
    EXPECT_NEAR(ps.get("w")[i], expected, 1e-15);
  }
  adam_step(ps, {{"w", g}}, c);
  const double m = (0.9 * 0.1 * 0.5 + 0.1 * 0.5) / (1 - 0.81);
  const double v = (0.999 * 0.001 * 0.25 + 0.001 * 0.25) / (1 - 0.999 * 0.999);
  EXPECT_NEAR(ps.get("w")[0], 1.0 - 0.1 * 0.5 / (0.5 + c.epsilon) - 0.1 * m / (std::sqrt(v) + c.epsilon),
              1e-12);
  EXPECT_EQ(ps.step(), 2u);
  EXPECT_THROW(adam_step(ps, {}, c), InvalidArgument);
  EXPECT_THROW(ps.add("w", Tensor::vector({1.0})), InvalidArgument);
  EXPECT_THROW(ps.set("w", Tensor::vector({1.0})), ShapeError);
}

TEST(Checkpoint, RoundTripAndLayout) {
  NamedTensors in{{"a", Tensor({2, 3}, {1, 2, 3, 4, 5, 6})}, {"bias", Tensor::vector({-0.5})}};
  std::stringstream ss;
  write_tensors(ss, in);
  const std::string bytes = ss.str();
  ASSERT_GE(bytes.size(), 8u);
  EXPECT_EQ(bytes.substr(0, 4), "GRG1");
  // u32 name length 1, little-endian
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes.size(), 4u + (4 + 1 + 4 + 16 + 48) + (4 + 4 + 4 + 8 + 8));
  std::stringstream back(bytes);
  const NamedTensors out = read_tensors(back, "memory");
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].first, "a");
  EXPECT_EQ(out[0].second, in[0].second);
  EXPECT_EQ(out[1].second, in[1].second);
}

TEST(Checkpoint, RejectsCorruptInput) {
  std::stringstream bad("XXXX");
  EXPECT_THROW(read_tensors(bad, "bad"), IoError);
  std::stringstream ss;
  write_tensors(ss, {{"a", Tensor::vector({1, 2, 3})}});
  std::string bytes = ss.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_tensors(truncated, "truncated"), IoError);
}

TEST(Layers, DocumentedExamples) {
  ParamSet ps;
  ps.add("d.0.weight", Tensor({2, 2}, {1, 0, 0, 1}));
  ps.add("d.0.bias", Tensor::vector({0, 0}));
  const Tensor x({1, 2}, {0.25, -1.5});
  EXPECT_EQ(apply_layer(x, DenseLayer{2, 2}, ps, "d.0"), x);

  EXPECT_EQ(apply_layer(Tensor({1, 2}, {-1.0, 3.0}), LeakyReluLayer{0.2}, ParamSet{}, "l"),
            Tensor({1, 2}, {-0.2, 3.0}));

  ParamSet cs;
  cs.add("c.0.weight", Tensor::full({1, 1, 3, 3}, 1.0));
  cs.add("c.0.bias", Tensor::vector({0.0}));
  const Tensor out = apply_layer(Tensor::full({1, 1, 5, 5}, 1.0), Conv2dLayer{1, 1, 3, 1}, cs, "c.0");
  ASSERT_EQ(out.shape(), (Shape{1, 1, 5, 5}));
  EXPECT_DOUBLE_EQ(out[12], 9.0);
  EXPECT_DOUBLE_EQ(out[0], 4.0);
}

TEST(Autodiff, QuadraticAndConstantGradients) {
  Tape tape;
  Var z = tape.leaf(Tensor::vector({3.0, 4.0}));
  tape.backward(scale(sum(square(z)), 0.5));
  EXPECT_EQ(tape.grad(z), Tensor::vector({3.0, 4.0}));
  Tape t2;
  Var z2 = t2.leaf(Tensor::vector({3.0, 4.0}));
  Var c = t2.constant(Tensor::scalar(2.0));
  t2.backward(sum(c));
  EXPECT_EQ(t2.grad(z2), Tensor::vector({0.0, 0.0}));
}

TEST(Autodiff, BackwardIsLinearAndReplayable) {
  std::mt19937_64 rng(41);
  const Tensor x = random_tensor({2, 5}, rng), w = random_tensor({3, 5}, rng);
  auto grads = [&](double a, double b) {
    Tape tape;
    Var xv = tape.leaf(x);
    Var h = linear(xv, tape.constant(w), std::nullopt);
    Var f = sum(sigmoid(h));
    Var g = mean(square(h));
    tape.backward(add(scale(f, a), scale(g, b)));
    return tape.grad(xv);
  };
  const Tensor gf = grads(1.0, 0.0), gg = grads(0.0, 1.0), mix = grads(2.5, -0.7);
  Tensor expected = 2.5 * gf;
  axpy(-0.7, gg, expected);
  for (std::size_t i = 0; i < mix.size(); ++i) EXPECT_NEAR(mix[i], expected[i], 1e-12);
  EXPECT_EQ(grads(2.5, -0.7), mix);
}

TEST(Params, AdamDocumentedExamples) {
  ParamSet ps;
  ps.add("p", Tensor::vector({1.0}));
  adam_step(ps, {{"p", Tensor::vector({0.0})}}, AdamConfig{});
  EXPECT_EQ(ps.get("p")[0], 1.0);
  EXPECT_EQ(ps.step(), 1u);
  ParamSet qs;
  qs.add("p", Tensor::vector({1.0}));
  AdamConfig c;
  c.learning_rate = 0.1;
  adam_step(qs, {{"p", Tensor::vector({1.0})}}, c);
  EXPECT_NEAR(qs.get("p")[0], 0.9, 1e-7);
  ParamSet rs;
  rs.add("p", Tensor::vector({1.0}));
  adam_step(rs, {{"p", Tensor::vector({1.0})}}, c);
  EXPECT_EQ(rs, qs);
}
