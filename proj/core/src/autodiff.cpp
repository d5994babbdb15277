#include "genreg/autodiff.hpp"

#include <Eigen/Core>
#include <cmath>
#include <memory>

#include "genreg/conv_kernels.hpp"
#include "genreg/errors.hpp"

namespace genreg {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

Tape& same_tape(Var a, Var b) {
  if (!a.valid() || a.tape() != b.tape()) {
    throw InvalidArgument("operands belong to different tapes");
  }
  return *a.tape();
}

void require_equal_size(Var a, Var b, const char* op) {
  if (a.value().size() != b.value().size()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

// Elementwise unary op with derivative expressed through input and output.
template <typename Fwd, typename Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  Tape& tape = *a.tape();
  const Tensor& in = a.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return tape.record(std::move(out), {a}, [a, deriv](Tape& t, const Tensor& g) {
    const Tensor& x = t.value(a);
    auto ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv(x[i]);
  });
}

std::size_t batch_of(const Shape& s) { return s.empty() ? 1 : s[0]; }

}  // namespace

const Tensor& Var::value() const {
  if (!tape_) throw InvalidArgument("value() on an empty Var");
  return tape_->value(*this);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(*this); }

void Tape::check(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) {
    throw InvalidArgument("Var does not belong to this tape");
  }
}

Var Tape::constant(Tensor value) {
  nodes_.push_back({std::move(value), nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back({std::move(value), nullptr, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::input(Tensor value) {
  const bool rg = value.requires_grad();
  nodes_.push_back({std::move(value), nullptr, rg});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  bool rg = false;
  for (Var v : inputs) {
    check(v);
    rg = rg || nodes_[v.id_].requires_grad;
  }
  nodes_.push_back({std::move(value), rg ? std::move(fn) : nullptr, rg});
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(Var v) const {
  check(v);
  return nodes_[v.id_].value;
}

bool Tape::requires_grad(Var v) const {
  check(v);
  return nodes_[v.id_].requires_grad;
}

std::span<double> Tape::grad_buffer(Var v) {
  check(v);
  Tensor& g = grads_.at(v.id_);
  if (g.empty() && !nodes_[v.id_].value.empty()) g = Tensor(nodes_[v.id_].value.shape());
  return g.values();
}

void Tape::backward(Var loss) {
  check(loss);
  const Tensor& lv = nodes_[loss.id_].value;
  if (lv.size() != 1) {
    throw ShapeError("backward requires a scalar loss, got shape " + shape_string(lv.shape()));
  }
  if (!std::isfinite(lv[0])) throw NumericalError("backward from a non-finite loss");
  grads_.assign(nodes_.size(), Tensor());
  grads_[loss.id_] = Tensor::full(lv.shape(), 1.0);
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.backward || grads_[id].empty()) continue;
    node.backward(*this, grads_[id]);
  }
}

Tensor Tape::grad(Var v) const {
  check(v);
  if (v.id_ < grads_.size() && !grads_[v.id_].empty()) return grads_[v.id_];
  return Tensor(nodes_[v.id_].value.shape());
}

// ---------------------------------------------------------------------------
// Elementwise

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_equal_size(a, b, "add");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    for (Var v : {a, b}) {
      if (!v.requires_grad()) continue;
      auto gv = t.grad_buffer(v);
      for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_equal_size(a, b, "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (a.requires_grad()) {
      auto ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_equal_size(a, b, "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (a.requires_grad()) {
      auto ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (b.requires_grad()) {
      auto gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double) { return 1.0; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var log(Var a) {
  for (double v : a.value().values()) {
    if (!(v > 0.0)) throw NumericalError("log of a non-positive value");
  }
  return unary(a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var mask_mul(Var a, const Tensor& mask) {
  if (mask.size() != a.value().size()) {
    throw ShapeError("mask_mul: mask " + shape_string(mask.shape()) + " vs input " +
                     shape_string(a.shape()));
  }
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return a.tape()->record(std::move(out), {a}, [a, mask](Tape& t, const Tensor& g) {
    auto ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
  });
}

// ---------------------------------------------------------------------------
// Reductions

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return a.tape()->record(Tensor::scalar(s), {a}, [a](Tape& t, const Tensor& g) {
    auto ga = t.grad_buffer(a);
    for (auto& v : ga) v += g[0];
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(a), 1.0 / n);
}

Var sum_rows(Var a) {
  const Tensor& in = a.value();
  const std::size_t n = batch_of(in.shape());
  const std::size_t f = in.size() / n;
  Tensor out({n, 1});
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < f; ++j) s += in[r * f + j];
    out[r] = s;
  }
  return a.tape()->record(std::move(out), {a}, [a, n, f](Tape& t, const Tensor& g) {
    auto ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < f; ++j) ga[r * f + j] += g[r];
    }
  });
}

Var row_norm(Var a) {
  const Tensor& in = a.value();
  const std::size_t n = batch_of(in.shape());
  const std::size_t f = in.size() / n;
  Tensor out({n, 1});
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < f; ++j) s += in[r * f + j] * in[r * f + j];
    out[r] = std::sqrt(s);
  }
  return a.tape()->record(std::move(out), {a}, [a, n, f](Tape& t, const Tensor& g) {
    const Tensor& x = t.value(a);
    auto ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < f; ++j) s += x[r * f + j] * x[r * f + j];
      const double nr = std::sqrt(s);
      if (nr == 0.0) continue;
      for (std::size_t j = 0; j < f; ++j) ga[r * f + j] += g[r] * x[r * f + j] / nr;
    }
  });
}

Var inner_const(Var a, const Tensor& c) {
  if (c.size() != a.value().size()) {
    throw ShapeError("inner_const: " + shape_string(a.shape()) + " vs " + shape_string(c.shape()));
  }
  const Tensor& av = a.value();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * c[i];
  return a.tape()->record(Tensor::scalar(s), {a}, [a, c](Tape& t, const Tensor& g) {
    auto ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < c.size(); ++i) ga[i] += g[0] * c[i];
  });
}

// ---------------------------------------------------------------------------
// Activations

Var leaky_relu(Var a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x) { return x > 0.0 ? 1.0 : slope; });
}

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

namespace {
double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Var sigmoid(Var a) {
  return unary(a, stable_sigmoid, [](double x) {
    const double s = stable_sigmoid(x);
    return s * (1.0 - s);
  });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double x) {
        const double t = std::tanh(x);
        return 1.0 - t * t;
      });
}

// ---------------------------------------------------------------------------
// Structural

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.tape()->record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    auto ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Tensor& in = a.value();
  if (in.rank() != 2 || begin >= end || end > in.dim(1)) {
    throw ShapeError("slice_cols [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") of " + shape_string(in.shape()));
  }
  const std::size_t n = in.dim(0), f = in.dim(1), w = end - begin;
  Tensor out({n, w});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < w; ++j) out[r * w + j] = in[r * f + begin + j];
  }
  return a.tape()->record(std::move(out), {a}, [a, n, f, w, begin](Tape& t, const Tensor& g) {
    auto ga = t.grad_buffer(a);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < w; ++j) ga[r * f + begin + j] += g[r * w + j];
    }
  });
}

// ---------------------------------------------------------------------------
// Linear maps

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw ShapeError("matmul: " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  }
  const auto n = av.dim(0), k = av.dim(1), m = bv.dim(1);
  Tensor out({n, m});
  MapMat(out.data(), n, m).noalias() = ConstMapMat(av.data(), n, k) * ConstMapMat(bv.data(), k, m);
  return tape.record(std::move(out), {a, b}, [a, b, n, k, m](Tape& t, const Tensor& g) {
    ConstMapMat G(g.data(), n, m);
    if (a.requires_grad()) {
      MapMat(t.grad_buffer(a).data(), n, k).noalias() +=
          G * ConstMapMat(t.value(b).data(), k, m).transpose();
    }
    if (b.requires_grad()) {
      MapMat(t.grad_buffer(b).data(), k, m).noalias() +=
          ConstMapMat(t.value(a).data(), n, k).transpose() * G;
    }
  });
}

Var linear(Var x, Var weight, std::optional<Var> bias) {
  Tape& tape = same_tape(x, weight);
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  if (xv.rank() != 2 || wv.rank() != 2 || xv.dim(1) != wv.dim(1)) {
    throw ShapeError("dense: input " + shape_string(xv.shape()) + " incompatible with weight " +
                     shape_string(wv.shape()));
  }
  const auto n = xv.dim(0), in = xv.dim(1), outf = wv.dim(0);
  if (bias && (bias->value().size() != outf)) {
    throw ShapeError("dense: bias " + shape_string(bias->shape()) + " for " +
                     std::to_string(outf) + " outputs");
  }
  Tensor out({n, outf});
  MapMat Y(out.data(), n, outf);
  Y.noalias() = ConstMapMat(xv.data(), n, in) * ConstMapMat(wv.data(), outf, in).transpose();
  if (bias) {
    Eigen::Map<const Eigen::RowVectorXd> b(bias->value().data(), outf);
    Y.rowwise() += b;
  }
  Var b = bias.value_or(Var());
  auto fn = [x, weight, b, n, in, outf](Tape& t, const Tensor& g) {
    ConstMapMat G(g.data(), n, outf);
    if (x.requires_grad()) {
      MapMat(t.grad_buffer(x).data(), n, in).noalias() +=
          G * ConstMapMat(t.value(weight).data(), outf, in);
    }
    if (weight.requires_grad()) {
      MapMat(t.grad_buffer(weight).data(), outf, in).noalias() +=
          G.transpose() * ConstMapMat(t.value(x).data(), n, in);
    }
    if (b.valid() && b.requires_grad()) {
      Eigen::Map<Eigen::RowVectorXd>(t.grad_buffer(b).data(), outf) += G.colwise().sum();
    }
  };
  if (bias) return tape.record(std::move(out), {x, weight, *bias}, fn);
  return tape.record(std::move(out), {x, weight}, fn);
}

namespace {

// (N, C, P) sample-major layout <-> (C, N*P) channel-major matrix.
void to_channel_major(const double* src, std::size_t n, std::size_t c, std::size_t p,
                      double* dst) {
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* from = src + (s * c + ch) * p;
      double* to = dst + ch * n * p + s * p;
      std::copy(from, from + p, to);
    }
  }
}

void add_from_channel_major(const double* src, std::size_t n, std::size_t c, std::size_t p,
                            double* dst) {
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* from = src + ch * n * p + s * p;
      double* to = dst + (s * c + ch) * p;
      for (std::size_t i = 0; i < p; ++i) to[i] += from[i];
    }
  }
}

void check_bias(const std::optional<Var>& bias, std::size_t channels, const char* op) {
  if (bias && bias->value().size() != channels) {
    throw ShapeError(std::string(op) + ": bias " + shape_string(bias->shape()) + " for " +
                     std::to_string(channels) + " channels");
  }
}

}  // namespace

Var conv2d(Var x, Var weight, std::optional<Var> bias, std::size_t stride, std::size_t pad) {
  Tape& tape = same_tape(x, weight);
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  if (xv.rank() != 4 || wv.rank() != 4 || xv.dim(1) != wv.dim(1) || wv.dim(2) != wv.dim(3)) {
    throw ShapeError("conv2d: input " + shape_string(xv.shape()) + " incompatible with weight " +
                     shape_string(wv.shape()));
  }
  const std::size_t n = xv.dim(0), cin = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const std::size_t cout = wv.dim(0), k = wv.dim(2);
  check_bias(bias, cout, "conv2d");
  detail::ConvGeometry geo{cin, h, w, k, stride, pad, detail::conv_output_extent(h, k, stride, pad),
                           detail::conv_output_extent(w, k, stride, pad)};
  if (geo.out_h == 0 || geo.out_w == 0) {
    throw ShapeError("conv2d: kernel " + std::to_string(k) + " does not fit input " +
                     shape_string(xv.shape()));
  }
  const std::size_t p = geo.positions(), rows = geo.patch_size(), ld = n * p;
  auto cols = std::make_shared<Buffer>(rows * ld);
  for (std::size_t s = 0; s < n; ++s) {
    detail::im2col(xv.data() + s * cin * h * w, geo, cols->data() + s * p, ld);
  }
  Buffer outm(cout * ld);
  MapMat O(outm.data(), cout, ld);
  O.noalias() = ConstMapMat(wv.data(), cout, rows) * ConstMapMat(cols->data(), rows, ld);
  if (bias) {
    Eigen::Map<const Eigen::VectorXd> b(bias->value().data(), cout);
    O.colwise() += b;
  }
  Tensor out({n, cout, geo.out_h, geo.out_w});
  add_from_channel_major(outm.data(), n, cout, p, out.data());

  Var b = bias.value_or(Var());
  auto fn = [x, weight, b, geo, n, cout, cols](Tape& t, const Tensor& g) {
    const std::size_t p = geo.positions(), rows = geo.patch_size(), ld = n * p;
    Buffer gm(cout * ld);
    to_channel_major(g.data(), n, cout, p, gm.data());
    ConstMapMat G(gm.data(), cout, ld);
    if (weight.requires_grad()) {
      MapMat(t.grad_buffer(weight).data(), cout, rows).noalias() +=
          G * ConstMapMat(cols->data(), rows, ld).transpose();
    }
    if (b.valid() && b.requires_grad()) {
      Eigen::Map<Eigen::VectorXd>(t.grad_buffer(b).data(), cout) += G.rowwise().sum();
    }
    if (x.requires_grad()) {
      Buffer dcols(rows * ld);
      MapMat(dcols.data(), rows, ld).noalias() =
          ConstMapMat(t.value(weight).data(), cout, rows).transpose() * G;
      auto gx = t.grad_buffer(x);
      const std::size_t img = geo.channels * geo.in_h * geo.in_w;
      for (std::size_t s = 0; s < n; ++s) {
        detail::col2im(dcols.data() + s * p, ld, geo, gx.data() + s * img);
      }
    }
  };
  if (bias) return tape.record(std::move(out), {x, weight, *bias}, fn);
  return tape.record(std::move(out), {x, weight}, fn);
}

std::size_t conv_transpose_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                                  std::size_t pad) {
  const long e = static_cast<long>((in - 1) * stride + kernel) - 2 * static_cast<long>(pad);
  return e > 0 ? static_cast<std::size_t>(e) : 0;
}

Var conv_transpose2d(Var x, Var weight, std::optional<Var> bias, std::size_t stride,
                     std::size_t pad, std::size_t out_h, std::size_t out_w) {
  Tape& tape = same_tape(x, weight);
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  if (xv.rank() != 4 || wv.rank() != 4 || xv.dim(1) != wv.dim(0) || wv.dim(2) != wv.dim(3)) {
    throw ShapeError("conv_transpose2d: input " + shape_string(xv.shape()) +
                     " incompatible with weight " + shape_string(wv.shape()));
  }
  const std::size_t n = xv.dim(0), cin = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const std::size_t cout = wv.dim(1), k = wv.dim(2);
  check_bias(bias, cout, "conv_transpose2d");
  // Window geometry over the output image; window positions form the input grid.
  detail::ConvGeometry geo{cout, out_h, out_w, k, stride, pad, h, w};
  if (detail::conv_output_extent(out_h, k, stride, pad) != h ||
      detail::conv_output_extent(out_w, k, stride, pad) != w) {
    throw ShapeError("conv_transpose2d: output extent " + std::to_string(out_h) + "x" +
                     std::to_string(out_w) + " inconsistent with input " +
                     shape_string(xv.shape()));
  }
  const std::size_t p = h * w, rows = geo.patch_size(), ld = n * p;
  auto xm = std::make_shared<Buffer>(cin * ld);
  to_channel_major(xv.data(), n, cin, p, xm->data());
  Buffer cols(rows * ld);
  MapMat(cols.data(), rows, ld).noalias() =
      ConstMapMat(wv.data(), cin, rows).transpose() * ConstMapMat(xm->data(), cin, ld);
  Tensor out({n, cout, out_h, out_w});
  const std::size_t img = cout * out_h * out_w;
  for (std::size_t s = 0; s < n; ++s) {
    detail::col2im(cols.data() + s * p, ld, geo, out.data() + s * img);
  }
  if (bias) {
    const Tensor& bv = bias->value();
    const std::size_t plane = out_h * out_w;
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t c = 0; c < cout; ++c) {
        double* dst = out.data() + (s * cout + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) dst[i] += bv[c];
      }
    }
  }

  Var b = bias.value_or(Var());
  auto fn = [x, weight, b, geo, n, cin, xm](Tape& t, const Tensor& g) {
    const std::size_t p = geo.positions(), rows = geo.patch_size(), ld = n * p;
    const std::size_t img = geo.channels * geo.in_h * geo.in_w;
    Buffer dcols(rows * ld);
    for (std::size_t s = 0; s < n; ++s) {
      detail::im2col(g.data() + s * img, geo, dcols.data() + s * p, ld);
    }
    ConstMapMat D(dcols.data(), rows, ld);
    if (weight.requires_grad()) {
      MapMat(t.grad_buffer(weight).data(), cin, rows).noalias() +=
          ConstMapMat(xm->data(), cin, ld) * D.transpose();
    }
    if (b.valid() && b.requires_grad()) {
      auto gb = t.grad_buffer(b);
      const std::size_t plane = geo.in_h * geo.in_w;
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t c = 0; c < geo.channels; ++c) {
          const double* src = g.data() + (s * geo.channels + c) * plane;
          double acc = 0.0;
          for (std::size_t i = 0; i < plane; ++i) acc += src[i];
          gb[c] += acc;
        }
      }
    }
    if (x.requires_grad()) {
      Buffer dx(cin * ld);
      MapMat(dx.data(), cin, ld).noalias() = ConstMapMat(t.value(weight).data(), cin, rows) * D;
      add_from_channel_major(dx.data(), n, cin, p, t.grad_buffer(x).data());
    }
  };
  if (bias) return tape.record(std::move(out), {x, weight, *bias}, fn);
  return tape.record(std::move(out), {x, weight}, fn);
}

}  // namespace genreg
