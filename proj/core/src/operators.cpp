#include "genreg/operators.hpp"

#include <cmath>
#include <random>

#include "genreg/errors.hpp"

namespace genreg {

Tensor LinearOperator::apply(const Tensor& x) const {
  if (x.shape() != input_shape_) {
    throw ShapeError(name() + " expects input " + shape_string(input_shape_) + ", got " +
                     shape_string(x.shape()));
  }
  Tensor out(output_shape_);
  apply_into(x.data(), out.data());
  return out;
}

Tensor LinearOperator::adjoint(const Tensor& y) const {
  if (y.shape() != output_shape_) {
    throw ShapeError(name() + " adjoint expects " + shape_string(output_shape_) + ", got " +
                     shape_string(y.shape()));
  }
  Tensor out(input_shape_);
  adjoint_into(y.data(), out.data());
  return out;
}

void IdentityOperator::apply_into(const double* x, double* out) const {
  std::copy(x, x + input_size(), out);
}

void IdentityOperator::adjoint_into(const double* y, double* out) const {
  std::copy(y, y + input_size(), out);
}

Tensor gaussian_kernel(std::size_t size, double width) {
  if (size % 2 == 0) throw InvalidArgument("Gaussian kernel size must be odd");
  if (!(width > 0.0)) throw InvalidArgument("Gaussian kernel width must be positive");
  Tensor k({size, size});
  const double c = static_cast<double>(size / 2);
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      const double di = static_cast<double>(i) - c;
      const double dj = static_cast<double>(j) - c;
      const double v = std::exp(-(di * di + dj * dj) / (2.0 * width * width));
      k[i * size + j] = v;
      total += v;
    }
  }
  for (double& v : k.values()) v /= total;
  return k;
}

namespace {

void check_kernel(const Shape& image_shape, const Tensor& kernel) {
  if (image_shape.size() != 2) throw ShapeError("convolution expects an (H, W) image");
  if (kernel.rank() != 2) throw ShapeError("convolution kernel must be 2-D");
  if (kernel.dim(0) % 2 == 0 || kernel.dim(1) % 2 == 0) {
    throw InvalidArgument("convolution kernel extents must be odd");
  }
  if (kernel.dim(0) > image_shape[0] || kernel.dim(1) > image_shape[1]) {
    throw InvalidArgument("kernel " + shape_string(kernel.shape()) + " is larger than image " +
                          shape_string(image_shape));
  }
}

// sign = +1: out[i,j] = sum k[a,b] x[i-a+c, j-b+c] (convolution)
// sign = -1: out[i,j] = sum k[a,b] x[i+a-c, j+b-c] (correlation)
void convolve(const double* x, double* out, std::size_t h, std::size_t w, const Tensor& k,
              int sign) {
  const auto kh = static_cast<std::ptrdiff_t>(k.dim(0));
  const auto kw = static_cast<std::ptrdiff_t>(k.dim(1));
  const std::ptrdiff_t ch = kh / 2, cw = kw / 2;
  const auto H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(w);
  for (std::ptrdiff_t i = 0; i < H; ++i) {
    for (std::ptrdiff_t j = 0; j < W; ++j) {
      double acc = 0.0;
      for (std::ptrdiff_t a = 0; a < kh; ++a) {
        const std::ptrdiff_t si = i + sign * (ch - a);
        if (si < 0 || si >= H) continue;
        for (std::ptrdiff_t b = 0; b < kw; ++b) {
          const std::ptrdiff_t sj = j + sign * (cw - b);
          if (sj < 0 || sj >= W) continue;
          acc += k[static_cast<std::size_t>(a * kw + b)] * x[si * W + sj];
        }
      }
      out[i * W + j] = acc;
    }
  }
}

}  // namespace

ConvolutionOperator::ConvolutionOperator(Shape image_shape, Tensor kernel)
    : LinearOperator(image_shape, image_shape), kernel_(std::move(kernel)) {
  check_kernel(input_shape(), kernel_);
}

void ConvolutionOperator::apply_into(const double* x, double* out) const {
  convolve(x, out, input_shape()[0], input_shape()[1], kernel_, +1);
}

void ConvolutionOperator::adjoint_into(const double* y, double* out) const {
  convolve(y, out, input_shape()[0], input_shape()[1], kernel_, -1);
}

Tensor conv_apply(const Tensor& image, const Tensor& kernel) {
  return ConvolutionOperator(image.shape(), kernel).apply(image);
}

Tensor conv_adjoint(const Tensor& image, const Tensor& kernel) {
  return ConvolutionOperator(image.shape(), kernel).adjoint(image);
}

MatrixOperator::MatrixOperator(Shape input_shape, Eigen::MatrixXd matrix)
    : LinearOperator(input_shape, Shape{static_cast<std::size_t>(matrix.rows())}),
      matrix_(std::move(matrix)) {
  if (static_cast<std::size_t>(matrix_.cols()) != shape_size(input_shape)) {
    throw ShapeError("matrix has " + std::to_string(matrix_.cols()) + " columns for input " +
                     shape_string(input_shape));
  }
}

void MatrixOperator::apply_into(const double* x, double* out) const {
  Eigen::Map<Eigen::VectorXd>(out, matrix_.rows()).noalias() =
      matrix_ * Eigen::Map<const Eigen::VectorXd>(x, matrix_.cols());
}

void MatrixOperator::adjoint_into(const double* y, double* out) const {
  Eigen::Map<Eigen::VectorXd>(out, matrix_.cols()).noalias() =
      matrix_.transpose() * Eigen::Map<const Eigen::VectorXd>(y, matrix_.rows());
}

std::shared_ptr<MatrixOperator> gaussian_sensing(std::size_t m, Shape image_shape,
                                                 std::uint64_t seed, bool identity) {
  const std::size_t n = shape_size(image_shape);
  if (m == 0 || n == 0) throw InvalidArgument("sensing matrix needs m >= 1 and n >= 1");
  const auto rows = static_cast<Eigen::Index>(m), cols = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd a(rows, cols);
  if (identity) {
    if (m != n) throw InvalidArgument("identity sensing override requires m == n");
    a.setIdentity();
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
    // Row-major draw order keeps the matrix independent of Eigen's storage.
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = normal(rng);
    }
  }
  return std::make_shared<MatrixOperator>(std::move(image_shape), std::move(a));
}

double operator_norm(const LinearOperator& op, std::size_t iterations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Tensor x(op.input_shape());
  for (double& v : x.values()) v = normal(rng);
  double n = norm(x);
  if (n == 0.0) return 0.0;
  x = (1.0 / n) * x;
  double estimate = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    Tensor next = op.adjoint(op.apply(x));
    const double nn = norm(next);
    if (nn == 0.0) return 0.0;
    const double previous = estimate;
    estimate = std::sqrt(nn);
    x = (1.0 / nn) * next;
    if (it > 5 && std::abs(estimate - previous) <= 1e-10 * estimate) break;
  }
  return estimate;
}

Tensor add_noise(const Tensor& data, const NoiseModel& noise) {
  if (noise.sigma < 0.0) throw InvalidArgument("noise sigma must be nonnegative");
  Tensor out = data;
  if (noise.sigma == 0.0) return out;
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> normal;
  for (double& v : out.values()) v += noise.sigma * normal(rng);
  return out;
}

double morozov_target(const NoiseModel& noise, std::size_t m) {
  if (m == 0) throw InvalidArgument("data dimension must be positive");
  if (noise.sigma < 0.0) throw InvalidArgument("noise sigma must be nonnegative");
  return noise.sigma * std::sqrt(static_cast<double>(m));
}

OperatorPtr make_operator(const OperatorConfig& config, std::size_t image_size) {
  const Shape shape{image_size, image_size};
  if (config.kind == "convolution") {
    return std::make_shared<ConvolutionOperator>(
        shape, gaussian_kernel(config.kernel_size, config.kernel_width));
  }
  if (config.kind == "sensing") return gaussian_sensing(config.measurements, shape, config.seed);
  if (config.kind == "tomography") {
    return std::make_shared<RadonOperator>(image_size, config.geometry);
  }
  if (config.kind == "identity") return std::make_shared<IdentityOperator>(shape);
  throw InvalidArgument("unknown operator kind '" + config.kind + "'");
}

}  // namespace genreg
