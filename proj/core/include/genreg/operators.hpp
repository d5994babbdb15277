#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "genreg/tensor.hpp"

namespace genreg {

/// Linear map between tensor spaces with an exact adjoint.
///
/// Implementations are immutable after construction, so apply/adjoint may be
/// called concurrently. Inputs must carry exactly `input_shape()`.
class LinearOperator {
 public:
  LinearOperator(Shape input_shape, Shape output_shape)
      : input_shape_(std::move(input_shape)), output_shape_(std::move(output_shape)) {}
  virtual ~LinearOperator() = default;

  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return output_shape_; }
  std::size_t input_size() const { return shape_size(input_shape_); }
  std::size_t output_size() const { return shape_size(output_shape_); }

  Tensor apply(const Tensor& x) const;
  Tensor adjoint(const Tensor& y) const;

  virtual std::string name() const = 0;
  virtual bool is_identity() const { return false; }

 protected:
  virtual void apply_into(const double* x, double* out) const = 0;
  virtual void adjoint_into(const double* y, double* out) const = 0;

 private:
  Shape input_shape_;
  Shape output_shape_;
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

class IdentityOperator final : public LinearOperator {
 public:
  explicit IdentityOperator(Shape shape) : LinearOperator(shape, shape) {}
  std::string name() const override { return "identity"; }
  bool is_identity() const override { return true; }

 protected:
  void apply_into(const double* x, double* out) const override;
  void adjoint_into(const double* y, double* out) const override;
};

/// Normalised (size, size) Gaussian, exp(-r^2 / (2 width^2)). `size` must be odd.
Tensor gaussian_kernel(std::size_t size, double width);

/// 'same'-size 2-D convolution with zero padding. The adjoint is correlation
/// with the same kernel.
class ConvolutionOperator final : public LinearOperator {
 public:
  ConvolutionOperator(Shape image_shape, Tensor kernel);
  const Tensor& kernel() const { return kernel_; }
  std::string name() const override { return "convolution"; }

 protected:
  void apply_into(const double* x, double* out) const override;
  void adjoint_into(const double* y, double* out) const override;

 private:
  Tensor kernel_;
};

Tensor conv_apply(const Tensor& image, const Tensor& kernel);
Tensor conv_adjoint(const Tensor& image, const Tensor& kernel);

/// Dense matrix acting on the flattened input; output is (rows).
class MatrixOperator : public LinearOperator {
 public:
  MatrixOperator(Shape input_shape, Eigen::MatrixXd matrix);
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  std::string name() const override { return "matrix"; }

 protected:
  void apply_into(const double* x, double* out) const override;
  void adjoint_into(const double* y, double* out) const override;

 private:
  Eigen::MatrixXd matrix_;
};

/// m x n matrix with i.i.d. N(0, 1/m) entries drawn from `seed`, n being the
/// element count of `image_shape`. `identity` replaces the draw by I (m == n).
std::shared_ptr<MatrixOperator> gaussian_sensing(std::size_t m, Shape image_shape,
                                                 std::uint64_t seed, bool identity = false);

enum class Interpolation { Nearest, Linear };

struct RadonGeometry {
  std::size_t n_angles = 0;     // 0: image size
  std::size_t n_detectors = 0;  // 0: ceil(sqrt(2) * image size) + 1
  Interpolation interpolation = Interpolation::Linear;
};

/// Parallel-beam X-ray transform of an (N, N) image on the unit square.
///
/// Angles are k*pi/n_angles. Detector bins have the pixel width 1/N and are
/// centred on the rotation axis. Each ray is sampled every half pixel and
/// the image is interpolated at the samples; the resulting weights are kept
/// as a sparse matrix, so backprojection is its exact transpose.
/// Output is (n_angles, n_detectors).
class RadonOperator final : public LinearOperator {
 public:
  RadonOperator(std::size_t image_size, RadonGeometry geometry = {});
  const RadonGeometry& geometry() const { return geometry_; }
  std::size_t nonzeros() const { return static_cast<std::size_t>(matrix_.nonZeros()); }
  std::string name() const override { return "radon"; }

 protected:
  void apply_into(const double* x, double* out) const override;
  void adjoint_into(const double* y, double* out) const override;

 private:
  RadonGeometry geometry_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> transpose_;
};

Tensor radon_apply(const Tensor& image, const RadonGeometry& geometry = {});
Tensor radon_backproject(const Tensor& sinogram, std::size_t image_size,
                         const RadonGeometry& geometry = {});

/// Largest singular value by power iteration on A^T A.
double operator_norm(const LinearOperator& op, std::size_t iterations = 100,
                     std::uint64_t seed = 0);

struct NoiseModel {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// data + sigma * eps with eps i.i.d. standard normal drawn from noise.seed.
Tensor add_noise(const Tensor& data, const NoiseModel& noise);

/// sqrt(E ||eps||^2) = sigma * sqrt(m).
double morozov_target(const NoiseModel& noise, std::size_t m);

/// Forward model selected by name: "convolution", "sensing", "tomography"
/// or "identity".
struct OperatorConfig {
  std::string kind = "convolution";
  std::size_t kernel_size = 5;
  double kernel_width = 1.0;
  std::size_t measurements = 150;
  std::uint64_t seed = 0;
  RadonGeometry geometry;
};

OperatorPtr make_operator(const OperatorConfig& config, std::size_t image_size);

}  // namespace genreg
