#include <cmath>
#include <numbers>
#include <vector>

#include "genreg/errors.hpp"
#include "genreg/operators.hpp"

namespace genreg {

namespace {

RadonGeometry resolve(std::size_t n, RadonGeometry g) {
  if (n == 0) throw InvalidArgument("Radon transform needs a nonempty image");
  if (g.n_angles == 0) g.n_angles = n;
  if (g.n_detectors == 0) {
    g.n_detectors = static_cast<std::size_t>(std::ceil(std::numbers::sqrt2 * static_cast<double>(n))) + 1;
  }
  return g;
}

}  // namespace

RadonOperator::RadonOperator(std::size_t image_size, RadonGeometry geometry)
    : LinearOperator(Shape{image_size, image_size},
                     Shape{resolve(image_size, geometry).n_angles,
                           resolve(image_size, geometry).n_detectors}),
      geometry_(resolve(image_size, geometry)) {
  const std::size_t n = image_size;
  const double nd = static_cast<double>(n);
  const double pixel = 1.0 / nd;
  const double dt = 0.5 * pixel;
  const double reach = 0.5 * std::numbers::sqrt2 + pixel;
  const auto samples = static_cast<std::size_t>(std::ceil(2.0 * reach / dt));
  const std::size_t na = geometry_.n_angles, ndet = geometry_.n_detectors;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(na * ndet * samples * 2);
  auto add = [&](std::size_t row, std::ptrdiff_t i, std::ptrdiff_t j, double w) {
    if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(n) ||
        j >= static_cast<std::ptrdiff_t>(n) || w == 0.0) {
      return;
    }
    triplets.emplace_back(static_cast<int>(row), static_cast<int>(i * static_cast<std::ptrdiff_t>(n) + j), w);
  };

  for (std::size_t a = 0; a < na; ++a) {
    const double theta = std::numbers::pi * static_cast<double>(a) / static_cast<double>(na);
    const double c = std::cos(theta), s = std::sin(theta);
    for (std::size_t d = 0; d < ndet; ++d) {
      const std::size_t row = a * ndet + d;
      const double offset = (static_cast<double>(d) + 0.5 - 0.5 * static_cast<double>(ndet)) * pixel;
      for (std::size_t k = 0; k < samples; ++k) {
        const double t = (static_cast<double>(k) + 0.5 - 0.5 * static_cast<double>(samples)) * dt;
        const double px = offset * c - t * s;
        const double py = offset * s + t * c;
        // continuous pixel-centre coordinates: column fj, row fi
        const double fj = (px + 0.5) * nd - 0.5;
        const double fi = (0.5 - py) * nd - 0.5;
        if (fi < -1.0 || fj < -1.0 || fi > nd || fj > nd) continue;
        if (geometry_.interpolation == Interpolation::Nearest) {
          add(row, static_cast<std::ptrdiff_t>(std::lround(fi)),
              static_cast<std::ptrdiff_t>(std::lround(fj)), dt);
        } else {
          const double i0 = std::floor(fi), j0 = std::floor(fj);
          const double wi = fi - i0, wj = fj - j0;
          const auto ii = static_cast<std::ptrdiff_t>(i0), jj = static_cast<std::ptrdiff_t>(j0);
          add(row, ii, jj, dt * (1.0 - wi) * (1.0 - wj));
          add(row, ii, jj + 1, dt * (1.0 - wi) * wj);
          add(row, ii + 1, jj, dt * wi * (1.0 - wj));
          add(row, ii + 1, jj + 1, dt * wi * wj);
        }
      }
    }
  }
  matrix_.resize(static_cast<Eigen::Index>(na * ndet), static_cast<Eigen::Index>(n * n));
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  matrix_.makeCompressed();
  transpose_ = matrix_.transpose();
  transpose_.makeCompressed();
}

void RadonOperator::apply_into(const double* x, double* out) const {
  Eigen::Map<Eigen::VectorXd>(out, matrix_.rows()).noalias() =
      matrix_ * Eigen::Map<const Eigen::VectorXd>(x, matrix_.cols());
}

void RadonOperator::adjoint_into(const double* y, double* out) const {
  Eigen::Map<Eigen::VectorXd>(out, transpose_.rows()).noalias() =
      transpose_ * Eigen::Map<const Eigen::VectorXd>(y, transpose_.cols());
}

Tensor radon_apply(const Tensor& image, const RadonGeometry& geometry) {
  if (image.rank() != 2 || image.dim(0) != image.dim(1)) {
    throw ShapeError("Radon transform expects a square image, got " + shape_string(image.shape()));
  }
  return RadonOperator(image.dim(0), geometry).apply(image);
}

Tensor radon_backproject(const Tensor& sinogram, std::size_t image_size,
                         const RadonGeometry& geometry) {
  return RadonOperator(image_size, geometry).adjoint(sinogram);
}

}  // namespace genreg
