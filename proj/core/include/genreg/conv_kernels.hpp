#pragma once

#include <cstddef>

namespace genreg::detail {

/// Sliding-window geometry of a 2-D convolution over a single image.
///
/// `channels, in_h, in_w` describe the image being windowed, `out_h, out_w`
/// the grid of window positions. Window (oh, ow) reads pixel
/// (oh*stride - pad + ki, ow*stride - pad + kj); pixels outside are zero.
struct ConvGeometry {
  std::size_t channels = 0;
  std::size_t in_h = 0;
  std::size_t in_w = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t pad = 0;
  std::size_t out_h = 0;
  std::size_t out_w = 0;

  std::size_t patch_size() const { return channels * kernel * kernel; }
  std::size_t positions() const { return out_h * out_w; }
};

/// Output extent of a strided, padded window sweep. Returns 0 when the
/// kernel does not fit.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t pad);

/// Write the patch matrix of `image` into columns [0, positions) of a
/// row-major matrix with leading dimension `ld` starting at `cols`.
void im2col(const double* image, const ConvGeometry& g, double* cols, std::size_t ld);

/// Adjoint of im2col: accumulate patch columns back into `image`.
void col2im(const double* cols, std::size_t ld, const ConvGeometry& g, double* image);

}  // namespace genreg::detail
