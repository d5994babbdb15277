#include "genreg/conv_kernels.hpp"

namespace genreg::detail {

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t pad) {
  if (in + 2 * pad < kernel || stride == 0) return 0;
  return (in + 2 * pad - kernel) / stride + 1;
}

void im2col(const double* image, const ConvGeometry& g, double* cols, std::size_t ld) {
  const auto k = g.kernel;
  const long h = static_cast<long>(g.in_h);
  const long w = static_cast<long>(g.in_w);
  for (std::size_t c = 0; c < g.channels; ++c) {
    const double* plane = image + c * g.in_h * g.in_w;
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        double* row = cols + ((c * k + ki) * k + kj) * ld;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const long ih = static_cast<long>(oh * g.stride + ki) - static_cast<long>(g.pad);
          double* dst = row + oh * g.out_w;
          if (ih < 0 || ih >= h) {
            for (std::size_t ow = 0; ow < g.out_w; ++ow) dst[ow] = 0.0;
            continue;
          }
          const double* src = plane + ih * w;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const long iw = static_cast<long>(ow * g.stride + kj) - static_cast<long>(g.pad);
            dst[ow] = (iw >= 0 && iw < w) ? src[iw] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* cols, std::size_t ld, const ConvGeometry& g, double* image) {
  const auto k = g.kernel;
  const long h = static_cast<long>(g.in_h);
  const long w = static_cast<long>(g.in_w);
  for (std::size_t c = 0; c < g.channels; ++c) {
    double* plane = image + c * g.in_h * g.in_w;
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        const double* row = cols + ((c * k + ki) * k + kj) * ld;
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const long ih = static_cast<long>(oh * g.stride + ki) - static_cast<long>(g.pad);
          if (ih < 0 || ih >= h) continue;
          const double* src = row + oh * g.out_w;
          double* dst = plane + ih * w;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const long iw = static_cast<long>(ow * g.stride + kj) - static_cast<long>(g.pad);
            if (iw >= 0 && iw < w) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

}  // namespace genreg::detail
