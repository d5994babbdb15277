#include "genreg/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "genreg/errors.hpp"

namespace genreg {

void write_pgm(const std::filesystem::path& path, const Tensor& image, double lo, double hi) {
  if (image.rank() != 2) throw ShapeError("PGM needs an (H, W) image, got " + shape_string(image.shape()));
  if (!(hi > lo)) throw InvalidArgument("PGM range must satisfy hi > lo");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.dim(1) << ' ' << image.dim(0) << "\n255\n";
  std::string bytes(image.size(), '\0');
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::clamp((image[i] - lo) / (hi - lo), 0.0, 1.0);
    bytes[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Tensor read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 255 || !in) throw IoError(path.string() + " is not an 8-bit P5 PGM");
  in.get();
  std::string bytes(w * h, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw IoError("truncated PGM " + path.string());
  Tensor t({h, w});
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    t[i] = static_cast<unsigned char>(bytes[i]) / 255.0;
  }
  return t;
}

Tensor mosaic(const std::vector<Tensor>& images, std::size_t columns, std::size_t pad,
              double background) {
  if (images.empty()) throw InvalidArgument("mosaic of no images");
  if (columns == 0) throw InvalidArgument("mosaic needs at least one column");
  const std::size_t h = images[0].dim(0), w = images[0].dim(1);
  for (const auto& im : images) {
    if (im.shape() != Shape{h, w}) throw ShapeError("mosaic images must share one (H, W) shape");
  }
  const std::size_t cols = std::min(columns, images.size());
  const std::size_t rows = (images.size() + cols - 1) / cols;
  const std::size_t H = rows * h + (rows - 1) * pad, W = cols * w + (cols - 1) * pad;
  Tensor out = Tensor::full({H, W}, background);
  for (std::size_t k = 0; k < images.size(); ++k) {
    const std::size_t r0 = (k / cols) * (h + pad), c0 = (k % cols) * (w + pad);
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) out[(r0 + i) * W + c0 + j] = images[k][i * w + j];
    }
  }
  return out;
}

std::vector<Tensor> unstack(const Tensor& batch) {
  if (batch.rank() < 3) throw ShapeError("unstack needs at least three axes");
  const std::size_t h = batch.dim(batch.rank() - 2), w = batch.dim(batch.rank() - 1);
  const std::size_t n = batch.size() / (h * w);
  std::vector<Tensor> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Tensor t({h, w});
    std::copy(batch.data() + k * h * w, batch.data() + (k + 1) * h * w, t.data());
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace genreg
