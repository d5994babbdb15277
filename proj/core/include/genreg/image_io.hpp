#pragma once

#include <filesystem>
#include <vector>

#include "genreg/tensor.hpp"

namespace genreg {

/// 8-bit binary PGM (P5). Values are clamped to [lo, hi] and mapped to 0..255.
void write_pgm(const std::filesystem::path& path, const Tensor& image, double lo = 0.0,
               double hi = 1.0);
/// Reads a P5 file back as values in [0, 1].
Tensor read_pgm(const std::filesystem::path& path);

/// Tiles (H, W) images row by row into one image, `columns` per row, separated
/// by `pad` pixels of `background`.
Tensor mosaic(const std::vector<Tensor>& images, std::size_t columns, std::size_t pad = 1,
              double background = 0.0);
/// Splits the leading axis of an (N, H, W) or (R, C, H, W) tensor into images.
std::vector<Tensor> unstack(const Tensor& batch);

}  // namespace genreg
