#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "genreg/tensor.hpp"

namespace genreg {

enum class Split { Train, Test };
enum class Provenance { Shapes, ShapesPlus, Mnist };

std::string to_string(Split split);
std::string to_string(Provenance provenance);
Provenance parse_provenance(const std::string& text);

/// Synthetic images of one grey circle and one grey rectangle on a black
/// background. With `bright_spot` a small disc of intensity `spot_intensity`
/// is drawn inside the circle.
struct ShapesConfig {
  std::size_t image_size = 32;
  std::size_t count = 4000;
  std::uint64_t seed = 0;
  double intensity_low = 0.4;
  double intensity_high = 0.9;
  double min_radius = 3.0;
  double max_radius = 0.0;  // 0 selects image_size / 4
  std::size_t min_side = 4;
  std::size_t max_side = 0;  // 0 selects image_size / 2
  bool bright_spot = false;
  double spot_radius = 2.0;
  double spot_intensity = 1.0;
  std::size_t max_attempts = 1000;
};

/// Geometry of one generated Shapes image, in pixel units with the origin
/// at the top-left corner; pixel (i, j) has centre (j + 0.5, i + 0.5).
struct ShapeInfo {
  double circle_x = 0, circle_y = 0, circle_radius = 0, circle_intensity = 0;
  std::size_t rect_x = 0, rect_y = 0, rect_width = 0, rect_height = 0;
  double rect_intensity = 0;
  bool has_spot = false;
  double spot_x = 0, spot_y = 0, spot_radius = 0, spot_intensity = 0;
};

/// 0/1 masks of the individual shapes, shape (size, size).
Tensor circle_mask(const ShapeInfo& info, std::size_t size);
Tensor rectangle_mask(const ShapeInfo& info, std::size_t size);
/// Bright-spot pixels (spot disc intersected with the circle); zeros when absent.
Tensor spot_mask(const ShapeInfo& info, std::size_t size);

struct Dataset {
  std::vector<Tensor> images;  // each (H, W) with values in [0, 1]
  Split split = Split::Train;
  Provenance provenance = Provenance::Shapes;
  std::vector<ShapeInfo> shapes;  // per image for synthetic data, else empty

  std::size_t size() const { return images.size(); }
  std::size_t height() const { return images.empty() ? 0 : images.front().dim(0); }
  std::size_t width() const { return images.empty() ? 0 : images.front().dim(1); }
  /// Images [begin, begin + count) as a new dataset.
  Dataset slice(std::size_t begin, std::size_t count) const;
};

/// Deterministic in the config; image i draws from a generator seeded by
/// (seed, i). Throws InvalidArgument on bad sizes or when rejection
/// sampling cannot place non-overlapping shapes.
Dataset generate_shapes(const ShapesConfig& config, Split split = Split::Train);

/// Read an IDX3 unsigned-byte image file (magic 0x00000803), scaled to [0, 1].
/// At most `max_count` images are returned when nonzero.
Dataset load_idx_images(const std::filesystem::path& file, std::size_t max_count = 0);

/// Standard MNIST file names inside `dir` (train-images-idx3-ubyte or
/// t10k-images-idx3-ubyte).
Dataset load_mnist(const std::filesystem::path& dir, Split split, std::size_t max_count = 0);

/// Write an IDX3 image file; pixel values are rounded from [0, 1] to bytes.
void write_idx_images(const std::filesystem::path& file, const std::vector<Tensor>& images);

/// Stack images with the given indices into a (B, 1, H, W) batch.
Tensor stack_batch(const Dataset& data, const std::vector<std::size_t>& indices);

/// Shuffled index batches covering the dataset once; the last batch may be short.
std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t count, std::size_t batch_size,
                                                       std::mt19937_64& rng);

/// Dataset cache: `<dir>/<split>.grt` in the tensor checkpoint format plus
/// `<dir>/<split>.json` echoing counts and the generating configuration.
void save_dataset(const std::filesystem::path& dir, const Dataset& data,
                  const std::string& config_echo_json);
Dataset load_dataset(const std::filesystem::path& dir, Split split);

/// JSON text echoing a ShapesConfig.
std::string shapes_config_json(const ShapesConfig& config);

}  // namespace genreg
