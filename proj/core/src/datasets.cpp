#include "genreg/datasets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <numeric>

#include "genreg/checkpoint.hpp"
#include "genreg/errors.hpp"

namespace genreg {

namespace {

using json = nlohmann::json;

bool in_disc(double cx, double cy, double r, std::size_t i, std::size_t j) {
  const double dx = static_cast<double>(j) + 0.5 - cx;
  const double dy = static_cast<double>(i) + 0.5 - cy;
  return dx * dx + dy * dy <= r * r;
}

std::mt19937_64 image_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

std::uint32_t read_be32(std::istream& is, const std::string& file) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw IoError(file + ": truncated IDX header");
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

void write_be32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                              static_cast<char>(v >> 8), static_cast<char>(v)};
  os.write(b.data(), 4);
}

json info_to_json(const ShapeInfo& s) {
  return json{{"circle", {s.circle_x, s.circle_y, s.circle_radius, s.circle_intensity}},
              {"rect", {s.rect_x, s.rect_y, s.rect_width, s.rect_height, s.rect_intensity}},
              {"spot", {s.has_spot ? 1.0 : 0.0, s.spot_x, s.spot_y, s.spot_radius, s.spot_intensity}}};
}

ShapeInfo info_from_json(const json& j) {
  ShapeInfo s;
  const auto& c = j.at("circle");
  s.circle_x = c[0], s.circle_y = c[1], s.circle_radius = c[2], s.circle_intensity = c[3];
  const auto& r = j.at("rect");
  s.rect_x = r[0], s.rect_y = r[1], s.rect_width = r[2], s.rect_height = r[3];
  s.rect_intensity = r[4];
  const auto& p = j.at("spot");
  s.has_spot = p[0].get<double>() != 0.0;
  s.spot_x = p[1], s.spot_y = p[2], s.spot_radius = p[3], s.spot_intensity = p[4];
  return s;
}

}  // namespace

std::string to_string(Split split) { return split == Split::Train ? "train" : "test"; }

std::string to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::Shapes:
      return "shapes";
    case Provenance::ShapesPlus:
      return "shapes-plus";
    case Provenance::Mnist:
      return "mnist";
  }
  return "unknown";
}

Provenance parse_provenance(const std::string& text) {
  if (text == "shapes") return Provenance::Shapes;
  if (text == "shapes-plus") return Provenance::ShapesPlus;
  if (text == "mnist") return Provenance::Mnist;
  throw InvalidArgument("unknown dataset kind '" + text + "'");
}

Tensor circle_mask(const ShapeInfo& info, std::size_t size) {
  Tensor m({size, size});
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      if (in_disc(info.circle_x, info.circle_y, info.circle_radius, i, j)) m[i * size + j] = 1.0;
    }
  }
  return m;
}

Tensor rectangle_mask(const ShapeInfo& info, std::size_t size) {
  Tensor m({size, size});
  for (std::size_t i = info.rect_y; i < std::min(size, info.rect_y + info.rect_height); ++i) {
    for (std::size_t j = info.rect_x; j < std::min(size, info.rect_x + info.rect_width); ++j) {
      m[i * size + j] = 1.0;
    }
  }
  return m;
}

Tensor spot_mask(const ShapeInfo& info, std::size_t size) {
  Tensor m({size, size});
  if (!info.has_spot) return m;
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      if (in_disc(info.spot_x, info.spot_y, info.spot_radius, i, j) &&
          in_disc(info.circle_x, info.circle_y, info.circle_radius, i, j)) {
        m[i * size + j] = 1.0;
      }
    }
  }
  return m;
}

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > images.size()) {
    throw InvalidArgument("slice [" + std::to_string(begin) + ", " +
                          std::to_string(begin + count) + ") of dataset with " +
                          std::to_string(images.size()) + " images");
  }
  Dataset out;
  out.split = split;
  out.provenance = provenance;
  out.images.assign(images.begin() + begin, images.begin() + begin + count);
  if (!shapes.empty()) out.shapes.assign(shapes.begin() + begin, shapes.begin() + begin + count);
  return out;
}

Dataset generate_shapes(const ShapesConfig& config, Split split) {
  const std::size_t n = config.image_size;
  if (n < 16) throw InvalidArgument("shapes image_size must be at least 16");
  if (config.count < 1) throw InvalidArgument("shapes count must be at least 1");
  if (!(config.intensity_low > 0.0 && config.intensity_low <= config.intensity_high &&
        config.intensity_high <= 1.0)) {
    throw InvalidArgument("shape intensity range must lie in (0, 1]");
  }
  const double max_r = config.max_radius > 0.0 ? config.max_radius : static_cast<double>(n) / 4.0;
  const std::size_t max_side = config.max_side > 0 ? config.max_side : n / 2;
  if (config.min_radius <= 0.0 || max_r < config.min_radius || 2.0 * config.min_radius > n ||
      config.min_side < 1 || max_side < config.min_side || max_side > n) {
    throw InvalidArgument("shape size limits are infeasible for image size " + std::to_string(n));
  }
  if (config.bright_spot && config.spot_radius >= config.min_radius) {
    throw InvalidArgument("bright spot radius must be below the minimum circle radius");
  }

  Dataset out;
  out.split = split;
  out.provenance = config.bright_spot ? Provenance::ShapesPlus : Provenance::Shapes;
  out.images.reserve(config.count);
  out.shapes.reserve(config.count);
  for (std::size_t idx = 0; idx < config.count; ++idx) {
    auto rng = image_rng(config.seed, idx);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> intensity(config.intensity_low, config.intensity_high);
    ShapeInfo info;
    bool placed = false;
    for (std::size_t attempt = 0; attempt < config.max_attempts && !placed; ++attempt) {
      info.circle_radius = config.min_radius + (max_r - config.min_radius) * unit(rng);
      const double span = static_cast<double>(n) - 2.0 * info.circle_radius;
      info.circle_x = info.circle_radius + span * unit(rng);
      info.circle_y = info.circle_radius + span * unit(rng);
      std::uniform_int_distribution<std::size_t> side(config.min_side, max_side);
      info.rect_width = side(rng);
      info.rect_height = side(rng);
      info.rect_x = std::uniform_int_distribution<std::size_t>(0, n - info.rect_width)(rng);
      info.rect_y = std::uniform_int_distribution<std::size_t>(0, n - info.rect_height)(rng);
      const Tensor c = circle_mask(info, n);
      const Tensor r = rectangle_mask(info, n);
      placed = dot(c, r) == 0.0;
    }
    if (!placed) {
      throw InvalidArgument("could not place non-overlapping shapes in image " +
                            std::to_string(idx) + " after " +
                            std::to_string(config.max_attempts) + " attempts");
    }
    info.circle_intensity = intensity(rng);
    info.rect_intensity = intensity(rng);
    if (config.bright_spot) {
      const double reach = info.circle_radius - config.spot_radius;
      const double rho = reach * std::sqrt(unit(rng));
      const double phi = 2.0 * std::numbers::pi * unit(rng);
      info.has_spot = true;
      info.spot_x = info.circle_x + rho * std::cos(phi);
      info.spot_y = info.circle_y + rho * std::sin(phi);
      info.spot_radius = config.spot_radius;
      info.spot_intensity = config.spot_intensity;
    }
    Tensor img({n, n});
    const Tensor c = circle_mask(info, n);
    const Tensor r = rectangle_mask(info, n);
    const Tensor s = spot_mask(info, n);
    for (std::size_t k = 0; k < img.size(); ++k) {
      img[k] = c[k] * info.circle_intensity + r[k] * info.rect_intensity;
      if (s[k] > 0.0) img[k] = info.spot_intensity;
    }
    out.images.push_back(std::move(img));
    out.shapes.push_back(info);
  }
  return out;
}

Dataset load_idx_images(const std::filesystem::path& file, std::size_t max_count) {
  const std::string name = file.string();
  std::ifstream is(file, std::ios::binary);
  if (!is) throw IoError(name + ": cannot open IDX file");
  const std::uint32_t magic = read_be32(is, name);
  if (magic != 0x00000803) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", magic);
    throw IoError(name + ": bad IDX magic " + buf + " (expected 0x00000803)");
  }
  const std::uint32_t count = read_be32(is, name);
  const std::uint32_t rows = read_be32(is, name);
  const std::uint32_t cols = read_be32(is, name);
  const std::size_t take = max_count ? std::min<std::size_t>(max_count, count) : count;
  Dataset out;
  out.provenance = Provenance::Mnist;
  out.images.reserve(take);
  std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols);
  for (std::size_t i = 0; i < take; ++i) {
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
      throw IoError(name + ": truncated payload at image " + std::to_string(i) + " of " +
                    std::to_string(count));
    }
    Tensor img({rows, cols});
    for (std::size_t k = 0; k < buf.size(); ++k) img[k] = buf[k] / 255.0;
    out.images.push_back(std::move(img));
  }
  return out;
}

Dataset load_mnist(const std::filesystem::path& dir, Split split, std::size_t max_count) {
  const char* file = split == Split::Train ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte";
  Dataset d = load_idx_images(dir / file, max_count);
  d.split = split;
  return d;
}

void write_idx_images(const std::filesystem::path& file, const std::vector<Tensor>& images) {
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(file.string() + ": cannot open for writing");
  const std::size_t rows = images.empty() ? 0 : images.front().dim(0);
  const std::size_t cols = images.empty() ? 0 : images.front().dim(1);
  write_be32(os, 0x00000803);
  write_be32(os, static_cast<std::uint32_t>(images.size()));
  write_be32(os, static_cast<std::uint32_t>(rows));
  write_be32(os, static_cast<std::uint32_t>(cols));
  for (const auto& img : images) {
    for (double v : img.values()) {
      const double c = std::clamp(v, 0.0, 1.0);
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
    }
  }
}

Tensor stack_batch(const Dataset& data, const std::vector<std::size_t>& indices) {
  const std::size_t h = data.height(), w = data.width();
  Tensor out({indices.size(), 1, h, w});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const Tensor& img = data.images.at(indices[b]);
    std::copy(img.data(), img.data() + h * w, out.data() + b * h * w);
  }
  return out;
}

std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t count, std::size_t batch_size,
                                                       std::mt19937_64& rng) {
  if (batch_size == 0) throw InvalidArgument("batch size must be positive");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t b = 0; b < count; b += batch_size) {
    batches.emplace_back(order.begin() + b, order.begin() + std::min(count, b + batch_size));
  }
  return batches;
}

std::string shapes_config_json(const ShapesConfig& c) {
  json j{{"image_size", c.image_size},
         {"count", c.count},
         {"seed", c.seed},
         {"intensity_low", c.intensity_low},
         {"intensity_high", c.intensity_high},
         {"min_radius", c.min_radius},
         {"max_radius", c.max_radius},
         {"min_side", c.min_side},
         {"max_side", c.max_side},
         {"bright_spot", c.bright_spot},
         {"spot_radius", c.spot_radius},
         {"spot_intensity", c.spot_intensity}};
  return j.dump();
}

void save_dataset(const std::filesystem::path& dir, const Dataset& data,
                  const std::string& config_echo_json) {
  std::filesystem::create_directories(dir);
  const std::string split = to_string(data.split);
  NamedTensors records;
  records.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "image_%06zu", i);
    records.emplace_back(name, data.images[i]);
  }
  save_tensors(dir / (split + ".grt"), records);

  json manifest{{"split", split},
                {"provenance", to_string(data.provenance)},
                {"count", data.size()},
                {"height", data.height()},
                {"width", data.width()},
                {"config", config_echo_json.empty() ? json::object() : json::parse(config_echo_json)}};
  if (!data.shapes.empty()) {
    json shapes = json::array();
    for (const auto& s : data.shapes) shapes.push_back(info_to_json(s));
    manifest["shapes"] = std::move(shapes);
  }
  std::ofstream os(dir / (split + ".json"), std::ios::trunc);
  if (!os) throw IoError((dir / (split + ".json")).string() + ": cannot open for writing");
  os << manifest.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir, Split split) {
  const std::string name = to_string(split);
  const auto manifest_path = dir / (name + ".json");
  std::ifstream is(manifest_path);
  if (!is) throw IoError(manifest_path.string() + ": cannot open dataset manifest");
  json manifest;
  try {
    manifest = json::parse(is);
  } catch (const json::exception& e) {
    throw IoError(manifest_path.string() + ": " + e.what());
  }
  Dataset out;
  out.split = split;
  out.provenance = parse_provenance(manifest.at("provenance").get<std::string>());
  for (auto& [_, t] : load_tensors(dir / (name + ".grt"))) out.images.push_back(std::move(t));
  if (out.images.size() != manifest.at("count").get<std::size_t>()) {
    throw IoError((dir / (name + ".grt")).string() + ": image count disagrees with manifest");
  }
  if (manifest.contains("shapes")) {
    for (const auto& s : manifest["shapes"]) out.shapes.push_back(info_from_json(s));
  }
  return out;
}

}  // namespace genreg
