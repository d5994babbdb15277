#include "genreg/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "genreg/errors.hpp"

namespace genreg {

namespace {

constexpr std::array<char, 4> kMagic = {'G', 'R', 'G', '1'};

template <typename U>
void put_le(std::ostream& os, U value) {
  std::array<char, sizeof(U)> bytes;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  os.write(bytes.data(), bytes.size());
}

template <typename U>
bool get_le(std::istream& is, U& value) {
  std::array<unsigned char, sizeof(U)> bytes;
  if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) return false;
  value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return true;
}

}  // namespace

void write_tensors(std::ostream& os, const NamedTensors& tensors) {
  os.write(kMagic.data(), kMagic.size());
  for (const auto& [name, t] : tensors) {
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put_le<std::uint64_t>(os, d);
    for (double v : t.values()) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw IoError("failed writing tensor stream");
}

NamedTensors read_tensors(std::istream& is, const std::string& source) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError(source + ": not a GRG1 tensor file (bad magic)");
  }
  NamedTensors out;
  while (true) {
    std::uint32_t name_len = 0;
    if (!get_le(is, name_len)) {
      if (is.eof() && is.gcount() == 0) break;
      throw IoError(source + ": truncated record header");
    }
    std::string name(name_len, '\0');
    std::uint32_t rank = 0;
    if (!is.read(name.data(), name_len) || !get_le(is, rank)) {
      throw IoError(source + ": truncated record for '" + name + "'");
    }
    Shape shape(rank);
    for (auto& d : shape) {
      std::uint64_t v = 0;
      if (!get_le(is, v)) throw IoError(source + ": truncated dims for '" + name + "'");
      d = static_cast<std::size_t>(v);
    }
    std::vector<double> data(shape_size(shape));
    for (auto& v : data) {
      std::uint64_t bits = 0;
      if (!get_le(is, bits)) throw IoError(source + ": truncated payload for '" + name + "'");
      v = std::bit_cast<double>(bits);
    }
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return out;
}

void save_tensors(const std::filesystem::path& path, const NamedTensors& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_tensors(os, tensors);
}

NamedTensors load_tensors(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_tensors(is, path.string());
}

NamedTensors to_named(const ParamSet& params, const std::string& prefix) {
  NamedTensors out;
  for (const auto& name : params.names()) out.emplace_back(prefix + name, params.get(name));
  return out;
}

void assign_from(ParamSet& params, const NamedTensors& tensors, const std::string& prefix) {
  std::map<std::string, const Tensor*> index;
  for (const auto& [name, t] : tensors) index[name] = &t;
  for (const auto& name : params.names()) {
    auto it = index.find(prefix + name);
    if (it == index.end()) throw IoError("checkpoint is missing tensor '" + prefix + name + "'");
    params.set(name, *it->second);
  }
}

}  // namespace genreg
