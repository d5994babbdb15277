#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "genreg/params.hpp"
#include "genreg/tensor.hpp"

namespace genreg {

/// Ordered list of named tensors, the unit of the checkpoint format.
using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

/// Binary tensor container.
///
/// Layout: the four magic bytes "GRG1", then one record per tensor until end
/// of file. A record is
///   u32 name length, name bytes (UTF-8),
///   u32 rank, rank x u64 dims,
///   prod(dims) x f64 payload.
/// All integers and floats are little-endian.
void write_tensors(std::ostream& os, const NamedTensors& tensors);
NamedTensors read_tensors(std::istream& is, const std::string& source);

void save_tensors(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors load_tensors(const std::filesystem::path& path);

/// Parameter values (no optimizer state) with an optional name prefix.
NamedTensors to_named(const ParamSet& params, const std::string& prefix = "");
/// Overwrite values of `params` from records carrying `prefix`. Every
/// parameter must be present.
void assign_from(ParamSet& params, const NamedTensors& tensors, const std::string& prefix = "");

}  // namespace genreg
