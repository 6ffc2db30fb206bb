#pragma once

// Versioned parameter container shared by model checkpoints and feature
// extractor weight files:
//
//   bytes 0..7    magic "PGFILLCK"
//   bytes 8..11   container version, uint32 little-endian
//   bytes 12..19  header length L, uint64 little-endian
//   next L bytes  UTF-8 JSON: {"meta": {...}, "arrays": [{"name", "shape":
//                 [n,c,h,w], "offset", "count"}, ...]}
//   remainder     float32 little-endian array data; offsets and counts are
//                 in elements from the start of this section
//
// Writes go to a sibling temporary file that is renamed into place, so a
// failed write never replaces an existing file.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "progfill/tensor.hpp"

namespace progfill {

inline constexpr std::uint32_t kContainerVersion = 1;

struct NamedArray {
  std::string name;
  Tensor<float> value;
};

struct Container {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;
};

std::vector<std::uint8_t> serialize_container(const Container& c);
Container deserialize_container(const std::vector<std::uint8_t>& bytes);

// Throws CheckpointError on I/O failure, truncation, bad magic, unsupported
// version or an inconsistent shape manifest.
void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

}  // namespace progfill
