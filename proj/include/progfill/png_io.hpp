#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "progfill/image.hpp"

namespace progfill::png {

// 8-bit RGB; byte b maps to b / 127.5 - 1.
Image decode_image(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_image(const Image& image);
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& image);

// Single-channel 8-bit; 0 <-> 0 and 1 <-> 255. Decoded grey levels >= 128
// count as target.
MaskImage decode_mask(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_mask(const MaskImage& mask);
MaskImage read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const MaskImage& mask);

std::uint8_t to_byte(float v);

}  // namespace progfill::png
