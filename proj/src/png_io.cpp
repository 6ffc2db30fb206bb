#include "progfill/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "progfill/errors.hpp"

namespace progfill::png {
namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageIoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageIoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageIoError("short write to " + path.string());
}

struct Decoded {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

Decoded decode(std::span<const std::uint8_t> bytes, png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw ImageIoError(std::string("PNG decode failed: ") + image.message);
  image.format = format;
  Decoded out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw ImageIoError("PNG decode failed: " + msg);
  }
  return out;
}

std::vector<std::uint8_t> encode(const std::vector<std::uint8_t>& pixels, int width, int height, png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr))
    throw ImageIoError(std::string("PNG encode failed: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr))
    throw ImageIoError(std::string("PNG encode failed: ") + image.message);
  out.resize(size);
  return out;
}

}  // namespace

std::uint8_t to_byte(float v) {
  const float scaled = std::round((v + 1.0f) * 127.5f);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0f, 255.0f));
}

Image decode_image(std::span<const std::uint8_t> bytes) {
  const Decoded d = decode(bytes, PNG_FORMAT_RGB);
  Image img(3, d.height, d.width);
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(c, y, x) = d.pixels[(static_cast<std::size_t>(y) * d.width + x) * 3 + c] / 127.5f - 1.0f;
  return img;
}

std::vector<std::uint8_t> encode_image(const Image& image) {
  if (image.channels() != 3) throw InvalidInput("encode_image: expected 3 channels");
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(image.height()) * image.width() * 3);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < 3; ++c)
        pixels[(static_cast<std::size_t>(y) * image.width() + x) * 3 + c] = to_byte(image.at(c, y, x));
  return encode(pixels, image.width(), image.height(), PNG_FORMAT_RGB);
}

Image read_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const ImageIoError& e) {
    throw ImageIoError(path.string() + ": " + e.what());
  }
}

void write_image(const std::filesystem::path& path, const Image& image) { write_file(path, encode_image(image)); }

MaskImage decode_mask(std::span<const std::uint8_t> bytes) {
  const Decoded d = decode(bytes, PNG_FORMAT_GRAY);
  MaskImage mask(d.height, d.width);
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x) mask.set(y, x, d.pixels[static_cast<std::size_t>(y) * d.width + x] >= 128);
  return mask;
}

std::vector<std::uint8_t> encode_mask(const MaskImage& mask) {
  std::vector<std::uint8_t> pixels(mask.data().size());
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = mask.data()[i] ? 255 : 0;
  return encode(pixels, mask.width(), mask.height(), PNG_FORMAT_GRAY);
}

MaskImage read_mask(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_mask(bytes);
  } catch (const ImageIoError& e) {
    throw ImageIoError(path.string() + ": " + e.what());
  }
}

void write_mask(const std::filesystem::path& path, const MaskImage& mask) { write_file(path, encode_mask(mask)); }

}  // namespace progfill::png
