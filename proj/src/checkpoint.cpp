#include "progfill/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "progfill/errors.hpp"

namespace progfill {
namespace {

constexpr char kMagic[8] = {'P', 'G', 'F', 'I', 'L', 'L', 'C', 'K'};
constexpr std::size_t kPreamble = 8 + 4 + 8;

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

template <typename U>
U get_le(const std::uint8_t* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

}  // namespace

const NamedArray* Container::find(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

std::vector<std::uint8_t> serialize_container(const Container& c) {
  nlohmann::json header;
  header["meta"] = c.meta;
  header["arrays"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& a : c.arrays) {
    const Shape s = a.value.shape();
    header["arrays"].push_back(
        {{"name", a.name}, {"shape", {s.n, s.c, s.h, s.w}}, {"offset", offset}, {"count", a.value.size()}});
    offset += a.value.size();
  }
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  put_le<std::uint32_t>(out, kContainerVersion);
  put_le<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset * 4);
  for (const auto& a : c.arrays)
    for (float v : a.value.storage()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Container deserialize_container(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kPreamble) throw CheckpointError("container truncated: missing preamble");
  if (std::memcmp(bytes.data(), kMagic, 8) != 0) throw CheckpointError("not a progfill container (bad magic)");
  const auto version = get_le<std::uint32_t>(bytes.data() + 8);
  if (version != kContainerVersion)
    throw CheckpointError("unsupported container version " + std::to_string(version) + " (expected " +
                          std::to_string(kContainerVersion) + ")");
  const auto header_len = get_le<std::uint64_t>(bytes.data() + 12);
  if (header_len > bytes.size() - kPreamble) throw CheckpointError("container truncated: header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + kPreamble, bytes.begin() + kPreamble + static_cast<long>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt container header: ") + e.what());
  }
  const std::size_t data_start = kPreamble + header_len;
  const std::size_t available = (bytes.size() - data_start) / 4;

  Container c;
  try {
    c.meta = header.at("meta");
    std::size_t expected_end = 0;
    for (const auto& entry : header.at("arrays")) {
      const auto shape = entry.at("shape").get<std::vector<int>>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto count = entry.at("count").get<std::uint64_t>();
      if (shape.size() != 4) throw CheckpointError("array shape must have 4 dims");
      for (int d : shape)
        if (d < 0) throw CheckpointError("negative array dimension");
      Shape s{shape[0], shape[1], shape[2], shape[3]};
      if (s.numel() != count)
        throw CheckpointError("shape manifest of " + entry.at("name").get<std::string>() + " disagrees with count");
      if (offset + count > available) throw CheckpointError("container truncated: array data");
      NamedArray a{entry.at("name").get<std::string>(), Tensor<float>(s)};
      const std::uint8_t* p = bytes.data() + data_start + offset * 4;
      for (std::size_t i = 0; i < count; ++i) a.value[i] = std::bit_cast<float>(get_le<std::uint32_t>(p + 4 * i));
      expected_end = std::max<std::size_t>(expected_end, offset + count);
      c.arrays.push_back(std::move(a));
    }
    if ((bytes.size() - data_start) != expected_end * 4)
      throw CheckpointError("container size does not match its manifest");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt container manifest: ") + e.what());
  }
  return c;
}

void write_container(const std::filesystem::path& path, const Container& c) {
  const auto bytes = serialize_container(c);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw CheckpointError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw CheckpointError("cannot move checkpoint into place at " + path.string());
  }
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return deserialize_container(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace progfill
