#include "advstat/idx.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>

namespace advstat {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::ifstream& in, const std::filesystem::path& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError(path.string() + ": truncated header");
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

std::vector<unsigned char> read_payload(std::ifstream& in, std::size_t count,
                                        const std::filesystem::path& path) {
  std::vector<unsigned char> bytes(count);
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(count));
  const std::size_t got = static_cast<std::size_t>(in.gcount());
  if (got != count) {
    throw FormatError(path.string() + ": expected " + std::to_string(count) +
                      " payload bytes, got " + std::to_string(got));
  }
  return bytes;
}

std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  return in;
}

}  // namespace

ImageSet load_idx_images(const std::filesystem::path& path) {
  std::ifstream in = open_binary(path);
  const std::uint32_t magic = read_be32(in, path);
  if (magic != kImageMagic) {
    char hex[16];
    std::snprintf(hex, sizeof(hex), "0x%08x", magic);
    throw FormatError(path.string() + ": bad image magic " + hex +
                      " (expected 0x00000803)");
  }
  const std::uint32_t n = read_be32(in, path);
  const std::uint32_t h = read_be32(in, path);
  const std::uint32_t w = read_be32(in, path);
  const std::size_t total =
      std::size_t(n) * std::size_t(h) * std::size_t(w);
  const std::vector<unsigned char> bytes = read_payload(in, total, path);

  ImageSet set;
  set.height = static_cast<int>(h);
  set.width = static_cast<int>(w);
  set.pixels.resize(n, std::size_t(h) * w);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t base = std::size_t(i) * h * w;
    for (std::size_t j = 0; j < std::size_t(h) * w; ++j) {
      set.pixels(i, static_cast<Eigen::Index>(j)) = bytes[base + j] / 255.0;
    }
  }
  return set;
}

LabelSet load_idx_labels(const std::filesystem::path& path, int num_classes) {
  std::ifstream in = open_binary(path);
  const std::uint32_t magic = read_be32(in, path);
  if (magic != kLabelMagic) {
    char hex[16];
    std::snprintf(hex, sizeof(hex), "0x%08x", magic);
    throw FormatError(path.string() + ": bad label magic " + hex +
                      " (expected 0x00000801)");
  }
  const std::uint32_t n = read_be32(in, path);
  const std::vector<unsigned char> bytes = read_payload(in, n, path);

  LabelSet set;
  set.labels.reserve(n);
  int max_label = -1;
  for (std::uint32_t i = 0; i < n; ++i) {
    const int label = bytes[i];
    if (num_classes > 0 && label >= num_classes) {
      throw FormatError(path.string() + ": label " + std::to_string(label) +
                        " at index " + std::to_string(i) +
                        " out of range [0, " + std::to_string(num_classes) +
                        ")");
    }
    max_label = std::max(max_label, label);
    set.labels.push_back(label);
  }
  set.num_classes = num_classes > 0 ? num_classes : max_label + 1;
  return set;
}

}  // namespace advstat
