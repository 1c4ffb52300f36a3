#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace advstat {

inline constexpr const char* kVersion = "advstat 0.1.0";
inline constexpr const char* kSchemaLine = "# advstat-schema v1";

// A file or persisted artifact that does not parse or violates its format.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// User-supplied configuration that fails validation.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Well-formed input whose content cannot be processed (missing files,
// insufficient samples, out-of-range values).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// splitmix64 finalizer; used to derive independent RNG streams from a base
// seed plus a tag chain. Stable across platforms.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  return mix64(base ^ mix64(tag));
}

template <class... Tags>
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag,
                          Tags... rest) {
  return derive_seed(derive_seed(base, tag), rest...);
}

// Shortest text that round-trips a double exactly is not required here;
// 17 significant digits always do.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_pct2(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
  return buf;
}

}  // namespace advstat
