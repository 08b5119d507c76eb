#include "qnls/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <fmt/core.h>

#include "qnls/error.hpp"

namespace qnls {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'Q', 'N', 'L', 'S'};
constexpr std::uint8_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw std::runtime_error(fmt::format("{}: truncated checkpoint", path.string()));
  }
  return v;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Field& f, double t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error(fmt::format("cannot open {} for writing", path.string()));
  os.write(kMagic, 4);
  put<std::uint8_t>(os, kVersion);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(f.grid().dim()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid().n()));
  put<double>(os, f.grid().length());
  put<double>(os, t);
  for (const auto& z : f.values()) {
    put<double>(os, z.real());
    put<double>(os, z.imag());
  }
  if (!os) throw std::runtime_error(fmt::format("write to {} failed", path.string()));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw ConfigError(fmt::format("{}: not a QNLS checkpoint", path.string()));
  }
  const auto version = get<std::uint8_t>(is, path);
  if (version != kVersion) throw ConfigError(fmt::format("{}: unsupported version {}", path.string(), version));
  const int dim = get<std::uint8_t>(is, path);
  const auto n = get<std::uint32_t>(is, path);
  const auto L = get<double>(is, path);
  const auto t = get<double>(is, path);
  Grid grid(dim, n, L);
  std::vector<complex> values(grid.size());
  for (auto& z : values) {
    const double re = get<double>(is, path);
    const double im = get<double>(is, path);
    z = {re, im};
  }
  return {Field(grid, std::move(values)), t};
}

}  // namespace qnls
