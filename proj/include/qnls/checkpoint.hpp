#pragma once

#include <filesystem>

#include "qnls/grid.hpp"

namespace qnls {

struct Checkpoint {
  Field field;
  double t = 0.0;
};

// "QNLS", u8 version, u8 dim, u32 n, f64 L, f64 t, then (re, im) f64 pairs,
// little-endian, row-major.
void write_checkpoint(const std::filesystem::path& path, const Field& f, double t);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace qnls
