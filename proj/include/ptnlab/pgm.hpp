#pragma once

#include <filesystem>

#include "ptnlab/tensor.hpp"

namespace ptnlab {

/// 16-bit binary PGM (P5, maxval 65535, big-endian samples per the PGM
/// standard). Intensities are quantized at a fixed scale of counts per
/// intensity unit so files round-trip deterministically.
constexpr double kPgmScale = 16384.0;

void write_pgm16(const Tensor& image, const std::filesystem::path& path);

/// Reads a 16-bit P5 file back into intensity units ({H,W} tensor).
Tensor read_pgm16(const std::filesystem::path& path);

}  // namespace ptnlab
