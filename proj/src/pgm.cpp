#include "ptnlab/pgm.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <vector>

namespace ptnlab {

void write_pgm16(const Tensor& image, const std::filesystem::path& path) {
  if (image.rank() != 2)
    throw std::invalid_argument("pgm: expected a {H,W} image");
  const Index h = image.dim(0), w = image.dim(1);

  std::vector<unsigned char> bytes;
  bytes.reserve(static_cast<size_t>(h * w * 2));
  for (Index i = 0; i < image.numel(); ++i) {
    double q = std::round(image[i] * kPgmScale);
    q = std::min(65535.0, std::max(0.0, q));
    const auto v = static_cast<uint16_t>(q);
    bytes.push_back(static_cast<unsigned char>(v >> 8));  // MSB first
    bytes.push_back(static_cast<unsigned char>(v & 0xff));
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("pgm: cannot write " + path.string());
  out << "P5\n" << w << " " << h << "\n65535\n";
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("pgm: write failed " + path.string());
}

Tensor read_pgm16(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pgm: cannot read " + path.string());

  std::string magic;
  long w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0)
    throw std::runtime_error("pgm: bad header in " + path.string());
  if (maxval != 65535)
    throw std::runtime_error("pgm: expected 16-bit maxval in " + path.string());
  in.get();  // the single whitespace after maxval

  std::vector<unsigned char> bytes(static_cast<size_t>(w * h * 2));
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!in) throw std::runtime_error("pgm: truncated data in " + path.string());

  Tensor image({h, w});
  for (Index i = 0; i < image.numel(); ++i) {
    const auto hi = static_cast<uint16_t>(bytes[static_cast<size_t>(2 * i)]);
    const auto lo = static_cast<uint16_t>(bytes[static_cast<size_t>(2 * i + 1)]);
    image[i] = static_cast<double>((hi << 8) | lo) / kPgmScale;
  }
  return image;
}

}  // namespace ptnlab
