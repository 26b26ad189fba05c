#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wosno {

// Row-major grayscale image with intensities in [0, 1]. Pixel (x, y) is
// column x, row y; its centre sits at coordinates (x, y).
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0);

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool inside(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
};

// Reads P2 (ASCII) or P5 (binary) PGM, scaling by maxval.
GrayImage read_pgm(const std::string& path);

// Writes P5 with maxval 255. `comment`, if nonempty, becomes a "# ..." line
// right after the magic.
void write_pgm(const std::string& path, const GrayImage& img, const std::string& comment = "");

// Per-pixel flags; nonzero means masked (unknown).
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> masked;

  bool at(int x, int y) const { return masked[static_cast<std::size_t>(y) * width + x] != 0; }
};

// Pixels brighter than half of maxval are masked.
Mask mask_from_image(const GrayImage& img);

}  // namespace wosno
