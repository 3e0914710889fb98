#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "parttransfer/geometry.hpp"

namespace pt {

/// Grayscale image, intensities in [0, 1], row-major.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, float fill = 0.0f);
  RasterImage(int width, int height, std::vector<float> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  ImageSize size() const { return {static_cast<double>(width_), static_cast<double>(height_)}; }

  float at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  float& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  const std::vector<float>& pixels() const { return pixels_; }

  /// Rounds every pixel to the nearest 8-bit level, the precision PGM assets
  /// carry, so in-memory and on-disk images are identical.
  void quantize_8bit();

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> pixels_;
};

/// Binary (P5) 8-bit portable graymap I/O.
RasterImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const RasterImage& image);

}  // namespace pt
