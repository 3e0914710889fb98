#include "parttransfer/raster.hpp"

#include <cctype>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "parttransfer/error.hpp"

namespace pt {

RasterImage::RasterImage(int width, int height, float fill)
    : RasterImage(width, height,
                  std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) *
                                         static_cast<std::size_t>(std::max(height, 0)),
                                     fill)) {}

RasterImage::RasterImage(int width, int height, std::vector<float> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width <= 0 || height <= 0) fail(ErrorCode::InvalidSize, "raster dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    fail(ErrorCode::DimensionMismatch, "pixel count does not match width x height");
  }
}

void RasterImage::quantize_8bit() {
  for (float& p : pixels_) {
    const float clamped = std::clamp(p, 0.0f, 1.0f);
    p = static_cast<float>(std::lround(clamped * 255.0f)) / 255.0f;
  }
}

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(c);
  }
  return token;
}

}  // namespace

RasterImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open image '" + path.string() + "'");
  if (next_token(in) != "P5") fail(ErrorCode::Parse, "'" + path.string() + "' is not a binary PGM");
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token(in));
    height = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    fail(ErrorCode::Parse, "malformed PGM header in '" + path.string() + "'");
  }
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255) {
    fail(ErrorCode::Parse, "unsupported PGM header in '" + path.string() + "'");
  }
  std::vector<unsigned char> raw(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    fail(ErrorCode::Parse, "truncated pixel data in '" + path.string() + "'");
  }
  std::vector<float> pixels(raw.size());
  const float scale = 1.0f / static_cast<float>(maxval);
  if (maxval == 255) {
    std::transform(raw.begin(), raw.end(), pixels.begin(),
                   [](unsigned char v) { return static_cast<float>(v) / 255.0f; });
  } else {
    std::transform(raw.begin(), raw.end(), pixels.begin(),
                   [scale](unsigned char v) { return static_cast<float>(v) * scale; });
  }
  return RasterImage(width, height, std::move(pixels));
}

void write_pgm(const std::filesystem::path& path, const RasterImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write image '" + path.string() + "'");
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  std::vector<unsigned char> raw(image.pixels().size());
  std::transform(image.pixels().begin(), image.pixels().end(), raw.begin(), [](float p) {
    return static_cast<unsigned char>(std::lround(std::clamp(p, 0.0f, 1.0f) * 255.0f));
  });
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) fail(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

}  // namespace pt
