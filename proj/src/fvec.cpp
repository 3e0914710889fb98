#include "parttransfer/fvec.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "parttransfer/error.hpp"

namespace pt {
namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                 static_cast<char>((v >> 16) & 0xff),
                                 static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32(const unsigned char* b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_fvec(std::ostream& out, std::span<const FeatureVector> vectors, std::uint32_t dim) {
  out.write(kFvecMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(vectors.size()));
  put_u32(out, dim);
  for (const auto& v : vectors) {
    if (v.dim() != dim) fail(ErrorCode::DimensionMismatch, "vector dim differs from file dim");
    for (double d : v.values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(d)));
  }
  if (!out) fail(ErrorCode::Io, "failed writing feature payload");
}

void write_fvec(const std::filesystem::path& path, std::span<const FeatureVector> vectors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write feature file '" + path.string() + "'");
  const auto dim = vectors.empty() ? 0u : static_cast<std::uint32_t>(vectors.front().dim());
  write_fvec(out, vectors, dim);
}

std::vector<FeatureVector> read_fvec(std::istream& in, const std::string& what) {
  unsigned char header[12];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (in.gcount() != sizeof header) fail(ErrorCode::Parse, "'" + what + "': truncated header");
  if (std::memcmp(header, kFvecMagic, 4) != 0) {
    fail(ErrorCode::Parse, "'" + what + "': bad magic, expected FVEC");
  }
  const std::uint32_t count = get_u32(header + 4);
  const std::uint32_t dim = get_u32(header + 8);
  if (count > 0 && dim == 0) fail(ErrorCode::Parse, "'" + what + "': zero dim");

  std::vector<unsigned char> raw(static_cast<std::size_t>(count) * dim * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    fail(ErrorCode::Parse, "'" + what + "': truncated payload (" + std::to_string(count) + " x " +
                               std::to_string(dim) + " floats declared)");
  }
  std::vector<FeatureVector> vectors(count);
  const unsigned char* p = raw.data();
  for (auto& v : vectors) {
    v.values.resize(dim);
    for (auto& d : v.values) {
      d = static_cast<double>(std::bit_cast<float>(get_u32(p)));
      p += 4;
    }
  }
  return vectors;
}

std::vector<FeatureVector> read_fvec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFeature, "cannot open feature file '" + path.string() + "'");
  return read_fvec(in, path.string());
}

}  // namespace pt
