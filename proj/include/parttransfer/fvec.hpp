#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "parttransfer/features.hpp"

namespace pt {

// Feature file layout, all little-endian:
//   "FVEC"        4 ASCII bytes
//   count         uint32
//   dim           uint32
//   payload       count * dim IEEE-754 float32, one vector after another
//
// Vectors are widened to double on read and narrowed to float32 on write.

inline constexpr char kFvecMagic[4] = {'F', 'V', 'E', 'C'};

void write_fvec(std::ostream& out, std::span<const FeatureVector> vectors, std::uint32_t dim);
void write_fvec(const std::filesystem::path& path, std::span<const FeatureVector> vectors);
std::vector<FeatureVector> read_fvec(std::istream& in, const std::string& what);
std::vector<FeatureVector> read_fvec(const std::filesystem::path& path);

}  // namespace pt
