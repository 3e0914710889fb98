#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "parttransfer/geometry.hpp"

namespace pt::testing {

inline BoundingBox random_box(std::mt19937_64& rng, double extent = 100.0) {
  std::uniform_real_distribution<double> pos(-extent, extent);
  std::uniform_real_distribution<double> side(0.01 * extent, extent);
  return {pos(rng), pos(rng), side(rng), side(rng)};
}

inline ImageSize random_size(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> side(1.0, 2000.0);
  return {side(rng), side(rng)};
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("pt_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace pt::testing
