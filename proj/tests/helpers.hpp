#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "groundkit/mask.hpp"
#include "groundkit/rng.hpp"

namespace testutil {

/// Build a mask from a compact bit string: "1100" over the given dimensions.
inline groundkit::BinaryMask mask_of(std::size_t h, std::size_t w, const std::string& bits) {
  groundkit::BinaryMask m = groundkit::BinaryMask::zeros(h, w);
  for (std::size_t i = 0; i < bits.size() && i < m.data.size(); ++i)
    m.data[i] = bits[i] == '1' ? 1 : 0;
  return m;
}

inline groundkit::BinaryMask random_mask(groundkit::SplitMix64& rng, std::size_t h, std::size_t w,
                                         double density = 0.5) {
  groundkit::BinaryMask m = groundkit::BinaryMask::zeros(h, w);
  for (auto& bit : m.data) bit = rng.next_double() < density ? 1 : 0;
  return m;
}

/// Per-pixel reference IoU, deliberately naive.
inline double naive_iou(const groundkit::BinaryMask& a, const groundkit::BinaryMask& b) {
  std::uint64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    if (a.data[i] && b.data[i]) ++inter;
    if (a.data[i] || b.data[i]) ++uni;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Unique scratch directory under the system temp root, cleaned up on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("groundkit_test_" + tag + "_" + std::to_string(++counter) + "_" +
             std::to_string(static_cast<std::uint64_t>(
                 std::hash<std::string>{}(tag) & 0xffffu)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
