#ifndef MRFUSE_TESTS_SUPPORT_HPP
#define MRFUSE_TESTS_SUPPORT_HPP

#include "mrfuse/types.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace testing {

using namespace mrfuse;

inline SoftMap random_soft_map(Index h, Index w, Index k, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  SoftMap out(h, w, k);
  for (Index p = 0; p < out.pixels(); ++p) {
    for (Index c = 0; c < k; ++c) out.values()(p, c) = u(gen);
    out.pixel(p) /= out.pixel(p).sum();
  }
  return out;
}

inline HardLabelMap random_labels(Index h, Index w, Index k, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_int_distribution<int> u(0, static_cast<int>(k) - 1);
  HardLabelMap out(h, w, k);
  for (Index p = 0; p < out.pixels(); ++p) out.set(p, u(gen));
  return out;
}

inline RawImage random_image(Index h, Index w, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RawImage img{ImageMatrix<double>(h, w)};
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) img.intensity(r, c) = u(gen);
  return img;
}

inline SoftMap single_pixel(std::initializer_list<double> probs) {
  SoftMap out(1, 1, static_cast<Index>(probs.size()));
  Index k = 0;
  for (double v : probs) out.values()(0, k++) = v;
  return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mrfuse_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing

#endif
