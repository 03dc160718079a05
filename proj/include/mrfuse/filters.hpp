#ifndef MRFUSE_FILTERS_HPP
#define MRFUSE_FILTERS_HPP

#include "mrfuse/types.hpp"

#include <cmath>
#include <vector>

namespace mrfuse {

/// Normalized 1-D Gaussian taps of odd length `size`.
inline std::vector<double> gaussian_taps(int size, double sigma) {
  std::vector<double> taps(static_cast<std::size_t>(size));
  const int half = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - half;
    taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += taps[i];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

/// Separable Gaussian filter. Taps falling outside the image are dropped and
/// the remaining weights renormalized, so constants are preserved exactly up
/// to rounding and images smaller than the window are handled.
template <typename Derived>
ImageMatrix<double> gaussian_filter(const Eigen::MatrixBase<Derived>& image, int size, double sigma) {
  const auto taps = gaussian_taps(size, sigma);
  const int half = size / 2;
  const Index rows = image.rows();
  const Index cols = image.cols();

  ImageMatrix<double> horizontal(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      double acc = 0.0, norm = 0.0;
      for (int t = -half; t <= half; ++t) {
        const Index cc = c + t;
        if (cc < 0 || cc >= cols) continue;
        acc += taps[t + half] * image(r, cc);
        norm += taps[t + half];
      }
      horizontal(r, c) = acc / norm;
    }
  }
  ImageMatrix<double> out(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      double acc = 0.0, norm = 0.0;
      for (int t = -half; t <= half; ++t) {
        const Index rr = r + t;
        if (rr < 0 || rr >= rows) continue;
        acc += taps[t + half] * horizontal(rr, c);
        norm += taps[t + half];
      }
      out(r, c) = acc / norm;
    }
  }
  return out;
}

/// Window size covering ±3 sigma.
inline int gaussian_window_for(double sigma) {
  return 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1;
}

}  // namespace mrfuse

#endif  // MRFUSE_FILTERS_HPP
