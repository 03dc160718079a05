#ifndef MRFUSE_SYNTHGEN_HPP
#define MRFUSE_SYNTHGEN_HPP

#include "mrfuse/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mrfuse {

/// How a simulated rater corrupts the ground truth.
struct RaterSpec {
  enum class Kind { confusion, boundary };

  Kind kind = Kind::confusion;
  Eigen::MatrixXd theta;  // confusion: column-stochastic K x K
  int radius = 0;         // boundary: signed dilation (+) / erosion (-) in pixels
  double jitter = 0.0;    // boundary: contour perturbation amplitude in pixels
  std::uint64_t seed_offset = 0;

  static RaterSpec confusion(Eigen::MatrixXd theta, std::uint64_t seed_offset = 0);
  /// diag on the diagonal, the rest spread evenly over the other classes.
  static RaterSpec symmetric_confusion(Index classes, double diag, std::uint64_t seed_offset = 0);
  static RaterSpec boundary(int radius, double jitter, std::uint64_t seed_offset = 0);

  void validate(Index classes) const;
};

struct SyntheticCase {
  std::string case_id;
  RawImage image;
  HardLabelMap ground_truth;
  RaterPanel panel;
};

struct GeneratedCase {
  RawImage image;
  HardLabelMap ground_truth;
};

inline constexpr double kImageNoiseSigma = 0.05;
inline constexpr double kImageBlurSigma = 1.0;

/// Blob ground truth plus a raw image correlated with it. Foreground area
/// fraction is kept in [0.05, 0.5] by resampling.
GeneratedCase generate_case(std::uint64_t seed, Index height, Index width, Index classes);

/// Per-class mean intensity before blur and noise: 0.3 .. 0.7.
double class_intensity(Index k, Index classes);

/// Euclidean distance from every pixel to the nearest pixel where `mask` is set.
ImageMatrix<double> distance_transform(const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& mask);

RaterPanel simulate_raters(const HardLabelMap& gt, const std::vector<RaterSpec>& specs, std::uint64_t seed);

/// Two boundary raters (radius +-1, jitter 0.5), two coarse boundary raters
/// (radius +-3, jitter 2.0) and two diagonal-0.75 confusion raters.
std::vector<RaterSpec> standard_rater_specs();

/// Indices into standard_rater_specs().
inline constexpr int kReliableRaters[] = {0, 1};
inline constexpr int kConfusionRaters[] = {4, 5};

std::vector<SyntheticCase> make_suite(std::uint64_t seed, int cases, Index height, Index width, Index classes,
                                      const std::vector<RaterSpec>& specs);

/// 50 cases, 128x128, K = 2, M = 6 with standard_rater_specs().
std::vector<SyntheticCase> standard_suite(std::uint64_t seed);

}  // namespace mrfuse

#endif  // MRFUSE_SYNTHGEN_HPP
