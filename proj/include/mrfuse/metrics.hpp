#ifndef MRFUSE_METRICS_HPP
#define MRFUSE_METRICS_HPP

#include "mrfuse/types.hpp"

#include <vector>

namespace mrfuse {

inline const std::vector<double> kDefaultDiceThresholds{0.1, 0.3, 0.5, 0.7, 0.9};

struct DiceScores {
  Eigen::VectorXd per_class;  // averaged over thresholds
  double foreground_mean = 0.0;  // classes 1..K-1 (class 0 alone when K == 1)
};

/// Dice of two binary masks; empty vs empty scores 1.
double binary_dice(const Eigen::Array<bool, Eigen::Dynamic, 1>& a, const Eigen::Array<bool, Eigen::Dynamic, 1>& b);

/// Multi-threshold soft dice: both maps binarized per channel at each
/// threshold (value > threshold), dice averaged over thresholds.
DiceScores soft_dice(const SoftMap& pred, const SoftMap& gt,
                     const std::vector<double>& thresholds = kDefaultDiceThresholds);

/// soft_dice of the fused map against each rater's one-hot labels.
std::vector<DiceScores> per_rater_dice(const SoftMap& fused, const RaterPanel& panel,
                                       const std::vector<double>& thresholds = kDefaultDiceThresholds);

}  // namespace mrfuse

#endif  // MRFUSE_METRICS_HPP
