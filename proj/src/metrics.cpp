#include "mrfuse/metrics.hpp"

#include "mrfuse/fusion.hpp"

#include <stdexcept>

namespace mrfuse {

double binary_dice(const Eigen::Array<bool, Eigen::Dynamic, 1>& a, const Eigen::Array<bool, Eigen::Dynamic, 1>& b) {
  if (a.size() != b.size()) throw ShapeError("binary_dice: size mismatch");
  const auto size_a = a.count();
  const auto size_b = b.count();
  if (size_a + size_b == 0) return 1.0;
  const auto overlap = (a && b).count();
  return 2.0 * static_cast<double>(overlap) / static_cast<double>(size_a + size_b);
}

DiceScores soft_dice(const SoftMap& pred, const SoftMap& gt, const std::vector<double>& thresholds) {
  detail::require_same_shape(pred, gt, "soft_dice");
  if (thresholds.empty()) throw std::invalid_argument("soft_dice: no thresholds");
  const Index K = pred.classes();
  DiceScores out;
  out.per_class = Eigen::VectorXd::Zero(K);
  for (Index k = 0; k < K; ++k) {
    const auto p = pred.values().col(k).array();
    const auto g = gt.values().col(k).array();
    double sum = 0.0;
    for (double theta : thresholds) sum += binary_dice(p > theta, g > theta);
    out.per_class(k) = sum / static_cast<double>(thresholds.size());
  }
  out.foreground_mean = K > 1 ? out.per_class.tail(K - 1).mean() : out.per_class(0);
  return out;
}

std::vector<DiceScores> per_rater_dice(const SoftMap& fused, const RaterPanel& panel,
                                       const std::vector<double>& thresholds) {
  std::vector<DiceScores> out;
  out.reserve(panel.labels.size());
  for (const auto& z : panel.labels) {
    detail::require_same_grid(fused, z, "per_rater_dice");
    out.push_back(soft_dice(fused, z.one_hot(), thresholds));
  }
  return out;
}

}  // namespace mrfuse
