#ifndef MRFUSE_RATER_MODEL_HPP
#define MRFUSE_RATER_MODEL_HPP

#include "mrfuse/types.hpp"

#include <string>
#include <vector>

namespace mrfuse {

/// theta(t, k) = P(rater reports t | true class k). Columns sum to one.
struct ConfusionMatrix {
  std::string rater_id;
  Eigen::MatrixXd theta;

  Index classes() const { return theta.cols(); }
};

/// Column-stochastic check with tolerance.
bool is_column_stochastic(const Eigen::MatrixXd& theta, double tol = 1e-9);

/// M-step: theta(t|k) = sum_p y_p(k) [z_p = t] / sum_p y_p(k).
/// Columns with zero mass fall back to uniform.
ConfusionMatrix estimate_confusion(const SoftMap& y, const HardLabelMap& z, std::string rater_id = {});

/// Expected rater map: z_hat(t) = sum_k theta(t|k) y(k).
SoftMap predict_rater_map(const SoftMap& y, const ConfusionMatrix& theta);

/// Elementwise log of the clipped prediction.
ConfidenceMap confidence_from_prediction(const SoftMap& z_hat);

/// c(k) = log clip(theta(observed | k)) at every pixel.
ConfidenceMap posterior_confidence(const ConfusionMatrix& theta, const HardLabelMap& z);

/// Exact posterior P(Y = k | observations) by enumeration over classes:
/// prior(k) prod_m theta_m(obs_m | k), normalized. No log-domain shortcut.
Eigen::VectorXd bayes_oracle(const std::vector<ConfusionMatrix>& thetas, const Eigen::VectorXd& prior,
                             const std::vector<int>& observed);

}  // namespace mrfuse

#endif  // MRFUSE_RATER_MODEL_HPP
