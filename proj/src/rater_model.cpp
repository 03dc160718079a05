#include "mrfuse/rater_model.hpp"

#include "mrfuse/fusion.hpp"

#include <cmath>

namespace mrfuse {

bool is_column_stochastic(const Eigen::MatrixXd& theta, double tol) {
  if (theta.rows() != theta.cols()) return false;
  if ((theta.array() < -tol).any() || (theta.array() > 1.0 + tol).any()) return false;
  for (Index k = 0; k < theta.cols(); ++k)
    if (std::abs(theta.col(k).sum() - 1.0) > tol) return false;
  return true;
}

ConfusionMatrix estimate_confusion(const SoftMap& y, const HardLabelMap& z, std::string rater_id) {
  detail::require_same_grid(y, z, "estimate_confusion");
  const Index K = y.classes();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(K, K);
  for (Index p = 0; p < y.pixels(); ++p) counts.row(z[p]) += y.pixel(p);

  ConfusionMatrix out{std::move(rater_id), Eigen::MatrixXd(K, K)};
  for (Index k = 0; k < K; ++k) {
    const double mass = counts.col(k).sum();
    if (mass > 0.0)
      out.theta.col(k) = counts.col(k) / mass;
    else
      out.theta.col(k).setConstant(1.0 / static_cast<double>(K));
  }
  return out;
}

SoftMap predict_rater_map(const SoftMap& y, const ConfusionMatrix& theta) {
  if (theta.classes() != y.classes() || theta.theta.rows() != y.classes())
    throw ShapeError("predict_rater_map: confusion matrix does not match class count");
  // Rows are pixels, so z_hat = y * theta^T.
  return SoftMap(y.height(), y.width(), y.values() * theta.theta.transpose());
}

ConfidenceMap confidence_from_prediction(const SoftMap& z_hat) {
  ConfidenceMap out(z_hat.height(), z_hat.width(), z_hat.classes());
  out.values() = z_hat.values().array().max(kProbabilityFloor).min(1.0).log().matrix();
  return out;
}

ConfidenceMap posterior_confidence(const ConfusionMatrix& theta, const HardLabelMap& z) {
  const Index K = z.classes();
  if (theta.classes() != K || theta.theta.rows() != K)
    throw ShapeError("posterior_confidence: confusion matrix does not match class count");
  const Eigen::MatrixXd log_theta = theta.theta.array().max(kProbabilityFloor).min(1.0).log().matrix();
  ConfidenceMap out(z.height(), z.width(), K);
  for (Index p = 0; p < z.pixels(); ++p) out.pixel(p) = log_theta.row(z[p]);
  return out;
}

Eigen::VectorXd bayes_oracle(const std::vector<ConfusionMatrix>& thetas, const Eigen::VectorXd& prior,
                             const std::vector<int>& observed) {
  if (thetas.size() != observed.size()) throw ShapeError("bayes_oracle: one observation per rater required");
  const Index K = prior.size();
  Eigen::VectorXd joint(K);
  for (Index k = 0; k < K; ++k) {
    double v = prior(k);
    for (std::size_t m = 0; m < thetas.size(); ++m) v *= thetas[m].theta(observed[m], k);
    joint(k) = v;
  }
  const double evidence = joint.sum();
  if (evidence <= 0.0) throw DomainError("bayes_oracle: observations have zero probability");
  return joint / evidence;
}

}  // namespace mrfuse
