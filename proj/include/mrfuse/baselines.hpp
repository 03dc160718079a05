#ifndef MRFUSE_BASELINES_HPP
#define MRFUSE_BASELINES_HPP

#include "mrfuse/rater_model.hpp"
#include "mrfuse/types.hpp"

#include <vector>

namespace mrfuse {

/// Mean of the raters' one-hot labels.
SoftMap majority_vote(const RaterPanel& panel);

struct StapleOptions {
  int max_iters = 100;
  double tol = 1e-6;
  /// Re-estimate the class prior in every M-step instead of keeping the
  /// majority-vote label frequencies.
  bool reestimate_prior = false;
};

struct StapleResult {
  SoftMap posterior;
  std::vector<ConfusionMatrix> thetas;
  Eigen::VectorXd prior;
  /// Observed-data log-likelihood after each M-step.
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
};

/// E-step: posterior(k) proportional to prior(k) prod_m theta_m(z_m | k).
/// Pixels whose observations have zero likelihood under every class get the prior.
SoftMap staple_e_step(const RaterPanel& panel, const std::vector<ConfusionMatrix>& thetas,
                      const Eigen::VectorXd& prior);

/// sum_p log sum_k prior(k) prod_m theta_m(z_m | k).
double staple_log_likelihood(const RaterPanel& panel, const std::vector<ConfusionMatrix>& thetas,
                             const Eigen::VectorXd& prior);

/// Multi-class STAPLE, initialized from the majority vote.
StapleResult staple_em(const RaterPanel& panel, const StapleOptions& options = {});

}  // namespace mrfuse

#endif  // MRFUSE_BASELINES_HPP
