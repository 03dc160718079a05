#include "mrfuse/baselines.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mrfuse {

namespace {

void check_panel(const RaterPanel& panel, const char* what) {
  if (panel.empty()) throw std::invalid_argument(std::string(what) + ": empty rater panel");
  const auto& first = panel.labels.front();
  for (const auto& z : panel.labels)
    if (!z.same_grid(first.height(), first.width()) || z.classes() != first.classes())
      throw ShapeError(std::string(what) + ": rater maps differ in shape");
}

// Per-pixel likelihood vector prod_m theta_m(z_m | k).
Eigen::VectorXd pixel_likelihood(const RaterPanel& panel, const std::vector<ConfusionMatrix>& thetas, Index p,
                                 Index K) {
  Eigen::VectorXd like = Eigen::VectorXd::Ones(K);
  for (std::size_t m = 0; m < thetas.size(); ++m) like.array() *= thetas[m].theta.row(panel.labels[m][p]).transpose().array();
  return like;
}

}  // namespace

SoftMap majority_vote(const RaterPanel& panel) {
  check_panel(panel, "majority_vote");
  const auto& first = panel.labels.front();
  SoftMap out(first.height(), first.width(), first.classes(), 0.0);
  for (const auto& z : panel.labels)
    for (Index p = 0; p < z.pixels(); ++p) out.values()(p, z[p]) += 1.0;
  out.values() /= static_cast<double>(panel.size());
  return out;
}

SoftMap staple_e_step(const RaterPanel& panel, const std::vector<ConfusionMatrix>& thetas,
                      const Eigen::VectorXd& prior) {
  check_panel(panel, "staple_e_step");
  if (thetas.size() != panel.labels.size()) throw ShapeError("staple_e_step: one confusion matrix per rater");
  const auto& first = panel.labels.front();
  const Index K = first.classes();
  SoftMap out(first.height(), first.width(), K);
  for (Index p = 0; p < first.pixels(); ++p) {
    const Eigen::VectorXd joint = prior.cwiseProduct(pixel_likelihood(panel, thetas, p, K));
    const double evidence = joint.sum();
    if (evidence > 0.0)
      out.pixel(p) = (joint / evidence).transpose();
    else
      out.pixel(p) = prior.transpose();
  }
  return out;
}

double staple_log_likelihood(const RaterPanel& panel, const std::vector<ConfusionMatrix>& thetas,
                             const Eigen::VectorXd& prior) {
  const auto& first = panel.labels.front();
  const Index K = first.classes();
  double ll = 0.0;
  for (Index p = 0; p < first.pixels(); ++p) ll += std::log(prior.dot(pixel_likelihood(panel, thetas, p, K)));
  return ll;
}

StapleResult staple_em(const RaterPanel& panel, const StapleOptions& options) {
  check_panel(panel, "staple_em");
  if (options.max_iters < 1) throw std::invalid_argument("staple_em: max_iters must be >= 1");
  const std::size_t M = panel.labels.size();

  StapleResult result;
  result.posterior = majority_vote(panel);
  result.prior = result.posterior.values().colwise().mean().transpose();

  auto id_of = [&](std::size_t m) { return m < panel.rater_ids.size() ? panel.rater_ids[m] : std::to_string(m); };
  for (int iter = 0; iter < options.max_iters; ++iter) {
    std::vector<ConfusionMatrix> next;
    next.reserve(M);
    for (std::size_t m = 0; m < M; ++m) next.push_back(estimate_confusion(result.posterior, panel.labels[m], id_of(m)));
    if (options.reestimate_prior) result.prior = result.posterior.values().colwise().mean().transpose();

    double change = iter == 0 ? std::numeric_limits<double>::infinity() : 0.0;
    if (iter > 0)
      for (std::size_t m = 0; m < M; ++m)
        change = std::max(change, (next[m].theta - result.thetas[m].theta).cwiseAbs().maxCoeff());
    result.thetas = std::move(next);
    result.log_likelihood.push_back(staple_log_likelihood(panel, result.thetas, result.prior));
    result.posterior = staple_e_step(panel, result.thetas, result.prior);
    result.iterations = iter + 1;
    if (change < options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace mrfuse
