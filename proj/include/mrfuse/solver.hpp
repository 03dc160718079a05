#ifndef MRFUSE_SOLVER_HPP
#define MRFUSE_SOLVER_HPP

// Alternating half-quadratic recurrence. Each recurrence i = 1..tau:
//
//   Y'_i      = prox_step(y^self_{i-1}, image, beta_i)         refinement
//   theta^m   = estimate_confusion(T(Y'_i), z^m)               rater model
//   z_hat^m   = predict_rater_map(Y'_i, theta^m)
//   c^m       = confidences (observed-label log-likelihood or log z_hat^m)
//   y^fuse_i  = fusion of c^m with the observed labels
//   y^self_i  = fusion with each rater's own thresholded prediction
//   beta_i+1  = gamma * beta_i
//
// Step 0 (Rec0) fuses the panel under randomized near-equal initial
// confidences. The answer is the last Y'.

#include "mrfuse/image_prior.hpp"
#include "mrfuse/losses.hpp"
#include "mrfuse/rater_model.hpp"
#include "mrfuse/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mrfuse {

enum class ConfidenceForm {
  /// c^m(k) = log theta^m(z^m | k); fusions are exact Bayes posteriors.
  prop1_posterior,
  /// c^m = log z_hat^m; fusions use the literal elementwise formulas.
  alg1_logmap,
};

/// Which fusion from the previous recurrence the refinement step is pulled toward.
enum class ProxTarget { label_fusion, self_fusion };

std::string to_string(ConfidenceForm form);
std::string to_string(ProxTarget target);
ConfidenceForm confidence_form_from_string(const std::string& name);
ProxTarget prox_target_from_string(const std::string& name);

struct SolverConfig {
  int tau = 3;
  double beta0 = 1.0;
  double gamma = 2.0;
  PriorConfig prior;
  ConfidenceForm confidence_form = ConfidenceForm::prop1_posterior;
  ProxTarget prox_target = ProxTarget::self_fusion;
  /// Fit confusion matrices to the 0.5-threshold of Y' rather than to Y' itself.
  bool hard_confusion_fit = true;
  double convergence_ssim = 0.999;
  std::uint64_t seed = 0;
  int num_shuffles = 3;
  double zeta = 0.3;
  bool use_mh_loss = false;
  SsimConfig ssim;

  void validate() const;
};

struct ObjectiveTerms {
  double data = 0.0;   // ||W (x) Z - Y||^2
  double prior = 0.0;  // P_x(Y), before eta
  double total = 0.0;  // data + eta * prior
};

ObjectiveTerms objective_terms(const SoftMap& y, const std::vector<ConfidenceMap>& confidences,
                               const std::vector<HardLabelMap>& z, const RawImage& image, const SolverConfig& config);
double objective(const SoftMap& y, const std::vector<ConfidenceMap>& confidences, const std::vector<HardLabelMap>& z,
                 const RawImage& image, const SolverConfig& config);

struct RecurrenceStep {
  int iteration = 0;
  double beta = 0.0;  // beta used by this step's refinement; 0 for Rec0
  SoftMap y_prime;
  SoftMap y_self;
  SoftMap y_fuse;
  std::vector<ConfusionMatrix> confusions;  // empty for Rec0
  std::vector<ConfidenceMap> confidences;
  ObjectiveTerms objective;
  std::optional<double> ssim_to_previous;
  /// L_ssim(Y'_i, y_self_{i-1}) + L_ssim(y_self_i, Y'_i).
  double recurrence_loss = 0.0;
  /// The same with y_fuse in place of y_self.
  double recurrence_loss_fuse = 0.0;
  double shuffle_loss = 0.0;
  std::optional<double> mh_loss;
  /// Per rater: mean over pixels of sum_k Y'(k) c^m(k).
  std::vector<double> mean_confidence;
};

struct RecurrenceTrace {
  std::vector<std::string> rater_ids;
  std::vector<RecurrenceStep> steps;  // steps[0] is Rec0
  bool early_stopped = false;

  const SoftMap& result() const { return steps.back().y_prime; }
  double total_loss(double zeta) const;
};

/// Initial confidences w0 = log clip(psi + eps), keyed by rater id.
std::vector<ConfidenceMap> initial_confidences(const RaterPanel& panel, std::uint64_t seed);

RecurrenceTrace run_recurrence(const RawImage& image, const RaterPanel& panel, const SolverConfig& config);

/// CSV-ready diagnostics, one row per step.
std::vector<std::string> recurrence_diagnostics_header(const RecurrenceTrace& trace);
std::vector<std::vector<std::string>> recurrence_diagnostics(const RecurrenceTrace& trace);

}  // namespace mrfuse

#endif  // MRFUSE_SOLVER_HPP
