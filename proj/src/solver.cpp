#include "mrfuse/solver.hpp"

#include "mrfuse/csv.hpp"
#include "mrfuse/fusion.hpp"
#include "mrfuse/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace mrfuse {

std::string to_string(ConfidenceForm form) {
  return form == ConfidenceForm::prop1_posterior ? "prop1_posterior" : "alg1_logmap";
}

std::string to_string(ProxTarget target) {
  return target == ProxTarget::label_fusion ? "label_fusion" : "self_fusion";
}

ConfidenceForm confidence_form_from_string(const std::string& name) {
  if (name == "prop1_posterior") return ConfidenceForm::prop1_posterior;
  if (name == "alg1_logmap") return ConfidenceForm::alg1_logmap;
  throw std::invalid_argument("unknown confidence_form: " + name);
}

ProxTarget prox_target_from_string(const std::string& name) {
  if (name == "label_fusion") return ProxTarget::label_fusion;
  if (name == "self_fusion") return ProxTarget::self_fusion;
  throw std::invalid_argument("unknown prox_target: " + name);
}

void SolverConfig::validate() const {
  if (tau < 1) throw std::invalid_argument("solver: tau must be >= 1");
  if (!(gamma >= 1.0)) throw std::invalid_argument("solver: gamma must be >= 1");
  if (!(beta0 > 0.0)) throw std::invalid_argument("solver: beta0 must be > 0");
  if (num_shuffles < 1) throw std::invalid_argument("solver: num_shuffles must be >= 1");
  prior.validate();
  ssim.validate();
}

namespace {

void check_inputs(const RawImage& image, const RaterPanel& panel) {
  if (panel.empty()) throw std::invalid_argument("run_recurrence: empty rater panel");
  if (!panel.rater_ids.empty() && panel.rater_ids.size() != panel.labels.size())
    throw std::invalid_argument("run_recurrence: rater id count differs from label count");
  const auto& first = panel.labels.front();
  for (std::size_t m = 0; m < panel.labels.size(); ++m) {
    const auto& z = panel.labels[m];
    if (!z.same_grid(image.height(), image.width()) || z.classes() != first.classes())
      throw ShapeError("run_recurrence: rater " + std::to_string(m) + " does not match the image or panel shape");
  }
}

std::string rater_id(const RaterPanel& panel, std::size_t m) {
  return m < panel.rater_ids.size() ? panel.rater_ids[m] : "r" + std::to_string(m + 1);
}

// Expresses the initial per-pixel confidence exp(w0) at the observed label as
// a symmetric rater channel whose reliability runs from chance (1/K) to
// certainty, so that Rec0 is a randomly weighted vote.
ConfidenceMap symmetric_channel_confidence(const ConfidenceMap& w0, const HardLabelMap& z) {
  const Index K = z.classes();
  const double chance = 1.0 / static_cast<double>(K);
  ConfidenceMap out(z.height(), z.width(), K);
  for (Index p = 0; p < z.pixels(); ++p) {
    const double reliability = chance + (1.0 - chance) * std::exp(w0.values()(p, z[p]));
    const double other = K > 1 ? (1.0 - reliability) / static_cast<double>(K - 1) : 1.0;
    for (Index k = 0; k < K; ++k) out.values()(p, k) = detail::clipped_log(k == z[p] ? reliability : other);
  }
  return out;
}

SoftMap fusion_of(const std::vector<ConfidenceMap>& confidences, const std::vector<HardLabelMap>& z,
                  const PriorField& p_u, ConfidenceForm form) {
  return form == ConfidenceForm::prop1_posterior ? fuse_loglik(confidences, p_u) : fuse_literal(confidences, z, p_u);
}

std::vector<double> mean_confidence(const SoftMap& y, const std::vector<ConfidenceMap>& confidences) {
  std::vector<double> out;
  out.reserve(confidences.size());
  for (const auto& c : confidences)
    out.push_back(y.values().cwiseProduct(c.values()).sum() / static_cast<double>(y.pixels()));
  return out;
}

}  // namespace

ObjectiveTerms objective_terms(const SoftMap& y, const std::vector<ConfidenceMap>& confidences,
                               const std::vector<HardLabelMap>& z, const RawImage& image, const SolverConfig& config) {
  const PriorField p_u = uniform_prior(y.height(), y.width(), y.classes());
  const SoftMap fused = fusion_of(confidences, z, p_u, config.confidence_form);
  ObjectiveTerms terms;
  terms.data = (fused.values() - y.values()).squaredNorm();
  terms.prior = prior_energy(y, image, config.prior);
  terms.total = terms.data + config.prior.eta * terms.prior;
  return terms;
}

double objective(const SoftMap& y, const std::vector<ConfidenceMap>& confidences, const std::vector<HardLabelMap>& z,
                 const RawImage& image, const SolverConfig& config) {
  return objective_terms(y, confidences, z, image, config).total;
}

double RecurrenceTrace::total_loss(double zeta) const {
  std::vector<double> rec, sff;
  for (std::size_t i = 1; i < steps.size(); ++i) {
    rec.push_back(steps[i].recurrence_loss);
    sff.push_back(steps[i].shuffle_loss);
  }
  return mrfuse::total_loss(rec, sff, zeta);
}

std::vector<ConfidenceMap> initial_confidences(const RaterPanel& panel, std::uint64_t seed) {
  std::vector<ConfidenceMap> out;
  for (std::size_t m = 0; m < panel.labels.size(); ++m) {
    const auto& z = panel.labels[m];
    out.push_back(init_confidence_for(hash_id(rater_id(panel, m)), z.height(), z.width(), z.classes(), seed));
  }
  return out;
}

RecurrenceTrace run_recurrence(const RawImage& image, const RaterPanel& panel, const SolverConfig& config) {
  config.validate();
  check_inputs(image, panel);
  const auto& z = panel.labels;
  const std::size_t M = z.size();
  const Index H = image.height();
  const Index W = image.width();
  const Index K = z.front().classes();
  const PriorField p_u = uniform_prior(H, W, K);
  const EdgeWeights weights = edge_weights(image, config.prior.sigma_edge);

  RecurrenceTrace trace;
  for (std::size_t m = 0; m < M; ++m) trace.rater_ids.push_back(rater_id(panel, m));

  {
    RecurrenceStep rec0;
    const auto w0 = initial_confidences(panel, config.seed);
    if (config.confidence_form == ConfidenceForm::prop1_posterior) {
      for (std::size_t m = 0; m < M; ++m) rec0.confidences.push_back(symmetric_channel_confidence(w0[m], z[m]));
      rec0.y_prime = fuse_loglik(rec0.confidences, p_u);
    } else {
      rec0.confidences = w0;
      rec0.y_prime = init_fused(w0, z, p_u);
    }
    rec0.y_self = rec0.y_prime;
    rec0.y_fuse = rec0.y_prime;
    rec0.objective = objective_terms(rec0.y_prime, rec0.confidences, z, image, config);
    rec0.mean_confidence = mean_confidence(rec0.y_prime, rec0.confidences);
    trace.steps.push_back(std::move(rec0));
  }

  double beta = config.beta0;
  for (int i = 1; i <= config.tau; ++i) {
    const RecurrenceStep& prev = trace.steps.back();
    RecurrenceStep step;
    step.iteration = i;
    step.beta = beta;

    const SoftMap& target = config.prox_target == ProxTarget::label_fusion ? prev.y_fuse : prev.y_self;
    step.y_prime = prox_step(target, weights, beta, config.prior);

    std::vector<SoftMap> predicted;
    predicted.reserve(M);
    const SoftMap fit_to = config.hard_confusion_fit ? threshold(step.y_prime, 0.5).one_hot() : step.y_prime;
    for (std::size_t m = 0; m < M; ++m) {
      step.confusions.push_back(estimate_confusion(fit_to, z[m], trace.rater_ids[m]));
      predicted.push_back(predict_rater_map(step.y_prime, step.confusions.back()));
    }

    if (config.confidence_form == ConfidenceForm::prop1_posterior) {
      std::vector<ConfidenceMap> own;
      own.reserve(M);
      for (std::size_t m = 0; m < M; ++m) {
        step.confidences.push_back(posterior_confidence(step.confusions[m], z[m]));
        own.push_back(posterior_confidence(step.confusions[m], threshold(predicted[m], 0.5)));
      }
      step.y_fuse = fuse_loglik(step.confidences, p_u);
      step.y_self = fuse_loglik(own, p_u);
    } else {
      for (const auto& zm : predicted) step.confidences.push_back(confidence_from_prediction(zm));
      step.y_fuse = label_fusion(predicted, z, p_u);
      step.y_self = self_fusion(predicted, p_u);
    }

    step.objective = objective_terms(step.y_prime, step.confidences, z, image, config);
    step.mean_confidence = mean_confidence(step.y_prime, step.confidences);
    step.recurrence_loss = recurrence_loss(step.y_prime, prev.y_self, step.y_self, config.ssim);
    step.recurrence_loss_fuse = recurrence_loss(step.y_prime, prev.y_fuse, step.y_fuse, config.ssim);
    step.shuffle_loss =
        shuffle_loss(predicted, z, p_u, config.num_shuffles, CounterRng(config.seed, {0x5f5f}).bits(i));
    if (config.use_mh_loss) step.mh_loss = mh_loss(predicted, z);
    if (i >= 2) step.ssim_to_previous = ssim(step.y_prime, prev.y_prime, config.ssim);

    const bool converged = step.ssim_to_previous && *step.ssim_to_previous >= config.convergence_ssim;
    trace.steps.push_back(std::move(step));
    if (converged) {
      trace.early_stopped = i < config.tau;
      break;
    }
    beta *= config.gamma;
  }
  return trace;
}

std::vector<std::string> recurrence_diagnostics_header(const RecurrenceTrace& trace) {
  std::vector<std::string> header{"iteration", "beta",           "objective",           "data_term",
                                  "prior_term", "ssim_to_previous", "recurrence_loss", "recurrence_loss_fuse",
                                  "shuffle_loss"};
  for (const auto& id : trace.rater_ids) header.push_back("mean_confidence_" + id);
  return header;
}

std::vector<std::vector<std::string>> recurrence_diagnostics(const RecurrenceTrace& trace) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : trace.steps) {
    std::vector<std::string> row{std::to_string(s.iteration),
                                 csv::number(s.beta),
                                 csv::number(s.objective.total),
                                 csv::number(s.objective.data),
                                 csv::number(s.objective.prior),
                                 s.ssim_to_previous ? csv::number(*s.ssim_to_previous) : std::string(),
                                 csv::number(s.recurrence_loss),
                                 csv::number(s.recurrence_loss_fuse),
                                 csv::number(s.shuffle_loss)};
    for (double c : s.mean_confidence) row.push_back(csv::number(c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mrfuse
