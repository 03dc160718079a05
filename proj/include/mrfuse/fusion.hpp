#ifndef MRFUSE_FUSION_HPP
#define MRFUSE_FUSION_HPP

// Weighted softmax fusion of rater annotations and the derived self/label
// fusions. Two fusion forms coexist:
//
//   fuse_literal  softmax(sum_m w^m .* onehot(z^m) + p)
//   fuse_loglik   softmax(sum_m c^m + p), c^m(k) = log P(z^m observed | Y = k)
//
// The literal form leaves unobserved channels at logit 0, so a rater voting
// for k with w < 0 lowers the posterior of k. The log-likelihood form is the
// exact Bayes posterior and is what the solver uses.

#include "mrfuse/rng.hpp"
#include "mrfuse/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace mrfuse {

namespace detail {

template <typename FieldA, typename FieldB>
void require_same_shape(const FieldA& a, const FieldB& b, const char* what) {
  if (a.height() != b.height() || a.width() != b.width() || a.classes() != b.classes())
    throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + "x" + std::to_string(a.classes()) + " vs " +
                     std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                     std::to_string(b.classes()) + ")");
}

template <typename Field>
void require_same_grid(const Field& a, const HardLabelMap& z, const char* what) {
  if (a.height() != z.height() || a.width() != z.width() || a.classes() != z.classes())
    throw ShapeError(std::string(what) + ": label map shape mismatch");
}

template <typename Scalar>
Scalar clipped_log(Scalar v) {
  return std::log(std::clamp(v, Scalar(kProbabilityFloor), Scalar(1)));
}

}  // namespace detail

/// Row-wise softmax with per-pixel max subtraction.
template <typename Scalar>
SoftMapT<Scalar> softmax(Index height, Index width, ClassMatrix<Scalar> logits) {
  for (Index p = 0; p < logits.rows(); ++p) {
    auto row = logits.row(p);
    row.array() = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
  return SoftMapT<Scalar>(height, width, std::move(logits));
}

/// Literal weighted fusion: softmax(sum_m w^m .* onehot(z^m) + p).
template <typename Scalar>
SoftMapT<Scalar> fuse_literal(const std::vector<ConfidenceMapT<Scalar>>& w, const std::vector<HardLabelMap>& z,
                              const PriorFieldT<Scalar>& p) {
  if (w.empty()) throw std::invalid_argument("fuse_literal: at least one rater required");
  if (w.size() != z.size()) throw ShapeError("fuse_literal: confidence and label counts differ");
  ClassMatrix<Scalar> logits = p.values();
  for (std::size_t m = 0; m < w.size(); ++m) {
    detail::require_same_shape(w[m], p, "fuse_literal");
    detail::require_same_grid(p, z[m], "fuse_literal");
    for (Index px = 0; px < logits.rows(); ++px) {
      const auto k = z[m][px];
      logits(px, k) += w[m].values()(px, k);
    }
  }
  return softmax<Scalar>(p.height(), p.width(), std::move(logits));
}

/// Bayes fusion of per-rater log-likelihoods: softmax(sum_m c^m + p).
/// With no raters the result is softmax(p).
template <typename Scalar>
SoftMapT<Scalar> fuse_loglik(const std::vector<ConfidenceMapT<Scalar>>& c, const PriorFieldT<Scalar>& p) {
  ClassMatrix<Scalar> logits = p.values();
  for (const auto& cm : c) {
    detail::require_same_shape(cm, p, "fuse_loglik");
    logits += cm.values();
  }
  return softmax<Scalar>(p.height(), p.width(), std::move(logits));
}

/// Thresholds a soft map: the unique channel above theta wins; with none or
/// several above theta, fall back to argmax. Ties go to the lowest index.
template <typename Scalar>
HardLabelMap threshold(const SoftMapT<Scalar>& map, double theta = 0.5) {
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("threshold: theta must lie in (0, 1)");
  HardLabelMap out(map.height(), map.width(), map.classes());
  for (Index p = 0; p < map.pixels(); ++p) {
    const auto row = map.pixel(p);
    Index above = -1;
    int count = 0;
    Index best = 0;
    for (Index k = 0; k < row.size(); ++k) {
      if (row(k) > theta) {
        above = k;
        ++count;
      }
      if (row(k) > row(best)) best = k;
    }
    out.set(p, static_cast<HardLabelMap::label_type>(count == 1 ? above : best));
  }
  return out;
}

/// Label fusion: softmax(sum_m log(z_hat^m) .* onehot(z^m) + p_u).
template <typename Scalar>
SoftMapT<Scalar> label_fusion(const std::vector<SoftMapT<Scalar>>& z_hat, const std::vector<HardLabelMap>& z,
                              const PriorFieldT<Scalar>& p_u) {
  if (z_hat.size() != z.size()) throw ShapeError("label_fusion: prediction and label counts differ");
  ClassMatrix<Scalar> logits = p_u.values();
  for (std::size_t m = 0; m < z_hat.size(); ++m) {
    detail::require_same_shape(z_hat[m], p_u, "label_fusion");
    detail::require_same_grid(p_u, z[m], "label_fusion");
    for (Index px = 0; px < logits.rows(); ++px) {
      const auto k = z[m][px];
      logits(px, k) += detail::clipped_log(z_hat[m].values()(px, k));
    }
  }
  return softmax<Scalar>(p_u.height(), p_u.width(), std::move(logits));
}

/// Self fusion: label fusion with each prediction's own 0.5-threshold as labels.
template <typename Scalar>
SoftMapT<Scalar> self_fusion(const std::vector<SoftMapT<Scalar>>& z_hat, const PriorFieldT<Scalar>& p_u) {
  std::vector<HardLabelMap> thresholded;
  thresholded.reserve(z_hat.size());
  for (const auto& zm : z_hat) thresholded.push_back(threshold(zm, 0.5));
  return label_fusion(z_hat, thresholded, p_u);
}

/// Distribution parameters of the initial confidences: per-rater level
/// psi ~ U(a, b) plus per-element noise eps ~ N(mu, sigma^2).
struct InitConfidenceParams {
  double a = 0.1;
  double b = 0.9;
  double mu = 0.0;
  double sigma = 0.2;
};

/// Initial confidence map for one rater: log clip(psi + eps, 1e-6, 1).
/// Draws are keyed by (seed, rater_key) so a rater's map does not depend on
/// its position in the panel.
template <typename Scalar = double>
ConfidenceMapT<Scalar> init_confidence_for(std::uint64_t rater_key, Index height, Index width, Index classes,
                                           std::uint64_t seed, const InitConfidenceParams& params = {}) {
  const CounterRng rng(seed, {0x1c0f1de7ULL, rater_key});
  const double psi = rng.uniform(0, params.a, params.b);
  const CounterRng noise = rng.stream(1);
  ConfidenceMapT<Scalar> out(height, width, classes);
  auto& v = out.values();
  for (Index p = 0; p < v.rows(); ++p) {
    for (Index k = 0; k < v.cols(); ++k) {
      const auto counter = static_cast<std::uint64_t>(p * v.cols() + k);
      const double eps = params.mu + params.sigma * noise.normal(counter);
      v(p, k) = static_cast<Scalar>(std::log(std::clamp(psi + eps, kProbabilityFloor, 1.0)));
    }
  }
  return out;
}

/// Initial confidences for M raters indexed 0..M-1.
template <typename Scalar = double>
std::vector<ConfidenceMapT<Scalar>> init_confidence(Index raters, Index height, Index width, Index classes,
                                                    std::uint64_t seed, const InitConfidenceParams& params = {}) {
  std::vector<ConfidenceMapT<Scalar>> out;
  out.reserve(static_cast<std::size_t>(raters));
  for (Index m = 0; m < raters; ++m)
    out.push_back(init_confidence_for<Scalar>(static_cast<std::uint64_t>(m), height, width, classes, seed, params));
  return out;
}

/// Initial fused mask from the initial confidences (literal fusion).
template <typename Scalar>
SoftMapT<Scalar> init_fused(const std::vector<ConfidenceMapT<Scalar>>& w0, const std::vector<HardLabelMap>& z,
                            const PriorFieldT<Scalar>& p_u) {
  return fuse_literal(w0, z, p_u);
}

}  // namespace mrfuse

#endif  // MRFUSE_FUSION_HPP
