#include "mrfuse/image_prior.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mrfuse {

void PriorConfig::validate() const {
  if (!(eta >= 0.0)) throw std::invalid_argument("prior: eta must be >= 0");
  if (!(sigma_edge > 0.0)) throw std::invalid_argument("prior: sigma_edge must be > 0");
  if (smoothing_iters < 1) throw std::invalid_argument("prior: smoothing_iters must be >= 1");
}

double EdgeWeights::between(Index r0, Index c0, Index r1, Index c1) const {
  if (r0 == r1 && std::abs(c0 - c1) == 1) return horizontal(r0, std::min(c0, c1));
  if (c0 == c1 && std::abs(r0 - r1) == 1) return vertical(std::min(r0, r1), c0);
  throw std::invalid_argument("EdgeWeights::between: pixels are not 4-adjacent");
}

EdgeWeights edge_weights(const RawImage& image, double sigma_edge) {
  if (!(sigma_edge > 0.0)) throw std::invalid_argument("edge_weights: sigma_edge must be > 0");
  const Index H = image.height();
  const Index W = image.width();
  const double inv = 1.0 / (sigma_edge * sigma_edge);
  const auto& I = image.intensity;
  EdgeWeights w;
  w.horizontal.resize(H, std::max<Index>(W - 1, 0));
  w.vertical.resize(std::max<Index>(H - 1, 0), W);
  if (W > 1) w.horizontal = (-(I.rightCols(W - 1) - I.leftCols(W - 1)).array().square() * inv).exp().matrix();
  if (H > 1) w.vertical = (-(I.bottomRows(H - 1) - I.topRows(H - 1)).array().square() * inv).exp().matrix();
  return w;
}

namespace {

void require_grid(const SoftMap& map, const EdgeWeights& weights, const char* what) {
  if (map.height() != weights.horizontal.rows() || map.width() != weights.vertical.cols())
    throw ShapeError(std::string(what) + ": image and map sizes differ");
}

}  // namespace

double prior_energy(const SoftMap& map, const EdgeWeights& weights) {
  require_grid(map, weights, "prior_energy");
  const Index H = map.height();
  const Index W = map.width();
  const auto& v = map.values();
  double energy = 0.0;
  for (Index r = 0; r < H; ++r) {
    for (Index c = 0; c < W; ++c) {
      const Index p = r * W + c;
      if (c + 1 < W) energy += weights.horizontal(r, c) * (v.row(p) - v.row(p + 1)).squaredNorm();
      if (r + 1 < H) energy += weights.vertical(r, c) * (v.row(p) - v.row(p + W)).squaredNorm();
    }
  }
  return energy;
}

double prior_energy(const SoftMap& map, const RawImage& image, const PriorConfig& config) {
  return prior_energy(map, edge_weights(image, config.sigma_edge));
}

double prox_objective(const SoftMap& y, const SoftMap& target, const EdgeWeights& weights, double beta,
                      double eta) {
  return 0.5 * beta * (target.values() - y.values()).squaredNorm() + eta * prior_energy(y, weights);
}

SoftMap prox_step(const SoftMap& target, const RawImage& image, double beta, const PriorConfig& config,
                  std::vector<double>* sweep_objectives) {
  if (image.height() != target.height() || image.width() != target.width())
    throw ShapeError("prox_step: image and map sizes differ");
  return prox_step(target, edge_weights(image, config.sigma_edge), beta, config, sweep_objectives);
}

SoftMap prox_step(const SoftMap& target, const EdgeWeights& weights, double beta, const PriorConfig& config,
                  std::vector<double>* sweep_objectives) {
  if (!(beta > 0.0)) throw std::invalid_argument("prox_step: beta must be > 0");
  config.validate();
  require_grid(target, weights, "prox_step");

  const Index H = target.height();
  const Index W = target.width();
  const double eta2 = 2.0 * config.eta;
  const auto& t = target.values();

  if (sweep_objectives) {
    sweep_objectives->clear();
    sweep_objectives->push_back(prox_objective(target, target, weights, beta, config.eta));
  }
  if (config.eta == 0.0) return target;

  ClassMatrix<double> current = t;
  ClassMatrix<double> next(t.rows(), t.cols());
  for (int sweep = 0; sweep < config.smoothing_iters; ++sweep) {
    for (Index r = 0; r < H; ++r) {
      for (Index c = 0; c < W; ++c) {
        const Index p = r * W + c;
        double denom = beta;
        next.row(p) = beta * t.row(p);
        auto pull = [&](double w, Index q) {
          next.row(p) += eta2 * w * current.row(q);
          denom += eta2 * w;
        };
        if (c > 0) pull(weights.horizontal(r, c - 1), p - 1);
        if (c + 1 < W) pull(weights.horizontal(r, c), p + 1);
        if (r > 0) pull(weights.vertical(r - 1, c), p - W);
        if (r + 1 < H) pull(weights.vertical(r, c), p + W);
        next.row(p) /= denom;
      }
    }
    current.swap(next);
    if (sweep_objectives)
      sweep_objectives->push_back(prox_objective(SoftMap(H, W, current), target, weights, beta, config.eta));
  }

  for (Index p = 0; p < current.rows(); ++p) {
    auto row = current.row(p);
    row = row.cwiseMax(0.0);
    const double s = row.sum();
    if (s > 0.0)
      row /= s;
    else
      row.setConstant(1.0 / static_cast<double>(row.size()));
  }
  return SoftMap(H, W, std::move(current));
}

}  // namespace mrfuse
