#ifndef MRFUSE_IMAGE_PRIOR_HPP
#define MRFUSE_IMAGE_PRIOR_HPP

// Edge-weighted quadratic prior on soft maps and its proximal step:
//
//   P_x(Y) = sum over 4-neighbour pairs (p,q) of w_pq ||Y_p - Y_q||^2
//   w_pq   = exp(-(I_p - I_q)^2 / sigma_edge^2)
//
// The proximal step minimizes (beta/2)||target - Y||^2 + eta P_x(Y).

#include "mrfuse/types.hpp"

#include <vector>

namespace mrfuse {

struct PriorConfig {
  double eta = 2.0;
  double sigma_edge = 0.07;
  int smoothing_iters = 20;

  void validate() const;
};

/// Weights on the 4-neighbour graph. horizontal(r, c) joins (r, c)-(r, c+1);
/// vertical(r, c) joins (r, c)-(r+1, c).
struct EdgeWeights {
  ImageMatrix<double> horizontal;  // H x (W-1)
  ImageMatrix<double> vertical;    // (H-1) x W

  /// Weight between two 4-adjacent pixels, in either order.
  double between(Index r0, Index c0, Index r1, Index c1) const;
};

EdgeWeights edge_weights(const RawImage& image, double sigma_edge);

/// Sum of weighted squared differences between neighbouring pixel vectors.
double prior_energy(const SoftMap& map, const EdgeWeights& weights);
double prior_energy(const SoftMap& map, const RawImage& image, const PriorConfig& config);

/// (beta/2)||target - y||^2 + eta * prior_energy(y).
double prox_objective(const SoftMap& y, const SoftMap& target, const EdgeWeights& weights, double beta,
                      double eta);

/// Jacobi sweeps of the per-pixel closed-form update, then simplex
/// renormalization. If `sweep_objectives` is given it receives the objective
/// at the start and after every sweep.
SoftMap prox_step(const SoftMap& target, const RawImage& image, double beta, const PriorConfig& config,
                  std::vector<double>* sweep_objectives = nullptr);
SoftMap prox_step(const SoftMap& target, const EdgeWeights& weights, double beta, const PriorConfig& config,
                  std::vector<double>* sweep_objectives = nullptr);

}  // namespace mrfuse

#endif  // MRFUSE_IMAGE_PRIOR_HPP
