#ifndef MRFUSE_LOSSES_HPP
#define MRFUSE_LOSSES_HPP

#include "mrfuse/types.hpp"

#include <cstdint>
#include <vector>

namespace mrfuse {

/// Gaussian-window SSIM parameters (dynamic range 1).
struct SsimConfig {
  int window = 11;
  double gaussian_sigma = 1.5;
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;

  void validate() const;
};

/// Mean local SSIM of two single-channel maps.
double ssim(const ImageMatrix<double>& a, const ImageMatrix<double>& b, const SsimConfig& config = {});
/// Unweighted mean over channels.
double ssim(const SoftMap& a, const SoftMap& b, const SsimConfig& config = {});
double ssim_loss(const SoftMap& a, const SoftMap& b, const SsimConfig& config = {});

/// -mean_p sum_k target(k) log clip(pred(k)).
double cross_entropy(const SoftMap& pred, const SoftMap& target);

/// L_ssim(y_i, y_self_prev) + L_ssim(y_self_i, y_i).
double recurrence_loss(const SoftMap& y_i, const SoftMap& y_self_prev, const SoftMap& y_self_i,
                       const SsimConfig& config = {});

/// sum_m CE(z_hat^m, onehot(z^m)).
double mh_loss(const std::vector<SoftMap>& z_hat, const std::vector<HardLabelMap>& z);

/// Uniformly random permutation of 0..n-1 drawn from (seed, draw).
std::vector<int> random_permutation(int n, std::uint64_t seed, std::uint64_t draw);

/// Shuffle loss for one fixed permutation: CE(y_self_shuffled, y_fuse_shuffled)
/// where rater m's label (or own threshold) is paired with prediction perm[m].
double shuffle_loss_for(const std::vector<SoftMap>& z_hat, const std::vector<HardLabelMap>& z,
                        const PriorField& p_u, const std::vector<int>& perm);

/// Mean of shuffle_loss_for over `num_shuffles` seeded uniform permutations
/// (sampled with replacement, identity allowed).
double shuffle_loss(const std::vector<SoftMap>& z_hat, const std::vector<HardLabelMap>& z, const PriorField& p_u,
                    int num_shuffles = 3, std::uint64_t seed = 0);

/// sum_i rec_i + zeta * sff_i.
double total_loss(const std::vector<double>& rec_losses, const std::vector<double>& shuffle_losses,
                  double zeta = 0.3);

}  // namespace mrfuse

#endif  // MRFUSE_LOSSES_HPP
