#include "mrfuse/losses.hpp"

#include "mrfuse/filters.hpp"
#include "mrfuse/fusion.hpp"
#include "mrfuse/rng.hpp"

#include <numeric>
#include <stdexcept>

namespace mrfuse {

void SsimConfig::validate() const {
  if (window < 3 || window % 2 == 0) throw std::invalid_argument("ssim: window must be odd and >= 3");
  if (!(gaussian_sigma > 0.0)) throw std::invalid_argument("ssim: gaussian_sigma must be > 0");
  if (!(c1 > 0.0 && c2 > 0.0)) throw std::invalid_argument("ssim: stabilizers must be > 0");
}

double ssim(const ImageMatrix<double>& a, const ImageMatrix<double>& b, const SsimConfig& config) {
  config.validate();
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("ssim: size mismatch");
  if (a.size() == 0) throw ShapeError("ssim: empty input");

  const int n = config.window;
  const double s = config.gaussian_sigma;
  const ImageMatrix<double> mu_a = gaussian_filter(a, n, s);
  const ImageMatrix<double> mu_b = gaussian_filter(b, n, s);
  const ImageMatrix<double> aa = gaussian_filter(a.cwiseProduct(a), n, s);
  const ImageMatrix<double> bb = gaussian_filter(b.cwiseProduct(b), n, s);
  const ImageMatrix<double> ab = gaussian_filter(a.cwiseProduct(b), n, s);

  const auto ma = mu_a.array();
  const auto mb = mu_b.array();
  const auto var_a = aa.array() - ma.square();
  const auto var_b = bb.array() - mb.square();
  const auto cov = ab.array() - ma * mb;
  const auto map = ((2.0 * ma * mb + config.c1) * (2.0 * cov + config.c2)) /
                   ((ma.square() + mb.square() + config.c1) * (var_a + var_b + config.c2));
  return map.mean();
}

double ssim(const SoftMap& a, const SoftMap& b, const SsimConfig& config) {
  detail::require_same_shape(a, b, "ssim");
  if (a.classes() == 0) throw ShapeError("ssim: no channels");
  double sum = 0.0;
  for (Index k = 0; k < a.classes(); ++k) sum += ssim(a.channel(k), b.channel(k), config);
  return sum / static_cast<double>(a.classes());
}

double ssim_loss(const SoftMap& a, const SoftMap& b, const SsimConfig& config) { return 1.0 - ssim(a, b, config); }

double cross_entropy(const SoftMap& pred, const SoftMap& target) {
  detail::require_same_shape(pred, target, "cross_entropy");
  if (pred.pixels() == 0) throw ShapeError("cross_entropy: empty input");
  const auto log_pred = pred.values().array().max(kProbabilityFloor).min(1.0).log();
  return -(target.values().array() * log_pred).sum() / static_cast<double>(pred.pixels());
}

double recurrence_loss(const SoftMap& y_i, const SoftMap& y_self_prev, const SoftMap& y_self_i,
                       const SsimConfig& config) {
  return ssim_loss(y_i, y_self_prev, config) + ssim_loss(y_self_i, y_i, config);
}

double mh_loss(const std::vector<SoftMap>& z_hat, const std::vector<HardLabelMap>& z) {
  if (z_hat.size() != z.size()) throw ShapeError("mh_loss: prediction and label counts differ");
  double sum = 0.0;
  for (std::size_t m = 0; m < z.size(); ++m) {
    detail::require_same_grid(z_hat[m], z[m], "mh_loss");
    sum += cross_entropy(z_hat[m], z[m].one_hot());
  }
  return sum;
}

std::vector<int> random_permutation(int n, std::uint64_t seed, std::uint64_t draw) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  const CounterRng rng(seed, {0x5aff1eULL, draw});
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

double shuffle_loss_for(const std::vector<SoftMap>& z_hat, const std::vector<HardLabelMap>& z,
                        const PriorField& p_u, const std::vector<int>& perm) {
  const std::size_t M = z_hat.size();
  if (z.size() != M || perm.size() != M) throw ShapeError("shuffle_loss: rater counts differ");
  if (M == 0) throw std::invalid_argument("shuffle_loss: at least one rater required");

  std::vector<SoftMap> shuffled;
  shuffled.reserve(M);
  for (int idx : perm) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= M) throw std::invalid_argument("shuffle_loss: bad permutation");
    shuffled.push_back(z_hat[static_cast<std::size_t>(idx)]);
  }
  std::vector<HardLabelMap> own;
  own.reserve(M);
  for (const auto& zm : z_hat) own.push_back(threshold(zm, 0.5));

  const SoftMap fused = label_fusion(shuffled, z, p_u);
  const SoftMap self = label_fusion(shuffled, own, p_u);
  return cross_entropy(self, fused);
}

double shuffle_loss(const std::vector<SoftMap>& z_hat, const std::vector<HardLabelMap>& z, const PriorField& p_u,
                    int num_shuffles, std::uint64_t seed) {
  if (num_shuffles < 1) throw std::invalid_argument("shuffle_loss: num_shuffles must be >= 1");
  double sum = 0.0;
  for (int s = 0; s < num_shuffles; ++s)
    sum += shuffle_loss_for(z_hat, z, p_u, random_permutation(static_cast<int>(z_hat.size()), seed,
                                                              static_cast<std::uint64_t>(s)));
  return sum / num_shuffles;
}

double total_loss(const std::vector<double>& rec_losses, const std::vector<double>& shuffle_losses, double zeta) {
  if (rec_losses.size() != shuffle_losses.size())
    throw std::invalid_argument("total_loss: per-iteration loss lists differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < rec_losses.size(); ++i) total += rec_losses[i] + zeta * shuffle_losses[i];
  return total;
}

}  // namespace mrfuse
