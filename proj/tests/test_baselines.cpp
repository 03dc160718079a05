#include "doctest.h"
#include "support.hpp"

#include "mrfuse/baselines.hpp"
#include "mrfuse/synthgen.hpp"

#include <cmath>

using namespace mrfuse;
using doctest::Approx;

namespace {

RaterPanel panel_of(std::vector<HardLabelMap> labels) {
  RaterPanel p;
  for (std::size_t m = 0; m < labels.size(); ++m) p.rater_ids.push_back("r" + std::to_string(m));
  p.labels = std::move(labels);
  return p;
}

RaterPanel noisy_panel(unsigned seed, Index K, int M) {
  const auto gt = generate_case(seed, 20, 20, K).ground_truth;
  std::vector<RaterSpec> specs;
  for (int m = 0; m < M; ++m) specs.push_back(RaterSpec::symmetric_confusion(K, 0.6 + 0.1 * (m % 4), m));
  return simulate_raters(gt, specs, seed + 1000);
}

}  // namespace

TEST_CASE("majority_vote") {
  const auto p = panel_of({HardLabelMap(1, 1, 2, 0), HardLabelMap(1, 1, 2, 0), HardLabelMap(1, 1, 2, 1)});
  const auto mv = majority_vote(p);
  CHECK(mv.values()(0, 0) == Approx(2.0 / 3.0));
  CHECK(mv.values()(0, 1) == Approx(1.0 / 3.0));

  const auto z = testing::random_labels(5, 6, 3, 1);
  CHECK(majority_vote(panel_of({z, z, z})) == z.one_hot());

  const auto a = testing::random_labels(5, 6, 3, 2), b = testing::random_labels(5, 6, 3, 3);
  const auto ab = majority_vote(panel_of({z, a, b}));
  CHECK(ab == majority_vote(panel_of({b, z, a})));
  for (Index px = 0; px < ab.pixels(); ++px) CHECK(ab.pixel(px).sum() == Approx(1.0).epsilon(1e-15));

  CHECK_THROWS(majority_vote(RaterPanel{}));
  CHECK_THROWS_AS(majority_vote(panel_of({z, HardLabelMap(5, 5, 3)})), ShapeError);
}

TEST_CASE("STAPLE on a unanimous panel") {
  const auto z = testing::random_labels(8, 8, 3, 4);
  const auto r = staple_em(panel_of({z, z, z}));
  CHECK(r.converged);
  CHECK((r.posterior.values() - z.one_hot().values()).cwiseAbs().maxCoeff() < 1e-9);
  for (const auto& t : r.thetas) CHECK((t.theta - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("STAPLE on anti-correlated raters stays at the symmetric point") {
  HardLabelMap a(6, 6, 2);
  for (Index p = 0; p < 18; ++p) a.set(p, 1);
  HardLabelMap b(6, 6, 2);
  for (Index p = 18; p < 36; ++p) b.set(p, 1);
  const auto r = staple_em(panel_of({a, b}));
  CHECK(r.converged);
  CHECK((r.posterior.values().array() - 0.5).abs().maxCoeff() < 1e-12);
  for (const auto& t : r.thetas) CHECK((t.theta.array() - 0.5).abs().maxCoeff() < 1e-12);
}

TEST_CASE("STAPLE E-step equals the Bayes oracle") {
  for (unsigned s = 0; s < 5; ++s) {
    const Index K = 2 + s % 2;
    const auto panel = noisy_panel(s, K, 3);
    const auto r = staple_em(panel);
    const auto post = staple_e_step(panel, r.thetas, r.prior);
    for (Index p = 0; p < post.pixels(); ++p) {
      std::vector<int> obs;
      for (const auto& z : panel.labels) obs.push_back(z[p]);
      CHECK((post.pixel(p).transpose() - bayes_oracle(r.thetas, r.prior, obs)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("STAPLE log-likelihood never decreases") {
  for (unsigned s = 0; s < 20; ++s) {
    const auto panel = noisy_panel(50 + s, 2 + s % 2, 3 + static_cast<int>(s % 3));
    StapleOptions opt;
    opt.tol = 1e-12;
    opt.reestimate_prior = s % 2 == 1;
    const auto r = staple_em(panel, opt);
    REQUIRE(r.log_likelihood.size() >= 2);
    for (std::size_t i = 1; i < r.log_likelihood.size(); ++i)
      CHECK(r.log_likelihood[i] >= r.log_likelihood[i - 1] - 1e-9);
  }
}

TEST_CASE("STAPLE is rater-permutation invariant and recovers the truth better than MV") {
  const auto panel = noisy_panel(9, 2, 5);
  auto swapped = panel;
  std::swap(swapped.labels[0], swapped.labels[4]);
  std::swap(swapped.rater_ids[0], swapped.rater_ids[4]);
  CHECK((staple_em(panel).posterior.values() - staple_em(swapped).posterior.values()).cwiseAbs().maxCoeff() < 1e-12);

  StapleOptions opt;
  opt.max_iters = 0;
  CHECK_THROWS(staple_em(panel, opt));
}
