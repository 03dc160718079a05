#include "doctest.h"
#include "support.hpp"

#include "mrfuse/fusion.hpp"
#include "mrfuse/rater_model.hpp"

#include <cmath>
#include <random>

using namespace mrfuse;
using doctest::Approx;

namespace {

ConfusionMatrix confusion(std::initializer_list<double> col_major, Index k) {
  Eigen::MatrixXd theta(k, k);
  auto it = col_major.begin();
  for (Index c = 0; c < k; ++c)
    for (Index r = 0; r < k; ++r) theta(r, c) = *it++;
  return {"r", theta};
}

// Independent brute force: enumerate all classes, multiply likelihoods.
std::vector<double> enumerate_posterior(const std::vector<Eigen::MatrixXd>& thetas, const std::vector<double>& prior,
                                        const std::vector<int>& obs) {
  std::vector<double> joint(prior.size());
  double total = 0.0;
  for (std::size_t k = 0; k < prior.size(); ++k) {
    joint[k] = prior[k];
    for (std::size_t m = 0; m < obs.size(); ++m) joint[k] *= thetas[m](obs[m], static_cast<Index>(k));
    total += joint[k];
  }
  for (auto& j : joint) j /= total;
  return joint;
}

}  // namespace

TEST_CASE("estimate_confusion") {
  SUBCASE("perfect rater gives identity") {
    const auto z = testing::random_labels(6, 6, 3, 1);
    const auto c = estimate_confusion(z.one_hot(), z, "r1");
    CHECK(c.rater_id == "r1");
    CHECK(c.theta.isApprox(Eigen::MatrixXd::Identity(3, 3)));
  }
  SUBCASE("rater says 1 everywhere, y says 0") {
    const HardLabelMap y(3, 3, 2, 0);
    const HardLabelMap z(3, 3, 2, 1);
    const auto c = estimate_confusion(y.one_hot(), z, "r");
    CHECK(c.theta(0, 0) == 0.0);
    CHECK(c.theta(1, 0) == 1.0);
    // column 1 has no mass: uniform
    CHECK(c.theta(0, 1) == 0.5);
    CHECK(c.theta(1, 1) == 0.5);
  }
  SUBCASE("uniform y on a 2x2 grid, half the labels each") {
    const SoftMap y(2, 2, 2, 0.5);
    HardLabelMap z(2, 2, 2);
    z.set(0, 1);
    z.set(3, 1);
    const auto c = estimate_confusion(y, z, "r");
    CHECK(c.theta(0, 0) == Approx(0.5));
    CHECK(c.theta(0, 1) == Approx(0.5));
  }
  SUBCASE("column stochastic, order invariant") {
    const auto y = testing::random_soft_map(5, 7, 3, 2);
    const auto z = testing::random_labels(5, 7, 3, 3);
    const auto c = estimate_confusion(y, z, "r");
    CHECK(is_column_stochastic(c.theta));

    // reverse pixel order
    SoftMap yr(7, 5, 3);
    HardLabelMap zr(7, 5, 3);
    for (Index p = 0; p < 35; ++p) {
      yr.pixel(34 - p) = y.pixel(p);
      zr.set(34 - p, z[p]);
    }
    CHECK((estimate_confusion(yr, zr, "r").theta - c.theta).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(estimate_confusion(SoftMap(2, 2, 2, 0.5), HardLabelMap(2, 3, 2), "r"), ShapeError);
  }
}

TEST_CASE("predict_rater_map") {
  const auto y = testing::random_soft_map(4, 4, 3, 5);
  CHECK((predict_rater_map(y, {"r", Eigen::MatrixXd::Identity(3, 3)}).values() - y.values()).cwiseAbs().maxCoeff() <
        1e-15);
  const auto u = predict_rater_map(y, {"r", Eigen::MatrixXd::Constant(3, 3, 1.0 / 3.0)});
  CHECK((u.values().array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);

  const auto z = predict_rater_map(testing::single_pixel({0.7, 0.3}), confusion({0.9, 0.1, 0.2, 0.8}, 2));
  CHECK(z.values()(0, 0) == Approx(0.69));
  CHECK(z.values()(0, 1) == Approx(0.31));

  SUBCASE("one-hot y reproduces empirical label frequencies") {
    const auto truth = testing::random_labels(20, 20, 3, 6);
    const auto rater = testing::random_labels(20, 20, 3, 7);
    const auto theta = estimate_confusion(truth.one_hot(), rater, "r");
    const auto pred = predict_rater_map(truth.one_hot(), theta);
    for (int k = 0; k < 3; ++k) {
      int n = 0;
      Eigen::VectorXd freq = Eigen::VectorXd::Zero(3);
      for (Index p = 0; p < truth.pixels(); ++p) {
        if (truth[p] != k) continue;
        ++n;
        freq(rater[p]) += 1.0;
      }
      freq /= n;
      for (Index p = 0; p < truth.pixels(); ++p)
        if (truth[p] == k) CHECK((pred.pixel(p).transpose() - freq).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("confidence_from_prediction") {
  const auto c = confidence_from_prediction(testing::single_pixel({0.5, 0.5}));
  CHECK(c.values()(0, 0) == Approx(std::log(0.5)));
  const auto d = confidence_from_prediction(testing::single_pixel({0.0, 1.0}));
  CHECK(d.values()(0, 0) == Approx(std::log(1e-6)));
  CHECK(d.values()(0, 1) == 0.0);
}

TEST_CASE("posterior_confidence") {
  const auto id = posterior_confidence({"r", Eigen::MatrixXd::Identity(2, 2)}, HardLabelMap(1, 1, 2, 0));
  CHECK(id.values()(0, 0) == 0.0);
  CHECK(id.values()(0, 1) == Approx(std::log(1e-6)));

  const auto theta = confusion({0.8, 0.2, 0.3, 0.7}, 2);
  const auto c = posterior_confidence(theta, HardLabelMap(1, 1, 2, 0));
  CHECK(c.values()(0, 0) == Approx(std::log(0.8)));
  CHECK(c.values()(0, 1) == Approx(std::log(0.3)));

  const auto y = fuse_loglik<double>({c}, uniform_prior(1, 1, 2));
  CHECK(y.values()(0, 0) == Approx(0.72727).epsilon(1e-5));
  CHECK(y.values()(0, 1) == Approx(0.27273).epsilon(1e-5));
}

TEST_CASE("bayes_oracle") {
  const auto theta = confusion({0.8, 0.2, 0.3, 0.7}, 2);
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(2, 0.5);

  const auto none = bayes_oracle({}, uniform, {});
  CHECK(none(0) == 0.5);

  const auto one = bayes_oracle({theta}, uniform, {0});
  CHECK(one(0) == Approx(0.8 / 1.1).epsilon(1e-14));
  CHECK(one(1) == Approx(0.3 / 1.1).epsilon(1e-14));

  CHECK_THROWS_AS(bayes_oracle({confusion({1, 0, 1, 0}, 2)}, uniform, {1}), DomainError);
  CHECK_THROWS_AS(bayes_oracle({theta}, uniform, {}), ShapeError);
}

TEST_CASE("fuse_loglik of posterior confidences is the Bayes posterior") {
  std::mt19937 gen(2024);
  std::uniform_real_distribution<double> u(0.02, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const Index K = 2 + trial % 2;
    const std::size_t M = 2 + static_cast<std::size_t>(trial % 3);
    std::vector<ConfusionMatrix> thetas;
    std::vector<Eigen::MatrixXd> raw;
    for (std::size_t m = 0; m < M; ++m) {
      Eigen::MatrixXd t(K, K);
      for (Index c = 0; c < K; ++c) {
        for (Index r = 0; r < K; ++r) t(r, c) = u(gen);
        t.col(c) /= t.col(c).sum();
      }
      raw.push_back(t);
      thetas.push_back({"r", t});
    }
    std::vector<double> prior(static_cast<std::size_t>(K));
    double ps = 0.0;
    for (auto& p : prior) ps += (p = u(gen));
    for (auto& p : prior) p /= ps;

    const Index H = 2, W = 3;
    PriorField logp(H, W, K);
    for (Index px = 0; px < H * W; ++px)
      for (Index k = 0; k < K; ++k) logp.values()(px, k) = std::log(prior[static_cast<std::size_t>(k)]);
    std::vector<HardLabelMap> z;
    std::vector<ConfidenceMap> c;
    for (std::size_t m = 0; m < M; ++m) {
      z.push_back(testing::random_labels(H, W, K, static_cast<unsigned>(trial * 10 + m)));
      c.push_back(posterior_confidence(thetas[m], z.back()));
    }
    const auto fused = fuse_loglik(c, logp);
    Eigen::VectorXd pv = Eigen::Map<Eigen::VectorXd>(prior.data(), K);
    for (Index px = 0; px < H * W; ++px) {
      std::vector<int> obs;
      for (const auto& zm : z) obs.push_back(zm[px]);
      const auto brute = enumerate_posterior(raw, prior, obs);
      const auto oracle = bayes_oracle(thetas, pv, obs);
      for (Index k = 0; k < K; ++k) {
        worst = std::max(worst, std::abs(fused.values()(px, k) - brute[static_cast<std::size_t>(k)]));
        worst = std::max(worst, std::abs(oracle(k) - brute[static_cast<std::size_t>(k)]));
      }
    }
  }
  CHECK(worst < 1e-10);
}
