#include "doctest.h"
#include "support.hpp"

#include "mrfuse/fusion.hpp"

#include <algorithm>
#include <cmath>

using namespace mrfuse;
using doctest::Approx;

namespace {

ConfidenceMap pixel_confidence(std::initializer_list<double> values) {
  ConfidenceMap c(1, 1, static_cast<Index>(values.size()));
  Index k = 0;
  for (double v : values) c.values()(0, k++) = v;
  return c;
}

HardLabelMap pixel_label(int k, Index classes) { return HardLabelMap(1, 1, classes, k); }

// softmax written out by hand
std::vector<double> hand_softmax(std::vector<double> logits) {
  double denom = 0.0;
  for (double l : logits) denom += std::exp(l);
  for (double& l : logits) l = std::exp(l) / denom;
  return logits;
}

void check_soft_map(const SoftMap& m) {
  CHECK((m.values().array() >= 0.0).all());
  CHECK((m.values().array() <= 1.0).all());
  for (Index p = 0; p < m.pixels(); ++p) CHECK(m.pixel(p).sum() == Approx(1.0).epsilon(1e-12));
}

}  // namespace

TEST_CASE("fuse_literal examples") {
  const PriorField pu = uniform_prior(1, 1, 2);

  SUBCASE("zero weights give uniform") {
    const auto y = fuse_literal<double>({pixel_confidence({0.0, 0.0})}, {pixel_label(0, 2)}, pu);
    CHECK(y.values()(0, 0) == Approx(0.5));
    CHECK(y.values()(0, 1) == Approx(0.5));
  }
  SUBCASE("two raters voting 0 with log 0.9 push toward class 1") {
    const double l = std::log(0.9);
    const auto y = fuse_literal<double>({pixel_confidence({l, l}), pixel_confidence({l, l})},
                                        {pixel_label(0, 2), pixel_label(0, 2)}, pu);
    const auto expect = hand_softmax({2 * l, 0.0});
    CHECK(y.values()(0, 0) == Approx(expect[0]).epsilon(1e-12));
    CHECK(y.values()(0, 0) == Approx(0.4475).epsilon(1e-4));
    CHECK(y.values()(0, 1) == Approx(0.5525).epsilon(1e-4));
  }
  SUBCASE("errors") {
    CHECK_THROWS(fuse_literal<double>({}, {}, pu));
    CHECK_THROWS_AS(fuse_literal<double>({pixel_confidence({0, 0})}, {}, pu), ShapeError);
    CHECK_THROWS_AS(fuse_literal<double>({pixel_confidence({0, 0, 0})}, {pixel_label(0, 3)}, pu), ShapeError);
  }
}

TEST_CASE("fuse_loglik examples") {
  const PriorField pu = uniform_prior(1, 1, 2);
  SUBCASE("single rater Bayes") {
    const auto y = fuse_loglik<double>({pixel_confidence({std::log(0.8), std::log(0.3)})}, pu);
    CHECK(y.values()(0, 0) == Approx(0.8 / 1.1).epsilon(1e-12));
    CHECK(y.values()(0, 1) == Approx(0.3 / 1.1).epsilon(1e-12));
    CHECK(y.values()(0, 0) == Approx(0.72727).epsilon(1e-5));
  }
  SUBCASE("zero confidences return the prior") {
    PriorField p(1, 1, 3);
    p.values() << 0.2, -1.0, 0.7;
    const auto y = fuse_loglik<double>({pixel_confidence({0, 0, 0})}, p);
    const auto expect = hand_softmax({0.2, -1.0, 0.7});
    for (int k = 0; k < 3; ++k) CHECK(y.values()(0, k) == Approx(expect[k]).epsilon(1e-12));
  }
  SUBCASE("no raters gives softmax(p)") {
    PriorField p(1, 1, 2);
    p.values() << 1.0, 0.0;
    const auto y = fuse_loglik<double>({}, p);
    CHECK(y.values()(0, 0) == Approx(hand_softmax({1.0, 0.0})[0]));
  }
}

TEST_CASE("self and label fusion examples") {
  const PriorField pu = uniform_prior(1, 1, 2);

  SUBCASE("literal self fusion of two (0.9, 0.1) raters") {
    const auto y = self_fusion<double>({testing::single_pixel({0.9, 0.1}), testing::single_pixel({0.9, 0.1})}, pu);
    CHECK(y.values()(0, 0) == Approx(0.4475).epsilon(1e-4));
    CHECK(y.values()(0, 1) == Approx(0.5525).epsilon(1e-4));
  }
  SUBCASE("one-hot predictions contribute log 1 = 0: uniform output") {
    const auto hot = testing::random_labels(4, 4, 3, 1).one_hot();
    const auto y = self_fusion<double>({hot, hot, hot}, uniform_prior(4, 4, 3));
    CHECK((y.values().array() - 1.0 / 3.0).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("uniform prediction: threshold falls back to class 0") {
    const auto y = self_fusion<double>({testing::single_pixel({0.5, 0.5})}, pu);
    // T = class 0, so logit(0) = log 0.5, logit(1) = 0
    CHECK(y.values()(0, 0) == Approx(hand_softmax({std::log(0.5), 0.0})[0]));
  }
  SUBCASE("label fusion hand value") {
    const auto y = label_fusion<double>({testing::single_pixel({0.7, 0.3})}, {pixel_label(0, 2)}, pu);
    CHECK(y.values()(0, 0) == Approx(0.4118).epsilon(1e-4));
    CHECK(y.values()(0, 1) == Approx(0.5882).epsilon(1e-4));
  }
  SUBCASE("label fusion equals self fusion when predictions are the labels") {
    std::vector<HardLabelMap> z;
    std::vector<SoftMap> hot;
    for (unsigned m = 0; m < 3; ++m) {
      z.push_back(testing::random_labels(5, 4, 3, 10 + m));
      hot.push_back(z.back().one_hot());
    }
    const auto pu3 = uniform_prior(5, 4, 3);
    CHECK(label_fusion(hot, z, pu3) == self_fusion(hot, pu3));
  }
}

TEST_CASE("fusion invariants") {
  const Index H = 6, W = 5, K = 3;
  std::vector<SoftMap> zh;
  std::vector<HardLabelMap> z;
  std::vector<ConfidenceMap> w;
  for (unsigned m = 0; m < 4; ++m) {
    zh.push_back(testing::random_soft_map(H, W, K, 20 + m));
    z.push_back(testing::random_labels(H, W, K, 30 + m));
    ConfidenceMap c(H, W, K);
    c.values() = testing::random_soft_map(H, W, K, 40 + m).values().array().log().matrix();
    w.push_back(c);
  }
  PriorField p(H, W, K);
  p.values() = testing::random_soft_map(H, W, K, 50).values();

  const auto lit = fuse_literal(w, z, p);
  const auto ll = fuse_loglik(w, p);
  const auto lf = label_fusion(zh, z, p);
  const auto sf = self_fusion(zh, p);
  for (const auto* m : {&lit, &ll, &lf, &sf}) check_soft_map(*m);

  SUBCASE("rater permutation") {
    std::vector<int> order{2, 0, 3, 1};
    std::vector<SoftMap> zh2;
    std::vector<HardLabelMap> z2;
    std::vector<ConfidenceMap> w2;
    for (int i : order) {
      zh2.push_back(zh[i]);
      z2.push_back(z[i]);
      w2.push_back(w[i]);
    }
    CHECK((fuse_literal(w2, z2, p).values() - lit.values()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((fuse_loglik(w2, p).values() - ll.values()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((label_fusion(zh2, z2, p).values() - lf.values()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((self_fusion(zh2, p).values() - sf.values()).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("adding a constant to p changes nothing") {
    PriorField shifted = p;
    shifted.values().array() += 7.5;
    CHECK((fuse_literal(w, z, shifted).values() - lit.values()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((fuse_loglik(w, shifted).values() - ll.values()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((label_fusion(zh, z, shifted).values() - lf.values()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((self_fusion(zh, shifted).values() - sf.values()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("large logits stay finite") {
    PriorField big = p;
    big.values() *= 1e4;
    check_soft_map(fuse_loglik(w, big));
  }
}

TEST_CASE("threshold rules") {
  CHECK(threshold(testing::single_pixel({0.9, 0.1}), 0.5)[0] == 0);
  CHECK(threshold(testing::single_pixel({0.1, 0.9}), 0.5)[0] == 1);
  CHECK(threshold(testing::single_pixel({0.5, 0.5}), 0.5)[0] == 0);
  CHECK(threshold(testing::single_pixel({0.4, 0.35, 0.25}), 0.5)[0] == 0);
  CHECK(threshold(testing::single_pixel({0.3, 0.3, 0.4}), 0.5)[0] == 2);
  // several above theta: argmax
  CHECK(threshold(testing::single_pixel({0.45, 0.55, 0.0}), 0.2)[0] == 1);
  // exactly one above a low theta wins even if another is close
  CHECK(threshold(testing::single_pixel({0.15, 0.7, 0.15}), 0.2)[0] == 1);
  CHECK_THROWS(threshold(testing::single_pixel({0.5, 0.5}), 0.0));
  CHECK_THROWS(threshold(testing::single_pixel({0.5, 0.5}), 1.0));

  const auto z = threshold(testing::random_soft_map(7, 7, 3, 2), 0.5);
  CHECK(threshold(z.one_hot(), 0.5) == z);
}

TEST_CASE("init_confidence") {
  SUBCASE("deterministic and in range") {
    const auto a = init_confidence(3, 8, 9, 2, 42);
    const auto b = init_confidence(3, 8, 9, 2, 42);
    REQUIRE(a.size() == 3);
    for (std::size_t m = 0; m < 3; ++m) {
      CHECK(a[m] == b[m]);
      CHECK((a[m].values().array() <= 0.0).all());
      CHECK((a[m].values().array() >= std::log(1e-6) - 1e-12).all());
    }
    CHECK_FALSE(init_confidence(3, 8, 9, 2, 43)[0] == a[0]);
  }
  SUBCASE("psi 0.5 without noise is log 0.5") {
    const auto c = init_confidence_for(7, 3, 3, 2, 1, {0.5, 0.5, 0.0, 0.0});
    CHECK((c.values().array() - std::log(0.5)).abs().maxCoeff() < 1e-15);
  }
  SUBCASE("psi + eps above 1 clips to confidence 0") {
    const auto c = init_confidence_for(7, 3, 3, 2, 1, {1.3, 1.3, 0.0, 0.0});
    CHECK((c.values().array() == 0.0).all());
  }
  SUBCASE("psi shared within a rater") {
    // with sigma 0 each rater map is constant; the constant lies in log[0.1, 0.9]
    const auto maps = init_confidence(5, 4, 4, 2, 9, {0.1, 0.9, 0.0, 0.0});
    for (const auto& m : maps) {
      CHECK(m.values().maxCoeff() == m.values().minCoeff());
      CHECK(std::exp(m.values()(0, 0)) >= 0.1 - 1e-12);
      CHECK(std::exp(m.values()(0, 0)) <= 0.9 + 1e-12);
    }
  }
  SUBCASE("noise statistics") {
    // a = b = 0.5 puts the clip far away, so log-exp recovers eps ~ N(0, 0.2^2)
    const auto c = init_confidence_for(3, 100, 100, 2, 5, {0.5, 0.5, 0.0, 0.2});
    const Eigen::ArrayXXd eps = c.values().array().exp() - 0.5;
    const auto inside = (c.values().array() < 0.0) && (c.values().array() > std::log(1e-6) + 1e-9);
    CHECK(inside.count() > 19000);
    CHECK(std::abs(eps.mean()) < 0.01);
  }
  SUBCASE("init_fused delegates to fuse_literal") {
    const auto w = init_confidence(2, 3, 3, 2, 3);
    std::vector<HardLabelMap> z{testing::random_labels(3, 3, 2, 1), testing::random_labels(3, 3, 2, 2)};
    CHECK(init_fused(w, z, uniform_prior(3, 3, 2)) == fuse_literal(w, z, uniform_prior(3, 3, 2)));
  }
}

TEST_CASE("label map validation") {
  CHECK_THROWS_AS(HardLabelMap(2, 2, 2, 2), DomainError);
  HardLabelMap z(2, 2, 3);
  CHECK_THROWS_AS(z.set(0, 3), DomainError);
  CHECK_THROWS_AS(z.set(0, -1), DomainError);
}
