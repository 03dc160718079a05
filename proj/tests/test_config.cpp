#include "doctest.h"
#include "support.hpp"

#include "mrfuse/config.hpp"

#include <fstream>

using namespace mrfuse;

TEST_CASE("solver config json round trip") {
  SolverConfig c;
  c.tau = 5;
  c.beta0 = 0.5;
  c.gamma = 1.5;
  c.prior.eta = 0.3;
  c.prior.sigma_edge = 0.2;
  c.prior.smoothing_iters = 7;
  c.confidence_form = ConfidenceForm::alg1_logmap;
  c.prox_target = ProxTarget::label_fusion;
  c.hard_confusion_fit = false;
  c.convergence_ssim = 0.99;
  c.seed = 123456789012345ULL;
  c.num_shuffles = 4;
  c.zeta = 0.1;
  c.use_mh_loss = true;
  c.ssim.window = 7;

  const auto back = solver_config_from_json(solver_config_to_json(c));
  CHECK(back.tau == 5);
  CHECK(back.beta0 == 0.5);
  CHECK(back.gamma == 1.5);
  CHECK(back.prior.eta == 0.3);
  CHECK(back.prior.sigma_edge == 0.2);
  CHECK(back.prior.smoothing_iters == 7);
  CHECK(back.confidence_form == ConfidenceForm::alg1_logmap);
  CHECK(back.prox_target == ProxTarget::label_fusion);
  CHECK_FALSE(back.hard_confusion_fit);
  CHECK(back.convergence_ssim == 0.99);
  CHECK(back.seed == 123456789012345ULL);
  CHECK(back.num_shuffles == 4);
  CHECK(back.zeta == 0.1);
  CHECK(back.use_mh_loss);
  CHECK(back.ssim.window == 7);
  CHECK(solver_config_to_json(back) == solver_config_to_json(c));
}

TEST_CASE("partial json keeps defaults") {
  const auto c = solver_config_from_json(R"({"tau": 2, "prior": {"eta": 0.5}})");
  const SolverConfig d;
  CHECK(c.tau == 2);
  CHECK(c.prior.eta == 0.5);
  CHECK(c.prior.sigma_edge == d.prior.sigma_edge);
  CHECK(c.beta0 == d.beta0);
}

TEST_CASE("config errors") {
  CHECK_THROWS(solver_config_from_json(R"({"taus": 2})"));
  CHECK_THROWS(solver_config_from_json(R"({"prior": {"etaa": 2}})"));
  CHECK_THROWS(solver_config_from_json(R"({"tau": 0})"));
  CHECK_THROWS(solver_config_from_json(R"({"gamma": 0.5})"));
  CHECK_THROWS(solver_config_from_json(R"({"beta0": -1})"));
  CHECK_THROWS(solver_config_from_json(R"({"confidence_form": "other"})"));
  CHECK_THROWS(solver_config_from_json(R"({"ssim": {"window": 4}})"));
  CHECK_THROWS(solver_config_from_json("{not json"));
  CHECK_THROWS(solver_config_from_json(R"({"tau": "three"})"));
  CHECK_THROWS(load_solver_config("/nonexistent/config.json"));
}

TEST_CASE("load from file") {
  const auto dir = testing::scratch_dir("config");
  std::ofstream(dir / "c.json") << R"({"tau": 4, "prox_target": "label_fusion"})";
  const auto c = load_solver_config(dir / "c.json");
  CHECK(c.tau == 4);
  CHECK(c.prox_target == ProxTarget::label_fusion);
}

TEST_CASE("enum names") {
  CHECK(to_string(ConfidenceForm::prop1_posterior) == "prop1_posterior");
  CHECK(confidence_form_from_string("alg1_logmap") == ConfidenceForm::alg1_logmap);
  CHECK(to_string(ProxTarget::self_fusion) == "self_fusion");
  CHECK(prox_target_from_string("label_fusion") == ProxTarget::label_fusion);
  CHECK_THROWS(prox_target_from_string("x"));
}
