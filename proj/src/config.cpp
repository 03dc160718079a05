#include "mrfuse/config.hpp"

#include "json.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mrfuse {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key())) throw std::invalid_argument("config: unknown key " + where + item.key());
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

SolverConfig solver_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  reject_unknown(j,
                 {"tau", "beta0", "gamma", "prior", "confidence_form", "prox_target", "convergence_ssim", "seed",
                  "num_shuffles", "zeta", "use_mh_loss", "hard_confusion_fit", "ssim"},
                 "");
  SolverConfig c;
  try {
    read(j, "tau", c.tau);
    read(j, "beta0", c.beta0);
    read(j, "gamma", c.gamma);
    read(j, "convergence_ssim", c.convergence_ssim);
    read(j, "seed", c.seed);
    read(j, "num_shuffles", c.num_shuffles);
    read(j, "zeta", c.zeta);
    read(j, "use_mh_loss", c.use_mh_loss);
    read(j, "hard_confusion_fit", c.hard_confusion_fit);
    if (j.contains("confidence_form")) c.confidence_form = confidence_form_from_string(j["confidence_form"].get<std::string>());
    if (j.contains("prox_target")) c.prox_target = prox_target_from_string(j["prox_target"].get<std::string>());
    if (j.contains("prior")) {
      const auto& p = j["prior"];
      reject_unknown(p, {"eta", "sigma_edge", "smoothing_iters"}, "prior.");
      read(p, "eta", c.prior.eta);
      read(p, "sigma_edge", c.prior.sigma_edge);
      read(p, "smoothing_iters", c.prior.smoothing_iters);
    }
    if (j.contains("ssim")) {
      const auto& s = j["ssim"];
      reject_unknown(s, {"window", "gaussian_sigma", "c1", "c2"}, "ssim.");
      read(s, "window", c.ssim.window);
      read(s, "gaussian_sigma", c.ssim.gaussian_sigma);
      read(s, "c1", c.ssim.c1);
      read(s, "c2", c.ssim.c2);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string solver_config_to_json(const SolverConfig& c) {
  json j;
  j["tau"] = c.tau;
  j["beta0"] = c.beta0;
  j["gamma"] = c.gamma;
  j["prior"] = {{"eta", c.prior.eta}, {"sigma_edge", c.prior.sigma_edge}, {"smoothing_iters", c.prior.smoothing_iters}};
  j["confidence_form"] = to_string(c.confidence_form);
  j["prox_target"] = to_string(c.prox_target);
  j["convergence_ssim"] = c.convergence_ssim;
  j["seed"] = c.seed;
  j["num_shuffles"] = c.num_shuffles;
  j["zeta"] = c.zeta;
  j["use_mh_loss"] = c.use_mh_loss;
  j["hard_confusion_fit"] = c.hard_confusion_fit;
  j["ssim"] = {{"window", c.ssim.window}, {"gaussian_sigma", c.ssim.gaussian_sigma}, {"c1", c.ssim.c1}, {"c2", c.ssim.c2}};
  return j.dump(2) + "\n";
}

SolverConfig load_solver_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return solver_config_from_json(ss.str());
}

}  // namespace mrfuse
