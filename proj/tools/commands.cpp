#include "commands.hpp"

#include "CLI11.hpp"

#include "mrfuse/baselines.hpp"
#include "mrfuse/config.hpp"
#include "mrfuse/csv.hpp"
#include "mrfuse/fusion.hpp"
#include "mrfuse/metrics.hpp"
#include "mrfuse/rng.hpp"
#include "mrfuse/solver.hpp"
#include "mrfuse/tensor_io.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace mrfuse::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Returns the error
// message per index (empty on success).
std::vector<std::string> parallel_cases(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (errors[i].empty()) errors[i] = "unknown error";
      }
    }
  };
  const int count = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return errors;
}

int report_failures(const std::vector<std::string>& ids, const std::vector<std::string>& errors, std::ostream& err) {
  int failed = 0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i].empty()) continue;
    err << "case " << ids[i] << " failed: " << errors[i] << "\n";
    ++failed;
  }
  return failed ? kCaseFailure : kOk;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  csv::write_row(out, header);
  for (const auto& r : rows) csv::write_row(out, r);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::pair<Index, Index> parse_size(const std::string& text) {
  int h = 0, w = 0;
  char x = 0;
  std::istringstream in(text);
  if (!(in >> h >> x >> w) || (x != 'x' && x != 'X') || !in.eof() || h < 8 || w < 8)
    throw UsageError("--size must look like HxW with both sides >= 8, got '" + text + "'");
  return {h, w};
}

// Solver flags that override the config file.
struct SolverOverrides {
  std::string config_path;
  std::optional<int> tau;
  std::optional<double> beta0, gamma, eta, sigma_edge, convergence_ssim;
  std::optional<int> smoothing_iters;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> confidence_form, prox_target;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Solver config JSON");
    app->add_option("--tau", tau, "Maximum recurrences");
    app->add_option("--beta0", beta0, "Initial beta");
    app->add_option("--gamma", gamma, "Beta growth per recurrence");
    app->add_option("--eta", eta, "Image prior weight");
    app->add_option("--sigma-edge", sigma_edge, "Edge sensitivity");
    app->add_option("--smoothing-iters", smoothing_iters, "Jacobi sweeps per refinement");
    app->add_option("--convergence-ssim", convergence_ssim, "Early-stop SSIM threshold");
    app->add_option("--seed", seed, "Seed for initial confidences and shuffles");
    app->add_option("--confidence-form", confidence_form, "prop1_posterior | alg1_logmap");
    app->add_option("--prox-target", prox_target, "self_fusion | label_fusion");
  }

  SolverConfig resolve() const {
    SolverConfig c = config_path.empty() ? SolverConfig{} : load_solver_config(config_path);
    if (tau) c.tau = *tau;
    if (beta0) c.beta0 = *beta0;
    if (gamma) c.gamma = *gamma;
    if (eta) c.prior.eta = *eta;
    if (sigma_edge) c.prior.sigma_edge = *sigma_edge;
    if (smoothing_iters) c.prior.smoothing_iters = *smoothing_iters;
    if (convergence_ssim) c.convergence_ssim = *convergence_ssim;
    if (seed) c.seed = *seed;
    if (confidence_form) c.confidence_form = confidence_form_from_string(*confidence_form);
    if (prox_target) c.prox_target = prox_target_from_string(*prox_target);
    c.validate();
    return c;
  }
};

int cmd_synth(std::uint64_t seed, const fs::path& out_dir, int cases, const std::string& size, Index classes,
              const std::vector<std::string>& rater_texts, std::ostream& out) {
  if (cases < 1) throw UsageError("--cases must be >= 1");
  if (classes < 2 || classes > 255) throw UsageError("--classes must lie in [2, 255]");
  const auto [h, w] = parse_size(size);
  std::vector<RaterSpec> specs;
  if (rater_texts.empty()) {
    if (classes != 2) throw UsageError("the default rater panel is binary; pass --raters for K > 2");
    specs = standard_rater_specs();
  } else {
    for (std::size_t i = 0; i < rater_texts.size(); ++i)
      specs.push_back(parse_rater_spec(rater_texts[i], classes, i + 1));
  }

  const auto suite = make_suite(seed, cases, h, w, classes, specs);
  fs::create_directories(out_dir);
  std::vector<CaseManifest> manifest;
  for (const auto& c : suite) {
    CaseManifest m;
    m.case_id = c.case_id;
    m.num_classes = classes;
    m.image = out_dir / (c.case_id + "_image.png");
    write_raw_image(c.image, m.image);
    m.ground_truth = out_dir / (c.case_id + "_gt.png");
    write_hard_labels(c.ground_truth, *m.ground_truth);
    for (std::size_t r = 0; r < c.panel.labels.size(); ++r) {
      m.rater_ids.push_back(c.panel.rater_ids[r]);
      m.raters.push_back(out_dir / (c.case_id + "_" + c.panel.rater_ids[r] + ".png"));
      write_hard_labels(c.panel.labels[r], m.raters.back());
    }
    manifest.push_back(std::move(m));
  }
  save_manifest(manifest, out_dir / "manifest.json");
  out << "wrote " << suite.size() << " cases to " << (out_dir / "manifest.json").string() << "\n";
  return kOk;
}

int cmd_fuse(const fs::path& manifest_path, const std::string& method, const SolverOverrides& overrides,
             const fs::path& out_dir, int jobs, std::ostream& out, std::ostream& err) {
  if (method != "mv" && method != "staple" && method != "mrprism")
    throw UsageError("--method must be one of mv, staple, mrprism");
  const SolverConfig config = overrides.resolve();
  const auto manifest = load_manifest(manifest_path);
  fs::create_directories(out_dir);

  std::vector<std::string> ids;
  for (const auto& m : manifest) ids.push_back(m.case_id);
  const auto errors = parallel_cases(manifest.size(), jobs, [&](std::size_t i) {
    const LoadedCase c = load_case(manifest[i]);
    if (method == "mv") {
      write_soft_map(majority_vote(c.panel), out_dir / (c.case_id + ".mrt"));
    } else if (method == "staple") {
      write_soft_map(staple_em(c.panel).posterior, out_dir / (c.case_id + ".mrt"));
    } else {
      const RecurrenceTrace trace = run_recurrence(c.image, c.panel, config);
      for (std::size_t s = 0; s < trace.steps.size(); ++s)
        write_soft_map(trace.steps[s].y_prime, out_dir / (c.case_id + "_rec" + std::to_string(s) + ".mrt"));
      write_soft_map(trace.result(), out_dir / (c.case_id + ".mrt"));
      write_csv(out_dir / (c.case_id + "_trace.csv"), recurrence_diagnostics_header(trace),
                recurrence_diagnostics(trace));
    }
  });
  const int code = report_failures(ids, errors, err);
  out << "fused " << (manifest.size() - static_cast<std::size_t>(std::count_if(errors.begin(), errors.end(),
                                                                               [](auto& e) { return !e.empty(); })))
      << " of " << manifest.size() << " cases with " << method << "\n";
  return code;
}

int cmd_eval(const fs::path& manifest_path, const fs::path& pred_dir, const fs::path& out_csv, int jobs,
             std::ostream& out, std::ostream& err) {
  const auto manifest = load_manifest(manifest_path);
  if (!fs::is_directory(pred_dir)) throw UsageError("prediction directory not found: " + pred_dir.string());
  for (const auto& m : manifest) {
    if (!m.ground_truth) throw UsageError("case " + m.case_id + " has no ground truth");
    if (!fs::exists(pred_dir / (m.case_id + ".mrt")))
      throw UsageError("missing prediction for case " + m.case_id + ": " + (pred_dir / (m.case_id + ".mrt")).string());
  }

  std::vector<std::string> ids;
  for (const auto& m : manifest) ids.push_back(m.case_id);
  std::vector<DiceScores> scores(manifest.size());
  const auto errors = parallel_cases(manifest.size(), jobs, [&](std::size_t i) {
    const auto& m = manifest[i];
    const auto pred_f = read_soft_map(pred_dir / (m.case_id + ".mrt"));
    const SoftMap pred(pred_f.height(), pred_f.width(), pred_f.values().cast<double>());
    const SoftMap gt = read_ground_truth(*m.ground_truth, m.num_classes);
    if (!pred.same_shape(gt)) throw ShapeError("prediction shape does not match ground truth");
    scores[i] = soft_dice(pred, gt);
  });

  std::vector<std::vector<std::string>> rows;
  double total = 0.0;
  int counted = 0;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (!errors[i].empty()) continue;
    for (Index k = 0; k < scores[i].per_class.size(); ++k)
      rows.push_back({ids[i], std::to_string(k), csv::number(scores[i].per_class(k)),
                      csv::number(scores[i].foreground_mean)});
    total += scores[i].foreground_mean;
    ++counted;
  }
  const double mean = counted ? total / counted : 0.0;
  rows.push_back({"all", "foreground", csv::number(mean), csv::number(mean)});
  write_csv(out_csv, {"case_id", "class", "soft_dice", "mean"}, rows);
  out << "mean foreground soft dice " << csv::number(mean) << " over " << counted << " cases\n";
  return report_failures(ids, errors, err);
}

int cmd_sweep(const fs::path& manifest_path, SolverOverrides overrides, int max_tau, const fs::path& out_csv, int jobs,
              std::ostream& out, std::ostream& err) {
  if (max_tau < 1) throw UsageError("--max-tau must be >= 1");
  overrides.tau = max_tau;
  const SolverConfig config = overrides.resolve();
  const auto manifest = load_manifest(manifest_path);
  Index classes = 0;
  for (const auto& m : manifest) {
    if (!m.ground_truth) throw UsageError("case " + m.case_id + " has no ground truth");
    if (classes && m.num_classes != classes) throw UsageError("sweep needs one class count across the manifest");
    classes = m.num_classes;
  }

  std::vector<std::string> ids;
  for (const auto& m : manifest) ids.push_back(m.case_id);
  // per case, per recurrence
  std::vector<std::vector<DiceScores>> scores(manifest.size());
  const auto errors = parallel_cases(manifest.size(), jobs, [&](std::size_t i) {
    const LoadedCase c = load_case(manifest[i]);
    const RecurrenceTrace trace = run_recurrence(c.image, c.panel, config);
    for (int s = 0; s <= max_tau; ++s) {
      // An early-stopped case keeps its final answer for the remaining rows.
      const auto& step = trace.steps[std::min<std::size_t>(static_cast<std::size_t>(s), trace.steps.size() - 1)];
      scores[i].push_back(soft_dice(step.y_prime, *c.ground_truth));
    }
  });

  std::vector<std::string> header{"recurrence"};
  for (Index k = 0; k < classes; ++k) header.push_back("class_" + std::to_string(k));
  header.push_back("foreground_mean");
  header.push_back("cases");
  std::vector<std::vector<std::string>> rows;
  for (int s = 0; s <= max_tau; ++s) {
    Eigen::VectorXd per_class = Eigen::VectorXd::Zero(classes);
    double fg = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
      if (!errors[i].empty()) continue;
      per_class += scores[i][static_cast<std::size_t>(s)].per_class;
      fg += scores[i][static_cast<std::size_t>(s)].foreground_mean;
      ++n;
    }
    std::vector<std::string> row{"Rec" + std::to_string(s)};
    for (Index k = 0; k < classes; ++k) row.push_back(csv::number(n ? per_class(k) / n : 0.0));
    row.push_back(csv::number(n ? fg / n : 0.0));
    row.push_back(std::to_string(n));
    rows.push_back(std::move(row));
  }
  write_csv(out_csv, header, rows);
  out << "swept Rec0..Rec" << max_tau << " over " << manifest.size() << " cases\n";
  return report_failures(ids, errors, err);
}

int cmd_oracle_check(int trials, std::uint64_t seed, std::ostream& out) {
  if (trials < 1) throw UsageError("--trials must be >= 1");
  const OracleReport r = oracle_check(trials, seed);
  out << "oracle-check: " << r.trials << " trials, " << r.failures << " failures, max abs error "
      << csv::number(r.max_error) << "\n";
  out << (r.failures == 0 ? "PASS" : "FAIL") << "\n";
  return r.failures == 0 ? kOk : kCaseFailure;
}

}  // namespace

int default_jobs() {
  if (const char* env = std::getenv("MRFUSE_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  return 1;
}

RaterSpec parse_rater_spec(const std::string& text, Index classes, std::uint64_t seed_offset) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw UsageError("bad number '" + s + "' in rater spec '" + text + "'");
    return v;
  };
  RaterSpec spec;
  if (parts.size() == 3 && parts[0] == "boundary") {
    const double r = number(parts[1]);
    if (r != static_cast<int>(r)) throw UsageError("boundary radius must be an integer in '" + text + "'");
    spec = RaterSpec::boundary(static_cast<int>(r), number(parts[2]), seed_offset);
  } else if (parts.size() == 2 && parts[0] == "confusion") {
    const double d = number(parts[1]);
    if (!(d >= 0.0 && d <= 1.0)) throw UsageError("confusion diagonal must lie in [0, 1] in '" + text + "'");
    spec = RaterSpec::symmetric_confusion(classes, d, seed_offset);
  } else {
    throw UsageError("rater spec must be boundary:R:J or confusion:D, got '" + text + "'");
  }
  try {
    spec.validate(classes);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(e.what()) + " ('" + text + "')");
  }
  return spec;
}

OracleReport oracle_check(int trials, std::uint64_t seed, double tolerance) {
  OracleReport report;
  const CounterRng rng(seed, {0x0ac1e});
  constexpr Index kH = 3, kW = 3;
  for (int t = 0; t < trials; ++t) {
    const CounterRng trial = rng.stream(static_cast<std::uint64_t>(t));
    std::uint64_t draw = 0;
    const Index K = 2 + static_cast<Index>(trial.below(draw++, 2));
    const std::size_t M = 2 + trial.below(draw++, 3);

    std::vector<ConfusionMatrix> thetas;
    for (std::size_t m = 0; m < M; ++m) {
      Eigen::MatrixXd theta(K, K);
      for (Index k = 0; k < K; ++k) {
        for (Index o = 0; o < K; ++o) theta(o, k) = trial.uniform(draw++, 0.02, 1.0);
        theta.col(k) /= theta.col(k).sum();
      }
      thetas.push_back({"r" + std::to_string(m + 1), theta});
    }
    Eigen::VectorXd prior(K);
    for (Index k = 0; k < K; ++k) prior(k) = trial.uniform(draw++, 0.05, 1.0);
    prior /= prior.sum();

    PriorField p(kH, kW, K);
    for (Index px = 0; px < kH * kW; ++px) p.pixel(px) = prior.array().log().matrix().transpose();
    std::vector<HardLabelMap> z;
    for (std::size_t m = 0; m < M; ++m) {
      HardLabelMap zm(kH, kW, K);
      for (Index px = 0; px < kH * kW; ++px)
        zm.set(px, static_cast<HardLabelMap::label_type>(trial.below(draw++, static_cast<std::uint64_t>(K))));
      z.push_back(std::move(zm));
    }

    std::vector<ConfidenceMap> c;
    for (std::size_t m = 0; m < M; ++m) c.push_back(posterior_confidence(thetas[m], z[m]));
    const SoftMap fused = fuse_loglik(c, p);

    double worst = 0.0;
    for (Index px = 0; px < kH * kW; ++px) {
      std::vector<int> observed;
      for (const auto& zm : z) observed.push_back(zm[px]);
      const Eigen::VectorXd exact = bayes_oracle(thetas, prior, observed);
      worst = std::max(worst, (fused.pixel(px).transpose() - exact).cwiseAbs().maxCoeff());
    }
    ++report.trials;
    if (!(worst < tolerance)) ++report.failures;
    report.max_error = std::max(report.max_error, worst);
  }
  return report;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-rater segmentation fusion toolkit", "mrfuse"};
  app.require_subcommand(1);
  app.fallthrough();

  int jobs = default_jobs();
  app.add_option("--jobs,-j", jobs, "Worker threads for case-level parallelism (default $MRFUSE_JOBS or 1)")
      ->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-rater suite");
  std::uint64_t synth_seed = 0;
  std::string synth_out, synth_size = "128x128";
  int synth_cases = 50;
  Index synth_classes = 2;
  std::vector<std::string> synth_raters;
  synth->add_option("--seed", synth_seed, "Master seed")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--cases", synth_cases, "Number of cases");
  synth->add_option("--size", synth_size, "Image size HxW");
  synth->add_option("--classes", synth_classes, "Number of classes");
  synth->add_option("--raters", synth_raters, "Rater specs: boundary:R:J or confusion:D (default: standard panel)");

  auto* fuse = app.add_subcommand("fuse", "Fuse every case of a manifest");
  std::string fuse_manifest, fuse_method, fuse_out;
  SolverOverrides fuse_overrides;
  fuse->add_option("--manifest", fuse_manifest, "Manifest JSON")->required();
  fuse->add_option("--method", fuse_method, "mv | staple | mrprism")->required();
  fuse->add_option("--out", fuse_out, "Output directory")->required();
  fuse_overrides.attach(fuse);

  auto* eval = app.add_subcommand("eval", "Soft dice of predictions against ground truth");
  std::string eval_manifest, eval_pred, eval_out;
  eval->add_option("--manifest", eval_manifest, "Manifest JSON")->required();
  eval->add_option("--pred", eval_pred, "Directory holding <case_id>.mrt")->required();
  eval->add_option("--out", eval_out, "Output CSV")->required();

  auto* sweep = app.add_subcommand("sweep", "Mean soft dice per recurrence");
  std::string sweep_manifest, sweep_out;
  int sweep_tau = 3;
  SolverOverrides sweep_overrides;
  sweep->add_option("--manifest", sweep_manifest, "Manifest JSON")->required();
  sweep->add_option("--max-tau", sweep_tau, "Last recurrence to report");
  sweep->add_option("--out", sweep_out, "Output CSV")->required();
  sweep_overrides.attach(sweep);

  auto* oracle = app.add_subcommand("oracle-check", "Check Bayes fusion against the exact posterior");
  int oracle_trials = 1000;
  std::uint64_t oracle_seed = 0;
  oracle->add_option("--trials", oracle_trials, "Random instances");
  oracle->add_option("--seed", oracle_seed, "Seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*synth) return cmd_synth(synth_seed, synth_out, synth_cases, synth_size, synth_classes, synth_raters, out);
    if (*fuse) return cmd_fuse(fuse_manifest, fuse_method, fuse_overrides, fuse_out, jobs, out, err);
    if (*eval) return cmd_eval(eval_manifest, eval_pred, eval_out, jobs, out, err);
    if (*sweep) return cmd_sweep(sweep_manifest, sweep_overrides, sweep_tau, sweep_out, jobs, out, err);
    if (*oracle) return cmd_oracle_check(oracle_trials, oracle_seed, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}

}  // namespace mrfuse::cli
