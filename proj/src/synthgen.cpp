#include "mrfuse/synthgen.hpp"

#include "mrfuse/filters.hpp"
#include "mrfuse/rater_model.hpp"
#include "mrfuse/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace mrfuse {

namespace {

using BoolImage = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr std::uint64_t kCaseStream = 0xca5e;
constexpr std::uint64_t kRaterStream = 0x4a7e;
constexpr int kMaxAttempts = 1000;

// Gaussian-smoothed white noise rescaled to zero mean, unit standard deviation.
ImageMatrix<double> smooth_noise(const CounterRng& rng, Index height, Index width, double sigma) {
  ImageMatrix<double> white(height, width);
  for (Index p = 0; p < height * width; ++p) white(p / width, p % width) = rng.normal(static_cast<std::uint64_t>(p));
  ImageMatrix<double> field = gaussian_filter(white, gaussian_window_for(sigma), sigma);
  field.array() -= field.mean();
  const double sd = std::sqrt(field.array().square().mean());
  if (sd > 0.0) field /= sd;
  return field;
}

// Squared distance transform of a sampled function along one line
// (lower envelope of parabolas).
void edt_1d(const std::vector<double>& f, std::vector<double>& d) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n) + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    auto intersect = [&](int a) { return ((f[q] + q * q) - (f[a] + a * a)) / (2.0 * q - 2.0 * a); };
    double s = intersect(v[k]);
    while (s <= z[k]) s = intersect(v[--k]);
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

RaterSpec RaterSpec::confusion(Eigen::MatrixXd theta, std::uint64_t seed_offset) {
  RaterSpec spec;
  spec.kind = Kind::confusion;
  spec.theta = std::move(theta);
  spec.seed_offset = seed_offset;
  return spec;
}

RaterSpec RaterSpec::symmetric_confusion(Index classes, double diag, std::uint64_t seed_offset) {
  if (classes < 2) throw std::invalid_argument("symmetric_confusion: needs at least two classes");
  Eigen::MatrixXd theta =
      Eigen::MatrixXd::Constant(classes, classes, (1.0 - diag) / static_cast<double>(classes - 1));
  theta.diagonal().setConstant(diag);
  return confusion(std::move(theta), seed_offset);
}

RaterSpec RaterSpec::boundary(int radius, double jitter, std::uint64_t seed_offset) {
  RaterSpec spec;
  spec.kind = Kind::boundary;
  spec.radius = radius;
  spec.jitter = jitter;
  spec.seed_offset = seed_offset;
  return spec;
}

void RaterSpec::validate(Index classes) const {
  if (kind == Kind::confusion) {
    if (theta.rows() != classes || theta.cols() != classes)
      throw std::invalid_argument("rater spec: confusion matrix must be K x K");
    if (!is_column_stochastic(theta)) throw std::invalid_argument("rater spec: confusion matrix must be column-stochastic");
  } else {
    if (radius < -5 || radius > 5) throw std::invalid_argument("rater spec: radius must lie in [-5, 5]");
    if (!(jitter >= 0.0)) throw std::invalid_argument("rater spec: jitter must be >= 0");
  }
}

double class_intensity(Index k, Index classes) {
  if (classes < 2) return 0.5;
  return 0.3 + 0.4 * static_cast<double>(k) / static_cast<double>(classes - 1);
}

GeneratedCase generate_case(std::uint64_t seed, Index height, Index width, Index classes) {
  if (height < 8 || width < 8) throw std::invalid_argument("generate_case: image must be at least 8x8");
  if (classes < 2) throw std::invalid_argument("generate_case: needs at least two classes");
  const double span = static_cast<double>(std::min(height, width));

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const CounterRng rng(seed, {kCaseStream, static_cast<std::uint64_t>(attempt)});
    HardLabelMap gt(height, width, classes);
    std::uint64_t draw = 0;
    for (Index k = 1; k < classes; ++k) {
      const CounterRng class_rng = rng.stream(static_cast<std::uint64_t>(k));
      const int blobs = 1 + static_cast<int>(class_rng.below(draw++, 2));
      struct Blob {
        double row, col, radius;
      };
      std::vector<Blob> centres;
      for (int b = 0; b < blobs; ++b)
        centres.push_back({class_rng.uniform(draw++, 0.25, 0.75) * static_cast<double>(height),
                           class_rng.uniform(draw++, 0.25, 0.75) * static_cast<double>(width),
                           class_rng.uniform(draw++, 0.15, 0.25) * span});
      const ImageMatrix<double> noise = smooth_noise(class_rng.stream(0xb10b), height, width, span / 16.0);
      for (Index r = 0; r < height; ++r) {
        for (Index c = 0; c < width; ++c) {
          double bump = 0.0;
          for (const auto& blob : centres) {
            const double dr = static_cast<double>(r) - blob.row;
            const double dc = static_cast<double>(c) - blob.col;
            bump = std::max(bump, std::exp(-(dr * dr + dc * dc) / (2.0 * blob.radius * blob.radius)));
          }
          if (bump + 0.15 * noise(r, c) > 0.5) gt.set(r, c, static_cast<HardLabelMap::label_type>(k));
        }
      }
    }

    const auto& labels = gt.labels();
    const double fg = static_cast<double>((labels.array() != 0).count()) / static_cast<double>(labels.size());
    bool every_class = true;
    for (Index k = 1; k < classes; ++k) every_class = every_class && (labels.array() == k).any();
    if (fg < 0.05 || fg > 0.5 || !every_class) continue;

    ImageMatrix<double> clean(height, width);
    for (Index p = 0; p < gt.pixels(); ++p) clean(p / width, p % width) = class_intensity(gt[p], classes);
    ImageMatrix<double> image = gaussian_filter(clean, gaussian_window_for(kImageBlurSigma), kImageBlurSigma);
    const CounterRng noise_rng = rng.stream(0x1a6e);
    for (Index p = 0; p < gt.pixels(); ++p) {
      double& v = image(p / width, p % width);
      v = std::clamp(v + kImageNoiseSigma * noise_rng.normal(static_cast<std::uint64_t>(p)), 0.0, 1.0);
    }
    return {RawImage{std::move(image)}, std::move(gt)};
  }
  throw std::runtime_error("generate_case: could not satisfy the foreground area bound");
}

ImageMatrix<double> distance_transform(const BoolImage& mask) {
  const Index H = mask.rows();
  const Index W = mask.cols();
  constexpr double kFar = 1e12;
  ImageMatrix<double> sq(H, W);
  std::vector<double> f, d;

  f.resize(static_cast<std::size_t>(H));
  d.resize(static_cast<std::size_t>(H));
  for (Index c = 0; c < W; ++c) {
    for (Index r = 0; r < H; ++r) f[r] = mask(r, c) ? 0.0 : kFar;
    edt_1d(f, d);
    for (Index r = 0; r < H; ++r) sq(r, c) = d[r];
  }
  f.resize(static_cast<std::size_t>(W));
  d.resize(static_cast<std::size_t>(W));
  for (Index r = 0; r < H; ++r) {
    for (Index c = 0; c < W; ++c) f[c] = sq(r, c);
    edt_1d(f, d);
    for (Index c = 0; c < W; ++c) sq(r, c) = d[c];
  }
  return sq.cwiseSqrt();
}

RaterPanel simulate_raters(const HardLabelMap& gt, const std::vector<RaterSpec>& specs, std::uint64_t seed) {
  const Index H = gt.height();
  const Index W = gt.width();
  const Index K = gt.classes();
  RaterPanel panel;
  for (std::size_t m = 0; m < specs.size(); ++m) {
    const auto& spec = specs[m];
    spec.validate(K);
    const CounterRng rng(seed, {kRaterStream, spec.seed_offset});
    HardLabelMap out(H, W, K);

    if (spec.kind == RaterSpec::Kind::confusion) {
      for (Index p = 0; p < gt.pixels(); ++p) {
        const double u = rng.uniform(static_cast<std::uint64_t>(p));
        const auto column = spec.theta.col(gt[p]);
        Index t = 0;
        double acc = column(0);
        while (u >= acc && t + 1 < K) acc += column(++t);
        out.set(p, static_cast<HardLabelMap::label_type>(t));
      }
    } else {
      const ImageMatrix<double> jitter =
          spec.jitter > 0.0 ? ImageMatrix<double>(spec.jitter * smooth_noise(rng.stream(0x717), H, W, 2.0))
                            : ImageMatrix<double>::Zero(H, W);
      for (Index k = 1; k < K; ++k) {
        BoolImage inside(H, W);
        for (Index p = 0; p < gt.pixels(); ++p) inside(p / W, p % W) = gt[p] == k;
        if (!inside.any()) continue;
        const ImageMatrix<double> to_inside = distance_transform(inside);
        const ImageMatrix<double> to_outside = distance_transform(!inside);
        for (Index r = 0; r < H; ++r) {
          for (Index c = 0; c < W; ++c) {
            // Signed distance to the contour, negative inside, +-0.5 at the first ring.
            const double signed_distance = inside(r, c) ? 0.5 - to_outside(r, c) : to_inside(r, c) - 0.5;
            if (signed_distance < spec.radius + jitter(r, c)) out.set(r, c, static_cast<HardLabelMap::label_type>(k));
          }
        }
      }
    }
    panel.rater_ids.push_back("r" + std::to_string(m + 1));
    panel.labels.push_back(std::move(out));
  }
  return panel;
}

std::vector<RaterSpec> standard_rater_specs() {
  return {RaterSpec::boundary(1, 0.5, 1),  RaterSpec::boundary(-1, 0.5, 2),
          RaterSpec::boundary(3, 2.0, 3),  RaterSpec::boundary(-3, 2.0, 4),
          RaterSpec::symmetric_confusion(2, 0.75, 5), RaterSpec::symmetric_confusion(2, 0.75, 6)};
}

std::vector<SyntheticCase> make_suite(std::uint64_t seed, int cases, Index height, Index width, Index classes,
                                      const std::vector<RaterSpec>& specs) {
  if (cases < 1) throw std::invalid_argument("make_suite: at least one case required");
  std::vector<SyntheticCase> suite;
  suite.reserve(static_cast<std::size_t>(cases));
  for (int i = 0; i < cases; ++i) {
    const std::uint64_t case_seed = CounterRng(seed, {0x5017e}).bits(static_cast<std::uint64_t>(i));
    auto generated = generate_case(case_seed, height, width, classes);
    char id[32];
    std::snprintf(id, sizeof id, "case_%03d", i);
    SyntheticCase sc{id, std::move(generated.image), std::move(generated.ground_truth), {}};
    sc.panel = simulate_raters(sc.ground_truth, specs, case_seed);
    suite.push_back(std::move(sc));
  }
  return suite;
}

std::vector<SyntheticCase> standard_suite(std::uint64_t seed) {
  return make_suite(seed, 50, 128, 128, 2, standard_rater_specs());
}

}  // namespace mrfuse
