#ifndef MRFUSE_TYPES_HPP
#define MRFUSE_TYPES_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrfuse {

using Index = Eigen::Index;

/// Pixels × classes, row-major so that the class index is fastest in memory.
template <typename Scalar>
using ClassMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Height × width scalar image, row-major.
template <typename Scalar>
using ImageMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Floor applied to probabilities before every log.
inline constexpr double kProbabilityFloor = 1e-6;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A per-pixel, per-class field on an H×W grid. The tag distinguishes
/// probability maps, log-likelihood confidences and log-prior logits so they
/// cannot be passed for one another by accident.
template <typename Scalar, typename Tag>
class ClassField {
 public:
  using scalar_type = Scalar;
  using matrix_type = ClassMatrix<Scalar>;

  ClassField() = default;
  ClassField(Index height, Index width, Index classes)
      : height_(height), width_(width), values_(height * width, classes) {
    if (height < 0 || width < 0 || classes < 0)
      throw ShapeError("negative field dimension");
  }
  ClassField(Index height, Index width, Index classes, Scalar fill)
      : ClassField(height, width, classes) {
    values_.setConstant(fill);
  }
  ClassField(Index height, Index width, matrix_type values)
      : height_(height), width_(width), values_(std::move(values)) {
    if (values_.rows() != height * width)
      throw ShapeError("field rows must equal height*width");
  }

  Index height() const { return height_; }
  Index width() const { return width_; }
  Index classes() const { return values_.cols(); }
  Index pixels() const { return values_.rows(); }

  matrix_type& values() { return values_; }
  const matrix_type& values() const { return values_; }

  Scalar& operator()(Index row, Index col, Index k) { return values_(row * width_ + col, k); }
  Scalar operator()(Index row, Index col, Index k) const { return values_(row * width_ + col, k); }

  auto pixel(Index p) { return values_.row(p); }
  auto pixel(Index p) const { return values_.row(p); }

  /// Channel k viewed as an H×W image (copy).
  ImageMatrix<Scalar> channel(Index k) const {
    ImageMatrix<Scalar> out(height_, width_);
    for (Index p = 0; p < pixels(); ++p) out(p / width_, p % width_) = values_(p, k);
    return out;
  }

  template <typename OtherTag>
  bool same_shape(const ClassField<Scalar, OtherTag>& other) const {
    return height_ == other.height() && width_ == other.width() && classes() == other.classes();
  }

  bool operator==(const ClassField& other) const {
    return height_ == other.height_ && width_ == other.width_ && values_.rows() == other.values_.rows() &&
           values_.cols() == other.values_.cols() && values_ == other.values_;
  }

 private:
  Index height_ = 0;
  Index width_ = 0;
  matrix_type values_;
};

struct SoftMapTag {};
struct ConfidenceMapTag {};
struct PriorFieldTag {};

/// Per-pixel class probabilities; each pixel sums to one.
template <typename Scalar>
using SoftMapT = ClassField<Scalar, SoftMapTag>;
/// Per-pixel per-class log-likelihoods in [log 1e-6, 0].
template <typename Scalar>
using ConfidenceMapT = ClassField<Scalar, ConfidenceMapTag>;
/// Per-pixel log-prior logits.
template <typename Scalar>
using PriorFieldT = ClassField<Scalar, PriorFieldTag>;

using SoftMap = SoftMapT<double>;
using ConfidenceMap = ConfidenceMapT<double>;
using PriorField = PriorFieldT<double>;

/// The uniform prior p_u: constant logits (zero) everywhere.
template <typename Scalar = double>
PriorFieldT<Scalar> uniform_prior(Index height, Index width, Index classes) {
  return PriorFieldT<Scalar>(height, width, classes, Scalar(0));
}

/// Per-pixel class indices in [0, classes).
class HardLabelMap {
 public:
  using label_type = std::int32_t;
  using vector_type = Eigen::Matrix<label_type, Eigen::Dynamic, 1>;

  HardLabelMap() = default;
  HardLabelMap(Index height, Index width, Index classes, label_type fill = 0)
      : height_(height), width_(width), classes_(classes), labels_(vector_type::Constant(height * width, fill)) {
    if (classes < 1) throw ShapeError("label map needs at least one class");
    check_label(fill);
  }
  HardLabelMap(Index height, Index width, Index classes, vector_type labels)
      : height_(height), width_(width), classes_(classes), labels_(std::move(labels)) {
    if (classes < 1) throw ShapeError("label map needs at least one class");
    if (labels_.size() != height * width) throw ShapeError("label count must equal height*width");
    for (Index p = 0; p < labels_.size(); ++p) check_label(labels_[p]);
  }

  Index height() const { return height_; }
  Index width() const { return width_; }
  Index classes() const { return classes_; }
  Index pixels() const { return labels_.size(); }

  label_type operator[](Index p) const { return labels_[p]; }
  label_type operator()(Index row, Index col) const { return labels_[row * width_ + col]; }

  void set(Index p, label_type label) {
    check_label(label);
    labels_[p] = label;
  }
  void set(Index row, Index col, label_type label) { set(row * width_ + col, label); }

  const vector_type& labels() const { return labels_; }

  /// One-hot view as a probability map.
  template <typename Scalar = double>
  SoftMapT<Scalar> one_hot() const {
    SoftMapT<Scalar> out(height_, width_, classes_, Scalar(0));
    for (Index p = 0; p < pixels(); ++p) out.values()(p, labels_[p]) = Scalar(1);
    return out;
  }

  bool same_grid(Index height, Index width) const { return height_ == height && width_ == width; }

  bool operator==(const HardLabelMap& other) const {
    return height_ == other.height_ && width_ == other.width_ && classes_ == other.classes_ &&
           labels_ == other.labels_;
  }

 private:
  void check_label(label_type label) const {
    if (label < 0 || label >= classes_)
      throw DomainError("class index " + std::to_string(label) + " outside [0, " + std::to_string(classes_) + ")");
  }

  Index height_ = 0;
  Index width_ = 0;
  Index classes_ = 1;
  vector_type labels_;
};

/// Grayscale raw image with intensities in [0, 1].
struct RawImage {
  ImageMatrix<double> intensity;

  Index height() const { return intensity.rows(); }
  Index width() const { return intensity.cols(); }
};

/// The M observed annotations of one case.
struct RaterPanel {
  std::vector<std::string> rater_ids;
  std::vector<HardLabelMap> labels;

  Index size() const { return static_cast<Index>(labels.size()); }
  bool empty() const { return labels.empty(); }
};

}  // namespace mrfuse

#endif  // MRFUSE_TYPES_HPP
