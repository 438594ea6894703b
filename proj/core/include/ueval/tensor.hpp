#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ueval {

/// Dense H×W map of integer class ids, row-major. Holds either ground-truth
/// labels or argmax predictions. An optional ignore id (outside [0, C))
/// marks pixels that are excluded from every accuracy computation.
class ClassMap {
 public:
  ClassMap(std::size_t height, std::size_t width, std::int32_t class_count,
           std::vector<std::int32_t> values,
           std::optional<std::int32_t> ignore_id = std::nullopt);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t pixel_count() const { return height_ * width_; }
  std::int32_t class_count() const { return class_count_; }
  const std::optional<std::int32_t>& ignore_id() const { return ignore_id_; }

  std::int32_t at(std::size_t row, std::size_t col) const {
    return values_[row * width_ + col];
  }
  bool is_ignored(std::size_t row, std::size_t col) const {
    return ignore_id_ && at(row, col) == *ignore_id_;
  }
  std::span<const std::int32_t> values() const { return values_; }

 private:
  std::size_t height_;
  std::size_t width_;
  std::int32_t class_count_;
  std::optional<std::int32_t> ignore_id_;
  std::vector<std::int32_t> values_;
};

/// T×C×H×W stack of per-sample softmax probabilities, row-major. Each of the
/// T samples is one stochastic forward pass; T=1 represents a deterministic
/// model. Values are kept in 64-bit floats regardless of on-disk precision.
class ProbStack {
 public:
  ProbStack(std::size_t samples, std::int32_t class_count, std::size_t height,
            std::size_t width, std::vector<double> values);

  std::size_t samples() const { return samples_; }
  std::int32_t class_count() const { return class_count_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t pixel_count() const { return height_ * width_; }

  double at(std::size_t sample, std::int32_t cls, std::size_t row,
            std::size_t col) const {
    return values_[index(sample, cls, row, col)];
  }
  std::size_t index(std::size_t sample, std::int32_t cls, std::size_t row,
                    std::size_t col) const {
    return ((sample * static_cast<std::size_t>(class_count_) +
             static_cast<std::size_t>(cls)) *
                height_ +
            row) *
               width_ +
           col;
  }
  std::span<const double> values() const { return values_; }

  /// Mean over samples of p(y=c | x) for one pixel, written into `out`
  /// (size must be class_count).
  void mean_distribution(std::size_t row, std::size_t col,
                         std::span<double> out) const;

 private:
  std::size_t samples_;
  std::int32_t class_count_;
  std::size_t height_;
  std::size_t width_;
  std::vector<double> values_;
};

/// H×W map of reals, row-major. Used for uncertainty maps (predictive
/// entropy, mutual information) and other per-pixel scores.
class ScalarMap {
 public:
  ScalarMap(std::size_t height, std::size_t width, std::vector<double> values);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t pixel_count() const { return height_ * width_; }

  double at(std::size_t row, std::size_t col) const {
    return values_[row * width_ + col];
  }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<double> values_;
};

/// Result of a validation pass: empty means all invariants hold, otherwise
/// the message names the first offending coordinate. Validation never throws
/// on byte-level-valid tensors.
using ValidationReport = std::optional<std::string>;

/// Checks that every value is < class_count or equals the ignore id.
ValidationReport validate_class_map(const ClassMap& map);

/// Checks that every entry lies in [0, 1] and every per-(t,h,w) class column
/// sums to 1 within 1e-6.
ValidationReport validate_prob_stack(const ProbStack& stack);

/// Checks that every value is finite and >= -1e-12.
ValidationReport validate_scalar_map(const ScalarMap& map);

/// Per pixel, the class maximizing the sample-mean probability. Ties break
/// to the lowest class id. The result carries no ignore id.
ClassMap argmax_prediction(const ProbStack& stack);

/// Absolute tolerance on per-pixel probability sums.
inline constexpr double kProbSumTolerance = 1e-6;

}  // namespace ueval
