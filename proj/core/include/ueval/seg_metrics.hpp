#pragma once

#include <cstdint>
#include <vector>

#include "ueval/tensor.hpp"

namespace ueval {

/// C×C confusion counts, counts(i, j) = pixels with true class i predicted
/// as j. Ground-truth ignore pixels are never counted. Accumulation over
/// image batches commutes; merging is exact integer addition.
class SegConfusion {
 public:
  explicit SegConfusion(std::int32_t class_count);
  SegConfusion(std::int32_t class_count, std::vector<std::uint64_t> counts);

  std::int32_t class_count() const { return class_count_; }
  std::uint64_t at(std::int32_t true_cls, std::int32_t pred_cls) const {
    return counts_[static_cast<std::size_t>(true_cls) *
                       static_cast<std::size_t>(class_count_) +
                   static_cast<std::size_t>(pred_cls)];
  }
  std::uint64_t& at(std::int32_t true_cls, std::int32_t pred_cls) {
    return counts_[static_cast<std::size_t>(true_cls) *
                       static_cast<std::size_t>(class_count_) +
                   static_cast<std::size_t>(pred_cls)];
  }

  /// Total pixels with true class i.
  std::uint64_t row_total(std::int32_t true_cls) const;
  /// Total pixels predicted as class j.
  std::uint64_t col_total(std::int32_t pred_cls) const;
  std::uint64_t total() const;

  SegConfusion& merge(const SegConfusion& other);

 private:
  std::int32_t class_count_;
  std::vector<std::uint64_t> counts_;
};

/// Adds one count per pixel where the ground truth is not ignored. Throws on
/// shape or class-count mismatch, and if the prediction contains an id
/// outside [0, C) (argmax output never does).
void accumulate_confusion(const ClassMap& pred, const ClassMap& gt,
                          SegConfusion& confusion);

/// Diagonal mass over total mass. Throws if the confusion is empty.
double pixel_accuracy(const SegConfusion& confusion);

/// Mean of per-class recall over classes present in the ground truth.
/// Classes with no ground-truth pixels are excluded from the mean.
double mean_accuracy(const SegConfusion& confusion);

/// Mean of per-class intersection-over-union over classes with a nonzero
/// union (row total + column total - diagonal).
double mean_iou(const SegConfusion& confusion);

}  // namespace ueval
