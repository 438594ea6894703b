#include "ueval/seg_metrics.hpp"

#include <stdexcept>
#include <string>

namespace ueval {

SegConfusion::SegConfusion(std::int32_t class_count)
    : class_count_(class_count),
      counts_(static_cast<std::size_t>(class_count) *
                  static_cast<std::size_t>(class_count),
              0) {
  if (class_count_ < 2)
    throw std::invalid_argument("SegConfusion needs class_count >= 2, got " +
                                std::to_string(class_count_));
}

SegConfusion::SegConfusion(std::int32_t class_count,
                           std::vector<std::uint64_t> counts)
    : SegConfusion(class_count) {
  if (counts.size() != counts_.size())
    throw std::invalid_argument(
        "SegConfusion count vector has " + std::to_string(counts.size()) +
        " entries, expected " + std::to_string(counts_.size()));
  counts_ = std::move(counts);
}

std::uint64_t SegConfusion::row_total(std::int32_t true_cls) const {
  std::uint64_t sum = 0;
  for (std::int32_t j = 0; j < class_count_; ++j) sum += at(true_cls, j);
  return sum;
}

std::uint64_t SegConfusion::col_total(std::int32_t pred_cls) const {
  std::uint64_t sum = 0;
  for (std::int32_t i = 0; i < class_count_; ++i) sum += at(i, pred_cls);
  return sum;
}

std::uint64_t SegConfusion::total() const {
  std::uint64_t sum = 0;
  for (std::uint64_t v : counts_) sum += v;
  return sum;
}

SegConfusion& SegConfusion::merge(const SegConfusion& other) {
  if (other.class_count_ != class_count_)
    throw std::invalid_argument(
        "cannot merge confusions with class counts " +
        std::to_string(class_count_) + " and " +
        std::to_string(other.class_count_));
  for (std::size_t i = 0; i < counts_.size(); ++i)
    counts_[i] += other.counts_[i];
  return *this;
}

void accumulate_confusion(const ClassMap& pred, const ClassMap& gt,
                          SegConfusion& confusion) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw std::invalid_argument(
        "prediction shape " + std::to_string(pred.height()) + "x" +
        std::to_string(pred.width()) + " does not match ground truth " +
        std::to_string(gt.height()) + "x" + std::to_string(gt.width()));
  }
  if (pred.class_count() != confusion.class_count() ||
      gt.class_count() != confusion.class_count()) {
    throw std::invalid_argument(
        "class counts disagree: confusion has " +
        std::to_string(confusion.class_count()) + ", prediction " +
        std::to_string(pred.class_count()) + ", ground truth " +
        std::to_string(gt.class_count()));
  }
  for (std::size_t r = 0; r < gt.height(); ++r) {
    for (std::size_t c = 0; c < gt.width(); ++c) {
      if (gt.is_ignored(r, c)) continue;
      const std::int32_t t = gt.at(r, c);
      const std::int32_t p = pred.at(r, c);
      if (t < 0 || t >= confusion.class_count())
        throw std::invalid_argument(
            "ground-truth class " + std::to_string(t) + " at pixel (" +
            std::to_string(r) + "," + std::to_string(c) +
            ") is out of range");
      if (p < 0 || p >= confusion.class_count())
        throw std::invalid_argument(
            "predicted class " + std::to_string(p) + " at pixel (" +
            std::to_string(r) + "," + std::to_string(c) +
            ") is out of range; predictions may not carry an ignore id");
      ++confusion.at(t, p);
    }
  }
}

double pixel_accuracy(const SegConfusion& confusion) {
  const std::uint64_t total = confusion.total();
  if (total == 0)
    throw std::domain_error("pixel accuracy undefined: confusion is empty");
  std::uint64_t diagonal = 0;
  for (std::int32_t i = 0; i < confusion.class_count(); ++i)
    diagonal += confusion.at(i, i);
  return static_cast<double>(diagonal) / static_cast<double>(total);
}

double mean_accuracy(const SegConfusion& confusion) {
  double sum = 0.0;
  int present = 0;
  for (std::int32_t i = 0; i < confusion.class_count(); ++i) {
    const std::uint64_t t = confusion.row_total(i);
    if (t == 0) continue;  // class absent from ground truth
    sum += static_cast<double>(confusion.at(i, i)) / static_cast<double>(t);
    ++present;
  }
  if (present == 0)
    throw std::domain_error(
        "mean accuracy undefined: no class appears in the ground truth");
  return sum / static_cast<double>(present);
}

double mean_iou(const SegConfusion& confusion) {
  double sum = 0.0;
  int present = 0;
  for (std::int32_t i = 0; i < confusion.class_count(); ++i) {
    const std::uint64_t diag = confusion.at(i, i);
    const std::uint64_t uni =
        confusion.row_total(i) + confusion.col_total(i) - diag;
    if (uni == 0) continue;
    sum += static_cast<double>(diag) / static_cast<double>(uni);
    ++present;
  }
  if (present == 0)
    throw std::domain_error("mean IoU undefined: every class union is zero");
  return sum / static_cast<double>(present);
}

}  // namespace ueval
