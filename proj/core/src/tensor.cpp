#include "ueval/tensor.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ueval {

namespace {

std::string shape2(std::size_t h, std::size_t w) {
  return std::to_string(h) + "x" + std::to_string(w);
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

ClassMap::ClassMap(std::size_t height, std::size_t width,
                   std::int32_t class_count, std::vector<std::int32_t> values,
                   std::optional<std::int32_t> ignore_id)
    : height_(height),
      width_(width),
      class_count_(class_count),
      ignore_id_(ignore_id),
      values_(std::move(values)) {
  require(height_ >= 1 && width_ >= 1,
          "ClassMap dimensions must be at least 1x1, got " +
              shape2(height_, width_));
  require(class_count_ >= 2, "ClassMap class_count must be >= 2, got " +
                                 std::to_string(class_count_));
  require(values_.size() == height_ * width_,
          "ClassMap value count " + std::to_string(values_.size()) +
              " does not match shape " + shape2(height_, width_));
  if (ignore_id_) {
    require(*ignore_id_ < 0 || *ignore_id_ >= class_count_,
            "ignore_id " + std::to_string(*ignore_id_) +
                " must lie outside [0, " + std::to_string(class_count_) + ")");
  }
}

ProbStack::ProbStack(std::size_t samples, std::int32_t class_count,
                     std::size_t height, std::size_t width,
                     std::vector<double> values)
    : samples_(samples),
      class_count_(class_count),
      height_(height),
      width_(width),
      values_(std::move(values)) {
  require(samples_ >= 1, "ProbStack needs at least one sample");
  require(class_count_ >= 2, "ProbStack class_count must be >= 2, got " +
                                 std::to_string(class_count_));
  require(height_ >= 1 && width_ >= 1,
          "ProbStack dimensions must be at least 1x1, got " +
              shape2(height_, width_));
  const std::size_t expected =
      samples_ * static_cast<std::size_t>(class_count_) * height_ * width_;
  require(values_.size() == expected,
          "ProbStack value count " + std::to_string(values_.size()) +
              " does not match TxCxHxW = " + std::to_string(expected));
}

void ProbStack::mean_distribution(std::size_t row, std::size_t col,
                                  std::span<double> out) const {
  const double inv_t = 1.0 / static_cast<double>(samples_);
  for (std::int32_t c = 0; c < class_count_; ++c) {
    double sum = 0.0;
    for (std::size_t t = 0; t < samples_; ++t) sum += at(t, c, row, col);
    out[static_cast<std::size_t>(c)] = sum * inv_t;
  }
}

ScalarMap::ScalarMap(std::size_t height, std::size_t width,
                     std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  require(height_ >= 1 && width_ >= 1,
          "ScalarMap dimensions must be at least 1x1, got " +
              shape2(height_, width_));
  require(values_.size() == height_ * width_,
          "ScalarMap value count " + std::to_string(values_.size()) +
              " does not match shape " + shape2(height_, width_));
}

ValidationReport validate_class_map(const ClassMap& map) {
  for (std::size_t r = 0; r < map.height(); ++r) {
    for (std::size_t c = 0; c < map.width(); ++c) {
      const std::int32_t v = map.at(r, c);
      const bool in_range = v >= 0 && v < map.class_count();
      const bool ignored = map.ignore_id() && v == *map.ignore_id();
      if (!in_range && !ignored) {
        return "class id " + std::to_string(v) + " at pixel (" +
               std::to_string(r) + "," + std::to_string(c) +
               ") is outside [0, " + std::to_string(map.class_count()) +
               ") and is not the ignore id";
      }
    }
  }
  return std::nullopt;
}

ValidationReport validate_prob_stack(const ProbStack& stack) {
  for (std::size_t t = 0; t < stack.samples(); ++t) {
    for (std::size_t r = 0; r < stack.height(); ++r) {
      for (std::size_t c = 0; c < stack.width(); ++c) {
        double sum = 0.0;
        for (std::int32_t k = 0; k < stack.class_count(); ++k) {
          const double p = stack.at(t, k, r, c);
          if (!(p >= 0.0 && p <= 1.0)) {
            return "probability " + std::to_string(p) + " at (t,h,w) = (" +
                   std::to_string(t) + "," + std::to_string(r) + "," +
                   std::to_string(c) + "), class " + std::to_string(k) +
                   " is outside [0, 1]";
          }
          sum += p;
        }
        if (std::abs(sum - 1.0) > kProbSumTolerance) {
          return "class probabilities at (t,h,w) = (" + std::to_string(t) +
                 "," + std::to_string(r) + "," + std::to_string(c) +
                 ") sum to " + std::to_string(sum) + ", expected 1 within " +
                 std::to_string(kProbSumTolerance);
        }
      }
    }
  }
  return std::nullopt;
}

ValidationReport validate_scalar_map(const ScalarMap& map) {
  for (std::size_t r = 0; r < map.height(); ++r) {
    for (std::size_t c = 0; c < map.width(); ++c) {
      const double v = map.at(r, c);
      if (!std::isfinite(v)) {
        return "non-finite value at pixel (" + std::to_string(r) + "," +
               std::to_string(c) + ")";
      }
      if (v < -1e-12) {
        return "negative value " + std::to_string(v) + " at pixel (" +
               std::to_string(r) + "," + std::to_string(c) +
               ") is below -1e-12";
      }
    }
  }
  return std::nullopt;
}

ClassMap argmax_prediction(const ProbStack& stack) {
  const std::size_t h = stack.height();
  const std::size_t w = stack.width();
  std::vector<std::int32_t> out(h * w);
  const double inv_t = 1.0 / static_cast<double>(stack.samples());
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      std::int32_t best = 0;
      double best_p = -std::numeric_limits<double>::infinity();
      for (std::int32_t k = 0; k < stack.class_count(); ++k) {
        double sum = 0.0;
        for (std::size_t t = 0; t < stack.samples(); ++t)
          sum += stack.at(t, k, r, c);
        const double mean = sum * inv_t;
        if (mean > best_p) {  // strict: first (lowest) class wins ties
          best_p = mean;
          best = k;
        }
      }
      out[r * w + c] = best;
    }
  }
  return ClassMap(h, w, stack.class_count(), std::move(out));
}

}  // namespace ueval
