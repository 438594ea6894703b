#include "ueval/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ueval {

namespace {

constexpr double kTempLo = 0.05;
constexpr double kTempHi = 50.0;
constexpr double kTempTolerance = 1e-3;
constexpr double kLogFloor = 1e-300;

void require_shapes(const ProbStack& stack, const ClassMap& gt) {
  if (stack.height() != gt.height() || stack.width() != gt.width()) {
    throw std::invalid_argument(
        "stack shape " + std::to_string(stack.height()) + "x" +
        std::to_string(stack.width()) + " does not match ground truth " +
        std::to_string(gt.height()) + "x" + std::to_string(gt.width()));
  }
}

double safe_log(double p) { return std::log(std::max(p, kLogFloor)); }

}  // namespace

CalibrationBins bin_confidences(const ProbStack& stack, const ClassMap& gt,
                                int bin_count) {
  require_shapes(stack, gt);
  if (bin_count < 1)
    throw std::invalid_argument("bin count must be >= 1, got " +
                                std::to_string(bin_count));

  CalibrationBins result;
  result.bin_count = bin_count;
  result.bins.resize(static_cast<std::size_t>(bin_count));

  std::vector<double> conf_sums(static_cast<std::size_t>(bin_count), 0.0);
  std::vector<std::uint64_t> correct(static_cast<std::size_t>(bin_count), 0);

  const ClassMap pred = argmax_prediction(stack);
  std::vector<double> mean(static_cast<std::size_t>(stack.class_count()));
  for (std::size_t r = 0; r < gt.height(); ++r) {
    for (std::size_t c = 0; c < gt.width(); ++c) {
      if (gt.is_ignored(r, c)) continue;
      stack.mean_distribution(r, c, mean);
      const double confidence = *std::max_element(mean.begin(), mean.end());
      // bin b covers ((b-1)/B, b/B]; exactly 0 is put in bin 1
      int bin = static_cast<int>(
          std::ceil(confidence * static_cast<double>(bin_count)));
      bin = std::clamp(bin, 1, bin_count);
      const std::size_t idx = static_cast<std::size_t>(bin - 1);
      ++result.bins[idx].count;
      ++result.total;
      conf_sums[idx] += confidence;
      if (pred.at(r, c) == gt.at(r, c)) ++correct[idx];
    }
  }

  for (std::size_t b = 0; b < result.bins.size(); ++b) {
    if (result.bins[b].count == 0) continue;
    const double n = static_cast<double>(result.bins[b].count);
    result.bins[b].mean_confidence = conf_sums[b] / n;
    result.bins[b].accuracy = static_cast<double>(correct[b]) / n;
  }
  return result;
}

double ece(const CalibrationBins& bins) {
  if (bins.total == 0)
    throw std::domain_error("ECE undefined: no samples were binned");
  double sum = 0.0;
  for (const auto& bin : bins.bins) {
    if (bin.count == 0) continue;
    sum += static_cast<double>(bin.count) *
           std::abs(bin.accuracy - bin.mean_confidence);
  }
  return sum / static_cast<double>(bins.total);
}

double mce(const CalibrationBins& bins) {
  if (bins.total == 0)
    throw std::domain_error("MCE undefined: no samples were binned");
  double worst = 0.0;
  for (const auto& bin : bins.bins) {
    if (bin.count == 0) continue;
    worst = std::max(worst, std::abs(bin.accuracy - bin.mean_confidence));
  }
  return worst;
}

double mean_nll(const ProbStack& stack, const ClassMap& gt,
                double temperature) {
  require_shapes(stack, gt);
  if (stack.samples() != 1)
    throw std::invalid_argument(
        "temperature scaling operates on a single-sample stack; collapse "
        "Monte-Carlo stacks with sample_mean_stack first");
  if (!(temperature > 0.0))
    throw std::invalid_argument("temperature must be positive");

  const std::int32_t classes = stack.class_count();
  double nll_sum = 0.0;
  std::uint64_t scorable = 0;
  std::vector<double> z(static_cast<std::size_t>(classes));
  for (std::size_t r = 0; r < gt.height(); ++r) {
    for (std::size_t c = 0; c < gt.width(); ++c) {
      if (gt.is_ignored(r, c)) continue;
      const std::int32_t label = gt.at(r, c);
      if (label < 0 || label >= classes)
        throw std::invalid_argument("ground-truth class " +
                                    std::to_string(label) + " at pixel (" +
                                    std::to_string(r) + "," +
                                    std::to_string(c) + ") is out of range");
      double zmax = -std::numeric_limits<double>::infinity();
      for (std::int32_t k = 0; k < classes; ++k) {
        z[static_cast<std::size_t>(k)] =
            safe_log(stack.at(0, k, r, c)) / temperature;
        zmax = std::max(zmax, z[static_cast<std::size_t>(k)]);
      }
      double lse = 0.0;
      for (double zk : z) lse += std::exp(zk - zmax);
      lse = zmax + std::log(lse);
      nll_sum += lse - z[static_cast<std::size_t>(label)];
      ++scorable;
    }
  }
  if (scorable == 0)
    throw std::domain_error("NLL undefined: every pixel is ignored");
  return nll_sum / static_cast<double>(scorable);
}

ProbStack rescale_probabilities(const ProbStack& stack, double temperature) {
  if (!(temperature > 0.0))
    throw std::invalid_argument("temperature must be positive");
  const std::int32_t classes = stack.class_count();
  std::vector<double> rescaled(stack.values().size());
  std::vector<double> z(static_cast<std::size_t>(classes));
  for (std::size_t t = 0; t < stack.samples(); ++t) {
    for (std::size_t r = 0; r < stack.height(); ++r) {
      for (std::size_t c = 0; c < stack.width(); ++c) {
        double zmax = -std::numeric_limits<double>::infinity();
        for (std::int32_t k = 0; k < classes; ++k) {
          z[static_cast<std::size_t>(k)] =
              safe_log(stack.at(t, k, r, c)) / temperature;
          zmax = std::max(zmax, z[static_cast<std::size_t>(k)]);
        }
        double lse = 0.0;
        for (double zk : z) lse += std::exp(zk - zmax);
        lse = zmax + std::log(lse);
        for (std::int32_t k = 0; k < classes; ++k) {
          rescaled[stack.index(t, k, r, c)] =
              std::exp(z[static_cast<std::size_t>(k)] - lse);
        }
      }
    }
  }
  return ProbStack(stack.samples(), classes, stack.height(), stack.width(),
                   std::move(rescaled));
}

TemperatureResult temperature_scale(const ProbStack& stack,
                                    const ClassMap& gt) {
  const double nll_at = mean_nll(stack, gt, 1.0);

  // Golden-section on log T; NLL is unimodal in T for this family.
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = std::log(kTempLo);
  double hi = std::log(kTempHi);
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = mean_nll(stack, gt, std::exp(x1));
  double f2 = mean_nll(stack, gt, std::exp(x2));
  while (std::exp(hi) - std::exp(lo) > kTempTolerance) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = mean_nll(stack, gt, std::exp(x1));
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = mean_nll(stack, gt, std::exp(x2));
    }
  }
  double best_t = std::exp(0.5 * (lo + hi));
  double best_nll = mean_nll(stack, gt, best_t);
  if (nll_at <= best_nll) {  // never calibrate to a worse NLL than T = 1
    best_t = 1.0;
    best_nll = nll_at;
  }

  return TemperatureResult{best_t, rescale_probabilities(stack, best_t),
                           nll_at, best_nll};
}

ProbStack sample_mean_stack(const ProbStack& stack) {
  const std::int32_t classes = stack.class_count();
  std::vector<double> values(static_cast<std::size_t>(classes) *
                             stack.pixel_count());
  std::vector<double> mean(static_cast<std::size_t>(classes));
  for (std::size_t r = 0; r < stack.height(); ++r) {
    for (std::size_t c = 0; c < stack.width(); ++c) {
      stack.mean_distribution(r, c, mean);
      for (std::int32_t k = 0; k < classes; ++k) {
        values[(static_cast<std::size_t>(k) * stack.height() + r) *
                   stack.width() +
               c] = mean[static_cast<std::size_t>(k)];
      }
    }
  }
  return ProbStack(1, classes, stack.height(), stack.width(),
                   std::move(values));
}

}  // namespace ueval
