#include "ueval/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ueval {

namespace {

// Probabilities below this are treated as exactly 0 before taking logs,
// which removes -inf terms without measurably biasing the entropy.
constexpr double kLogFloor = 1e-300;

double plogp(double p) { return p < kLogFloor ? 0.0 : p * std::log(p); }

}  // namespace

ScalarMap predictive_entropy(const ProbStack& stack) {
  const std::size_t h = stack.height();
  const std::size_t w = stack.width();
  const double max_entropy =
      std::log(static_cast<double>(stack.class_count()));
  std::vector<double> out(h * w);
  std::vector<double> mean(static_cast<std::size_t>(stack.class_count()));
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      stack.mean_distribution(r, c, mean);
      double entropy = 0.0;
      for (double p : mean) entropy -= plogp(p);
      out[r * w + c] = std::clamp(entropy, 0.0, max_entropy);
    }
  }
  return ScalarMap(h, w, std::move(out));
}

ScalarMap mutual_information(const ProbStack& stack) {
  const std::size_t h = stack.height();
  const std::size_t w = stack.width();
  const double inv_t = 1.0 / static_cast<double>(stack.samples());
  std::vector<double> out(h * w);
  std::vector<double> mean(static_cast<std::size_t>(stack.class_count()));
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      stack.mean_distribution(r, c, mean);
      double predictive = 0.0;
      for (double p : mean) predictive -= plogp(p);

      double sample_entropy_sum = 0.0;
      for (std::size_t t = 0; t < stack.samples(); ++t) {
        for (std::int32_t k = 0; k < stack.class_count(); ++k)
          sample_entropy_sum -= plogp(stack.at(t, k, r, c));
      }
      // Difference of the two entropies; rounding can leave a ~1e-16
      // negative, which the clamp removes.
      const double mi = predictive - sample_entropy_sum * inv_t;
      out[r * w + c] = std::max(mi, 0.0);
    }
  }
  return ScalarMap(h, w, std::move(out));
}

ScalarMap uncertainty_map(const ProbStack& stack, UncertaintyMeasure measure) {
  switch (measure) {
    case UncertaintyMeasure::kMutualInformation:
      return mutual_information(stack);
    case UncertaintyMeasure::kPredictiveEntropy:
    default:
      return predictive_entropy(stack);
  }
}

}  // namespace ueval
