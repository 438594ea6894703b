#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "testutil.hpp"
#include "ueval/calibration.hpp"
#include "ueval/tensor.hpp"

using namespace ueval;

namespace {

// N pixels sharing one distribution, with true labels matching the class
// fractions exactly. For such data T = 1 minimizes the NLL analytically.
struct CalibratedScene {
  ProbStack stack;
  ClassMap gt;
};

CalibratedScene quantized_calibrated_scene(std::mt19937_64& rng,
                                           std::size_t groups,
                                           std::size_t group_size,
                                           std::int32_t classes) {
  const std::size_t pixels = groups * group_size;
  std::vector<double> values(static_cast<std::size_t>(classes) * pixels);
  std::vector<std::int32_t> labels(pixels);
  for (std::size_t g = 0; g < groups; ++g) {
    // distribution with probabilities in multiples of 1/group_size
    std::vector<std::size_t> quanta(static_cast<std::size_t>(classes), 0);
    for (std::size_t q = 0; q < group_size; ++q)
      ++quanta[test::bounded(rng, static_cast<std::size_t>(classes))];
    // labels realize the distribution exactly: quanta[k] pixels get class k
    std::size_t px = g * group_size;
    for (std::int32_t k = 0; k < classes; ++k)
      for (std::size_t n = 0; n < quanta[static_cast<std::size_t>(k)]; ++n)
        labels[px++] = k;
    for (std::size_t q = 0; q < group_size; ++q) {
      for (std::int32_t k = 0; k < classes; ++k) {
        values[static_cast<std::size_t>(k) * pixels + g * group_size + q] =
            static_cast<double>(quanta[static_cast<std::size_t>(k)]) /
            static_cast<double>(group_size);
      }
    }
  }
  const std::size_t width = group_size;
  const std::size_t height = groups;
  return CalibratedScene{
      ProbStack(1, classes, height, width, std::move(values)),
      ClassMap(height, width, classes, std::move(labels))};
}

// p^k renormalized; its NLL optimum sits exactly at T = k when the base
// scene is optimal at T = 1.
ProbStack powered_stack(const ProbStack& base, double k) {
  std::vector<double> values(base.values().size());
  const std::int32_t classes = base.class_count();
  for (std::size_t r = 0; r < base.height(); ++r) {
    for (std::size_t c = 0; c < base.width(); ++c) {
      double sum = 0.0;
      for (std::int32_t cls = 0; cls < classes; ++cls) {
        const double p = std::max(base.at(0, cls, r, c), 1e-300);
        values[base.index(0, cls, r, c)] = std::pow(p, k);
        sum += values[base.index(0, cls, r, c)];
      }
      for (std::int32_t cls = 0; cls < classes; ++cls)
        values[base.index(0, cls, r, c)] /= sum;
    }
  }
  return ProbStack(1, classes, base.height(), base.width(), std::move(values));
}

// independent oracle: plain grid search over temperatures
double grid_search_temperature(const ProbStack& stack, const ClassMap& gt,
                               double lo, double hi, double step) {
  double best_t = lo, best_nll = mean_nll(stack, gt, lo);
  for (double t = lo + step; t <= hi + step / 2; t += step) {
    const double nll = mean_nll(stack, gt, t);
    if (nll < best_nll) {
      best_nll = nll;
      best_t = t;
    }
  }
  return best_t;
}

}  // namespace

TEST_CASE("binning puts full confidence in the last bin") {
  std::vector<double> stack_values(2 * 4, 0.0);
  for (int px = 0; px < 4; ++px) stack_values[static_cast<std::size_t>(px)] = 1.0;
  const ProbStack stack(1, 2, 2, 2, std::move(stack_values));
  const ClassMap gt(2, 2, 2, {0, 0, 0, 0});
  const CalibrationBins bins = bin_confidences(stack, gt, 15);
  CHECK(bins.total == 4);
  CHECK(bins.bins[14].count == 4);
  CHECK(bins.bins[14].accuracy == 1.0);
  CHECK(bins.bins[14].mean_confidence == 1.0);
}

TEST_CASE("confidence 0.55 lands in bin 9 of 15") {
  // two pixels at confidence 0.55; one correct, one wrong
  const ProbStack stack(1, 2, 1, 2, {0.55, 0.55, 0.45, 0.45});
  const ClassMap gt(1, 2, 2, {0, 1});
  const CalibrationBins bins = bin_confidences(stack, gt, 15);
  CHECK(bins.total == 2);
  CHECK(bins.bins[8].count == 2);  // bin 9, 1-based
  CHECK(bins.bins[8].accuracy == 0.5);
  CHECK(bins.bins[8].mean_confidence == doctest::Approx(0.55).epsilon(1e-12));
}

TEST_CASE("fully ignored ground truth produces empty bins") {
  const ProbStack stack(1, 2, 1, 2, {0.6, 0.6, 0.4, 0.4});
  const ClassMap gt(1, 2, 2, {255, 255}, 255);
  const CalibrationBins bins = bin_confidences(stack, gt, 15);
  CHECK(bins.total == 0);
  CHECK_THROWS_AS(ece(bins), std::domain_error);
  CHECK_THROWS_AS(mce(bins), std::domain_error);
}

TEST_CASE("hand-binned ECE and MCE") {
  CalibrationBins bins;
  bins.bin_count = 2;
  bins.bins.resize(2);

  SUBCASE("perfectly calibrated single bin") {
    bins.bins[1] = {10, 0.9, 0.9};
    bins.total = 10;
    CHECK(ece(bins) == 0.0);
    CHECK(mce(bins) == 0.0);
  }
  SUBCASE("one bin with a 0.4 gap") {
    bins.bins[1] = {5, 0.9, 0.5};
    bins.total = 5;
    CHECK(ece(bins) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(mce(bins) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(mce(bins) == ece(bins));  // single occupied bin degenerates
  }
  SUBCASE("two bins weighted 3:1 with gaps 0.1 and 0.3") {
    bins.bins[0] = {3, 0.3, 0.4};
    bins.bins[1] = {1, 0.8, 0.5};
    bins.total = 4;
    CHECK(ece(bins) == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(mce(bins) == doctest::Approx(0.3).epsilon(1e-12));
  }
}

TEST_CASE("ECE and MCE are invariant under class permutation") {
  std::mt19937_64 rng(9090);
  const std::int32_t classes = 4;
  const ProbStack stack = test::random_stack(rng, 3, classes, 6, 6);
  const ClassMap gt = test::random_class_map(rng, 6, 6, classes, std::nullopt);

  // permute classes by reversal in both the stack and the labels
  const std::size_t plane = 6 * 6;
  std::vector<double> rev(stack.values().size());
  for (std::size_t t = 0; t < 3; ++t)
    for (std::int32_t c = 0; c < classes; ++c)
      for (std::size_t px = 0; px < plane; ++px)
        rev[(t * 4 + static_cast<std::size_t>(classes - 1 - c)) * plane + px] =
            stack.values()[(t * 4 + static_cast<std::size_t>(c)) * plane + px];
  std::vector<std::int32_t> rev_labels(gt.values().begin(),
                                       gt.values().end());
  for (auto& v : rev_labels) v = classes - 1 - v;

  const ProbStack stack_rev(3, classes, 6, 6, std::move(rev));
  const ClassMap gt_rev(6, 6, classes, std::move(rev_labels));

  const CalibrationBins a = bin_confidences(stack, gt, 15);
  const CalibrationBins b = bin_confidences(stack_rev, gt_rev, 15);
  CHECK(ece(a) == doctest::Approx(ece(b)).epsilon(1e-15));
  CHECK(mce(a) == doctest::Approx(mce(b)).epsilon(1e-15));
}

TEST_CASE("rescaling at temperature 1 is the identity") {
  std::mt19937_64 rng(606);
  const ProbStack stack = test::random_stack(rng, 1, 5, 8, 8);
  const ProbStack rescaled = rescale_probabilities(stack, 1.0);
  for (std::size_t i = 0; i < stack.values().size(); ++i)
    CHECK(std::abs(stack.values()[i] - rescaled.values()[i]) <= 1e-12);
}

TEST_CASE("rescaling never changes the argmax") {
  std::mt19937_64 rng(607);
  const ProbStack stack = test::random_stack(rng, 1, 5, 8, 8);
  const ClassMap before = argmax_prediction(stack);
  for (double t : {0.07, 0.5, 3.0, 42.0}) {
    const ClassMap after = argmax_prediction(rescale_probabilities(stack, t));
    for (std::size_t r = 0; r < 8; ++r)
      for (std::size_t c = 0; c < 8; ++c)
        CHECK(before.at(r, c) == after.at(r, c));
  }
}

TEST_CASE("temperature fitting recovers 1 on calibrated data") {
  std::mt19937_64 rng(11);
  const CalibratedScene scene = quantized_calibrated_scene(rng, 40, 25, 4);
  const TemperatureResult fit = temperature_scale(scene.stack, scene.gt);
  CHECK(std::abs(fit.temperature - 1.0) <= 1e-2);

  const double oracle =
      grid_search_temperature(scene.stack, scene.gt, 0.5, 1.5, 1e-3);
  CHECK(std::abs(oracle - 1.0) <= 2e-3);
  CHECK(fit.nll_after <= fit.nll_before);
}

TEST_CASE("temperature fitting recovers a known sharpening factor") {
  std::mt19937_64 rng(12);
  const CalibratedScene scene = quantized_calibrated_scene(rng, 40, 25, 4);
  const double k = 2.0;
  const ProbStack sharpened = powered_stack(scene.stack, k);
  const TemperatureResult fit = temperature_scale(sharpened, scene.gt);
  CHECK(std::abs(fit.temperature - k) <= 0.05);

  const double oracle =
      grid_search_temperature(sharpened, scene.gt, k - 0.5, k + 0.5, 1e-3);
  CHECK(std::abs(fit.temperature - oracle) <= 5e-3);
  CHECK(fit.nll_after <= fit.nll_before);
}

TEST_CASE("per-pixel shift of the log-probabilities changes nothing") {
  // scaling a pixel's probabilities by a constant shifts its log-probs;
  // softmax and the fitted temperature must be unaffected
  std::mt19937_64 rng(13);
  const CalibratedScene scene = quantized_calibrated_scene(rng, 20, 25, 3);
  const ProbStack base = powered_stack(scene.stack, 1.7);

  std::vector<double> scaled(base.values().size());
  for (std::size_t r = 0; r < base.height(); ++r) {
    for (std::size_t c = 0; c < base.width(); ++c) {
      const double factor = 0.1 + 0.8 * test::uniform01(rng);
      for (std::int32_t k = 0; k < base.class_count(); ++k)
        scaled[base.index(0, k, r, c)] = base.at(0, k, r, c) * factor;
    }
  }
  const ProbStack shifted(1, base.class_count(), base.height(), base.width(),
                          std::move(scaled));

  const TemperatureResult fit_a = temperature_scale(base, scene.gt);
  const TemperatureResult fit_b = temperature_scale(shifted, scene.gt);
  CHECK(fit_a.temperature == doctest::Approx(fit_b.temperature).epsilon(1e-9));
  for (std::size_t i = 0; i < fit_a.rescaled.values().size(); ++i)
    CHECK(std::abs(fit_a.rescaled.values()[i] - fit_b.rescaled.values()[i]) <=
          1e-12);
}

TEST_CASE("temperature scaling requires scorable pixels and one sample") {
  const ProbStack stack(1, 2, 1, 1, {0.5, 0.5});
  const ClassMap ignored(1, 1, 2, {255}, 255);
  CHECK_THROWS_AS(temperature_scale(stack, ignored), std::domain_error);

  const ProbStack multi(2, 2, 1, 1, {0.5, 0.5, 0.5, 0.5});
  const ClassMap gt(1, 1, 2, {0});
  CHECK_THROWS_AS(temperature_scale(multi, gt), std::invalid_argument);
  CHECK_NOTHROW(temperature_scale(sample_mean_stack(multi), gt));
}
