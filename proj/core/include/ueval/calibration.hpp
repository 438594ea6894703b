#pragma once

#include <cstdint>
#include <vector>

#include "ueval/tensor.hpp"

namespace ueval {

/// Equal-width confidence bins over (0, 1]. Confidence is the max of the
/// sample-mean softmax; correctness compares the argmax prediction against
/// the ground truth. Ignored pixels contribute nothing.
struct CalibrationBins {
  struct Bin {
    std::uint64_t count = 0;
    double mean_confidence = 0.0;
    double accuracy = 0.0;
  };

  int bin_count = 0;
  std::uint64_t total = 0;  // N
  std::vector<Bin> bins;
};

/// Summary emitted by the calibration pipeline. temperature is 1 when no
/// scaling was applied. mce >= ece always.
struct CalibrationReport {
  double ece = 0.0;
  double mce = 0.0;
  double temperature = 1.0;
  double nll = 0.0;
};

/// Result of fitting a softmax temperature by validation NLL.
struct TemperatureResult {
  double temperature;
  ProbStack rescaled;  // softmax(log p / T*), one sample
  double nll_before;   // mean NLL at T = 1
  double nll_after;    // mean NLL at T*
};

/// Bins every non-ignored pixel by confidence. Bin b (1-based) covers
/// ((b-1)/B, b/B]; a confidence of exactly 0 lands in bin 1.
CalibrationBins bin_confidences(const ProbStack& stack, const ClassMap& gt,
                                int bin_count = 15);

/// Expected calibration error: count-weighted mean |accuracy - confidence|
/// over the bins. Throws when no sample was binned.
double ece(const CalibrationBins& bins);

/// Maximum calibration error: the largest |accuracy - confidence| over
/// occupied bins. Throws when no sample was binned.
double mce(const CalibrationBins& bins);

/// Mean negative log-likelihood of softmax(log p / temperature) against the
/// ground truth, over non-ignored pixels. The stack must have one sample.
double mean_nll(const ProbStack& stack, const ClassMap& gt,
                double temperature);

/// Per pixel, softmax(log p / temperature). Identity (within rounding) at
/// temperature 1; argmax predictions are unchanged for any temperature > 0.
ProbStack rescale_probabilities(const ProbStack& stack, double temperature);

/// Fits T* minimizing the mean NLL by golden-section search on log T over
/// [0.05, 50] to an absolute tolerance of 1e-3 in T, and returns the
/// rescaled probabilities. Never returns a temperature with a worse NLL
/// than T = 1. The stack must have one sample; per-pixel probabilities
/// stand in for logits since the softmax is shift invariant.
TemperatureResult temperature_scale(const ProbStack& stack,
                                    const ClassMap& gt);

/// Collapses a Monte-Carlo stack to the single-sample stack of its mean
/// distribution (identity for T = 1).
ProbStack sample_mean_stack(const ProbStack& stack);

}  // namespace ueval
