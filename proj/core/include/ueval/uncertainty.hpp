#pragma once

#include "ueval/tensor.hpp"

namespace ueval {

enum class UncertaintyMeasure { kPredictiveEntropy, kMutualInformation };

/// Per pixel, the entropy (nats) of the mean-over-samples class distribution:
///   H = -sum_c p_c log p_c  with  p_c = (1/T) sum_t p(y=c | x, w_t).
/// 0 log 0 is taken as 0; the result is clamped to [0, log C].
ScalarMap predictive_entropy(const ProbStack& stack);

/// Per pixel, the mutual information (nats) between the prediction and the
/// posterior over weights: the predictive entropy minus the mean per-sample
/// entropy, clamped at 0. Identically 0 for T=1 or identical samples.
ScalarMap mutual_information(const ProbStack& stack);

/// Dispatches to the chosen measure.
ScalarMap uncertainty_map(const ProbStack& stack, UncertaintyMeasure measure);

}  // namespace ueval
